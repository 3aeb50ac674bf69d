//! Reference full-order integrator: implicit midpoint with an exact-Hessian
//! Newton solve per parameter column, using a sparse direct factorization.

use faer::prelude::*;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{HamiltonianModel, StateTrajectory, TimeGrid};
use crate::error::{Error, Result};
use crate::symplectic::canonical_symplectic_apply_vec;

#[derive(Debug, Clone, Copy)]
pub struct FomOptions {
    pub newton_tol: f64,
    pub max_iter: usize,
    pub snapshot_stride: usize,
}

impl Default for FomOptions {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            max_iter: 50,
            snapshot_stride: 1,
        }
    }
}

/// Newton system matrix triplets for `K = I - a·J·∇²H(mid)`.
fn newton_triplets(
    model: &HamiltonianModel,
    mid: &DVector<f64>,
    param: usize,
    a: f64,
    out: &mut Vec<Triplet<usize, usize, f64>>,
) {
    let dim = model.full_dim();
    let half = dim / 2;
    out.clear();
    for i in 0..dim {
        out.push(Triplet::new(i, i, 1.0));
    }
    model.for_each_hessian_entry(mid, param, |r, c, v| {
        if r < half {
            out.push(Triplet::new(half + r, c, a * v));
        } else {
            out.push(Triplet::new(r - half, c, -a * v));
        }
    });
}

/// One implicit midpoint step `y⁺ = y + Δt·J∇H((y + y⁺)/2)` solved by Newton
/// iteration with the exact Hessian.
fn midpoint_step(
    model: &HamiltonianModel,
    symbolic: &SymbolicLu<usize>,
    y: &DVector<f64>,
    param: usize,
    dt: f64,
    step: usize,
    opts: &FomOptions,
) -> Result<DVector<f64>> {
    let dim = model.full_dim();
    let a = 0.5 * dt;
    let mut y_next = y.clone();
    let mut trips: Vec<Triplet<usize, usize, f64>> = Vec::new();
    let mut grad = DVector::zeros(dim);
    let mut residual_norm = f64::INFINITY;
    for iter in 0..=opts.max_iter {
        let mid = (y + &y_next) * 0.5;
        model.gradient_into(&mid, param, &mut grad);
        let rhs = canonical_symplectic_apply_vec(&grad);
        let res = &y_next - y - &rhs * dt;
        residual_norm = res.norm();
        if residual_norm <= opts.newton_tol {
            return Ok(y_next);
        }
        if iter == opts.max_iter {
            break;
        }
        newton_triplets(model, &mid, param, a, &mut trips);
        let k_mat = SparseColMat::<usize, f64>::try_new_from_triplets(dim, dim, &trips)
            .map_err(|e| Error::Singular(format!("Newton matrix assembly failed: {e:?}")))?;
        let lu = Lu::try_new_with_symbolic(symbolic.clone(), k_mat.rb())
            .map_err(|e| Error::Singular(format!("Newton matrix factorization failed: {e:?}")))?;
        let b = faer::Mat::<f64>::from_fn(dim, 1, |i, _| -res[i]);
        let delta = lu.solve(&b);
        for i in 0..dim {
            y_next[i] += delta[(i, 0)];
        }
    }
    Err(Error::NewtonDiverged {
        step,
        param,
        max_iter: opts.max_iter,
        residual: residual_norm,
    })
}

/// Solves the full-order model for every parameter column independently and
/// records snapshots at the configured stride (step 0 and the final step are
/// always recorded).
pub fn fom_solve(
    model: &HamiltonianModel,
    grid: &TimeGrid,
    r0: &DMatrix<f64>,
    opts: &FomOptions,
) -> Result<StateTrajectory> {
    if r0.nrows() != model.full_dim() || r0.ncols() != model.num_params() {
        return Err(Error::Dimension(format!(
            "initial state is {}x{} but the model expects {}x{}",
            r0.nrows(),
            r0.ncols(),
            model.full_dim(),
            model.num_params()
        )));
    }
    if opts.newton_tol <= 0.0 {
        return Err(Error::Config("Newton tolerance must be positive".into()));
    }
    let stride = opts.snapshot_stride.max(1);
    let nt = grid.num_steps();
    let record: Vec<usize> = (0..=nt).filter(|&j| j % stride == 0 || j == nt).collect();

    // fixed sparsity pattern shared by all columns and iterations
    let mut template: Vec<Triplet<usize, usize, f64>> = Vec::new();
    let probe_state = DVector::from_element(model.full_dim(), 1.0);
    newton_triplets(model, &probe_state, 0, 1.0, &mut template);
    let pattern =
        SparseColMat::<usize, f64>::try_new_from_triplets(model.full_dim(), model.full_dim(), &template)
            .map_err(|e| Error::Singular(format!("pattern assembly failed: {e:?}")))?;
    let symbolic = SymbolicLu::<usize>::try_new(pattern.symbolic())
        .map_err(|e| Error::Singular(format!("symbolic factorization failed: {e:?}")))?;

    let columns: Result<Vec<Vec<DVector<f64>>>> = (0..model.num_params())
        .into_par_iter()
        .map(|k| {
            let mut y = r0.column(k).clone_owned();
            let mut snaps = Vec::with_capacity(record.len());
            let mut next_record = 0;
            if record[next_record] == 0 {
                snaps.push(y.clone());
                next_record += 1;
            }
            for j in 0..nt {
                y = midpoint_step(model, &symbolic, &y, k, grid.dt(j), j, opts)?;
                if next_record < record.len() && record[next_record] == j + 1 {
                    snaps.push(y.clone());
                    next_record += 1;
                }
            }
            Ok(snaps)
        })
        .collect();
    let columns = columns?;

    let states: Vec<DMatrix<f64>> = (0..record.len())
        .map(|s| {
            let mut m = DMatrix::zeros(model.full_dim(), model.num_params());
            for (k, col) in columns.iter().enumerate() {
                m.set_column(k, &col[s]);
            }
            m
        })
        .collect();
    let times = record.iter().map(|&j| grid.time(j)).collect();
    Ok(StateTrajectory { times, states })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{initial_state, nls_build, NlsConfig, ParamRange, TestCase};

    fn tiny_config(eps: f64) -> NlsConfig {
        let pi = std::f64::consts::PI;
        NlsConfig {
            half_length_x: 2.0 * pi,
            half_length_y: 2.0 * pi,
            intervals_x: 6,
            intervals_y: 6,
            test_case: TestCase::Localized,
            alpha: ParamRange::fixed(1.0),
            beta: ParamRange::fixed(1.2),
            eps: ParamRange::fixed(eps),
        }
    }

    #[test]
    fn linear_case_conserves_quadratic_hamiltonian() {
        let cfg = tiny_config(0.0);
        let model = nls_build(&cfg).unwrap();
        let r0 = initial_state(&cfg);
        let grid = TimeGrid::uniform(0.0, 0.1, 50).unwrap();
        let traj = fom_solve(&model, &grid, &r0, &FomOptions::default()).unwrap();
        let y0 = traj.states[0].column(0).clone_owned();
        let h0 = model.hamiltonian(&y0, 0);
        for state in &traj.states {
            let y = state.column(0).clone_owned();
            let h = model.hamiltonian(&y, 0);
            assert!(
                ((h - h0) / h0).abs() <= 1e-8,
                "relative drift {:.3e}",
                ((h - h0) / h0).abs()
            );
        }
    }

    #[test]
    fn zero_initial_state_stays_zero() {
        let cfg = tiny_config(-1.0);
        let model = nls_build(&cfg).unwrap();
        let r0 = DMatrix::zeros(model.full_dim(), model.num_params());
        let grid = TimeGrid::uniform(0.0, 0.05, 10).unwrap();
        let traj = fom_solve(&model, &grid, &r0, &FomOptions::default()).unwrap();
        for state in &traj.states {
            assert!(state.norm() == 0.0);
        }
    }

    #[test]
    fn nonlinear_case_bounded_hamiltonian_drift() {
        let cfg = tiny_config(-1.0);
        let model = nls_build(&cfg).unwrap();
        let r0 = initial_state(&cfg);
        let grid = TimeGrid::uniform(0.0, 0.05, 50).unwrap();
        let traj = fom_solve(&model, &grid, &r0, &FomOptions::default()).unwrap();
        let y0 = traj.states[0].column(0).clone_owned();
        let h0 = model.hamiltonian(&y0, 0);
        let y_last = traj.states.last().unwrap().column(0).clone_owned();
        let h_last = model.hamiltonian(&y_last, 0);
        assert!(
            ((h_last - h0) / h0).abs() <= 1e-6,
            "relative drift {:.3e}",
            ((h_last - h0) / h0).abs()
        );
    }

    #[test]
    fn snapshots_follow_stride() {
        let cfg = tiny_config(-1.0);
        let model = nls_build(&cfg).unwrap();
        let r0 = initial_state(&cfg);
        let grid = TimeGrid::uniform(0.0, 0.01, 10).unwrap();
        let opts = FomOptions {
            snapshot_stride: 4,
            ..FomOptions::default()
        };
        let traj = fom_solve(&model, &grid, &r0, &opts).unwrap();
        // steps 0, 4, 8 and the final step 10
        assert_eq!(traj.times.len(), 4);
        assert!((traj.times[3] - 0.01).abs() <= 1e-15);
    }
}
