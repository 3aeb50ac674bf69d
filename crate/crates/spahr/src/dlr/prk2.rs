//! Partitioned RK2 step for the (hyper-)reduced flow: explicit midpoint on
//! the basis tangent variable, implicit midpoint on the expansion
//! coefficients.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{basis_velocity, CayleyRetraction, ReducedHamiltonian, ReducedState};
use crate::error::{Error, Result};
use crate::model::HamiltonianModel;
use crate::symplectic::{canonical_symplectic_apply, canonical_symplectic_apply_vec, IndexSet};

#[derive(Debug, Clone, Copy)]
pub struct Prk2Options {
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub eps_reg: f64,
    /// Re-solves the coefficient stage on the sampled columns instead of
    /// extracting them from the full stage solution. Both readings give the
    /// same result because the per-column solves are independent.
    pub restage_sampled: bool,
}

impl Default for Prk2Options {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            newton_max_iter: 50,
            eps_reg: super::DEFAULT_EPS_REG,
            restage_sampled: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Prk2Diagnostics {
    pub max_newton_iters: usize,
    pub orthogonality_defect: f64,
    pub symplecticity_defect: f64,
}

/// Implicit midpoint stage for one coefficient column: solves
/// `k = J∇Ĥ(z + (Δt/2)k)` by Newton iteration from a zero initial guess.
fn stage_solve(
    reduced: &dyn ReducedHamiltonian,
    z: &DVector<f64>,
    param: usize,
    dt: f64,
    step: usize,
    opts: &Prk2Options,
) -> Result<(DVector<f64>, usize)> {
    let dim = reduced.reduced_dim();
    let mut k = DVector::zeros(dim);
    let mut residual_norm = f64::INFINITY;
    for iter in 0..=opts.newton_max_iter {
        let z_arg = z + &k * (0.5 * dt);
        let (grad, hess) = reduced.gradient_and_hessian(&z_arg, param);
        let res = &k - canonical_symplectic_apply_vec(&grad);
        residual_norm = res.norm();
        if residual_norm <= opts.newton_tol {
            return Ok((k, iter));
        }
        if iter == opts.newton_max_iter {
            break;
        }
        // F'(k) = I - (Δt/2)·J·∇²Ĥ
        let mut jac = -canonical_symplectic_apply(&hess)? * (0.5 * dt);
        for i in 0..dim {
            jac[(i, i)] += 1.0;
        }
        let delta = jac
            .lu()
            .solve(&(-res))
            .ok_or_else(|| Error::Singular("stage Jacobian is singular".into()))?;
        k += delta;
    }
    Err(Error::NewtonDiverged {
        step,
        param,
        max_iter: opts.newton_max_iter,
        residual: residual_norm,
    })
}

/// One partitioned RK2 step.
///
/// `sample_params` selects the coefficient columns used for the basis
/// evolution; `reduced_factory` builds the reduced Hamiltonian oracle (exact
/// or hyper-reduced) on the midpoint basis; `h1` optionally reuses an already
/// computed basis velocity at `(A_j, Z*_j)`.
pub fn prk2_step<R, F>(
    model: &HamiltonianModel,
    state: &ReducedState,
    sample_params: &IndexSet,
    reduced_factory: F,
    dt: f64,
    step: usize,
    h1: Option<DMatrix<f64>>,
    opts: &Prk2Options,
) -> Result<(ReducedState, Prk2Diagnostics)>
where
    R: ReducedHamiltonian,
    F: Fn(&DMatrix<f64>) -> Result<R>,
{
    let z = &state.coeffs;
    let z_star = sample_params.gather_cols(z);
    let star_ids: Vec<usize> = sample_params.iter().collect();

    // stage 1: basis velocity at the current point
    let h1 = match h1 {
        Some(v) => v,
        None => {
            let grad = model.gradient_columns(&(state.basis.matrix() * &z_star), &star_ids);
            basis_velocity(&state.basis, &z_star, &grad, opts.eps_reg)?
        }
    };

    let retraction = CayleyRetraction::new(&state.basis);
    let mid_basis = retraction.retract(&(&h1 * (0.5 * dt)))?;
    let reduced = reduced_factory(mid_basis.matrix())?;

    // stage 2: implicit midpoint on every coefficient column
    let columns: Result<Vec<(DVector<f64>, usize)>> = (0..z.ncols())
        .into_par_iter()
        .map(|j| stage_solve(&reduced, &z.column(j).clone_owned(), j, dt, step, opts))
        .collect();
    let columns = columns?;
    let mut k2 = DMatrix::zeros(z.nrows(), z.ncols());
    let mut max_iters = 0;
    for (j, (col, iters)) in columns.iter().enumerate() {
        k2.set_column(j, col);
        max_iters = max_iters.max(*iters);
    }

    // restrict the stage to the sampled columns
    let k2_star = if opts.restage_sampled {
        let re: Result<Vec<(DVector<f64>, usize)>> = star_ids
            .par_iter()
            .map(|&j| stage_solve(&reduced, &z.column(j).clone_owned(), j, dt, step, opts))
            .collect();
        let re = re?;
        let mut m = DMatrix::zeros(z.nrows(), star_ids.len());
        for (c, (col, _)) in re.iter().enumerate() {
            m.set_column(c, col);
        }
        m
    } else {
        let mut m = DMatrix::zeros(z.nrows(), star_ids.len());
        for (c, &j) in star_ids.iter().enumerate() {
            m.set_column(c, &k2.column(j));
        }
        m
    };

    // stage 2 basis velocity at the midpoint, pulled back through the
    // inverse tangent map
    let z_mid_star = &z_star + &k2_star * (0.5 * dt);
    let grad_mid = model.gradient_columns(&(mid_basis.matrix() * &z_mid_star), &star_ids);
    let adot_mid = basis_velocity(&mid_basis, &z_mid_star, &grad_mid, opts.eps_reg)?;
    let h2 = retraction.inverse_differential(&(&h1 * (0.5 * dt)), &adot_mid)?;

    let basis_next = retraction.retract(&(&h2 * dt))?;
    let coeffs_next = z + &k2 * dt;
    let (d_orth, d_symp) = basis_next.defects();
    let next = ReducedState::new(basis_next, coeffs_next)?;
    Ok((
        next,
        Prk2Diagnostics {
            max_newton_iters: max_iters,
            orthogonality_defect: d_orth,
            symplecticity_defect: d_symp,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dlr::ExactReduced;
    use crate::model::{
        initial_state, nls_build, HamiltonianModel, NlsConfig, NonlinearTerm, ParamRange,
        SparseOperator, TestCase,
    };
    use crate::symplectic::complex_svd_basis;

    struct ZeroTerm;

    impl NonlinearTerm for ZeroTerm {
        fn count(&self) -> usize {
            1
        }
        fn row_nnz(&self) -> usize {
            1
        }
        fn support(&self, _row: usize, out: &mut Vec<usize>) {
            out.push(0);
        }
        fn value(&self, _row: usize, _y: &[f64], _eta: &[f64]) -> f64 {
            0.0
        }
        fn gradient(&self, _row: usize, _y: &[f64], _eta: &[f64], out: &mut [f64]) {
            out[0] = 0.0;
        }
        fn hessian(&self, _row: usize, _y: &[f64], _eta: &[f64], out: &mut [f64]) {
            out[0] = 0.0;
        }
    }

    fn zero_field_model(half_dim: usize, params: usize) -> HamiltonianModel {
        HamiltonianModel::new(
            half_dim,
            1,
            vec![vec![0.0]; params],
            SparseOperator::from_triplets(2 * half_dim, &[]).unwrap(),
            nalgebra::DVector::from_element(1, 1.0),
            Box::new(ZeroTerm),
        )
        .unwrap()
    }

    fn all_params(p: usize) -> IndexSet {
        IndexSet::new((0..p).collect(), p).unwrap()
    }

    #[test]
    fn zero_vector_field_keeps_state_fixed() {
        let model = zero_field_model(8, 4);
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        use rand::{Rng, SeedableRng};
        let r0 = DMatrix::from_fn(16, 4, |_, _| rng.random_range(-1.0..1.0));
        let (basis, coeffs) = complex_svd_basis(&r0, 2).unwrap();
        let state = ReducedState::new(basis, coeffs).unwrap();
        let (next, _) = prk2_step(
            &model,
            &state,
            &all_params(4),
            |y| Ok(ExactReduced::new(&model, y.clone())),
            1e-2,
            0,
            None,
            &Prk2Options::default(),
        )
        .unwrap();
        assert_eq!(next.basis.matrix(), state.basis.matrix());
        assert!((next.coeffs.clone() - &state.coeffs).norm() <= 1e-15);
    }

    #[test]
    fn invariants_hold_over_many_steps() {
        let pi = std::f64::consts::PI;
        let cfg = NlsConfig {
            half_length_x: 2.0 * pi,
            half_length_y: 2.0 * pi,
            intervals_x: 8,
            intervals_y: 8,
            test_case: TestCase::Localized,
            alpha: ParamRange { min: 0.8, max: 2.0, count: 2 },
            beta: ParamRange { min: 0.8, max: 2.0, count: 2 },
            eps: ParamRange::fixed(-1.0),
        };
        let model = nls_build(&cfg).unwrap();
        let r0 = initial_state(&cfg);
        let (basis, coeffs) = complex_svd_basis(&r0, 3).unwrap();
        let mut state = ReducedState::new(basis, coeffs).unwrap();
        let sample = all_params(model.num_params());
        let opts = Prk2Options::default();
        for step in 0..50 {
            let (next, diag) = prk2_step(
                &model,
                &state,
                &sample,
                |y| Ok(ExactReduced::new(&model, y.clone())),
                1e-3,
                step,
                None,
                &opts,
            )
            .unwrap();
            assert!(diag.orthogonality_defect <= 1e-10);
            assert!(diag.symplecticity_defect <= 1e-10);
            state = next;
        }
    }

    #[test]
    fn restaging_matches_extraction() {
        let pi = std::f64::consts::PI;
        let cfg = NlsConfig {
            half_length_x: 2.0 * pi,
            half_length_y: 2.0 * pi,
            intervals_x: 6,
            intervals_y: 6,
            test_case: TestCase::NonLocalized,
            alpha: ParamRange { min: 0.97, max: 1.03, count: 2 },
            beta: ParamRange { min: 0.97, max: 1.03, count: 2 },
            eps: ParamRange::fixed(-1.0),
        };
        let model = nls_build(&cfg).unwrap();
        let r0 = initial_state(&cfg);
        let (basis, coeffs) = complex_svd_basis(&r0, 2).unwrap();
        let state = ReducedState::new(basis, coeffs).unwrap();
        let sample = all_params(model.num_params());
        let run = |restage: bool| {
            let opts = Prk2Options {
                restage_sampled: restage,
                ..Prk2Options::default()
            };
            prk2_step(
                &model,
                &state,
                &sample,
                |y| Ok(ExactReduced::new(&model, y.clone())),
                1e-3,
                0,
                None,
                &opts,
            )
            .unwrap()
            .0
        };
        let a = run(false);
        let b = run(true);
        assert_eq!(a.basis.matrix(), b.basis.matrix());
        assert_eq!(a.coeffs, b.coeffs);
    }
}
