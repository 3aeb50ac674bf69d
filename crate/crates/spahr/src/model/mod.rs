//! Full-order model abstraction: Hamiltonian value, gradient and the sparse
//! decomposition of the nonlinear term, plus the concrete 2D nonlinear
//! Schrödinger instance and the reference implicit-midpoint integrator.

mod fom;
mod nls;

pub use fom::{fom_solve, FomOptions};
pub use nls::{initial_condition, initial_state, nls_build, NlsConfig, ParamRange, TestCase};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Sparse matrix in compressed row form. Used for the quadratic operator of
/// the Hamiltonian, which is symmetric by contract.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseOperator {
    /// Builds from (row, col, value) triplets; duplicate positions are summed.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
        for &(r, c, v) in triplets {
            if r >= dim || c >= dim {
                return Err(Error::Dimension(format!(
                    "triplet ({r}, {c}) outside {dim}x{dim}"
                )));
            }
            rows[r].push((c, v));
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in &mut rows {
            row.sort_unstable_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for &(c, v) in row.iter() {
                if last == Some(c) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            dim,
            row_ptr,
            col_idx,
            vals,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    pub fn for_each_entry(&self, mut f: impl FnMut(usize, usize, f64)) {
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                f(r, c, v);
            }
        }
    }

    pub fn apply_vector(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
        for r in 0..self.dim {
            let mut acc = 0.0;
            for (c, v) in self.row(r) {
                acc += v * x[c];
            }
            out[r] = acc;
        }
    }

    pub fn apply_matrix(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim, x.ncols());
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                for j in 0..x.ncols() {
                    out[(r, j)] += v * x[(c, j)];
                }
            }
        }
        out
    }

    pub fn quadratic_form(&self, x: &DVector<f64>) -> f64 {
        let mut acc = 0.0;
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                acc += x[r] * v * x[c];
            }
        }
        acc
    }

    /// Maximum asymmetry entry of `Q - Qᵀ`, for validation.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                let vt = self.row(c).find(|&(cc, _)| cc == r).map_or(0.0, |(_, w)| w);
                worst = worst.max((v - vt).abs());
            }
        }
        worst
    }
}

/// Element-wise decomposition of the non-quadratic Hamiltonian part:
/// `H_nl(y, η) = Σ_i c_i h_i(y, η)` where each `h_i` depends on at most
/// `row_nnz` state entries.
pub trait NonlinearTerm: Send + Sync {
    /// Number of decomposition terms `d`.
    fn count(&self) -> usize;

    /// Per-row sparsity bound `n_J`.
    fn row_nnz(&self) -> usize;

    /// State indices that `h_row` depends on (at most `row_nnz`).
    fn support(&self, row: usize, out: &mut Vec<usize>);

    /// `h_row` evaluated on its support values.
    fn value(&self, row: usize, y_supp: &[f64], eta: &[f64]) -> f64;

    /// Jacobian row on the support, in support order.
    fn gradient(&self, row: usize, y_supp: &[f64], eta: &[f64], out: &mut [f64]);

    /// Hessian block on the support, row-major `len²` entries.
    fn hessian(&self, row: usize, y_supp: &[f64], eta: &[f64], out: &mut [f64]);
}

/// Parametric family of canonical Hamiltonian systems on a `2N`-dimensional
/// phase space: `H_η(y) = ½ yᵀQy + cᵀh(y, η)`.
pub struct HamiltonianModel {
    half_dim: usize,
    param_dim: usize,
    params: Vec<Vec<f64>>,
    quad: SparseOperator,
    weights: DVector<f64>,
    nonlinear: Box<dyn NonlinearTerm>,
}

impl HamiltonianModel {
    pub fn new(
        half_dim: usize,
        param_dim: usize,
        params: Vec<Vec<f64>>,
        quad: SparseOperator,
        weights: DVector<f64>,
        nonlinear: Box<dyn NonlinearTerm>,
    ) -> Result<Self> {
        if quad.dim() != 2 * half_dim {
            return Err(Error::Dimension(format!(
                "quadratic operator has dimension {} but the phase space has dimension {}",
                quad.dim(),
                2 * half_dim
            )));
        }
        if weights.len() != nonlinear.count() {
            return Err(Error::Dimension(format!(
                "weight vector length {} does not match decomposition size {}",
                weights.len(),
                nonlinear.count()
            )));
        }
        if params.is_empty() {
            return Err(Error::Config("at least one parameter is required".into()));
        }
        Ok(Self {
            half_dim,
            param_dim,
            params,
            quad,
            weights,
            nonlinear,
        })
    }

    pub fn half_dim(&self) -> usize {
        self.half_dim
    }

    pub fn full_dim(&self) -> usize {
        2 * self.half_dim
    }

    pub fn param_dim(&self) -> usize {
        self.param_dim
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn param(&self, k: usize) -> &[f64] {
        &self.params[k]
    }

    pub fn quadratic_operator(&self) -> &SparseOperator {
        &self.quad
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn nonlinear(&self) -> &dyn NonlinearTerm {
        self.nonlinear.as_ref()
    }

    /// `H_η(y)` for the `k`th parameter.
    pub fn hamiltonian(&self, y: &DVector<f64>, k: usize) -> f64 {
        0.5 * self.quad.quadratic_form(y) + self.nonquadratic(y, k)
    }

    /// `cᵀh(y, η_k)`.
    pub fn nonquadratic(&self, y: &DVector<f64>, k: usize) -> f64 {
        let eta = &self.params[k];
        let d = self.nonlinear.count();
        let mut supp = Vec::with_capacity(self.nonlinear.row_nnz());
        let mut vals = vec![0.0; self.nonlinear.row_nnz()];
        let mut acc = 0.0;
        for i in 0..d {
            supp.clear();
            self.nonlinear.support(i, &mut supp);
            for (s, &idx) in supp.iter().enumerate() {
                vals[s] = y[idx];
            }
            acc += self.weights[i] * self.nonlinear.value(i, &vals[..supp.len()], eta);
        }
        acc
    }

    /// All decomposition values `h(y, η_k)` as a dense vector of length `d`.
    pub fn nonlinear_values(&self, y: &DVector<f64>, k: usize) -> DVector<f64> {
        let eta = &self.params[k];
        let mut supp = Vec::with_capacity(self.nonlinear.row_nnz());
        let mut vals = vec![0.0; self.nonlinear.row_nnz()];
        DVector::from_fn(self.nonlinear.count(), |i, _| {
            supp.clear();
            self.nonlinear.support(i, &mut supp);
            for (s, &idx) in supp.iter().enumerate() {
                vals[s] = y[idx];
            }
            self.nonlinear.value(i, &vals[..supp.len()], eta)
        })
    }

    /// `∇H_η(y) = Qy + J_hᵀ(y, η) c`.
    pub fn gradient(&self, y: &DVector<f64>, k: usize) -> DVector<f64> {
        let mut out = DVector::zeros(self.full_dim());
        self.gradient_into(y, k, &mut out);
        out
    }

    pub fn gradient_into(&self, y: &DVector<f64>, k: usize, out: &mut DVector<f64>) {
        self.quad.apply_vector(y, out);
        let eta = &self.params[k];
        let nnz = self.nonlinear.row_nnz();
        let mut supp = Vec::with_capacity(nnz);
        let mut vals = vec![0.0; nnz];
        let mut grad = vec![0.0; nnz];
        for i in 0..self.nonlinear.count() {
            supp.clear();
            self.nonlinear.support(i, &mut supp);
            for (s, &idx) in supp.iter().enumerate() {
                vals[s] = y[idx];
            }
            self.nonlinear
                .gradient(i, &vals[..supp.len()], eta, &mut grad[..supp.len()]);
            let w = self.weights[i];
            for (s, &idx) in supp.iter().enumerate() {
                out[idx] += w * grad[s];
            }
        }
    }

    /// Gradients of all columns of `states`, with `param_indices[j]` selecting
    /// the parameter of column `j`.
    pub fn gradient_columns(
        &self,
        states: &DMatrix<f64>,
        param_indices: &[usize],
    ) -> DMatrix<f64> {
        assert_eq!(states.ncols(), param_indices.len());
        let mut out = DMatrix::zeros(states.nrows(), states.ncols());
        let mut col = DVector::zeros(states.nrows());
        let mut g = DVector::zeros(states.nrows());
        for (j, &k) in param_indices.iter().enumerate() {
            col.copy_from(&states.column(j));
            self.gradient_into(&col, k, &mut g);
            out.set_column(j, &g);
        }
        out
    }

    /// `∇²H_η(y)·X` without materializing the Hessian.
    pub fn hessian_apply(&self, y: &DVector<f64>, k: usize, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = self.quad.apply_matrix(x);
        out += self.nonlinear_hessian_apply(y, k, x);
        out
    }

    /// The nonlinear Hessian part alone: `(Σ_i c_i ∇²h_i(y, η_k))·X`.
    pub fn nonlinear_hessian_apply(
        &self,
        y: &DVector<f64>,
        k: usize,
        x: &DMatrix<f64>,
    ) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(x.nrows(), x.ncols());
        let eta = &self.params[k];
        let nnz = self.nonlinear.row_nnz();
        let mut supp = Vec::with_capacity(nnz);
        let mut vals = vec![0.0; nnz];
        let mut hess = vec![0.0; nnz * nnz];
        for i in 0..self.nonlinear.count() {
            supp.clear();
            self.nonlinear.support(i, &mut supp);
            let len = supp.len();
            for (s, &idx) in supp.iter().enumerate() {
                vals[s] = y[idx];
            }
            self.nonlinear
                .hessian(i, &vals[..len], eta, &mut hess[..len * len]);
            let w = self.weights[i];
            for a in 0..len {
                for b in 0..len {
                    let coeff = w * hess[a * len + b];
                    if coeff == 0.0 {
                        continue;
                    }
                    let (ra, cb) = (supp[a], supp[b]);
                    for j in 0..x.ncols() {
                        out[(ra, j)] += coeff * x[(cb, j)];
                    }
                }
            }
        }
        out
    }

    /// Streams the entries of `∇²H_η(y)` (quadratic plus nonlinear part).
    pub fn for_each_hessian_entry(
        &self,
        y: &DVector<f64>,
        k: usize,
        mut f: impl FnMut(usize, usize, f64),
    ) {
        self.quad.for_each_entry(&mut f);
        let eta = &self.params[k];
        let nnz = self.nonlinear.row_nnz();
        let mut supp = Vec::with_capacity(nnz);
        let mut vals = vec![0.0; nnz];
        let mut hess = vec![0.0; nnz * nnz];
        for i in 0..self.nonlinear.count() {
            supp.clear();
            self.nonlinear.support(i, &mut supp);
            let len = supp.len();
            for (s, &idx) in supp.iter().enumerate() {
                vals[s] = y[idx];
            }
            self.nonlinear
                .hessian(i, &vals[..len], eta, &mut hess[..len * len]);
            let w = self.weights[i];
            // zero values are still emitted: callers rely on a fixed pattern
            for a in 0..len {
                for b in 0..len {
                    f(supp[a], supp[b], w * hess[a * len + b]);
                }
            }
        }
    }
}

/// Splitting of the time domain into steps; uniform by default.
#[derive(Debug, Clone)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn uniform(t0: f64, t_final: f64, nt: usize) -> Result<Self> {
        if nt == 0 || t_final <= t0 {
            return Err(Error::Config(format!(
                "time grid needs nt >= 1 and t_final > t0, got nt={nt}, [{t0}, {t_final}]"
            )));
        }
        let dt = (t_final - t0) / nt as f64;
        let times = (0..=nt).map(|j| t0 + dt * j as f64).collect();
        Ok(Self { times })
    }

    pub fn from_steps(t0: f64, steps: &[f64]) -> Result<Self> {
        if steps.is_empty() || steps.iter().any(|&dt| dt <= 0.0) {
            return Err(Error::Config(
                "time grid steps must be nonempty and strictly positive".into(),
            ));
        }
        let mut times = Vec::with_capacity(steps.len() + 1);
        times.push(t0);
        for &dt in steps {
            times.push(times.last().unwrap() + dt);
        }
        Ok(Self { times })
    }

    pub fn num_steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn dt(&self, j: usize) -> f64 {
        self.times[j + 1] - self.times[j]
    }

    pub fn time(&self, j: usize) -> f64 {
        self.times[j]
    }

    pub fn t0(&self) -> f64 {
        self.times[0]
    }

    pub fn t_final(&self) -> f64 {
        *self.times.last().unwrap()
    }
}

/// Recorded snapshots of a matrix-valued trajectory.
#[derive(Debug, Clone)]
pub struct StateTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<DMatrix<f64>>,
}

impl StateTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}
