//! Periodic 2D nonlinear Schrödinger discretization.
//!
//! The PDE `i∂ₜu + Δu + ε|u|²u = 0` on `[-Lx, Lx] × [-Ly, Ly]` with periodic
//! boundary conditions is split into real and imaginary parts `u = q + ip`
//! and discretized with the second-order 5-point Laplacian on a uniform grid.
//! The discrete Hamiltonian is
//! `H(y) = ½(-qᵀDq - pᵀDp) - (ε/4) Σ_i (q_i² + p_i²)²`
//! and the nonlinear part decomposes element-wise with unit weights.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{HamiltonianModel, NonlinearTerm, SparseOperator};
use crate::error::{Error, Result};

/// Benchmark scenario selecting the initial condition family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestCase {
    /// Hump centered in the domain; moderate rank growth.
    Localized,
    /// Product-of-sines profile; steady rank growth.
    NonLocalized,
}

/// Uniform 1D parameter range; `count = 1` pins the value to `min`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ParamRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl ParamRange {
    pub fn fixed(value: f64) -> Self {
        Self {
            min: value,
            max: value,
            count: 1,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count <= 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.min + step * i as f64).collect()
    }
}

/// Configuration of the NLS benchmark model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NlsConfig {
    pub half_length_x: f64,
    pub half_length_y: f64,
    pub intervals_x: usize,
    pub intervals_y: usize,
    pub test_case: TestCase,
    pub alpha: ParamRange,
    pub beta: ParamRange,
    pub eps: ParamRange,
}

impl NlsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.intervals_x < 4 || self.intervals_y < 4 {
            return Err(Error::Config(format!(
                "grid needs at least 4 intervals per direction, got {}x{}",
                self.intervals_x, self.intervals_y
            )));
        }
        if self.half_length_x <= 0.0 || self.half_length_y <= 0.0 {
            return Err(Error::Config("domain half-lengths must be positive".into()));
        }
        if self.alpha.count == 0 || self.beta.count == 0 || self.eps.count == 0 {
            return Err(Error::Config("parameter counts must be positive".into()));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_length_x / self.intervals_x as f64
    }

    pub fn dy(&self) -> f64 {
        2.0 * self.half_length_y / self.intervals_y as f64
    }

    /// Number of spatial nodes `N = Nx·Ny`.
    pub fn num_nodes(&self) -> usize {
        self.intervals_x * self.intervals_y
    }

    /// Node coordinates in flattened order (x index fastest).
    pub fn node(&self, idx: usize) -> (f64, f64) {
        let ix = idx % self.intervals_x;
        let iy = idx / self.intervals_x;
        (
            -self.half_length_x + self.dx() * ix as f64,
            -self.half_length_y + self.dy() * iy as f64,
        )
    }

    /// Tensor-product parameter grid, x-parameter (alpha) fastest. Each entry
    /// is `[alpha, beta, eps]`.
    pub fn param_grid(&self) -> Vec<Vec<f64>> {
        let alphas = self.alpha.values();
        let betas = self.beta.values();
        let epss = self.eps.values();
        let mut out = Vec::with_capacity(alphas.len() * betas.len() * epss.len());
        for &e in &epss {
            for &b in &betas {
                for &a in &alphas {
                    out.push(vec![a, b, e]);
                }
            }
        }
        out
    }

    pub fn num_params(&self) -> usize {
        self.alpha.count * self.beta.count * self.eps.count
    }

    fn param_dim(&self) -> usize {
        match self.test_case {
            TestCase::Localized => 3,
            TestCase::NonLocalized => 2,
        }
    }
}

/// Cubic NLS nonlinearity: `h_i(y, η) = -(ε/4)(q_i² + p_i²)²` with support
/// `{i, N+i}`.
struct NlsNonlinearity {
    half_dim: usize,
}

impl NonlinearTerm for NlsNonlinearity {
    fn count(&self) -> usize {
        self.half_dim
    }

    fn row_nnz(&self) -> usize {
        2
    }

    fn support(&self, row: usize, out: &mut Vec<usize>) {
        out.push(row);
        out.push(self.half_dim + row);
    }

    fn value(&self, _row: usize, y_supp: &[f64], eta: &[f64]) -> f64 {
        let (q, p) = (y_supp[0], y_supp[1]);
        let s = q * q + p * p;
        -0.25 * eta[2] * s * s
    }

    fn gradient(&self, _row: usize, y_supp: &[f64], eta: &[f64], out: &mut [f64]) {
        let (q, p) = (y_supp[0], y_supp[1]);
        let s = q * q + p * p;
        out[0] = -eta[2] * s * q;
        out[1] = -eta[2] * s * p;
    }

    fn hessian(&self, _row: usize, y_supp: &[f64], eta: &[f64], out: &mut [f64]) {
        let (q, p) = (y_supp[0], y_supp[1]);
        let s = q * q + p * p;
        let e = eta[2];
        out[0] = -e * (s + 2.0 * q * q);
        out[1] = -e * 2.0 * q * p;
        out[2] = -e * 2.0 * q * p;
        out[3] = -e * (s + 2.0 * p * p);
    }
}

/// Assembles the periodic 5-point Laplacian `D` (negative semi-definite).
fn periodic_laplacian(cfg: &NlsConfig) -> Result<SparseOperator> {
    let (nx, ny) = (cfg.intervals_x, cfg.intervals_y);
    let n = nx * ny;
    let (cx, cy) = (1.0 / (cfg.dx() * cfg.dx()), 1.0 / (cfg.dy() * cfg.dy()));
    let mut trips = Vec::with_capacity(5 * n);
    for iy in 0..ny {
        for ix in 0..nx {
            let idx = ix + nx * iy;
            trips.push((idx, idx, -2.0 * cx - 2.0 * cy));
            let xm = (ix + nx - 1) % nx + nx * iy;
            let xp = (ix + 1) % nx + nx * iy;
            let ym = ix + nx * ((iy + ny - 1) % ny);
            let yp = ix + nx * ((iy + 1) % ny);
            trips.push((idx, xm, cx));
            trips.push((idx, xp, cx));
            trips.push((idx, ym, cy));
            trips.push((idx, yp, cy));
        }
    }
    SparseOperator::from_triplets(n, &trips)
}

/// Builds the NLS full-order model: quadratic operator `blkdiag(-D, -D)` and
/// the element-wise quartic decomposition with unit weights.
pub fn nls_build(cfg: &NlsConfig) -> Result<HamiltonianModel> {
    cfg.validate()?;
    let n = cfg.num_nodes();
    let lap = periodic_laplacian(cfg)?;
    let mut trips = Vec::with_capacity(2 * lap.nnz());
    lap.for_each_entry(|r, c, v| {
        trips.push((r, c, -v));
        trips.push((n + r, n + c, -v));
    });
    let quad = SparseOperator::from_triplets(2 * n, &trips)?;
    HamiltonianModel::new(
        n,
        cfg.param_dim(),
        cfg.param_grid(),
        quad,
        DVector::from_element(n, 1.0),
        Box::new(NlsNonlinearity { half_dim: n }),
    )
}

/// Initial condition for one parameter, split into `(q; p)`.
pub fn initial_condition(cfg: &NlsConfig, eta: &[f64]) -> DVector<f64> {
    let n = cfg.num_nodes();
    let (alpha, beta) = (eta[0], eta[1]);
    let mut y = DVector::zeros(2 * n);
    match cfg.test_case {
        TestCase::Localized => {
            let amp = 2.0_f64.sqrt();
            for idx in 0..n {
                let (x, yy) = cfg.node(idx);
                let envelope = amp / ((alpha * x).cosh() * (beta * yy).cosh());
                let phase = 0.5 * x + 0.5 * yy;
                y[idx] = envelope * phase.cos();
                y[n + idx] = envelope * phase.sin();
            }
        }
        TestCase::NonLocalized => {
            for idx in 0..n {
                let (x, yy) = cfg.node(idx);
                y[idx] = (1.0 + alpha * x.sin()) * (2.0 + beta * yy.sin());
            }
        }
    }
    y
}

/// Initial phase-space snapshot matrix, one column per parameter.
pub fn initial_state(cfg: &NlsConfig) -> DMatrix<f64> {
    let params = cfg.param_grid();
    let n2 = 2 * cfg.num_nodes();
    let mut r0 = DMatrix::zeros(n2, params.len());
    for (j, eta) in params.iter().enumerate() {
        r0.set_column(j, &initial_condition(cfg, eta));
    }
    r0
}
