//! Symplectic dynamical low-rank machinery: tangent-space projection, the
//! reduced flow right-hand sides, a Cayley retraction with computable inverse
//! tangent map, and the partitioned RK2 integrator.

mod prk2;
mod retraction;

pub use prk2::{prk2_step, Prk2Diagnostics, Prk2Options};
pub use retraction::CayleyRetraction;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::model::HamiltonianModel;
use crate::symplectic::{
    canonical_symplectic_apply, canonical_symplectic_apply_right, OrthoSymplecticBasis,
};

/// Default relative eigenvalue floor used when inverting `M(Z)`.
pub const DEFAULT_EPS_REG: f64 = 1e-12;

/// Low-rank factorization `AZ` of the approximate state: an ortho-symplectic
/// basis and one coefficient column per parameter.
#[derive(Debug, Clone)]
pub struct ReducedState {
    pub basis: OrthoSymplecticBasis,
    pub coeffs: DMatrix<f64>,
}

impl ReducedState {
    pub fn new(basis: OrthoSymplecticBasis, coeffs: DMatrix<f64>) -> Result<Self> {
        if coeffs.nrows() != basis.reduced_dim() {
            return Err(Error::Dimension(format!(
                "coefficients have {} rows but the basis has {} columns",
                coeffs.nrows(),
                basis.reduced_dim()
            )));
        }
        Ok(Self { basis, coeffs })
    }

    /// n
    pub fn half_rank(&self) -> usize {
        self.basis.half_rank()
    }

    /// 2n
    pub fn reduced_dim(&self) -> usize {
        self.basis.reduced_dim()
    }

    pub fn num_params(&self) -> usize {
        self.coeffs.ncols()
    }

    /// Reconstructs the full state `AZ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.basis.matrix() * &self.coeffs
    }

    /// Smallest eigenvalue of `M(Z)`, reported for full-rank diagnostics.
    pub fn min_m_eigenvalue(&self) -> f64 {
        let m = compute_m(&self.coeffs);
        SymmetricEigen::new(m)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// `M(Z) = ZZᵀ + J_{2n}ᵀ Z Zᵀ J_{2n}`, symmetric positive semi-definite.
pub fn compute_m(coeffs: &DMatrix<f64>) -> DMatrix<f64> {
    let b = coeffs * coeffs.transpose();
    let n = b.nrows() / 2;
    let mut m = b.clone();
    // JᵀBJ rearranges the blocks of B: [[B22, -B21], [-B12, B11]]
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] += b[(n + i, n + j)];
            m[(i, n + j)] -= b[(n + i, j)];
            m[(n + i, j)] -= b[(i, n + j)];
            m[(n + i, n + j)] += b[(i, j)];
        }
    }
    m
}

/// Pseudo-inverse of a symmetric PSD matrix with the eigenvalue floor
/// `eps_reg·λ_max`; coincides with the exact inverse when well conditioned.
pub fn regularized_inverse(m: &DMatrix<f64>, eps_reg: f64) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(m.clone());
    let lam_max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lam_max > 0.0) {
        return Err(Error::Singular(
            "cannot invert a zero (or negative) coefficient Gram matrix".into(),
        ));
    }
    let floor = eps_reg * lam_max;
    let inv_diag = DVector::from_fn(eig.eigenvalues.len(), |i, _| {
        1.0 / eig.eigenvalues[i].max(floor)
    });
    let scaled = &eig.eigenvectors * DMatrix::from_diagonal(&inv_diag);
    Ok(scaled * eig.eigenvectors.transpose())
}

/// Right-hand side of the basis evolution:
/// `Ȧ = (I - AAᵀ)(J∇H·Zᵀ + ∇H·Zᵀ·J_{2n})·M(Z)⁻¹`
/// evaluated with the supplied gradient `∇H(AZ)` (full or sampled columns).
pub fn basis_velocity(
    basis: &OrthoSymplecticBasis,
    coeffs: &DMatrix<f64>,
    grad: &DMatrix<f64>,
    eps_reg: f64,
) -> Result<DMatrix<f64>> {
    if grad.nrows() != basis.full_dim() || grad.ncols() != coeffs.ncols() {
        return Err(Error::Dimension(format!(
            "gradient is {}x{} but expected {}x{}",
            grad.nrows(),
            grad.ncols(),
            basis.full_dim(),
            coeffs.ncols()
        )));
    }
    let a = basis.matrix();
    let t1 = grad * coeffs.transpose();
    let jg = canonical_symplectic_apply(grad)?;
    let mut w = jg * coeffs.transpose();
    w += canonical_symplectic_apply_right(&t1)?;
    // project out range(A)
    let proj = a.transpose() * &w;
    w -= a * proj;
    let m_inv = regularized_inverse(&compute_m(coeffs), eps_reg)?;
    Ok(w * m_inv)
}

/// Orthogonal (with respect to the Frobenius inner product) projection onto
/// the tangent space of the low-rank manifold at `AZ`:
/// `Π X = (I - AAᵀ)(XZᵀ + JXZᵀJ_{2n}ᵀ)M⁻¹Z + AAᵀX`.
pub fn tangent_project(
    basis: &OrthoSymplecticBasis,
    coeffs: &DMatrix<f64>,
    x: &DMatrix<f64>,
    eps_reg: f64,
) -> Result<DMatrix<f64>> {
    if x.nrows() != basis.full_dim() || x.ncols() != coeffs.ncols() {
        return Err(Error::Dimension(format!(
            "projection input is {}x{} but expected {}x{}",
            x.nrows(),
            x.ncols(),
            basis.full_dim(),
            coeffs.ncols()
        )));
    }
    let a = basis.matrix();
    let mut w = x * coeffs.transpose();
    let jx = canonical_symplectic_apply(x)?;
    // J X Zᵀ J_{2n}ᵀ = -(J X Zᵀ) J_{2n}
    w -= canonical_symplectic_apply_right(&(jx * coeffs.transpose()))?;
    let proj = a.transpose() * &w;
    w -= a * proj;
    let m_inv = regularized_inverse(&compute_m(coeffs), eps_reg)?;
    let mut out = w * (m_inv * coeffs);
    out += a * (a.transpose() * x);
    Ok(out)
}

/// Value, gradient and Hessian of a reduced Hamiltonian `z ↦ Ĥ_η(Yz)` for a
/// fixed evaluation basis `Y`. Implemented both exactly and through the
/// empirical interpolation of the nonlinear term.
pub trait ReducedHamiltonian: Sync {
    fn reduced_dim(&self) -> usize;

    fn hamiltonian(&self, z: &DVector<f64>, param: usize) -> f64;

    fn gradient(&self, z: &DVector<f64>, param: usize) -> DVector<f64>;

    fn hessian(&self, z: &DVector<f64>, param: usize) -> DMatrix<f64>;

    fn gradient_and_hessian(&self, z: &DVector<f64>, param: usize) -> (DVector<f64>, DMatrix<f64>) {
        (self.gradient(z, param), self.hessian(z, param))
    }
}

/// Exact reduced Hamiltonian `H_η(Yz)`; the projected quadratic operator
/// `YᵀQY` is computed once per basis.
pub struct ExactReduced<'a> {
    model: &'a HamiltonianModel,
    basis: DMatrix<f64>,
    quad_red: DMatrix<f64>,
}

impl<'a> ExactReduced<'a> {
    pub fn new(model: &'a HamiltonianModel, basis: DMatrix<f64>) -> Self {
        let qy = model.quadratic_operator().apply_matrix(&basis);
        let quad_red = basis.transpose() * qy;
        Self {
            model,
            basis,
            quad_red,
        }
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }
}

impl ReducedHamiltonian for ExactReduced<'_> {
    fn reduced_dim(&self) -> usize {
        self.basis.ncols()
    }

    fn hamiltonian(&self, z: &DVector<f64>, param: usize) -> f64 {
        let y = &self.basis * z;
        0.5 * z.dot(&(&self.quad_red * z)) + self.model.nonquadratic(&y, param)
    }

    fn gradient(&self, z: &DVector<f64>, param: usize) -> DVector<f64> {
        let y = &self.basis * z;
        let g = self.model.gradient(&y, param);
        self.basis.transpose() * g
    }

    fn hessian(&self, z: &DVector<f64>, param: usize) -> DMatrix<f64> {
        self.gradient_and_hessian(z, param).1
    }

    fn gradient_and_hessian(&self, z: &DVector<f64>, param: usize) -> (DVector<f64>, DMatrix<f64>) {
        let y = &self.basis * z;
        let g = self.model.gradient(&y, param);
        let grad = self.basis.transpose() * g;
        let sy = self.model.nonlinear_hessian_apply(&y, param, &self.basis);
        let mut hess = &self.quad_red + self.basis.transpose() * sy;
        let sym = 0.5 * (&hess + hess.transpose());
        hess = sym;
        (grad, hess)
    }
}
