//! Cayley-transform retraction on the ortho-symplectic Stiefel manifold.
//!
//! Under the complex identification an ortho-symplectic basis is a complex
//! matrix `W` with orthonormal columns and a tangent vector is a complex `T`
//! with `WᵃT` skew-Hermitian. The retraction applies the Cayley transform of
//! the skew-Hermitian extension `Ω(T) = XWᵃ - WXᵃ`, `X = (I - ½WWᵃ)T`:
//!
//! `R_W(T) = (I - ½Ω)⁻¹(I + ½Ω)W = W + U(I - ½VᵃU)⁻¹VᵃW`
//!
//! with the low-rank factors `U = [X | W]`, `V = [W | -X]`, so every
//! evaluation reduces to one small complex linear system (`2n × 2n` complex,
//! `4n × 4n` real). The Cayley factor is unitary, hence the result satisfies
//! both manifold invariants, `R_W(0) = W` exactly, and the differential at
//! zero is the identity. The inverse tangent map solves the differential
//! relation in closed form through the same factors.

use nalgebra::{Complex, DMatrix};

use super::DEFAULT_EPS_REG;
use crate::error::{Error, Result};
use crate::symplectic::{
    complex_orthonormalize, complex_to_real_block, real_to_complex_averaged, CMatrix,
    OrthoSymplecticBasis,
};

const ONE: Complex<f64> = Complex::new(1.0, 0.0);

/// Local retraction anchored at a fixed base point.
pub struct CayleyRetraction {
    base: OrthoSymplecticBasis,
    w: CMatrix,
    tangent_tol: f64,
}

struct Factors {
    /// `[X | W]`
    u: CMatrix,
    /// `[W | -X]`
    v: CMatrix,
    /// `I - ½VᵃU`
    core: CMatrix,
}

impl CayleyRetraction {
    pub fn new(base: &OrthoSymplecticBasis) -> Self {
        Self {
            base: base.clone(),
            w: base.to_complex(),
            tangent_tol: 1e-8,
        }
    }

    pub fn base(&self) -> &OrthoSymplecticBasis {
        &self.base
    }

    /// Complex reading of a tangent direction, with the compatibility check
    /// `AᵀV + VᵀA = 0`.
    fn complex_tangent(&self, v: &DMatrix<f64>) -> Result<CMatrix> {
        let a = self.base.matrix();
        if v.nrows() != a.nrows() || v.ncols() != a.ncols() {
            return Err(Error::Dimension(format!(
                "tangent is {}x{} but the base point is {}x{}",
                v.nrows(),
                v.ncols(),
                a.nrows(),
                a.ncols()
            )));
        }
        let sym = a.transpose() * v + v.transpose() * a;
        let defect = sym.norm();
        if defect > self.tangent_tol * (1.0 + v.norm()) {
            return Err(Error::TangentContract(defect));
        }
        real_to_complex_averaged(v)
    }

    fn factors(&self, t: &CMatrix) -> Factors {
        let n = self.w.ncols();
        let wat = self.w.adjoint() * t;
        let x = t - &self.w * (wat * Complex::new(0.5, 0.0));
        let mut u = CMatrix::zeros(self.w.nrows(), 2 * n);
        u.columns_mut(0, n).copy_from(&x);
        u.columns_mut(n, n).copy_from(&self.w);
        let mut v = CMatrix::zeros(self.w.nrows(), 2 * n);
        v.columns_mut(0, n).copy_from(&self.w);
        v.columns_mut(n, n).copy_from(&(-&x));
        let mut core = v.adjoint() * &u;
        core.scale_mut(-0.5);
        for i in 0..2 * n {
            core[(i, i)] += ONE;
        }
        Factors { u, v, core }
    }

    fn retract_complex(&self, t: &CMatrix) -> Result<CMatrix> {
        let f = self.factors(t);
        let rhs = f.v.adjoint() * &self.w;
        let sol = f
            .core
            .clone()
            .lu()
            .solve(&rhs)
            .ok_or(Error::StepTooLarge)?;
        Ok(&self.w + &f.u * sol)
    }

    /// Retracts a tangent direction back onto the manifold.
    pub fn retract(&self, v: &DMatrix<f64>) -> Result<OrthoSymplecticBasis> {
        let t = self.complex_tangent(v)?;
        let mut y = self.retract_complex(&t)?;
        // the Cayley factor is unitary; polish only if roundoff accumulated
        let mut gram = y.adjoint() * &y;
        for i in 0..gram.nrows() {
            gram[(i, i)] -= ONE;
        }
        if gram.norm() > 1e-12 {
            y = complex_orthonormalize(&y)?;
        }
        Ok(OrthoSymplecticBasis::from_complex(&y))
    }

    /// Pushforward of the retraction differential at `v` applied to `vdot`
    /// (both tangent at the base point).
    pub fn differential(&self, v: &DMatrix<f64>, vdot: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let t = self.complex_tangent(v)?;
        let td = self.complex_tangent(vdot)?;
        let f = self.factors(&t);
        let y = self.retract_complex(&t)?;
        let y_plus_w = &y + &self.w;
        let xd = &td - &self.w * (self.w.adjoint() * &td) * Complex::new(0.5, 0.0);
        // ½ Ω(vdot) (Y + W)
        let m1 = (&xd * (self.w.adjoint() * &y_plus_w)
            - &self.w * (xd.adjoint() * &y_plus_w))
            * Complex::new(0.5, 0.0);
        // (I - ½Ω)⁻¹ m1 through the low-rank factors
        let rhs = f.v.adjoint() * &m1;
        let sol = f
            .core
            .clone()
            .lu()
            .solve(&rhs)
            .ok_or(Error::StepTooLarge)?;
        let out = &m1 + (&f.u * sol) * Complex::new(0.5, 0.0);
        Ok(complex_to_real_block(&out))
    }

    /// Inverse tangent map: finds the tangent `v̇` at the base point whose
    /// pushforward through the differential at `v` equals `ydot` (a tangent
    /// at `R(v)`).
    pub fn inverse_differential(&self, v: &DMatrix<f64>, ydot: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let t = self.complex_tangent(v)?;
        let f = self.factors(&t);
        let y = self.retract_complex(&t)?;
        let yd = real_to_complex_averaged(ydot)?;
        // B = (I - ½Ω) Ẏ
        let b = &yd - (&f.u * (f.v.adjoint() * &yd)) * Complex::new(0.5, 0.0);
        // G = Wᵃ(Y + W) = I + WᵃY, invertible within the injectivity region
        let g = self.w.adjoint() * (&y + &self.w);
        // right divisions X·G = R solve Gᵀ Xᵀ = Rᵀ
        let g_t_lu = g.transpose().lu();
        // K G = 2 (I - WWᵃ) B
        let proj_b = &b - &self.w * (self.w.adjoint() * &b);
        let k = g_t_lu
            .solve(&(proj_b.transpose() * Complex::new(2.0, 0.0)))
            .ok_or(Error::StepTooLarge)?
            .transpose();
        // S G = 2 WᵃB + Kᵃ(Y + W), then skew-Hermitian part
        let rhs_s = self.w.adjoint() * &b * Complex::new(2.0, 0.0) + k.adjoint() * (&y + &self.w);
        let s_raw = g_t_lu
            .solve(&rhs_s.transpose())
            .ok_or(Error::StepTooLarge)?
            .transpose();
        let s = (&s_raw - s_raw.adjoint()) * Complex::new(0.5, 0.0);
        let vdot = &self.w * s + k;
        Ok(complex_to_real_block(&vdot))
    }

    /// Projects an arbitrary real matrix onto the tangent space at the base.
    pub fn project_to_tangent(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let t = real_to_complex_averaged(m)?;
        let wat = self.w.adjoint() * &t;
        let herm = (&wat + wat.adjoint()) * Complex::new(0.5, 0.0);
        let proj = &t - &self.w * herm;
        Ok(complex_to_real_block(&proj))
    }
}

/// Convenience wrapper mirroring the manifold map `R_A(V)`.
pub fn retract(
    base: &OrthoSymplecticBasis,
    tangent: &DMatrix<f64>,
) -> Result<OrthoSymplecticBasis> {
    CayleyRetraction::new(base).retract(tangent)
}

// keep unused import honest when eps-reg plumbing is absent here
const _: f64 = DEFAULT_EPS_REG;
