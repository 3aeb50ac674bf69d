//! Dense numerical kernels shared across the crate: ortho-symplectic bases,
//! truncated SVD, pivoted-QR column subset selection and QDEIM index
//! selection.
//!
//! The canonical symplectic matrix `J_{2k} = [[0, I], [-I, 0]]` is never
//! materialized; every product with it uses the block swap-negate form.
//! Ortho-symplectic matrices (`AᵀA = I`, `AᵀJA = J`) are exactly the real
//! representations of complex matrices with orthonormal columns, so the
//! construction and repair routines work in complex arithmetic and map back.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

/// Complex dense matrix used for the unitary representation of bases.
pub type CMatrix = DMatrix<Complex<f64>>;

/// Default tolerance on the ortho-symplectic invariants after construction.
pub const DEFAULT_EPS_STRUCT: f64 = 1e-10;

/// Applies the canonical symplectic matrix: `J_{2k}·X = [X_lower; -X_upper]`.
pub fn canonical_symplectic_apply(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.nrows() % 2 != 0 {
        return Err(Error::Dimension(format!(
            "J application needs an even row count, got {}",
            x.nrows()
        )));
    }
    let k = x.nrows() / 2;
    let mut out = DMatrix::zeros(x.nrows(), x.ncols());
    out.view_mut((0, 0), (k, x.ncols())).copy_from(&x.view((k, 0), (k, x.ncols())));
    let mut lower = out.view_mut((k, 0), (k, x.ncols()));
    lower.copy_from(&x.view((0, 0), (k, x.ncols())));
    lower.neg_mut();
    Ok(out)
}

/// Vector form of [`canonical_symplectic_apply`].
pub fn canonical_symplectic_apply_vec(v: &DVector<f64>) -> DVector<f64> {
    let half = v.len() / 2;
    debug_assert_eq!(2 * half, v.len());
    DVector::from_fn(v.len(), |i, _| {
        if i < half {
            v[half + i]
        } else {
            -v[i - half]
        }
    })
}

/// Right-multiplication by the canonical symplectic matrix:
/// `X·J_{2k} = [-X_right, X_left]` for `X` with `2k` columns.
pub fn canonical_symplectic_apply_right(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.ncols() % 2 != 0 {
        return Err(Error::Dimension(format!(
            "right J application needs an even column count, got {}",
            x.ncols()
        )));
    }
    let k = x.ncols() / 2;
    let mut out = DMatrix::zeros(x.nrows(), x.ncols());
    out.view_mut((0, 0), (x.nrows(), k)).copy_from(&x.view((0, k), (x.nrows(), k)));
    out.view_mut((0, 0), (x.nrows(), k)).neg_mut();
    out.view_mut((0, k), (x.nrows(), k)).copy_from(&x.view((0, 0), (x.nrows(), k)));
    Ok(out)
}

/// Ordered set of distinct indices into `[0, domain)`.
///
/// Used for interpolation indices, sample indices and parameter subsets. The
/// complement is always implicit; it is never materialized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet {
    indices: Vec<usize>,
    domain: usize,
}

impl IndexSet {
    pub fn new(indices: Vec<usize>, domain: usize) -> Result<Self> {
        let mut seen = vec![false; domain];
        for &i in &indices {
            if i >= domain {
                return Err(Error::Dimension(format!(
                    "index {i} out of domain [0, {domain})"
                )));
            }
            if seen[i] {
                return Err(Error::Structural(format!("duplicate index {i}")));
            }
            seen[i] = true;
        }
        Ok(Self { indices, domain })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn domain(&self) -> usize {
        self.domain
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    /// Gathers the selected rows of `m` into a dense `len × ncols` matrix.
    pub fn gather_rows(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(self.indices.len(), m.ncols(), |r, c| m[(self.indices[r], c)])
    }

    /// Gathers the selected columns of `m` into a dense `nrows × len` matrix.
    pub fn gather_cols(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(m.nrows(), self.indices.len(), |r, c| m[(r, self.indices[c])])
    }

    /// Scatters `rows` (one per selected index) back into a `domain × ncols`
    /// zero matrix.
    pub fn scatter_rows(&self, rows: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.domain, rows.ncols());
        for (r, &i) in self.indices.iter().enumerate() {
            for c in 0..rows.ncols() {
                out[(i, c)] = rows[(r, c)];
            }
        }
        out
    }
}

/// Basis of a symplectic-orthonormal reduced space: a `2N × 2n` matrix with
/// `AᵀA = I_{2n}` and `AᵀJ_{2N}A = J_{2n}`.
#[derive(Debug, Clone)]
pub struct OrthoSymplecticBasis {
    columns: DMatrix<f64>,
    half_full_dim: usize,
    half_rank: usize,
}

impl OrthoSymplecticBasis {
    /// Validates both invariants at the default tolerance.
    pub fn new(columns: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerance(columns, DEFAULT_EPS_STRUCT)
    }

    /// Validates both invariants at a custom tolerance `eps_struct`.
    pub fn with_tolerance(columns: DMatrix<f64>, eps_struct: f64) -> Result<Self> {
        if columns.nrows() % 2 != 0 || columns.ncols() % 2 != 0 {
            return Err(Error::Dimension(format!(
                "ortho-symplectic basis needs even dimensions, got {}x{}",
                columns.nrows(),
                columns.ncols()
            )));
        }
        if columns.ncols() > columns.nrows() {
            return Err(Error::Dimension(format!(
                "basis cannot have more columns ({}) than rows ({})",
                columns.ncols(),
                columns.nrows()
            )));
        }
        let basis = Self {
            half_full_dim: columns.nrows() / 2,
            half_rank: columns.ncols() / 2,
            columns,
        };
        let (d_orth, d_symp) = basis.defects();
        if d_orth > eps_struct || d_symp > eps_struct {
            return Err(Error::Structural(format!(
                "basis violates invariants: orthogonality defect {d_orth:.3e}, \
                 symplecticity defect {d_symp:.3e} (tolerance {eps_struct:.1e})"
            )));
        }
        Ok(basis)
    }

    /// Builds the real representation `[[Φ, -Ψ], [Ψ, Φ]]` of a complex matrix
    /// `W = Φ + iΨ` with orthonormal columns.
    pub(crate) fn from_complex(w: &CMatrix) -> Self {
        let basis = Self {
            columns: complex_to_real_block(w),
            half_full_dim: w.nrows(),
            half_rank: w.ncols(),
        };
        debug_assert!({
            let (a, b) = basis.defects();
            a <= 1e-8 && b <= 1e-8
        });
        basis
    }

    /// Extracts the complex representation `W = Φ + iΨ` by averaging the two
    /// redundant block copies.
    pub fn to_complex(&self) -> CMatrix {
        let (nh, rh) = (self.half_full_dim, self.half_rank);
        CMatrix::from_fn(nh, rh, |i, j| {
            let re = 0.5 * (self.columns[(i, j)] + self.columns[(nh + i, rh + j)]);
            let im = 0.5 * (self.columns[(nh + i, j)] - self.columns[(i, rh + j)]);
            Complex::new(re, im)
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.columns
    }

    /// N
    pub fn half_full_dim(&self) -> usize {
        self.half_full_dim
    }

    /// n
    pub fn half_rank(&self) -> usize {
        self.half_rank
    }

    /// 2N
    pub fn full_dim(&self) -> usize {
        2 * self.half_full_dim
    }

    /// 2n
    pub fn reduced_dim(&self) -> usize {
        2 * self.half_rank
    }

    /// Frobenius norms of `AᵀA - I` and `AᵀJA - J_{2n}`.
    pub fn defects(&self) -> (f64, f64) {
        let a = &self.columns;
        let mut gram = a.transpose() * a;
        for i in 0..gram.nrows() {
            gram[(i, i)] -= 1.0;
        }
        let d_orth = gram.norm();

        let ja = canonical_symplectic_apply(a).expect("even row count by construction");
        let mut sg = a.transpose() * ja;
        let n = self.half_rank;
        for i in 0..n {
            sg[(i, n + i)] -= 1.0;
            sg[(n + i, i)] += 1.0;
        }
        let d_symp = sg.norm();
        (d_orth, d_symp)
    }
}

/// Complex reading of a real `2N × 2n` block matrix, averaging the two
/// redundant copies: `Φ = (B₁₁ + B₂₂)/2`, `Ψ = (B₂₁ - B₁₂)/2`. Exact on
/// matrices that carry the `[[Φ, -Ψ], [Ψ, Φ]]` structure.
pub fn real_to_complex_averaged(m: &DMatrix<f64>) -> Result<CMatrix> {
    if m.nrows() % 2 != 0 || m.ncols() % 2 != 0 {
        return Err(Error::Dimension(format!(
            "block reading needs even dimensions, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let (nh, rh) = (m.nrows() / 2, m.ncols() / 2);
    Ok(CMatrix::from_fn(nh, rh, |i, j| {
        let re = 0.5 * (m[(i, j)] + m[(nh + i, rh + j)]);
        let im = 0.5 * (m[(nh + i, j)] - m[(i, rh + j)]);
        Complex::new(re, im)
    }))
}

/// Real `2N × 2n` block representation `[[Re, -Im], [Im, Re]]` of a complex
/// `N × n` matrix.
pub fn complex_to_real_block(m: &CMatrix) -> DMatrix<f64> {
    let (nh, rh) = (m.nrows(), m.ncols());
    let mut out = DMatrix::zeros(2 * nh, 2 * rh);
    for j in 0..rh {
        for i in 0..nh {
            let z = m[(i, j)];
            out[(i, j)] = z.re;
            out[(nh + i, j)] = z.im;
            out[(i, rh + j)] = -z.im;
            out[(nh + i, rh + j)] = z.re;
        }
    }
    out
}

/// Modified Gram-Schmidt with reorthogonalization on the columns of a complex
/// matrix. The R diagonal is real positive, so a matrix that already has
/// orthonormal columns is returned unchanged up to roundoff.
pub(crate) fn complex_orthonormalize(w: &CMatrix) -> Result<CMatrix> {
    let mut q = w.clone();
    let cols = q.ncols();
    let max_norm = (0..cols).map(|j| q.column(j).norm()).fold(0.0, f64::max);
    if max_norm == 0.0 {
        return Err(Error::RankDeficient("all columns are zero".into()));
    }
    for j in 0..cols {
        for _ in 0..2 {
            for i in 0..j {
                let proj: Complex<f64> = q.column(i).dotc(&q.column(j));
                let qi = q.column(i).clone_owned();
                let mut qj = q.column_mut(j);
                qj.axpy(-proj, &qi, Complex::new(1.0, 0.0));
            }
        }
        let nrm = q.column(j).norm();
        if nrm <= 1e-8 * max_norm {
            return Err(Error::RankDeficient(format!(
                "column {j} is numerically dependent on the previous ones"
            )));
        }
        q.column_mut(j).unscale_mut(nrm);
    }
    Ok(q)
}

/// Restores the ortho-symplectic invariants of a nearby raw matrix.
///
/// The raw columns are reinterpreted as complex data consistent with the
/// block structure of the manifold, orthonormalized in complex arithmetic and
/// mapped back, which repairs both invariants simultaneously.
pub fn symplectify(a_raw: &DMatrix<f64>) -> Result<OrthoSymplecticBasis> {
    let w = real_to_complex_averaged(a_raw)?;
    let q = complex_orthonormalize(&w)?;
    Ok(OrthoSymplecticBasis::from_complex(&q))
}

/// Truncation rule for [`truncated_svd`]. Tolerances are relative to the
/// largest singular value.
#[derive(Debug, Clone, Copy)]
pub enum SvdTruncation {
    FixedRank(usize),
    RelTol(f64),
}

/// Truncated singular value decomposition `M ≈ U Σ Vᵀ`.
///
/// `RelTol(τ)` keeps the smallest `k` with `σ_{k+1} ≤ τ·σ_1`; it never
/// returns rank zero on nonzero input.
pub fn truncated_svd(
    m: &DMatrix<f64>,
    trunc: SvdTruncation,
) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    let min_dim = m.nrows().min(m.ncols());
    let svd = m.clone().svd(true, true);
    let sigma = &svd.singular_values;
    let k = match trunc {
        SvdTruncation::FixedRank(k) => {
            if k == 0 || k > min_dim {
                return Err(Error::RankOutOfRange {
                    requested: k,
                    limit: min_dim,
                });
            }
            k
        }
        SvdTruncation::RelTol(tau) => {
            let s1 = sigma[0];
            if s1 == 0.0 {
                return Err(Error::RankDeficient(
                    "relative truncation of a zero matrix".into(),
                ));
            }
            sigma.iter().take_while(|&&s| s > tau * s1).count().max(1)
        }
    };
    let u = svd.u.as_ref().expect("SVD with U requested");
    let v_t = svd.v_t.as_ref().expect("SVD with V requested");
    let u_k = u.columns(0, k).clone_owned();
    let sigma_k = DVector::from_fn(k, |i, _| sigma[i]);
    let v_k = v_t.rows(0, k).transpose();
    Ok((u_k, sigma_k, v_k))
}

/// Initializes an ortho-symplectic basis from phase-space snapshots.
///
/// The upper and lower halves of `r0` are combined into the complex matrix
/// `Q + iP`, its rank-`n0` truncated SVD provides the complex left factor
/// `Φ + iΨ`, and the returned basis `[[Φ, -Ψ], [Ψ, Φ]]` satisfies both
/// invariants by construction. Also returns the projected coefficients
/// `Z0 = A0ᵀ R0`.
pub fn complex_svd_basis(
    r0: &DMatrix<f64>,
    n0: usize,
) -> Result<(OrthoSymplecticBasis, DMatrix<f64>)> {
    if r0.nrows() % 2 != 0 {
        return Err(Error::Dimension(format!(
            "snapshot matrix needs an even row count, got {}",
            r0.nrows()
        )));
    }
    let (nh, p) = (r0.nrows() / 2, r0.ncols());
    if n0 == 0 || n0 > nh.min(p) {
        return Err(Error::RankOutOfRange {
            requested: n0,
            limit: nh.min(p),
        });
    }
    let w = CMatrix::from_fn(nh, p, |i, j| Complex::new(r0[(i, j)], r0[(nh + i, j)]));
    let svd = w.svd(true, false);
    let sigma = &svd.singular_values;
    let num_rank = sigma
        .iter()
        .filter(|&&s| s > sigma[0] * f64::EPSILON * nh.max(p) as f64)
        .count();
    if n0 > num_rank {
        return Err(Error::RankOutOfRange {
            requested: n0,
            limit: num_rank,
        });
    }
    let u = svd.u.as_ref().expect("SVD with U requested");
    let w_basis = u.columns(0, n0).clone_owned();
    let basis = OrthoSymplecticBasis::from_complex(&w_basis);
    let coeffs = basis.matrix().transpose() * r0;
    Ok((basis, coeffs))
}

/// Greedy column-pivoted QR that yields one pivot at a time.
///
/// Ties between equal residual norms resolve to the lowest column index so
/// selections are deterministic.
pub(crate) struct PivotedQr {
    work: DMatrix<f64>,
    selected: Vec<usize>,
    taken: Vec<bool>,
    initial_max: f64,
}

impl PivotedQr {
    pub fn new(m: &DMatrix<f64>) -> Self {
        let initial_max = (0..m.ncols()).map(|j| m.column(j).norm()).fold(0.0, f64::max);
        Self {
            work: m.clone_owned(),
            selected: Vec::new(),
            taken: vec![false; m.ncols()],
            initial_max,
        }
    }

    pub fn next_pivot(&mut self) -> Result<usize> {
        let ncols = self.work.ncols();
        if self.selected.len() >= ncols.min(self.work.nrows()) {
            return Err(Error::RankDeficient(
                "no further pivots available".into(),
            ));
        }
        let mut best: Option<(usize, f64)> = None;
        for j in 0..ncols {
            if self.taken[j] {
                continue;
            }
            let nrm = self.work.column(j).norm();
            match best {
                Some((_, b)) if nrm <= b => {}
                _ => best = Some((j, nrm)),
            }
        }
        let (pivot, nrm) = best.ok_or_else(|| {
            Error::RankDeficient("all columns already selected".into())
        })?;
        if nrm <= 1e-12 * self.initial_max || nrm == 0.0 {
            return Err(Error::RankDeficient(format!(
                "residual column norms below rank tolerance after {} pivots",
                self.selected.len()
            )));
        }
        self.taken[pivot] = true;
        self.selected.push(pivot);
        let q = self.work.column(pivot).clone_owned() / nrm;
        for j in 0..ncols {
            if self.taken[j] {
                continue;
            }
            let c = q.dot(&self.work.column(j));
            let mut col = self.work.column_mut(j);
            col.axpy(-c, &q, 1.0);
        }
        Ok(pivot)
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }
}

/// First `k` column pivots of the pivoted QR of `z`, greedily maximizing
/// residual column norms.
pub fn pivoted_qr_select(z: &DMatrix<f64>, k: usize) -> Result<IndexSet> {
    if k > z.nrows().min(z.ncols()) {
        return Err(Error::RankOutOfRange {
            requested: k,
            limit: z.nrows().min(z.ncols()),
        });
    }
    let mut qr = PivotedQr::new(z);
    for _ in 0..k {
        qr.next_pivot()?;
    }
    IndexSet::new(qr.selected().to_vec(), z.ncols())
}

/// QDEIM interpolation index selection: the first `m` column pivots of the
/// pivoted QR of `Uᵀ`, which make `PᵀU` nonsingular.
pub fn qdeim_indices(u: &DMatrix<f64>) -> Result<IndexSet> {
    let m = u.ncols();
    if m > u.nrows() {
        return Err(Error::Dimension(format!(
            "QDEIM needs at least as many rows as columns, got {}x{}",
            u.nrows(),
            m
        )));
    }
    pivoted_qr_select(&u.transpose(), m).map_err(|e| match e {
        Error::RankDeficient(msg) => {
            Error::RankDeficient(format!("QDEIM selection failed: {msg}"))
        }
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_matrix(rng: &mut StdRng, rows: usize, cols: usize) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn j_apply_of_first_unit_vector() {
        let x = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let jx = canonical_symplectic_apply(&x).unwrap();
        assert_eq!(jx[(0, 0)], 0.0);
        assert_eq!(jx[(1, 0)], -1.0);
    }

    #[test]
    fn j_apply_is_involution_up_to_sign() {
        let mut rng = StdRng::seed_from_u64(7);
        let x = random_matrix(&mut rng, 6, 3);
        let jjx = canonical_symplectic_apply(&canonical_symplectic_apply(&x).unwrap()).unwrap();
        assert!((jjx + &x).norm() <= 1e-14 * x.norm().max(1.0));
    }

    #[test]
    fn j_apply_rejects_odd_rows() {
        let x = DMatrix::zeros(3, 2);
        assert!(matches!(
            canonical_symplectic_apply(&x),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn j_apply_right_matches_left_transpose_identity() {
        // (X·J_{2k})ᵀ = J_{2k}ᵀ Xᵀ = -J·Xᵀ
        let mut rng = StdRng::seed_from_u64(8);
        let x = random_matrix(&mut rng, 5, 4);
        let right = canonical_symplectic_apply_right(&x).unwrap();
        let left = -canonical_symplectic_apply(&x.transpose()).unwrap();
        assert!((right.transpose() - left).norm() <= 1e-15);
    }

    #[test]
    fn symplectify_keeps_canonical_pair() {
        let n = 5;
        let mut a = DMatrix::zeros(2 * n, 2);
        a[(0, 0)] = 1.0;
        a[(n, 1)] = 1.0;
        let basis = symplectify(&a).unwrap();
        assert!((basis.matrix() - &a).norm() <= 1e-12);
    }

    #[test]
    fn symplectify_repairs_perturbed_basis() {
        let mut rng = StdRng::seed_from_u64(11);
        let n = 12;
        let w = random_matrix(&mut rng, 2 * n, 2 * 3);
        let exact = symplectify(&w).unwrap();
        let perturbed = exact.matrix() + random_matrix(&mut rng, 2 * n, 6) * 1e-6;
        let repaired = symplectify(&perturbed).unwrap();
        let (d_orth, d_symp) = repaired.defects();
        assert!(d_orth <= 1e-10, "orthogonality defect {d_orth:.3e}");
        assert!(d_symp <= 1e-10, "symplecticity defect {d_symp:.3e}");
        // stays close to the input point
        assert!((repaired.matrix() - &perturbed).norm() <= 1e-4);
    }

    #[test]
    fn symplectify_rejects_duplicated_column() {
        let mut rng = StdRng::seed_from_u64(13);
        let basis = symplectify(&random_matrix(&mut rng, 16, 4)).unwrap();
        let mut bad = basis.matrix().clone();
        // duplicate the full symplectic pair (both block columns)
        let dup_a = bad.column(0).clone_owned();
        let dup_b = bad.column(2).clone_owned();
        bad.set_column(1, &dup_a);
        bad.set_column(3, &dup_b);
        assert!(matches!(symplectify(&bad), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn truncated_svd_rel_tol_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 2.0, 1.0]));
        let (_, sigma, _) = truncated_svd(&m, SvdTruncation::RelTol(0.4)).unwrap();
        assert_eq!(sigma.len(), 2);
        assert_relative_eq!(sigma[0], 3.0, epsilon = 1e-14);
        assert_relative_eq!(sigma[1], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn truncated_svd_fixed_rank_identity() {
        let m = DMatrix::<f64>::identity(3, 3);
        let (_, sigma, _) = truncated_svd(&m, SvdTruncation::FixedRank(3)).unwrap();
        for i in 0..3 {
            assert_relative_eq!(sigma[i], 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn truncated_svd_satisfies_eckart_young() {
        let mut rng = StdRng::seed_from_u64(17);
        let m = random_matrix(&mut rng, 8, 5);
        let (u2, s2, v2) = truncated_svd(&m, SvdTruncation::FixedRank(2)).unwrap();
        let approx_m = &u2 * DMatrix::from_diagonal(&s2) * v2.transpose();
        // spectral norm of the residual equals sigma_3 of the full SVD
        let full = m.clone().svd(false, false);
        let residual_spectral = (m - approx_m).svd(false, false).singular_values[0];
        assert_relative_eq!(residual_spectral, full.singular_values[2], epsilon = 1e-10);
    }

    #[test]
    fn truncated_svd_rejects_overlarge_rank() {
        let m = DMatrix::<f64>::identity(4, 3);
        assert!(matches!(
            truncated_svd(&m, SvdTruncation::FixedRank(4)),
            Err(Error::RankOutOfRange { .. })
        ));
    }

    #[test]
    fn qdeim_identity_selects_all_rows() {
        let u = DMatrix::<f64>::identity(3, 3);
        let p = qdeim_indices(&u).unwrap();
        let mut got: Vec<usize> = p.iter().collect();
        got.sort_unstable();
        assert_eq!(got, vec![0, 1, 2]);
    }

    #[test]
    fn qdeim_never_picks_zero_row() {
        let u = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let p = qdeim_indices(&u).unwrap();
        let mut got: Vec<usize> = p.iter().collect();
        got.sort_unstable();
        assert_eq!(got, vec![0, 1]);
    }

    #[test]
    fn qdeim_beats_random_subsets() {
        let mut rng = StdRng::seed_from_u64(23);
        let raw = random_matrix(&mut rng, 30, 4);
        let u = raw.qr().q();
        let p = qdeim_indices(&u).unwrap();
        let ptu = p.gather_rows(&u);
        let det_q = ptu.determinant().abs();
        assert!(det_q > 0.0);
        let mut best_random: f64 = 0.0;
        for _ in 0..200 {
            let mut idx: Vec<usize> = Vec::new();
            while idx.len() < 4 {
                let cand = rng.random_range(0..30);
                if !idx.contains(&cand) {
                    idx.push(cand);
                }
            }
            let sub = IndexSet::new(idx, 30).unwrap().gather_rows(&u);
            best_random = best_random.max(sub.determinant().abs());
        }
        assert!(
            det_q >= best_random * 1e-6,
            "QDEIM det {det_q:.3e} vs best random {best_random:.3e}"
        );
    }

    #[test]
    fn qdeim_selection_is_solvable() {
        let mut rng = StdRng::seed_from_u64(29);
        let u = random_matrix(&mut rng, 40, 6).qr().q();
        let p = qdeim_indices(&u).unwrap();
        let ptu = p.gather_rows(&u);
        let rhs = DVector::from_fn(6, |i, _| (i + 1) as f64);
        let x = ptu.clone().lu().solve(&rhs).expect("PᵀU nonsingular");
        assert!((ptu * x - rhs).norm() <= 1e-8);
    }

    #[test]
    fn pivoted_qr_hand_run_example() {
        let z = DMatrix::from_row_slice(2, 3, &[2.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let sel = pivoted_qr_select(&z, 2).unwrap();
        assert_eq!(sel.as_slice(), &[0, 2]);
    }

    #[test]
    fn pivoted_qr_tie_breaks_to_lowest_index() {
        let z = DMatrix::<f64>::identity(3, 3);
        let sel = pivoted_qr_select(&z, 1).unwrap();
        assert_eq!(sel.as_slice(), &[0]);
    }

    #[test]
    fn pivoted_qr_selects_full_rank_subset() {
        let mut rng = StdRng::seed_from_u64(31);
        let z = random_matrix(&mut rng, 6, 20);
        let sel = pivoted_qr_select(&z, 6).unwrap();
        let cols = sel.gather_cols(&z);
        let rank = cols
            .svd(false, false)
            .singular_values
            .iter()
            .filter(|&&s| s > 1e-10)
            .count();
        assert_eq!(rank, 6);
    }

    #[test]
    fn pivoted_qr_errors_past_rank() {
        let z = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        // rank one: second pivot must fail
        assert!(pivoted_qr_select(&z, 2).is_err());
    }

    #[test]
    fn complex_svd_basis_single_real_mode() {
        let n = 6;
        let mut r0 = DMatrix::zeros(2 * n, 1);
        r0[(0, 0)] = 1.0; // q = e_1, p = 0
        let (basis, coeffs) = complex_svd_basis(&r0, 1).unwrap();
        // basis spans {e_1, e_{N+1}}
        let a = basis.matrix();
        let recon = a * (a.transpose() * &r0);
        assert!((recon - &r0).norm() <= 1e-12);
        let expected = a.transpose() * &r0;
        assert!((coeffs - expected).norm() <= 1e-14);
        let mut e_dual = DMatrix::zeros(2 * n, 1);
        e_dual[(n, 0)] = 1.0;
        let recon_dual = a * (a.transpose() * &e_dual);
        assert!((recon_dual - &e_dual).norm() <= 1e-12);
    }

    #[test]
    fn complex_svd_basis_invariants() {
        let mut rng = StdRng::seed_from_u64(37);
        let r0 = random_matrix(&mut rng, 40, 9);
        let (basis, _) = complex_svd_basis(&r0, 4).unwrap();
        let (d_orth, d_symp) = basis.defects();
        assert!(d_orth <= 1e-12);
        assert!(d_symp <= 1e-12);
    }

    #[test]
    fn complex_svd_basis_exact_rank_reconstruction() {
        let mut rng = StdRng::seed_from_u64(41);
        let n = 20;
        // complex rank 2 snapshot set
        let w = CMatrix::from_fn(n, 2, |_, _| {
            Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let coef = CMatrix::from_fn(2, 7, |_, _| {
            Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let snap = w * coef;
        let r0 = DMatrix::from_fn(2 * n, 7, |i, j| {
            if i < n {
                snap[(i, j)].re
            } else {
                snap[(i - n, j)].im
            }
        });
        let (basis, coeffs) = complex_svd_basis(&r0, 2).unwrap();
        let recon = basis.matrix() * coeffs;
        assert!((recon - &r0).norm() <= 1e-10 * r0.norm());
    }

    #[test]
    fn complex_svd_basis_rejects_rank_past_numerical() {
        let n = 8;
        let mut r0 = DMatrix::zeros(2 * n, 3);
        r0[(0, 0)] = 1.0;
        r0[(0, 1)] = 2.0;
        r0[(0, 2)] = -1.0; // complex rank 1
        assert!(matches!(
            complex_svd_basis(&r0, 2),
            Err(Error::RankOutOfRange { .. })
        ));
    }

    #[test]
    fn index_set_rejects_duplicates_and_out_of_domain() {
        assert!(IndexSet::new(vec![0, 0], 4).is_err());
        assert!(IndexSet::new(vec![5], 4).is_err());
        assert!(IndexSet::new(vec![3, 1], 4).is_ok());
    }

    proptest! {
        #[test]
        fn prop_j_involution(cols in 1usize..4, half in 1usize..8, seed in 0u64..1000) {
            let mut rng = StdRng::seed_from_u64(seed);
            let x = random_matrix(&mut rng, 2 * half, cols);
            let x = if x.norm() > 0.0 { x.clone() / x.norm() } else { x };
            let jjx = canonical_symplectic_apply(
                &canonical_symplectic_apply(&x).unwrap()
            ).unwrap();
            prop_assert!((jjx + &x).norm() <= 1e-14);
        }

        #[test]
        fn prop_rel_tol_never_rank_zero(seed in 0u64..1000, tau in 1e-12f64..0.99) {
            let mut rng = StdRng::seed_from_u64(seed);
            let m = random_matrix(&mut rng, 5, 4);
            prop_assume!(m.norm() > 1e-6);
            let (_, sigma, _) = truncated_svd(&m, SvdTruncation::RelTol(tau)).unwrap();
            prop_assert!(sigma.len() >= 1);
        }
    }
}
