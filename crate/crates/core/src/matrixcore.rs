//! Dense complex linear algebra shared by every analysis. Everything is built
//! on the Hermitian eigendecomposition and on orthonormal completion.
//!
//! All thresholds come from a single [`ToleranceConfig`] and are scaled by a
//! matrix norm, so verdicts do not change when an input is rescaled.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

#[cfg(test)]
pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Reconstruction bound promised by [`hermitian_eig`], relative to `max(1, ‖M‖)`.
pub const EIG_RESIDUAL_BOUND: f64 = 1e-10;
/// Orthonormality slack accepted by [`orthonormal_extension`].
pub const ORTHONORMAL_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Absolute elementwise tolerance for Gram equality.
    pub eps_gram: f64,
    /// Eigenvalue floor, scaled by `max(1, ‖M‖)`.
    pub eps_psd: f64,
    /// Rank cutoff, scaled by `‖M‖`.
    pub eps_rank: f64,
    /// Minimum `|⟨a|b⟩|` for two states to count as non-orthogonal.
    pub eps_orth: f64,
    /// Normalization slack on input states.
    pub eps_norm: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            eps_gram: 1e-8,
            eps_psd: 1e-9,
            eps_rank: 1e-10,
            eps_orth: 1e-10,
            eps_norm: 1e-9,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("eps_gram", self.eps_gram),
            ("eps_psd", self.eps_psd),
            ("eps_rank", self.eps_rank),
            ("eps_orth", self.eps_orth),
            ("eps_norm", self.eps_norm),
        ];
        for (name, value) in all {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidTolerance(format!("{name} must be positive, got {value}")));
            }
        }
        if self.eps_rank > self.eps_gram {
            return Err(Error::InvalidTolerance(format!(
                "eps_rank ({}) must not exceed eps_gram ({})",
                self.eps_rank, self.eps_gram
            )));
        }
        Ok(())
    }

    /// Defaults rescaled so that `eps_gram` becomes `eps_gram`; the other
    /// tolerances keep their default ratios to it.
    pub fn scaled_to(eps_gram: f64) -> Result<Self> {
        let base = Self::default();
        let factor = eps_gram / base.eps_gram;
        let cfg = Self {
            eps_gram,
            eps_psd: base.eps_psd * factor,
            eps_rank: base.eps_rank * factor,
            eps_orth: base.eps_orth * factor,
            eps_norm: base.eps_norm * factor,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn ensure_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

pub fn ensure_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// Largest `|Mᵢⱼ − conj(Mⱼᵢ)|`.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let n = m.nrows().min(m.ncols());
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs_entry(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// `‖U†U − I‖` in Frobenius norm.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.ncols();
    (u.adjoint() * u - CMatrix::identity(n, n)).norm()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Rotates `v` so that its largest-magnitude entry (first one on ties) is real
/// and positive.
pub(crate) fn fix_phase(v: &mut CVector) {
    let peak = v.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    if peak == 0.0 {
        return;
    }
    let anchor = v
        .iter()
        .find(|z| z.norm() >= peak * (1.0 - 1e-9))
        .copied()
        .unwrap_or(ONE);
    let phase = anchor.conj() / anchor.norm();
    v.iter_mut().for_each(|z| *z *= phase);
}

#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Sorted descending.
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn min_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Spectral norm (largest |eigenvalue|).
    pub fn spectral_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    pub fn reconstruct(&self) -> CMatrix {
        let n = self.vectors.nrows();
        let mut scaled = self.vectors.clone();
        for (k, lambda) in self.values.iter().enumerate() {
            scaled.column_mut(k).scale_mut(*lambda);
        }
        if n == 0 {
            return CMatrix::zeros(0, 0);
        }
        scaled * self.vectors.adjoint()
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues descending.
///
/// The input is symmetrized as `(M + M†)/2` after the Hermitian check, and
/// each eigenvector's phase is fixed so that its largest entry is real
/// positive. This makes outputs deterministic for simple spectra.
pub fn hermitian_eig(m: &CMatrix, tol: &ToleranceConfig) -> Result<HermitianEigen> {
    let n = ensure_square(m)?;
    ensure_finite(m)?;
    let scale = m.norm().max(1.0);
    let asymmetry = hermitian_defect(m);
    if asymmetry > tol.eps_gram * scale {
        return Err(Error::NotHermitian { asymmetry });
    }
    if n == 0 {
        return Ok(HermitianEigen {
            values: Vec::new(),
            vectors: CMatrix::zeros(0, 0),
        });
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut vectors = CMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let mut v: CVector = eig.eigenvectors.column(src).into_owned();
        fix_phase(&mut v);
        vectors.set_column(dst, &v);
        values.push(eig.eigenvalues[src]);
    }
    Ok(HermitianEigen { values, vectors })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdCheck {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
}

/// PSD test with floor `−eps_psd·max(1, ‖M‖)`; the minimum eigenvalue is
/// always reported.
pub fn is_psd(m: &CMatrix, tol: &ToleranceConfig) -> Result<PsdCheck> {
    let eig = hermitian_eig(m, tol)?;
    Ok(psd_check_from(&eig, tol))
}

pub(crate) fn psd_check_from(eig: &HermitianEigen, tol: &ToleranceConfig) -> PsdCheck {
    let min_eigenvalue = eig.min_value();
    let floor = -tol.eps_psd * eig.spectral_norm().max(1.0);
    PsdCheck {
        is_psd: min_eigenvalue >= floor,
        min_eigenvalue,
    }
}

/// Factors a PSD matrix `G` as `RᴴR`, returning `R` (`r × n`).
///
/// Column `i` of the result is the vector `vᵢ` with `⟨vᵢ|vⱼ⟩ = Gᵢⱼ`. Only
/// eigenvalues above `eps_rank·‖G‖` are kept, so `r` is the numerical rank.
/// Eigenvalues in `[−eps_psd·max(1,‖G‖), 0)` are treated as zero; anything
/// lower is rejected.
pub fn psd_factor(g: &CMatrix, tol: &ToleranceConfig) -> Result<CMatrix> {
    let eig = hermitian_eig(g, tol)?;
    factor_from_eigen(&eig, tol)
}

pub(crate) fn factor_from_eigen(eig: &HermitianEigen, tol: &ToleranceConfig) -> Result<CMatrix> {
    let check = psd_check_from(eig, tol);
    if !check.is_psd {
        return Err(Error::NotPsd {
            min_eigenvalue: check.min_eigenvalue,
        });
    }
    let n = eig.vectors.nrows();
    let rank = numerical_rank(eig, tol);
    let mut r = CMatrix::zeros(rank, n);
    for k in 0..rank {
        let s = eig.values[k].max(0.0).sqrt();
        for i in 0..n {
            r[(k, i)] = eig.vectors[(i, k)].conj() * s;
        }
    }
    Ok(r)
}

pub(crate) fn numerical_rank(eig: &HermitianEigen, tol: &ToleranceConfig) -> usize {
    let cutoff = tol.eps_rank * eig.spectral_norm();
    eig.values.iter().take_while(|&&v| v > cutoff).count()
}

/// Nearest PSD matrix in Frobenius norm (negative eigenvalues set to zero).
pub fn psd_projection(m: &CMatrix, tol: &ToleranceConfig) -> Result<(CMatrix, f64)> {
    let mut eig = hermitian_eig(m, tol)?;
    let min = eig.min_value();
    eig.values.iter_mut().for_each(|v| *v = v.max(0.0));
    Ok((eig.reconstruct(), min))
}

/// Completes `k` orthonormal columns in dimension `D = columns.nrows()` to a
/// `D × D` unitary whose first `k` columns are the input, unchanged.
///
/// New columns are produced greedily from the standard basis: at each step the
/// basis vector with the largest component outside the current span (lowest
/// index on ties) is orthogonalized (two Gram-Schmidt passes) and appended.
/// Runs in `O(D³)`.
pub fn orthonormal_extension(columns: &CMatrix) -> Result<CMatrix> {
    ensure_finite(columns)?;
    let dim = columns.nrows();
    let k = columns.ncols();
    if k > dim {
        return Err(Error::NotOrthonormal { defect: f64::INFINITY });
    }
    let defect = if k == 0 {
        0.0
    } else {
        let gram = columns.adjoint() * columns;
        max_abs_entry(&(gram - CMatrix::identity(k, k)))
    };
    if defect > ORTHONORMAL_SLACK {
        return Err(Error::NotOrthonormal { defect });
    }

    let mut out = CMatrix::zeros(dim, dim);
    out.columns_mut(0, k).copy_from(columns);
    // captured[j] = ‖Q† e_j‖², so the residual of e_j is 1 − captured[j]
    let mut captured: Vec<f64> = (0..dim).map(|j| columns.row(j).norm_squared()).collect();
    let mut used = vec![false; dim];
    for next in k..dim {
        let mut pick = None;
        for j in (0..dim).filter(|&j| !used[j]) {
            if pick.is_none_or(|p: usize| captured[j] < captured[p] - 1e-12) {
                pick = Some(j);
            }
        }
        let e = pick.expect("a completion candidate always exists while next < dim");
        used[e] = true;
        let basis = out.columns(0, next);
        let mut cand = CVector::zeros(dim);
        cand[e] = ONE;
        for _ in 0..2 {
            let coeffs = basis.adjoint() * &cand;
            cand -= basis * coeffs;
        }
        let norm = cand.norm();
        cand.unscale_mut(norm);
        for (c, z) in captured.iter_mut().zip(cand.iter()) {
            *c += z.norm_sqr();
        }
        out.set_column(next, &cand);
    }
    Ok(out)
}

/// Closest matrix with orthonormal columns (polar factor of a thin SVD).
pub(crate) fn polar_isometry(m: &CMatrix) -> CMatrix {
    if m.ncols() == 0 || m.nrows() == 0 {
        return m.clone();
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    u * v_t
}

/// Column-padded copy of `v` with zeros up to `dim`.
pub(crate) fn pad(v: &CVector, dim: usize) -> CVector {
    let mut out = CVector::zeros(dim);
    out.rows_mut(0, v.len()).copy_from(v);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::SQRT_2;

    use crate::random::{ginibre, rng_from_seed};

    fn random_hermitian(seed: u64, n: usize) -> CMatrix {
        let g = ginibre(&mut rng_from_seed(seed), n, n);
        (&g + g.adjoint()).scale(0.5)
    }

    /// Determinant by cofactor expansion (independent of the eigensolver).
    fn det(m: &CMatrix) -> C64 {
        let n = m.nrows();
        match n {
            0 => ONE,
            1 => m[(0, 0)],
            _ => (0..n)
                .map(|j| {
                    let minor = m.clone().remove_row(0).remove_column(j);
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    m[(0, j)] * det(&minor) * sign
                })
                .sum(),
        }
    }

    /// All principal minors, as (value) for each nonempty index subset.
    fn principal_minors(m: &CMatrix) -> Vec<f64> {
        let n = m.nrows();
        (1u32..(1 << n))
            .map(|mask| {
                let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
                let sub = CMatrix::from_fn(idx.len(), idx.len(), |a, b| m[(idx[a], idx[b])]);
                det(&sub).re
            })
            .collect()
    }

    fn rmat(n: usize, data: &[f64]) -> CMatrix {
        CMatrix::from_iterator(n, n, data.iter().map(|&x| real(x))).transpose()
    }

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn eig_identity() {
        let e = hermitian_eig(&CMatrix::identity(2, 2), &tol()).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0]);
    }

    #[test]
    fn eig_all_ones() {
        let e = hermitian_eig(&rmat(2, &[1.0, 1.0, 1.0, 1.0]), &tol()).unwrap();
        assert_abs_diff_eq!(e.values[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.values[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn eig_indefinite() {
        let m = rmat(2, &[1.0, SQRT_2, SQRT_2, 1.0]);
        let e = hermitian_eig(&m, &tol()).unwrap();
        assert_abs_diff_eq!(e.values[0], 1.0 + SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(e.values[1], 1.0 - SQRT_2, epsilon = 1e-12);
        assert!((e.reconstruct() - m).norm() < 1e-12);
    }

    #[test]
    fn eig_rejects_bad_input() {
        let m = rmat(2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(hermitian_eig(&m, &tol()), Err(Error::NotHermitian { .. })));
        let mut nan = CMatrix::identity(2, 2);
        nan[(0, 1)] = C64::new(f64::NAN, 0.0);
        assert_eq!(hermitian_eig(&nan, &tol()).unwrap_err(), Error::NonFinite);
        assert!(matches!(
            hermitian_eig(&CMatrix::zeros(2, 3), &tol()),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn psd_examples() {
        let id = is_psd(&CMatrix::identity(2, 2), &tol()).unwrap();
        assert!(id.is_psd);
        assert_abs_diff_eq!(id.min_eigenvalue, 1.0, epsilon = 1e-12);

        let bad = is_psd(&rmat(2, &[1.0, SQRT_2, SQRT_2, 1.0]), &tol()).unwrap();
        assert!(!bad.is_psd);
        assert_abs_diff_eq!(bad.min_eigenvalue, -0.41421356237309515, epsilon = 1e-12);

        let ones = is_psd(&rmat(2, &[1.0, 1.0, 1.0, 1.0]), &tol()).unwrap();
        assert!(ones.is_psd);
        assert_abs_diff_eq!(ones.min_eigenvalue, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn factor_identity_and_rank_one() {
        let r = psd_factor(&CMatrix::identity(2, 2), &tol()).unwrap();
        assert_eq!(r.nrows(), 2);
        assert!((r.adjoint() * &r - CMatrix::identity(2, 2)).norm() < 1e-12);

        let r = psd_factor(&rmat(2, &[1.0, 1.0, 1.0, 1.0]), &tol()).unwrap();
        assert_eq!(r.shape(), (1, 2));
        assert_abs_diff_eq!(r[(0, 0)].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[(0, 1)].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[(0, 0)].im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn factor_overlap_half_root() {
        let h = 1.0 / SQRT_2;
        let g = rmat(2, &[1.0, h, h, 1.0]);
        let r = psd_factor(&g, &tol()).unwrap();
        assert_eq!(r.nrows(), 2);
        let back = r.adjoint() * &r;
        assert!(max_abs_entry(&(back - g)) < 1e-12);
    }

    #[test]
    fn factor_clips_and_rejects() {
        let mut g = rmat(2, &[1.0, 1.0, 1.0, 1.0]);
        g[(1, 1)] = real(1.0 - 1e-12);
        assert_eq!(psd_factor(&g, &tol()).unwrap().nrows(), 1);
        let bad = rmat(2, &[1.0, SQRT_2, SQRT_2, 1.0]);
        assert!(matches!(psd_factor(&bad, &tol()), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn extension_examples() {
        let col = CMatrix::from_column_slice(2, 1, &[ONE, ZERO]);
        let u = orthonormal_extension(&col).unwrap();
        assert!(unitarity_defect(&u) < 1e-12);
        assert_eq!(u.column(0), col.column(0));

        let u = orthonormal_extension(&CMatrix::zeros(3, 0)).unwrap();
        assert_eq!(u, CMatrix::identity(3, 3));

        let h = real(1.0 / SQRT_2);
        let col = CMatrix::from_column_slice(2, 1, &[h, h]);
        let u = orthonormal_extension(&col).unwrap();
        assert!(unitarity_defect(&u) < 1e-12);
        assert_eq!(u.column(0), col.column(0));
        assert!((u[(0, 1)] + u[(1, 1)]).norm() < 1e-12);
    }

    #[test]
    fn extension_rejects_non_orthonormal() {
        let col = CMatrix::from_column_slice(2, 2, &[ONE, ZERO, ONE, ZERO]);
        assert!(matches!(orthonormal_extension(&col), Err(Error::NotOrthonormal { .. })));
    }

    #[test]
    fn scaled_tolerances_keep_ratios() {
        let t = ToleranceConfig::scaled_to(1e-6).unwrap();
        assert_abs_diff_eq!(t.eps_psd, 1e-7, epsilon = 1e-20);
        assert!(ToleranceConfig::scaled_to(-1.0).is_err());
        let bad = ToleranceConfig {
            eps_rank: 1.0,
            ..ToleranceConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn eig_reconstructs_random_hermitian(seed in any::<u64>(), n in 1usize..=16) {
            let m = random_hermitian(seed, n);
            let e = hermitian_eig(&m, &tol()).unwrap();
            let scale = m.norm().max(1.0);
            prop_assert!((e.reconstruct() - &m).norm() <= EIG_RESIDUAL_BOUND * scale);
            prop_assert!(unitarity_defect(&e.vectors) <= 1e-10);
            prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn factor_round_trip(seed in any::<u64>(), n in 1usize..=10, rank in 1usize..=10) {
            let g = ginibre(&mut rng_from_seed(seed), rank, n);
            let gram = g.adjoint() * &g;
            let r = psd_factor(&gram, &tol()).unwrap();
            prop_assert!(r.nrows() <= rank.min(n));
            prop_assert!(max_abs_entry(&(r.adjoint() * &r - &gram)) <= 1e-8);
        }

        #[test]
        fn psd_agrees_with_principal_minors(seed in any::<u64>(), n in 2usize..=3, shift in -1.0f64..3.0) {
            let m = random_hermitian(seed, n) + CMatrix::identity(n, n).scale(shift);
            let minors = principal_minors(&m);
            prop_assume!(minors.iter().all(|v| v.abs() > 1e-6));
            let brute = minors.iter().all(|&v| v > 0.0);
            prop_assert_eq!(is_psd(&m, &tol()).unwrap().is_psd, brute);
        }

        #[test]
        fn extension_of_random_isometry(seed in any::<u64>(), dim in 1usize..=8, k in 0usize..=8) {
            let k = k.min(dim);
            let q = ginibre(&mut rng_from_seed(seed), dim, dim).qr().q();
            let cols = q.columns(0, k).into_owned();
            let u = orthonormal_extension(&cols).unwrap();
            prop_assert!(unitarity_defect(&u) <= 1e-9);
            prop_assert_eq!(u.columns(0, k).into_owned(), cols);
        }
    }
}
