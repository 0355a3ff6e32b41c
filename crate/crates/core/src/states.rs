//! Pure and mixed states, indexed state families, Gram matrices.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::matrixcore::{
    ensure_finite, ensure_square, hermitian_defect, hermitian_eig, is_psd, max_abs_entry, real, CMatrix, CVector,
    ToleranceConfig, C64, ONE,
};

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    label: String,
    amplitudes: CVector,
}

impl PureState {
    /// Validates finiteness and unit norm within `eps_norm`. The vector is
    /// stored as given; it is never renormalized.
    pub fn new(label: impl Into<String>, amplitudes: Vec<C64>, tol: &ToleranceConfig) -> Result<Self> {
        Self::from_vector(label, CVector::from_vec(amplitudes), tol)
    }

    pub fn from_vector(label: impl Into<String>, amplitudes: CVector, tol: &ToleranceConfig) -> Result<Self> {
        let label = label.into();
        if amplitudes.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        if !amplitudes.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > tol.eps_norm {
            return Err(Error::NotNormalized { label, norm });
        }
        Ok(Self { label, amplitudes })
    }

    /// For vectors normalized by construction inside the crate.
    pub(crate) fn from_unit_vector(label: impl Into<String>, amplitudes: CVector) -> Self {
        debug_assert!((amplitudes.norm() - 1.0).abs() < 1e-6);
        Self {
            label: label.into(),
            amplitudes,
        }
    }

    /// Computational basis state `|k⟩` in dimension `dim`.
    pub fn basis(dim: usize, k: usize) -> Self {
        assert!(k < dim, "basis index {k} out of range for dimension {dim}");
        let mut v = CVector::zeros(dim);
        v[k] = ONE;
        Self {
            label: format!("|{k}>"),
            amplitudes: v,
        }
    }

    /// `(|0⟩ + |1⟩)/√2`.
    pub fn plus() -> Self {
        let h = real(FRAC_1_SQRT_2);
        Self {
            label: "|+>".into(),
            amplitudes: CVector::from_vec(vec![h, h]),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`. Panics on unequal dimensions.
    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn projector(&self) -> CMatrix {
        &self.amplitudes * self.amplitudes.adjoint()
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        let v = self.amplitudes.kronecker(&other.amplitudes);
        PureState {
            label: format!("{}{}", self.label, other.label),
            amplitudes: v,
        }
    }
}

/// Non-empty, uniformly dimensioned, ordered list of pure states. The order
/// is the index correspondence between families; duplicates are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct StateFamily {
    members: Vec<PureState>,
}

impl StateFamily {
    pub fn new(members: Vec<PureState>) -> Result<Self> {
        let first = members.first().ok_or(Error::EmptyFamily)?;
        let dim = first.dim();
        if let Some(bad) = members.iter().find(|m| m.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(Self { members })
    }

    /// Members from the columns of `columns` (each column must be a unit vector).
    pub fn from_columns(prefix: &str, columns: &CMatrix, tol: &ToleranceConfig) -> Result<Self> {
        let members = columns
            .column_iter()
            .enumerate()
            .map(|(i, c)| PureState::from_vector(format!("{prefix}{i}"), c.into_owned(), tol))
            .collect::<Result<Vec<_>>>()?;
        Self::new(members)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.members[0].dim()
    }

    pub fn member(&self, i: usize) -> &PureState {
        &self.members[i]
    }

    pub fn members(&self) -> &[PureState] {
        &self.members
    }

    pub fn iter(&self) -> std::slice::Iter<'_, PureState> {
        self.members.iter()
    }

    /// `dim × n` matrix whose columns are the members.
    pub fn columns(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim(), self.len());
        for (i, s) in self.members.iter().enumerate() {
            m.set_column(i, s.amplitudes());
        }
        m
    }

    /// Pairwise non-orthogonality check; reports the first offending pair.
    pub fn first_orthogonal_pair(&self, eps_orth: f64) -> Option<(usize, usize, f64)> {
        let g = gram(self);
        let n = self.len();
        (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, g.get(i, j).norm()))
            .find(|&(_, _, o)| o <= eps_orth)
    }

    /// New family with members repeated according to `index`.
    pub fn select(&self, index: &[usize]) -> Result<Self> {
        Self::new(index.iter().map(|&i| self.members[i].clone()).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedState {
    density: CMatrix,
}

impl MixedState {
    /// Checks Hermiticity (`eps_gram`), PSD (`eps_psd`) and unit trace (`eps_norm`).
    pub fn new(density: CMatrix, tol: &ToleranceConfig) -> Result<Self> {
        validate_density(&density, tol)?;
        Ok(Self { density })
    }

    pub(crate) fn from_density_unchecked(density: CMatrix) -> Self {
        Self { density }
    }

    pub fn from_pure(state: &PureState) -> Self {
        Self {
            density: state.projector(),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            density: CMatrix::identity(dim, dim).unscale(dim as f64),
        }
    }

    pub fn density(&self) -> &CMatrix {
        &self.density
    }

    pub fn dim(&self) -> usize {
        self.density.nrows()
    }
}

fn validate_density(density: &CMatrix, tol: &ToleranceConfig) -> Result<()> {
    let n = ensure_square(density)?;
    ensure_finite(density)?;
    if n == 0 {
        return Err(Error::DimensionMismatch { expected: 1, found: 0 });
    }
    let asymmetry = hermitian_defect(density);
    if asymmetry > tol.eps_gram {
        return Err(Error::NotHermitian { asymmetry });
    }
    let check = is_psd(density, tol)?;
    if !check.is_psd {
        return Err(Error::NotPsd {
            min_eigenvalue: check.min_eigenvalue,
        });
    }
    let trace = density.trace().re;
    if (trace - 1.0).abs() > tol.eps_norm {
        return Err(Error::NotUnitTrace { trace });
    }
    Ok(())
}

/// Convex decomposition `ρ = Σₖ pₖ |αₖ⟩⟨αₖ|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub weights: Vec<f64>,
    pub components: Vec<PureState>,
}

impl Ensemble {
    pub fn reconstruct(&self) -> CMatrix {
        let dim = self.components.first().map_or(0, PureState::dim);
        self.weights
            .iter()
            .zip(&self.components)
            .fold(CMatrix::zeros(dim, dim), |acc, (p, c)| acc + c.projector().scale(*p))
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

/// Spectral ensemble: eigenvectors with eigenvalue above `eps_rank`, weights
/// renormalized to sum to one. Components come out in descending weight.
pub fn ensemble_of(rho: &MixedState, tol: &ToleranceConfig) -> Result<Ensemble> {
    validate_density(&rho.density, tol)?;
    let eig = hermitian_eig(&rho.density, tol)?;
    let kept: Vec<usize> = (0..eig.values.len())
        .filter(|&k| eig.values[k] > tol.eps_rank)
        .collect();
    let total: f64 = kept.iter().map(|&k| eig.values[k]).sum();
    let weights = kept.iter().map(|&k| eig.values[k] / total).collect();
    let components = kept
        .iter()
        .enumerate()
        .map(|(n, &k)| {
            let v = eig.vectors.column(k).into_owned();
            let norm = v.norm();
            PureState::from_unit_vector(format!("e{n}"), v.unscale(norm))
        })
        .collect();
    Ok(Ensemble { weights, components })
}

/// Hermitian matrix of pairwise inner products `Gᵢⱼ = ⟨Fᵢ|Fⱼ⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix(CMatrix);

impl GramMatrix {
    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        ensure_square(&m)?;
        ensure_finite(&m)?;
        Ok(Self(m))
    }

    pub fn entries(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    /// Elementwise product.
    pub fn hadamard(&self, other: &GramMatrix) -> GramMatrix {
        GramMatrix(self.0.component_mul(&other.0))
    }

    pub fn max_deviation(&self, other: &GramMatrix) -> f64 {
        max_abs_entry(&(&self.0 - &other.0))
    }
}

pub fn gram(family: &StateFamily) -> GramMatrix {
    let a = family.columns();
    let mut g = a.adjoint() * a;
    // exact Hermitian symmetry and real diagonal
    for i in 0..g.nrows() {
        g[(i, i)] = real(g[(i, i)].re);
        for j in (i + 1)..g.ncols() {
            g[(j, i)] = g[(i, j)].conj();
        }
    }
    GramMatrix(g)
}

/// Member-wise Kronecker product `Fᵢ ⊗ Gᵢ`.
pub fn tensor(f: &StateFamily, g: &StateFamily) -> Result<StateFamily> {
    if f.len() != g.len() {
        return Err(Error::LengthMismatch {
            left: f.len(),
            right: g.len(),
        });
    }
    StateFamily::new(f.iter().zip(g.iter()).map(|(a, b)| a.tensor(b)).collect())
}

/// `|⟨a|b⟩|²`.
pub fn fidelity(a: &PureState, b: &PureState) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(a.inner(b).norm_sqr().min(1.0))
}

/// Reduced density matrix of the first factor of a vector on `d1 ⊗ d2`
/// (partial trace over the second factor).
pub fn reduce_to_first(v: &CVector, d1: usize, d2: usize) -> Result<CMatrix> {
    if v.len() != d1 * d2 {
        return Err(Error::DimensionMismatch {
            expected: d1 * d2,
            found: v.len(),
        });
    }
    // row index = first factor, column index = second factor
    let psi = CMatrix::from_fn(d1, d2, |a, b| v[a * d2 + b]);
    Ok(&psi * psi.adjoint())
}

/// `⟨ψ|ρ|ψ⟩` for a pure reference state.
pub fn fidelity_with_density(state: &PureState, rho: &CMatrix) -> Result<f64> {
    if rho.nrows() != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: state.dim(),
            found: rho.nrows(),
        });
    }
    let v = state.amplitudes();
    Ok(v.dotc(&(rho * v)).re)
}
