//! Assisted cloning `|ψᵢ⟩ ⊗ ρᵢ → |ψᵢ⟩|ψᵢ⟩` for families without orthogonal
//! pairs.
//!
//! A unitary dilation `|ψᵢ⟩|αᵢ⟩ → |ψᵢ⟩|ψᵢ⟩|Cᵢ⟩` exists iff the Gram matrices
//! agree, i.e. `⟨αᵢ|αⱼ⟩ = ⟨ψᵢ|ψⱼ⟩ ⟨Cᵢ|Cⱼ⟩`. Dividing out the nonzero
//! `⟨ψᵢ|ψⱼ⟩` leaves `gram(C) = M` with `Mᵢⱼ = ⟨αᵢ|αⱼ⟩ / ⟨ψᵢ|ψⱼ⟩`, so a residue
//! family exists exactly when `M` is PSD. The same equality links `{αᵢ}` to
//! `{ψᵢ ⊗ Cᵢ}` directly, which prepares the clone from the ancilla alone.

use crate::equivalence::{grams_equal, unitary_linking, LinkingUnitary};
use crate::error::{Error, Result};
use crate::matrixcore::{factor_from_eigen, hermitian_eig, psd_check_from, CMatrix, ToleranceConfig};
use crate::states::{
    ensemble_of, fidelity_with_density, gram, reduce_to_first, tensor, MixedState, PureState, StateFamily,
};

/// `Mᵢⱼ = ⟨αᵢ|αⱼ⟩ / ⟨ψᵢ|ψⱼ⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupplementMatrix(CMatrix);

impl SupplementMatrix {
    pub fn entries(&self) -> &CMatrix {
        &self.0
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }
}

pub fn supplement_matrix(psi: &StateFamily, alpha: &StateFamily, tol: &ToleranceConfig) -> Result<SupplementMatrix> {
    if psi.len() != alpha.len() {
        return Err(Error::LengthMismatch {
            left: psi.len(),
            right: alpha.len(),
        });
    }
    if let Some((i, j, overlap)) = psi.first_orthogonal_pair(tol.eps_orth) {
        return Err(Error::OrthogonalPairPresent { i, j, overlap });
    }
    let gp = gram(psi);
    let ga = gram(alpha);
    Ok(SupplementMatrix(ga.entries().component_div(gp.entries())))
}

/// Everything needed to realize a feasible assisted clone.
#[derive(Debug, Clone)]
pub struct CloneCertificate {
    psi: StateFamily,
    alpha: StateFamily,
    residues: StateFamily,
    dilated_unitary: LinkingUnitary,
    ancilla_map: Option<LinkingUnitary>,
    source_index: Vec<usize>,
    min_eigenvalue: f64,
}

impl CloneCertificate {
    /// Builds the certificate from a PSD unit-diagonal `m` with
    /// `gram(ψ⊗α) = gram(ψ⊗ψ) ∘ m`. Orthogonal pairs in `ψ` are allowed; the
    /// ancilla-alone map is only built when there are none, since otherwise
    /// `gram(α) = gram(ψ) ∘ m` need not hold.
    pub fn from_residue_gram(
        psi: &StateFamily,
        alpha: &StateFamily,
        m: &CMatrix,
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        let eig = hermitian_eig(m, tol)?;
        let min_eigenvalue = eig.min_value();
        let residues = residues_from_eigen(&eig, tol)?;
        let ancilla_map = match psi.first_orthogonal_pair(tol.eps_orth) {
            None => Some(ancilla_to_clone(psi, alpha, &residues, tol)?),
            Some(_) => None,
        };
        let dilated_unitary = clone_channel(psi, alpha, &residues, tol)?;
        Ok(Self {
            psi: psi.clone(),
            alpha: alpha.clone(),
            residues,
            dilated_unitary,
            ancilla_map,
            source_index: (0..psi.len()).collect(),
            min_eigenvalue,
        })
    }

    pub fn residues(&self) -> &StateFamily {
        &self.residues
    }

    /// Realizes `|ψᵢ⟩|αᵢ⟩ → |ψᵢ⟩|ψᵢ⟩|Cᵢ⟩`.
    pub fn dilated_unitary(&self) -> &LinkingUnitary {
        &self.dilated_unitary
    }

    /// Realizes `|αᵢ⟩ → |ψᵢ⟩|Cᵢ⟩`; absent when `ψ` has orthogonal pairs.
    pub fn ancilla_map(&self) -> Option<&LinkingUnitary> {
        self.ancilla_map.as_ref()
    }

    /// Original family index of each certified row (rows repeat for mixed
    /// ancillas, one per ensemble component).
    pub fn source_index(&self) -> &[usize] {
        &self.source_index
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    pub fn psi(&self) -> &StateFamily {
        &self.psi
    }

    pub fn alpha(&self) -> &StateFamily {
        &self.alpha
    }

    /// Fidelity with `ψᵢ` of the clone prepared from `αᵢ` alone (residue
    /// register traced out), per row. Empty when there is no ancilla map.
    pub fn ancilla_clone_fidelities(&self) -> Result<Vec<f64>> {
        let Some(map) = &self.ancilla_map else {
            return Ok(Vec::new());
        };
        let d = self.psi.dim();
        let r = self.residues.dim();
        self.alpha
            .iter()
            .zip(self.psi.iter())
            .map(|(a, p)| {
                let out = map.apply(a)?;
                let rho = reduce_to_first(&out.rows(0, d * r).into_owned(), d, r)?;
                fidelity_with_density(p, &rho)
            })
            .collect()
    }

    /// Fidelity with `ψᵢ ⊗ ψᵢ` of the dilated channel output on `ψᵢ ⊗ αᵢ`
    /// (residue register traced out), per row.
    pub fn channel_fidelities(&self) -> Result<Vec<f64>> {
        let d = self.psi.dim();
        let r = self.residues.dim();
        self.psi
            .iter()
            .zip(self.alpha.iter())
            .map(|(p, a)| {
                let out = self.dilated_unitary.apply(&p.tensor(a))?;
                let rho = reduce_to_first(&out.rows(0, d * d * r).into_owned(), d * d, r)?;
                fidelity_with_density(&p.tensor(p), &rho)
            })
            .collect()
    }

    /// `max |gram(ψ⊗α) − gram(ψ⊗ψ) ∘ gram(C)|`; for pairwise non-orthogonal
    /// `ψ` this is zero iff `gram(α) = gram(ψ) ∘ gram(C)`.
    pub fn gram_defect(&self) -> f64 {
        let gp = gram(&self.psi);
        let rhs = gp.hadamard(&gp).hadamard(&gram(&self.residues));
        gp.hadamard(&gram(&self.alpha)).max_deviation(&rhs)
    }

    /// `max |gram(α) − gram(ψ) ∘ gram(C)|`.
    pub fn ancilla_gram_defect(&self) -> f64 {
        let rhs = gram(&self.psi).hadamard(&gram(&self.residues));
        gram(&self.alpha).max_deviation(&rhs)
    }
}

#[derive(Debug, Clone)]
pub enum Verdict {
    Feasible(Box<CloneCertificate>),
    /// `M` has an eigenvalue below the PSD floor.
    Infeasible {
        min_eigenvalue: f64,
    },
}

impl Verdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Verdict::Feasible(_))
    }

    pub fn certificate(&self) -> Option<&CloneCertificate> {
        match self {
            Verdict::Feasible(c) => Some(c),
            Verdict::Infeasible { .. } => None,
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        match self {
            Verdict::Feasible(c) => c.min_eigenvalue(),
            Verdict::Infeasible { min_eigenvalue } => *min_eigenvalue,
        }
    }
}

pub fn clone_feasible_pure(psi: &StateFamily, alpha: &StateFamily, tol: &ToleranceConfig) -> Result<Verdict> {
    let m = supplement_matrix(psi, alpha, tol)?;
    let eig = hermitian_eig(m.entries(), tol)?;
    let check = psd_check_from(&eig, tol);
    if !check.is_psd {
        return Ok(Verdict::Infeasible {
            min_eigenvalue: check.min_eigenvalue,
        });
    }
    let cert = CloneCertificate::from_residue_gram(psi, alpha, m.entries(), tol)?;
    Ok(Verdict::Feasible(Box::new(cert)))
}

/// Residue states `{Cᵢ}` with `gram(C) = M`, in dimension `rank(M)`.
pub fn residue_family(m: &SupplementMatrix, tol: &ToleranceConfig) -> Result<StateFamily> {
    let eig = hermitian_eig(m.entries(), tol)?;
    residues_from_eigen(&eig, tol)
}

/// Residue states for any PSD unit-diagonal matrix (e.g. a completion).
pub fn residues_from_matrix(m: &CMatrix, tol: &ToleranceConfig) -> Result<StateFamily> {
    residues_from_eigen(&hermitian_eig(m, tol)?, tol)
}

fn residues_from_eigen(eig: &crate::matrixcore::HermitianEigen, tol: &ToleranceConfig) -> Result<StateFamily> {
    let coords = factor_from_eigen(eig, tol)?;
    // diagonal of M is 1 only up to clipping; residues are states
    let members = coords
        .column_iter()
        .enumerate()
        .map(|(i, c)| {
            let v = c.into_owned();
            let norm = v.norm();
            PureState::from_unit_vector(format!("C{i}"), v.unscale(norm))
        })
        .collect();
    StateFamily::new(members)
}

/// Unitary `|αᵢ⟩ → |ψᵢ⟩ ⊗ |Cᵢ⟩`; discarding the `C` register leaves the clone.
pub fn ancilla_to_clone(
    psi: &StateFamily,
    alpha: &StateFamily,
    residues: &StateFamily,
    tol: &ToleranceConfig,
) -> Result<LinkingUnitary> {
    let target = tensor(psi, residues)?;
    link_checked(alpha, &target, tol)
}

/// Unitary `|ψᵢ⟩|αᵢ⟩ → |ψᵢ⟩|ψᵢ⟩|Cᵢ⟩` on the zero-padded joint space. The
/// blank clone register and the environment are the padding.
pub fn clone_channel(
    psi: &StateFamily,
    alpha: &StateFamily,
    residues: &StateFamily,
    tol: &ToleranceConfig,
) -> Result<LinkingUnitary> {
    let source = tensor(psi, alpha)?;
    let target = tensor(&tensor(psi, psi)?, residues)?;
    link_checked(&source, &target, tol)
}

fn link_checked(source: &StateFamily, target: &StateFamily, tol: &ToleranceConfig) -> Result<LinkingUnitary> {
    if source.len() != target.len() {
        return Err(Error::LengthMismatch {
            left: source.len(),
            right: target.len(),
        });
    }
    let (gs, gt) = (gram(source), gram(target));
    if !grams_equal(&gs, &gt, tol)? {
        return Err(Error::GramMismatch {
            max_deviation: gs.max_deviation(&gt),
        });
    }
    unitary_linking(source, target, tol)
}

/// Index-extended families for mixed ancillas: row `(i, k)` pairs `ψᵢ` with
/// the `k`-th spectral component of `ρᵢ`, ordered lexicographically.
#[derive(Debug, Clone)]
pub struct ExtendedFamilies {
    pub psi: StateFamily,
    pub alpha: StateFamily,
    pub pairs: Vec<(usize, usize)>,
}

pub fn extend_mixed(psi: &StateFamily, rhos: &[MixedState], tol: &ToleranceConfig) -> Result<ExtendedFamilies> {
    if psi.len() != rhos.len() {
        return Err(Error::LengthMismatch {
            left: psi.len(),
            right: rhos.len(),
        });
    }
    let dim = rhos[0].dim();
    let mut pairs = Vec::new();
    let mut components = Vec::new();
    for (i, rho) in rhos.iter().enumerate() {
        if rho.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: rho.dim(),
            });
        }
        let ens = ensemble_of(rho, tol)?;
        for (k, c) in ens.components.into_iter().enumerate() {
            pairs.push((i, k));
            components.push(c.with_label(format!("a{i}_{k}")));
        }
    }
    let index: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    Ok(ExtendedFamilies {
        psi: psi.select(&index)?,
        alpha: StateFamily::new(components)?,
        pairs,
    })
}

/// Mixed ancillas: feasible iff the extended-index ratio matrix over pairs
/// `(i,k),(j,l)` is PSD. The certificate covers the extended rows.
pub fn clone_feasible_mixed(psi: &StateFamily, rhos: &[MixedState], tol: &ToleranceConfig) -> Result<Verdict> {
    if let Some((i, j, overlap)) = psi.first_orthogonal_pair(tol.eps_orth) {
        return Err(Error::OrthogonalPairPresent { i, j, overlap });
    }
    let ext = extend_mixed(psi, rhos, tol)?;
    let verdict = clone_feasible_pure(&ext.psi, &ext.alpha, tol)?;
    Ok(match verdict {
        Verdict::Feasible(mut cert) => {
            cert.source_index = ext.pairs.iter().map(|p| p.0).collect();
            Verdict::Feasible(cert)
        }
        other => other,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditReport {
    pub commuting: bool,
    pub feasible: bool,
    /// Distinct `ψᵢ ≠ ψⱼ` always come with `tr(ρᵢρⱼ) ≈ 0`.
    pub supports_orthogonal: bool,
    pub max_commutator: f64,
    pub max_support_overlap: f64,
}

impl AuditReport {
    /// Classical (commuting) ancillas that enable cloning must identify `i`.
    pub fn classical_rule_holds(&self) -> bool {
        !(self.commuting && self.feasible) || self.supports_orthogonal
    }
}

pub fn classical_ancilla_audit(psi: &StateFamily, rhos: &[MixedState], tol: &ToleranceConfig) -> Result<AuditReport> {
    let feasible = clone_feasible_mixed(psi, rhos, tol)?.is_feasible();
    let n = rhos.len();
    let mut max_commutator = 0.0f64;
    let mut max_support_overlap = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (rhos[i].density(), rhos[j].density());
            max_commutator = max_commutator.max((a * b - b * a).norm());
            let distinct = (psi.member(i).amplitudes() - psi.member(j).amplitudes()).norm() > tol.eps_gram;
            if distinct {
                max_support_overlap = max_support_overlap.max((a * b).trace().re);
            }
        }
    }
    Ok(AuditReport {
        commuting: max_commutator <= tol.eps_gram,
        feasible,
        supports_orthogonal: max_support_overlap <= tol.eps_gram,
        max_commutator,
        max_support_overlap,
    })
}

/// Closed-form test for two states: `|⟨α₁|α₂⟩| ≤ |⟨ψ₁|ψ₂⟩|`.
pub fn two_state_oracle(psi: &StateFamily, alpha: &StateFamily, tol: &ToleranceConfig) -> Result<bool> {
    for f in [psi, alpha] {
        if f.len() != 2 {
            return Err(Error::WrongArity {
                expected: 2,
                found: f.len(),
            });
        }
    }
    let psi_overlap = psi.member(0).inner(psi.member(1)).norm();
    if psi_overlap <= tol.eps_orth {
        return Err(Error::OrthogonalPairPresent {
            i: 0,
            j: 1,
            overlap: psi_overlap,
        });
    }
    let alpha_overlap = alpha.member(0).inner(alpha.member(1)).norm();
    Ok(alpha_overlap <= psi_overlap + tol.eps_gram)
}
