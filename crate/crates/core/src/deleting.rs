//! Deleters `|ψᵢ⟩|ψᵢ⟩|A⟩ → |ψᵢ⟩|0⟩|Aᵢ⟩`, extraction of the environment
//! residues `Aᵢ`, and resurrection of `ψᵢ` from them.
//!
//! For a non-orthogonal family the residues always have the Gram matrix of
//! `{ψᵢ}`, so the deleted copy can be linked back unitarily. The measurement
//! based deletion in [`collapse_delete_demo`] escapes this only because it
//! applies an outcome-dependent correction.

use rand::Rng;

use crate::equivalence::{grams_equal, unitary_linking, LinkingUnitary};
use crate::error::{Error, Result};
use crate::matrixcore::{kron, unitarity_defect, CMatrix, CVector, ToleranceConfig, ONE};
use crate::random::rng_from_seed;
use crate::states::{gram, PureState, StateFamily};

/// Unitarity slack accepted for a [`Deleter`].
pub const DELETER_UNITARITY_SLACK: f64 = 1e-9;

/// Unitary on `register1 ⊗ register2 ⊗ environment` (dimensions `d, d, d_env`)
/// together with the fixed initial environment `|A⟩` and blank `|0⟩`.
#[derive(Debug, Clone)]
pub struct Deleter {
    unitary: CMatrix,
    env_init: PureState,
    blank: PureState,
    d: usize,
    d_env: usize,
}

impl Deleter {
    pub fn new(unitary: CMatrix, env_init: PureState, blank: PureState, d: usize) -> Result<Self> {
        if blank.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: blank.dim(),
            });
        }
        let d_env = env_init.dim();
        let total = d * d * d_env;
        if unitary.nrows() != total || unitary.ncols() != total {
            return Err(Error::DimensionMismatch {
                expected: total,
                found: unitary.nrows(),
            });
        }
        let defect = unitarity_defect(&unitary);
        if defect > DELETER_UNITARITY_SLACK {
            return Err(Error::NotUnitary { defect });
        }
        Ok(Self {
            unitary,
            env_init,
            blank,
            d,
            d_env,
        })
    }

    /// The do-nothing map; not a deleter on any family containing a state
    /// other than the blank.
    pub fn identity(d: usize, d_env: usize) -> Self {
        let total = d * d * d_env;
        Self {
            unitary: CMatrix::identity(total, total),
            env_init: PureState::basis(d_env, 0),
            blank: PureState::basis(d, 0),
            d,
            d_env,
        }
    }

    /// Follows the deleter with the environment unitary `w`.
    pub fn twisted(&self, w: &CMatrix) -> Result<Self> {
        if w.nrows() != self.d_env || w.ncols() != self.d_env {
            return Err(Error::DimensionMismatch {
                expected: self.d_env,
                found: w.nrows(),
            });
        }
        let lift = kron(&CMatrix::identity(self.d * self.d, self.d * self.d), w);
        Self::new(lift * &self.unitary, self.env_init.clone(), self.blank.clone(), self.d)
    }

    pub fn unitary(&self) -> &CMatrix {
        &self.unitary
    }

    pub fn env_init(&self) -> &PureState {
        &self.env_init
    }

    pub fn blank(&self) -> &PureState {
        &self.blank
    }

    /// `(d, d, d_env)`.
    pub fn layout(&self) -> (usize, usize, usize) {
        (self.d, self.d, self.d_env)
    }

    fn index(&self, x: usize, y: usize, e: usize) -> usize {
        (x * self.d + y) * self.d_env + e
    }
}

/// Swaps register 2 with the first `d` levels of the environment, which start
/// in `|0⟩`.
pub fn swap_deleter(d: usize, d_env: usize) -> Result<Deleter> {
    if d_env < d {
        return Err(Error::EnvTooSmall { d, d_env });
    }
    let mut out = Deleter::identity(d, d_env);
    let total = d * d * d_env;
    let mut u = CMatrix::zeros(total, total);
    for x in 0..d {
        for y in 0..d {
            for e in 0..d_env {
                let from = out.index(x, y, e);
                let to = if e < d { out.index(x, e, y) } else { from };
                u[(to, from)] = ONE;
            }
        }
    }
    out.unitary = u;
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct DeletionAnalysis {
    residues: StateFamily,
    gram_preserved: bool,
    gram_deviation: f64,
    resurrection: LinkingUnitary,
    form_defects: Vec<f64>,
    d: usize,
}

impl DeletionAnalysis {
    /// Environment states `{Aᵢ}`.
    pub fn residues(&self) -> &StateFamily {
        &self.residues
    }

    pub fn gram_preserved(&self) -> bool {
        self.gram_preserved
    }

    /// `max |gram(A) − gram(ψ)|`.
    pub fn gram_deviation(&self) -> f64 {
        self.gram_deviation
    }

    /// Unitary `Aᵢ → ψᵢ` (ψ zero-padded into the environment dimension).
    pub fn resurrection(&self) -> &LinkingUnitary {
        &self.resurrection
    }

    /// `1 − |⟨ψᵢ 0|·⟩|²` on the first two registers, per member.
    pub fn form_defects(&self) -> &[f64] {
        &self.form_defects
    }

    pub fn max_form_defect(&self) -> f64 {
        self.form_defects.iter().copied().fold(0.0, f64::max)
    }

    /// `|⟨ψᵢ| trunc(R Aᵢ)⟩|²` for each member.
    pub fn resurrection_fidelities(&self, psi: &StateFamily) -> Result<Vec<f64>> {
        if psi.len() != self.residues.len() {
            return Err(Error::LengthMismatch {
                left: psi.len(),
                right: self.residues.len(),
            });
        }
        psi.iter()
            .zip(self.residues.iter())
            .map(|(p, a)| {
                let out = self.resurrection.apply(a)?;
                Ok(p.amplitudes().dotc(&out.rows(0, self.d).into_owned()).norm_sqr())
            })
            .collect()
    }
}

/// Runs the deleter on `|ψᵢ⟩|ψᵢ⟩|A⟩`, checks the output has the form
/// `|ψᵢ⟩|0⟩|Aᵢ⟩`, and links `{Aᵢ}` back to `{ψᵢ}`.
pub fn analyze_deleter(deleter: &Deleter, psi: &StateFamily, tol: &ToleranceConfig) -> Result<DeletionAnalysis> {
    let (d, _, d_env) = deleter.layout();
    if psi.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: psi.dim(),
        });
    }
    if let Some((i, j, overlap)) = psi.first_orthogonal_pair(tol.eps_orth) {
        return Err(Error::OrthogonalPairPresent { i, j, overlap });
    }

    let mut residues = Vec::with_capacity(psi.len());
    let mut form_defects = Vec::with_capacity(psi.len());
    for (i, p) in psi.iter().enumerate() {
        let input = p.tensor(p).tensor(&deleter.env_init);
        let out = deleter.unitary() * input.amplitudes();
        let reference = p.tensor(&deleter.blank);
        // conditional environment state given registers 1,2 in |ψᵢ⟩|0⟩
        let joint = CMatrix::from_fn(d * d, d_env, |r, e| out[r * d_env + e]);
        let env: CVector = joint.tr_mul(&reference.amplitudes().conjugate());
        let weight = env.norm_squared();
        let defect = (1.0 - weight).max(0.0);
        if defect > tol.eps_gram {
            return Err(Error::NotADeleter { index: i, defect });
        }
        form_defects.push(defect);
        residues.push(PureState::from_unit_vector(format!("A{i}"), env.unscale(weight.sqrt())));
    }
    let residues = StateFamily::new(residues)?;
    let (ga, gp) = (gram(&residues), gram(psi));
    let gram_preserved = grams_equal(&ga, &gp, tol)?;
    if !gram_preserved {
        return Err(Error::GramMismatch {
            max_deviation: ga.max_deviation(&gp),
        });
    }
    let resurrection = unitary_linking(&residues, psi, tol)?;
    Ok(DeletionAnalysis {
        gram_deviation: ga.max_deviation(&gp),
        residues,
        gram_preserved,
        resurrection,
        form_defects,
        d,
    })
}

/// Recovers the deleted copy from an environment state in `span{Aᵢ}`.
pub fn resurrect(analysis: &DeletionAnalysis, env: &PureState, tol: &ToleranceConfig) -> Result<PureState> {
    let d_env = analysis.residues.dim();
    if env.dim() != d_env {
        return Err(Error::DimensionMismatch {
            expected: d_env,
            found: env.dim(),
        });
    }
    let svd = analysis.residues.columns().svd(true, false);
    let u = svd.u.expect("requested U");
    let top = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k].powi(2) > tol.eps_rank * top * top)
        .collect();
    let basis = u.select_columns(&keep);
    let v = env.amplitudes();
    let residual = (v - &basis * (basis.adjoint() * v)).norm();
    if residual > tol.eps_gram {
        return Err(Error::OutOfSpan { residual });
    }
    let out = analysis.resurrection.apply(env)?;
    let head = out.rows(0, analysis.d).into_owned();
    let norm = head.norm();
    Ok(PureState::from_unit_vector("resurrected", head.unscale(norm)))
}

/// One branch of measure-and-correct deletion.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseBranch {
    pub index: usize,
    /// Born probabilities `|⟨k|ψᵢ⟩|²` for the register-2 measurement.
    pub probabilities: Vec<f64>,
    pub outcome: usize,
    /// Unitary on register 2 mapping `|outcome⟩ → |0⟩` (swap of the two levels).
    pub correction: CMatrix,
    /// Joint state of registers 1 and 2 after correction.
    pub final_state: CVector,
    pub register1_fidelity: f64,
    pub register2_blank_fidelity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollapseTrace {
    pub seed: u64,
    pub branches: Vec<CollapseBranch>,
    /// The correction depends on the outcome, so the process is not a single
    /// trace-preserving map applied blindly.
    pub selective: bool,
}

/// Deletes the second copy by a computational-basis measurement followed by
/// the outcome-dependent rotation `|k⟩ → |0⟩`.
pub fn collapse_delete_demo(psi: &StateFamily, seed: u64) -> CollapseTrace {
    let mut rng = rng_from_seed(seed);
    let d = psi.dim();
    let branches = psi
        .iter()
        .enumerate()
        .map(|(index, p)| {
            let probabilities: Vec<f64> = p.amplitudes().iter().map(|z| z.norm_sqr()).collect();
            let draw: f64 = rng.random();
            let mut acc = 0.0;
            let outcome = probabilities
                .iter()
                .position(|&q| {
                    acc += q;
                    draw < acc
                })
                .unwrap_or_else(|| probabilities.iter().rposition(|&q| q > 0.0).unwrap_or(0));
            let mut correction = CMatrix::identity(d, d);
            correction.swap_columns(0, outcome);
            let collapsed = p.tensor(&PureState::basis(d, outcome));
            let lift = kron(&CMatrix::identity(d, d), &correction);
            let final_state = lift * collapsed.amplitudes();
            let joint = CMatrix::from_fn(d, d, |a, b| final_state[a * d + b]);
            let rho1 = &joint * joint.adjoint();
            let register1_fidelity = p.amplitudes().dotc(&(rho1 * p.amplitudes())).re;
            let register2_blank_fidelity = joint.column(0).norm_squared();
            CollapseBranch {
                index,
                probabilities,
                outcome,
                correction,
                final_state,
                register1_fidelity,
                register2_blank_fidelity,
            }
        })
        .collect();
    CollapseTrace {
        seed,
        branches,
        selective: true,
    }
}
