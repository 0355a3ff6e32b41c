//! General pure-state transformability `sᵢ → tᵢ`, including families with
//! orthogonal pairs, posed as a PSD completion problem: find `M ⪰ 0` with unit
//! diagonal and `gram(t) ∘ M = gram(s)`.
//!
//! Entries where `⟨tᵢ|tⱼ⟩ ≠ 0` are fixed to the ratio; where both overlaps
//! vanish the entry is free; a zero target overlap against a nonzero source
//! overlap rules the transformation out immediately.

use serde::Serialize;

use crate::cloning::{ancilla_to_clone, residues_from_matrix};
use crate::equivalence::LinkingUnitary;
use crate::error::{Error, Result};
use crate::matrixcore::{hermitian_eig, is_psd, psd_check_from, real, CMatrix, ToleranceConfig, C64};
use crate::states::{fidelity_with_density, gram, reduce_to_first, tensor, StateFamily};

/// Tolerance on fixed entries of an accepted completion.
pub const FIXED_ENTRY_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionProblem {
    n: usize,
    mask: Vec<bool>,
    values: CMatrix,
}

impl CompletionProblem {
    /// `mask` is row-major `n × n`; `values` is read only where `mask` is set.
    pub fn new(mask: Vec<bool>, values: CMatrix) -> Result<Self> {
        let n = values.nrows();
        if values.ncols() != n {
            return Err(Error::MalformedProblem(format!("values are {}x{}", n, values.ncols())));
        }
        if mask.len() != n * n {
            return Err(Error::MalformedProblem(format!(
                "mask has {} entries, expected {}",
                mask.len(),
                n * n
            )));
        }
        if n == 0 {
            return Err(Error::MalformedProblem("empty problem".into()));
        }
        let p = Self { n, mask, values };
        for i in 0..n {
            if !p.is_fixed(i, i) || (p.values[(i, i)] - real(1.0)).norm() > 1e-12 {
                return Err(Error::MalformedProblem(format!(
                    "diagonal entry {i} must be fixed to 1"
                )));
            }
            for j in 0..n {
                if p.is_fixed(i, j) != p.is_fixed(j, i) {
                    return Err(Error::MalformedProblem(format!("mask not symmetric at ({i},{j})")));
                }
                if p.is_fixed(i, j) {
                    let v = p.values[(i, j)];
                    if !(v.re.is_finite() && v.im.is_finite()) {
                        return Err(Error::MalformedProblem(format!("entry ({i},{j}) is not finite")));
                    }
                    if (v - p.values[(j, i)].conj()).norm() > 1e-12 * (1.0 + v.norm()) {
                        return Err(Error::MalformedProblem(format!(
                            "entries ({i},{j}) and ({j},{i}) not conjugate"
                        )));
                    }
                }
            }
        }
        Ok(p)
    }

    /// Every entry fixed to `m` (which must have unit diagonal).
    pub fn fully_fixed(m: CMatrix) -> Result<Self> {
        let n = m.nrows();
        Self::new(vec![true; n * n], m)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn is_fixed(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.n + j]
    }

    pub fn value(&self, i: usize, j: usize) -> Option<C64> {
        self.is_fixed(i, j).then(|| self.values[(i, j)])
    }

    pub fn is_fully_fixed(&self) -> bool {
        self.mask.iter().all(|&m| m)
    }

    pub fn free_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|i| ((i + 1)..self.n).map(move |j| (i, j)))
            .filter(|&(i, j)| !self.is_fixed(i, j))
            .collect()
    }

    /// Fixed entries as given, free entries zero.
    pub fn initial_matrix(&self) -> CMatrix {
        CMatrix::from_fn(self.n, self.n, |i, j| self.value(i, j).unwrap_or_default())
    }

    fn restore_fixed(&self, m: &mut CMatrix) -> f64 {
        let mut dist = 0.0f64;
        for i in 0..self.n {
            for j in 0..self.n {
                if let Some(v) = self.value(i, j) {
                    dist = dist.max((m[(i, j)] - v).norm());
                    m[(i, j)] = v;
                }
            }
        }
        dist
    }

    fn fixed_deviation(&self, m: &CMatrix) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in 0..self.n {
                if let Some(v) = self.value(i, j) {
                    worst = worst.max((m[(i, j)] - v).norm());
                }
            }
        }
        worst
    }
}

/// `⟨sᵢ|sⱼ⟩ ≠ 0` while `⟨tᵢ|tⱼ⟩ = 0`: no map can send `s` to `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Contradiction {
    pub i: usize,
    pub j: usize,
    pub source_overlap: C64,
    pub target_overlap: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TransformProblem {
    Problem(CompletionProblem),
    Contradiction(Contradiction),
}

pub fn transform_problem(
    source: &StateFamily,
    target: &StateFamily,
    tol: &ToleranceConfig,
) -> Result<TransformProblem> {
    if source.len() != target.len() {
        return Err(Error::LengthMismatch {
            left: source.len(),
            right: target.len(),
        });
    }
    let (gs, gt) = (gram(source), gram(target));
    let n = source.len();
    let mut mask = vec![true; n * n];
    let mut values = CMatrix::identity(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let (s, t) = (gs.get(i, j), gt.get(i, j));
            if t.norm() > tol.eps_orth {
                values[(i, j)] = s / t;
                values[(j, i)] = (s / t).conj();
            } else if s.norm() > tol.eps_orth {
                return Ok(TransformProblem::Contradiction(Contradiction {
                    i,
                    j,
                    source_overlap: s,
                    target_overlap: t,
                }));
            } else {
                mask[i * n + j] = false;
                mask[j * n + i] = false;
            }
        }
    }
    Ok(TransformProblem::Problem(CompletionProblem::new(mask, values)?))
}

/// Cloning `ψᵢ ⊗ αᵢ → ψᵢ ⊗ ψᵢ` as a transformation problem.
pub fn clone_problem(psi: &StateFamily, alpha: &StateFamily, tol: &ToleranceConfig) -> Result<TransformProblem> {
    transform_problem(&tensor(psi, alpha)?, &tensor(psi, psi)?, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveVerdict {
    Feasible,
    Infeasible,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InfeasibilityWitness {
    Contradiction(Contradiction),
    /// A principal submatrix made only of fixed entries is not PSD.
    NegativeMinor {
        indices: Vec<usize>,
        min_eigenvalue: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub max_iter: usize,
    pub conv_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            conv_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub verdict: SolveVerdict,
    pub matrix: Option<CMatrix>,
    pub iterations: usize,
    pub residual: f64,
    pub witness: Option<InfeasibilityWitness>,
}

impl SolveReport {
    fn infeasible(witness: InfeasibilityWitness) -> Self {
        Self {
            verdict: SolveVerdict::Infeasible,
            matrix: None,
            iterations: 0,
            residual: f64::INFINITY,
            witness: Some(witness),
        }
    }
}

/// Maximal cliques of the fixed-entry graph (Bron–Kerbosch with pivoting).
fn fixed_cliques(p: &CompletionProblem) -> Vec<Vec<usize>> {
    fn expand(
        p: &CompletionProblem,
        r: &mut Vec<usize>,
        cand: Vec<usize>,
        excl: Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if cand.is_empty() && excl.is_empty() {
            out.push(r.clone());
            return;
        }
        let adjacent = |u: usize, v: usize| u != v && p.is_fixed(u, v);
        let pivot = cand
            .iter()
            .chain(&excl)
            .copied()
            .max_by_key(|&u| cand.iter().filter(|&&v| adjacent(u, v)).count())
            .expect("cand or excl is nonempty");
        let mut cand = cand;
        let mut excl = excl;
        let branch: Vec<usize> = cand.iter().copied().filter(|&v| !adjacent(pivot, v)).collect();
        for v in branch {
            r.push(v);
            let c2 = cand.iter().copied().filter(|&u| adjacent(v, u)).collect();
            let x2 = excl.iter().copied().filter(|&u| adjacent(v, u)).collect();
            expand(p, r, c2, x2, out);
            r.pop();
            cand.retain(|&u| u != v);
            excl.push(v);
        }
    }
    let mut out = Vec::new();
    expand(p, &mut Vec::new(), (0..p.n).collect(), Vec::new(), &mut out);
    out
}

fn check_candidate(p: &CompletionProblem, m: &CMatrix, tol: &ToleranceConfig) -> Result<bool> {
    let unit_diag = (0..p.n).all(|i| (m[(i, i)] - real(1.0)).norm() <= tol.eps_norm);
    Ok(unit_diag && p.fixed_deviation(m) <= FIXED_ENTRY_SLACK && is_psd(m, tol)?.is_psd)
}

/// Decides a completion problem.
///
/// Fully fixed principal blocks are checked exactly first (a failing block is
/// an infeasibility certificate). If every entry is fixed, that check is the
/// whole answer. Otherwise alternating projections between the PSD cone and
/// the affine set run from the zero-filled start; a result is only reported
/// feasible after re-validation, and running out of iterations gives
/// [`SolveVerdict::Undecided`].
pub fn solve(p: &CompletionProblem, opts: &SolveOptions, tol: &ToleranceConfig) -> Result<SolveReport> {
    if opts.max_iter == 0 || opts.conv_tol.is_nan() || opts.conv_tol <= 0.0 {
        return Err(Error::MalformedProblem("max_iter and conv_tol must be positive".into()));
    }
    for clique in fixed_cliques(p).into_iter().filter(|c| c.len() >= 2) {
        let sub = CMatrix::from_fn(clique.len(), clique.len(), |a, b| p.values[(clique[a], clique[b])]);
        let check = is_psd(&sub, tol)?;
        if !check.is_psd {
            let mut indices = clique;
            indices.sort_unstable();
            return Ok(SolveReport::infeasible(InfeasibilityWitness::NegativeMinor {
                indices,
                min_eigenvalue: check.min_eigenvalue,
            }));
        }
    }
    if p.is_fully_fixed() {
        let m = p.initial_matrix();
        let min = hermitian_eig(&m, tol)?.min_value();
        return Ok(SolveReport {
            verdict: SolveVerdict::Feasible,
            matrix: Some(m),
            iterations: 0,
            residual: (-min).max(0.0),
            witness: None,
        });
    }

    let n = p.n as f64;
    let mut x = p.initial_matrix();
    let mut affine_gap = 0.0f64;
    let mut residual = f64::INFINITY;
    for iteration in 0..opts.max_iter {
        let mut eig = hermitian_eig(&x, tol)?;
        let negativity = (-eig.min_value()).max(0.0);
        if negativity <= opts.conv_tol * n && psd_check_from(&eig, tol).is_psd && check_candidate(p, &x, tol)? {
            return Ok(SolveReport {
                verdict: SolveVerdict::Feasible,
                matrix: Some(x),
                iterations: iteration,
                residual: negativity.max(affine_gap),
                witness: None,
            });
        }
        eig.values.iter_mut().for_each(|v| *v = v.max(0.0));
        let mut y = eig.reconstruct();
        affine_gap = p.restore_fixed(&mut y);
        residual = affine_gap.max(negativity);
        x = (&y + y.adjoint()).scale(0.5);
    }
    Ok(SolveReport {
        verdict: SolveVerdict::Undecided,
        matrix: None,
        iterations: opts.max_iter,
        residual,
        witness: None,
    })
}

/// Solves a [`TransformProblem`], turning an upfront contradiction into an
/// infeasible report.
pub fn decide(problem: &TransformProblem, opts: &SolveOptions, tol: &ToleranceConfig) -> Result<SolveReport> {
    match problem {
        TransformProblem::Contradiction(c) => Ok(SolveReport::infeasible(InfeasibilityWitness::Contradiction(*c))),
        TransformProblem::Problem(p) => solve(p, opts, tol),
    }
}

/// Independent re-check of a feasible report against its problem.
pub fn validate_solution(p: &CompletionProblem, m: &CMatrix, tol: &ToleranceConfig) -> Result<bool> {
    if m.nrows() != p.n || m.ncols() != p.n {
        return Ok(false);
    }
    check_candidate(p, m, tol)
}

/// Unitary `sᵢ → tᵢ ⊗ Cᵢ` built from a feasible completion `M = gram(C)`;
/// discarding `C` realizes the transformation.
#[derive(Debug, Clone)]
pub struct TransformMap {
    pub residues: StateFamily,
    pub link: LinkingUnitary,
}

impl TransformMap {
    pub fn build(source: &StateFamily, target: &StateFamily, m: &CMatrix, tol: &ToleranceConfig) -> Result<Self> {
        let residues = residues_from_matrix(m, tol)?;
        let link = ancilla_to_clone(target, source, &residues, tol)?;
        Ok(Self { residues, link })
    }

    /// Fidelity of the reduced output with `tᵢ`, per member.
    pub fn output_fidelities(&self, source: &StateFamily, target: &StateFamily) -> Result<Vec<f64>> {
        let d = target.dim();
        let r = self.residues.dim();
        source
            .iter()
            .zip(target.iter())
            .map(|(s, t)| {
                let out = self.link.apply(s)?;
                let rho = reduce_to_first(&out.rows(0, d * r).into_owned(), d, r)?;
                fidelity_with_density(t, &rho)
            })
            .collect()
    }
}
