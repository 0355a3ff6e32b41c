//! `qclone` command-line surface.
//!
//! Exit codes are shared by every command: 0 feasible/ok, 1 infeasible,
//! 2 undecided, 3 input error, 4 internal inconsistency.

use std::collections::HashSet;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cloning::{
    clone_feasible_mixed, clone_feasible_pure, extend_mixed, supplement_matrix, CloneCertificate, Verdict,
};
use crate::completion::{clone_problem, decide, transform_problem, SolveOptions, SolveVerdict, TransformMap};
use crate::deleting::{analyze_deleter, collapse_delete_demo, swap_deleter};
use crate::error::Error;
use crate::matrixcore::{hermitian_eig, psd_check_from, CMatrix, ToleranceConfig, C64};
use crate::random::{random_unitary, rng_from_seed};
use crate::states::{gram, MixedState, PureState, StateFamily};

pub const SCHEMA_VERSION: &str = "1";

pub const EXIT_FEASIBLE: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_UNDECIDED: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

/// Minimum fidelity a constructed map must reach before a feasible verdict is
/// reported.
const FIDELITY_FLOOR: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyDocument {
    pub schema_version: String,
    pub dim: usize,
    #[serde(default)]
    pub states: Vec<StateEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixed: Option<Vec<MixedEntry>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateEntry {
    pub label: String,
    pub amplitudes: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixedEntry {
    pub label: String,
    pub density: Vec<Vec<[f64; 2]>>,
}

/// Row-major dense matrix as written by `--emit-unitary`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDocument {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<[f64; 2]>,
}

impl MatrixDocument {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let entries = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| pair(m[(i, j)]))
            .collect();
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            entries,
        }
    }

    pub fn to_matrix(&self) -> CMatrix {
        CMatrix::from_row_iterator(
            self.rows,
            self.cols,
            self.entries.iter().map(|&[re, im]| C64::new(re, im)),
        )
    }
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportVerdict {
    Feasible,
    Infeasible,
    Undecided,
    Ok,
    Error,
}

impl ReportVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            ReportVerdict::Feasible => "feasible",
            ReportVerdict::Infeasible => "infeasible",
            ReportVerdict::Undecided => "undecided",
            ReportVerdict::Ok => "ok",
            ReportVerdict::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub command: String,
    pub verdict: ReportVerdict,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub witnesses: Value,
    pub tolerances: ToleranceConfig,
    pub runtime_ms: f64,
}

#[derive(Debug, Parser)]
#[command(
    name = "qclone",
    version,
    about = "Assisted cloning, state transformability and no-deleting checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonOpts {
    /// Gram-equality tolerance; the other tolerances scale with it.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Print the report as a single JSON document.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the Gram matrix of a state family.
    Gram {
        input: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Decide whether ψᵢ ⊗ ancillaᵢ → ψᵢ ⊗ ψᵢ is possible.
    CloneCheck {
        psi: PathBuf,
        ancilla: PathBuf,
        /// Write the dilated cloning unitary here.
        #[arg(long)]
        emit_unitary: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Decide whether sourceᵢ → targetᵢ is possible.
    TransformCheck {
        source: PathBuf,
        target: PathBuf,
        /// Write the linking unitary sourceᵢ → targetᵢ ⊗ Cᵢ here.
        #[arg(long)]
        emit_unitary: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Analyze a (possibly twisted) swap deleter, or run the collapse demo.
    DeleteCheck {
        psi: PathBuf,
        /// Seed for a random environment unitary applied after the swap.
        #[arg(long)]
        twist: Option<u64>,
        /// Seed for the measurement outcomes of the collapse demo.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        collapse_demo: bool,
        #[command(flatten)]
        common: CommonOpts,
    },
}

impl Command {
    fn common(&self) -> &CommonOpts {
        match self {
            Command::Gram { common, .. }
            | Command::CloneCheck { common, .. }
            | Command::TransformCheck { common, .. }
            | Command::DeleteCheck { common, .. } => common,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Gram { .. } => "gram",
            Command::CloneCheck { .. } => "clone-check",
            Command::TransformCheck { .. } => "transform-check",
            Command::DeleteCheck { .. } => "delete-check",
        }
    }
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Internal(String),
}

impl Failure {
    fn from_analysis(context: &str, err: Error) -> Self {
        match err {
            Error::OrthogonalPairPresent { .. }
            | Error::LengthMismatch { .. }
            | Error::DimensionMismatch { .. }
            | Error::NotNormalized { .. }
            | Error::NotUnitTrace { .. }
            | Error::NotHermitian { .. }
            | Error::EmptyFamily
            | Error::NonFinite => Failure::Input(format!("{context}: {err}")),
            other => Failure::Internal(format!("{context}: {other}")),
        }
    }
}

struct Outcome {
    verdict: ReportVerdict,
    exit_code: i32,
    witnesses: Value,
}

impl Outcome {
    fn new(verdict: ReportVerdict, witnesses: Value) -> Self {
        let exit_code = match verdict {
            ReportVerdict::Feasible | ReportVerdict::Ok => EXIT_FEASIBLE,
            ReportVerdict::Infeasible => EXIT_INFEASIBLE,
            ReportVerdict::Undecided => EXIT_UNDECIDED,
            ReportVerdict::Error => EXIT_INTERNAL,
        };
        Self {
            verdict,
            exit_code,
            witnesses,
        }
    }
}

pub fn load_document(path: &Path) -> Result<FamilyDocument, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let doc: FamilyDocument = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    validate_document(&doc).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(doc)
}

pub fn validate_document(doc: &FamilyDocument) -> Result<(), String> {
    if doc.schema_version != SCHEMA_VERSION {
        return Err(format!("schema_version: unsupported value {:?}", doc.schema_version));
    }
    if doc.dim == 0 {
        return Err("dim: must be at least 1".into());
    }
    let mut labels = HashSet::new();
    for (i, s) in doc.states.iter().enumerate() {
        if s.amplitudes.len() != doc.dim {
            return Err(format!(
                "states[{i}].amplitudes: expected {} entries, found {}",
                doc.dim,
                s.amplitudes.len()
            ));
        }
        if !labels.insert(s.label.as_str()) {
            return Err(format!("states[{i}].label: duplicate label {:?}", s.label));
        }
    }
    let mut labels = HashSet::new();
    for (i, m) in doc.mixed.iter().flatten().enumerate() {
        if m.density.len() != doc.dim || m.density.iter().any(|row| row.len() != doc.dim) {
            return Err(format!("mixed[{i}].density: expected a {0}x{0} matrix", doc.dim));
        }
        if !labels.insert(m.label.as_str()) {
            return Err(format!("mixed[{i}].label: duplicate label {:?}", m.label));
        }
    }
    if doc.states.is_empty() && doc.mixed.as_ref().is_none_or(Vec::is_empty) {
        return Err("states: document contains no states".into());
    }
    Ok(())
}

impl FamilyDocument {
    pub fn from_family(family: &StateFamily) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            dim: family.dim(),
            states: family
                .iter()
                .map(|s| StateEntry {
                    label: s.label().into(),
                    amplitudes: s.amplitudes().iter().map(|&z| pair(z)).collect(),
                })
                .collect(),
            mixed: None,
        }
    }

    pub fn pure_family(&self, tol: &ToleranceConfig) -> Result<StateFamily, String> {
        if self.states.is_empty() {
            return Err("states: a pure family is required".into());
        }
        let members = self
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let amps = s.amplitudes.iter().map(|&[re, im]| C64::new(re, im)).collect();
                PureState::new(s.label.clone(), amps, tol).map_err(|e| format!("states[{i}]: {e}"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        StateFamily::new(members).map_err(|e| format!("states: {e}"))
    }

    pub fn mixed_states(&self, tol: &ToleranceConfig) -> Option<Result<Vec<MixedState>, String>> {
        let entries = self.mixed.as_ref().filter(|m| !m.is_empty())?;
        Some(
            entries
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    let n = m.density.len();
                    let rho =
                        CMatrix::from_row_iterator(n, n, m.density.iter().flatten().map(|&[re, im]| C64::new(re, im)));
                    MixedState::new(rho, tol).map_err(|e| format!("mixed[{i}]: {e}"))
                })
                .collect(),
        )
    }
}

fn matrix_json(m: &CMatrix) -> Value {
    serde_json::to_value(MatrixDocument::from_matrix(m)).expect("matrix serializes")
}

fn tolerances(common: &CommonOpts) -> Result<ToleranceConfig, Failure> {
    match common.tol {
        None => Ok(ToleranceConfig::default()),
        Some(t) => ToleranceConfig::scaled_to(t).map_err(|e| Failure::Input(format!("--tol: {e}"))),
    }
}

fn write_matrix(path: &Path, m: &CMatrix) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(&MatrixDocument::from_matrix(m)).expect("matrix serializes");
    std::fs::write(path, text).map_err(|e| Failure::Input(format!("--emit-unitary {}: {e}", path.display())))
}

/// Runs a parsed command and builds its report; files named by
/// `--emit-unitary` are written here.
pub fn execute(cli: &Cli) -> ReportDocument {
    let start = Instant::now();
    let common = cli.command.common();
    let tol = tolerances(common).unwrap_or_default();
    let result = tolerances(common).and_then(|tol| match &cli.command {
        Command::Gram { input, .. } => cmd_gram(input, &tol),
        Command::CloneCheck {
            psi,
            ancilla,
            emit_unitary,
            ..
        } => cmd_clone_check(psi, ancilla, emit_unitary.as_deref(), &tol),
        Command::TransformCheck {
            source,
            target,
            emit_unitary,
            ..
        } => cmd_transform_check(source, target, emit_unitary.as_deref(), &tol),
        Command::DeleteCheck {
            psi,
            twist,
            seed,
            collapse_demo,
            ..
        } => cmd_delete_check(psi, *twist, *seed, *collapse_demo, &tol),
    });
    let (verdict, exit_code, message, witnesses) = match result {
        Ok(o) => (o.verdict, o.exit_code, None, o.witnesses),
        Err(Failure::Input(msg)) => (ReportVerdict::Error, EXIT_INPUT, Some(msg), Value::Null),
        Err(Failure::Internal(msg)) => (ReportVerdict::Error, EXIT_INTERNAL, Some(msg), Value::Null),
    };
    ReportDocument {
        command: cli.command.name().into(),
        verdict,
        exit_code,
        message,
        witnesses,
        tolerances: tol,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

fn cmd_gram(input: &Path, tol: &ToleranceConfig) -> Result<Outcome, Failure> {
    let doc = load_document(input).map_err(Failure::Input)?;
    let family = doc
        .pure_family(tol)
        .map_err(|e| Failure::Input(format!("{}: {e}", input.display())))?;
    let g = gram(&family);
    Ok(Outcome::new(
        ReportVerdict::Ok,
        json!({
            "labels": family.iter().map(PureState::label).collect::<Vec<_>>(),
            "dim": family.dim(),
            "gram": matrix_json(g.entries()),
        }),
    ))
}

/// Pure or mixed ancillas read from one document.
enum Ancillas {
    Pure(StateFamily),
    Mixed(Vec<MixedState>),
}

fn load_ancillas(path: &Path, tol: &ToleranceConfig) -> Result<Ancillas, Failure> {
    let doc = load_document(path).map_err(Failure::Input)?;
    let ctx = |e: String| Failure::Input(format!("{}: {e}", path.display()));
    match doc.mixed_states(tol) {
        Some(rhos) => Ok(Ancillas::Mixed(rhos.map_err(ctx)?)),
        None => Ok(Ancillas::Pure(doc.pure_family(tol).map_err(ctx)?)),
    }
}

fn load_pure(path: &Path, tol: &ToleranceConfig) -> Result<StateFamily, Failure> {
    let doc = load_document(path).map_err(Failure::Input)?;
    doc.pure_family(tol)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

type Expanded = (StateFamily, StateFamily, Vec<(usize, usize)>);

/// `(ψ, α, pair index)` rows, expanded over spectral components for mixed ancillas.
fn expand(psi: &StateFamily, ancillas: &Ancillas, tol: &ToleranceConfig) -> Result<Expanded, Failure> {
    match ancillas {
        Ancillas::Pure(alpha) => {
            if alpha.len() != psi.len() {
                return Err(Failure::Input(format!(
                    "family lengths differ: {} vs {}",
                    psi.len(),
                    alpha.len()
                )));
            }
            Ok((psi.clone(), alpha.clone(), (0..psi.len()).map(|i| (i, 0)).collect()))
        }
        Ancillas::Mixed(rhos) => {
            let ext = extend_mixed(psi, rhos, tol).map_err(|e| Failure::from_analysis("mixed ancillas", e))?;
            Ok((ext.psi, ext.alpha, ext.pairs))
        }
    }
}

fn fidelity_gate(label: &str, fids: &[f64]) -> Result<(), Failure> {
    match fids.iter().position(|&f| f < FIDELITY_FLOOR) {
        Some(i) => Err(Failure::Internal(format!(
            "{label}: row {i} reached fidelity {}",
            fids[i]
        ))),
        None => Ok(()),
    }
}

fn certificate_witness(cert: &CloneCertificate) -> Result<Value, Failure> {
    let internal = |e| Failure::from_analysis("certificate", e);
    let clone_fids = cert.ancilla_clone_fidelities().map_err(internal)?;
    let channel_fids = cert.channel_fidelities().map_err(internal)?;
    fidelity_gate("clone from ancilla", &clone_fids)?;
    fidelity_gate("dilated channel", &channel_fids)?;
    Ok(json!({
        "residue_dim": cert.residues().dim(),
        "residue_gram": matrix_json(gram(cert.residues()).entries()),
        "gram_defect": cert.gram_defect(),
        "ancilla_map_residual": cert.ancilla_map().map(|m| m.residual()),
        "dilated_unitary_residual": cert.dilated_unitary().residual(),
        "dilated_unitary_dim": cert.dilated_unitary().embed_dim(),
        "ancilla_clone_fidelities": clone_fids,
        "channel_fidelities": channel_fids,
        "source_index": cert.source_index(),
    }))
}

fn cmd_clone_check(
    psi_path: &Path,
    ancilla_path: &Path,
    emit: Option<&Path>,
    tol: &ToleranceConfig,
) -> Result<Outcome, Failure> {
    let psi = load_pure(psi_path, tol)?;
    let ancillas = load_ancillas(ancilla_path, tol)?;
    let analysis = |e| Failure::from_analysis("clone-check", e);

    if psi.first_orthogonal_pair(tol.eps_orth).is_none() {
        let verdict = match &ancillas {
            Ancillas::Pure(alpha) => clone_feasible_pure(&psi, alpha, tol),
            Ancillas::Mixed(rhos) => clone_feasible_mixed(&psi, rhos, tol),
        }
        .map_err(analysis)?;
        let (psi_ext, alpha_ext, pairs) = expand(&psi, &ancillas, tol)?;
        let m = supplement_matrix(&psi_ext, &alpha_ext, tol).map_err(analysis)?;
        return match verdict {
            Verdict::Feasible(cert) => {
                if let Some(path) = emit {
                    write_matrix(path, cert.dilated_unitary().matrix())?;
                }
                let mut w = certificate_witness(&cert)?;
                w["route"] = json!("ratio-matrix");
                w["min_eigenvalue"] = json!(cert.min_eigenvalue());
                w["supplement_matrix"] = matrix_json(m.entries());
                w["pairs"] = json!(pairs);
                Ok(Outcome::new(ReportVerdict::Feasible, w))
            }
            Verdict::Infeasible { min_eigenvalue } => Ok(Outcome::new(
                ReportVerdict::Infeasible,
                json!({
                    "route": "ratio-matrix",
                    "min_eigenvalue": min_eigenvalue,
                    "supplement_matrix": matrix_json(m.entries()),
                    "pairs": pairs,
                }),
            )),
        };
    }

    let (psi_ext, alpha_ext, pairs) = expand(&psi, &ancillas, tol)?;
    let problem = clone_problem(&psi_ext, &alpha_ext, tol).map_err(analysis)?;
    let report = decide(&problem, &SolveOptions::default(), tol).map_err(analysis)?;
    let mut w = json!({
        "route": "completion",
        "iterations": report.iterations,
        "residual": report.residual,
        "pairs": pairs,
    });
    match report.verdict {
        SolveVerdict::Feasible => {
            let m = report.matrix.as_ref().expect("feasible report carries a matrix");
            let cert = CloneCertificate::from_residue_gram(&psi_ext, &alpha_ext, m, tol).map_err(analysis)?;
            if let Some(path) = emit {
                write_matrix(path, cert.dilated_unitary().matrix())?;
            }
            let extra = certificate_witness(&cert)?;
            merge(&mut w, extra);
            w["completion"] = matrix_json(m);
            // with orthogonal ψ pairs the ancilla alone may or may not suffice
            let alone = transform_problem(&alpha_ext, &psi_ext, tol).map_err(analysis)?;
            let alone = decide(&alone, &SolveOptions::default(), tol).map_err(analysis)?;
            w["ancilla_alone"] = json!(alone.verdict);
            if let Some(witness) = &alone.witness {
                w["ancilla_alone_witness"] = serde_json::to_value(witness).expect("witness serializes");
            }
            Ok(Outcome::new(ReportVerdict::Feasible, w))
        }
        SolveVerdict::Infeasible => {
            w["infeasibility"] = serde_json::to_value(&report.witness).expect("witness serializes");
            Ok(Outcome::new(ReportVerdict::Infeasible, w))
        }
        SolveVerdict::Undecided => Ok(Outcome::new(ReportVerdict::Undecided, w)),
    }
}

fn merge(into: &mut Value, from: Value) {
    if let (Value::Object(dst), Value::Object(src)) = (into, from) {
        dst.extend(src);
    }
}

fn cmd_transform_check(
    source_path: &Path,
    target_path: &Path,
    emit: Option<&Path>,
    tol: &ToleranceConfig,
) -> Result<Outcome, Failure> {
    let target = load_pure(target_path, tol)?;
    let sources = load_ancillas(source_path, tol)?;
    let (target_ext, source_ext, pairs) = expand(&target, &sources, tol)?;
    let analysis = |e| Failure::from_analysis("transform-check", e);

    let (route, m, report) = if target.first_orthogonal_pair(tol.eps_orth).is_none() {
        let m = supplement_matrix(&target_ext, &source_ext, tol).map_err(analysis)?;
        let eig = hermitian_eig(m.entries(), tol).map_err(analysis)?;
        let check = psd_check_from(&eig, tol);
        let w = json!({ "min_eigenvalue": check.min_eigenvalue, "ratio_matrix": matrix_json(m.entries()) });
        ("ratio-matrix", check.is_psd.then(|| m.entries().clone()), w)
    } else {
        let problem = transform_problem(&source_ext, &target_ext, tol).map_err(analysis)?;
        let report = decide(&problem, &SolveOptions::default(), tol).map_err(analysis)?;
        let mut w = json!({ "iterations": report.iterations, "residual": report.residual });
        if let Some(witness) = &report.witness {
            w["infeasibility"] = serde_json::to_value(witness).expect("witness serializes");
        }
        if report.verdict == SolveVerdict::Undecided {
            w["route"] = json!("completion");
            w["pairs"] = json!(pairs);
            return Ok(Outcome::new(ReportVerdict::Undecided, w));
        }
        ("completion", report.matrix, w)
    };
    let mut w = report;
    w["route"] = json!(route);
    w["pairs"] = json!(pairs);

    let Some(m) = m else {
        return Ok(Outcome::new(ReportVerdict::Infeasible, w));
    };
    let map = TransformMap::build(&source_ext, &target_ext, &m, tol).map_err(analysis)?;
    let fids = map.output_fidelities(&source_ext, &target_ext).map_err(analysis)?;
    fidelity_gate("transformed output", &fids)?;
    if let Some(path) = emit {
        write_matrix(path, map.link.matrix())?;
    }
    w["residue_dim"] = json!(map.residues.dim());
    w["link_residual"] = json!(map.link.residual());
    w["link_dim"] = json!(map.link.embed_dim());
    w["output_fidelities"] = json!(fids);
    Ok(Outcome::new(ReportVerdict::Feasible, w))
}

fn cmd_delete_check(
    psi_path: &Path,
    twist: Option<u64>,
    seed: Option<u64>,
    collapse: bool,
    tol: &ToleranceConfig,
) -> Result<Outcome, Failure> {
    let psi = load_pure(psi_path, tol)?;
    if collapse {
        let trace = collapse_delete_demo(&psi, seed.unwrap_or(0));
        let mut branches = Vec::new();
        for b in &trace.branches {
            if b.register1_fidelity < FIDELITY_FLOOR || b.register2_blank_fidelity < FIDELITY_FLOOR {
                return Err(Failure::Internal(format!(
                    "collapse branch {} did not end in |psi>|0>",
                    b.index
                )));
            }
            branches.push(json!({
                "index": b.index,
                "label": psi.member(b.index).label(),
                "probabilities": b.probabilities,
                "outcome": b.outcome,
                "correction": matrix_json(&b.correction),
                "final_state": b.final_state.iter().map(|&z| pair(z)).collect::<Vec<_>>(),
                "register1_fidelity": b.register1_fidelity,
                "register2_blank_fidelity": b.register2_blank_fidelity,
            }));
        }
        return Ok(Outcome::new(
            ReportVerdict::Ok,
            json!({ "mode": "collapse", "seed": trace.seed, "selective": trace.selective, "branches": branches }),
        ));
    }

    let d = psi.dim();
    let deleter = match twist {
        None => swap_deleter(d, d),
        Some(s) => {
            let w = random_unitary(&mut rng_from_seed(s), 2 * d);
            swap_deleter(d, 2 * d).and_then(|del| del.twisted(&w))
        }
    }
    .map_err(|e| Failure::from_analysis("deleter", e))?;
    let analysis = analyze_deleter(&deleter, &psi, tol).map_err(|e| Failure::from_analysis("delete-check", e))?;
    let fids = analysis
        .resurrection_fidelities(&psi)
        .map_err(|e| Failure::from_analysis("delete-check", e))?;
    fidelity_gate("resurrection", &fids)?;
    Ok(Outcome::new(
        ReportVerdict::Ok,
        json!({
            "mode": if twist.is_some() { "twisted-swap" } else { "swap" },
            "twist": twist,
            "layout": [d, d, deleter.layout().2],
            "gram_preserved": analysis.gram_preserved(),
            "gram_deviation": analysis.gram_deviation(),
            "max_form_defect": analysis.max_form_defect(),
            "residue_gram": matrix_json(gram(analysis.residues()).entries()),
            "resurrection_residual": analysis.resurrection().residual(),
            "resurrection_fidelities": fids,
        }),
    ))
}

/// Human-readable rendering of a report.
pub fn render_human(report: &ReportDocument) -> String {
    let mut out = format!(
        "command: {}\nverdict: {}\nexit code: {}\n",
        report.command,
        report.verdict.as_str(),
        report.exit_code
    );
    if let Some(msg) = &report.message {
        out.push_str(&format!("message: {msg}\n"));
    }
    if let Value::Object(map) = &report.witnesses {
        for (key, value) in map {
            match serde_json::from_value::<MatrixDocument>(value.clone()) {
                Ok(m) if m.rows * m.cols == m.entries.len() => {
                    out.push_str(&format!("{key}:\n"));
                    for i in 0..m.rows {
                        let row: Vec<String> = m.entries[i * m.cols..(i + 1) * m.cols]
                            .iter()
                            .map(|e| fmt_complex(*e))
                            .collect();
                        out.push_str(&format!("  [{}]\n", row.join(", ")));
                    }
                }
                _ => out.push_str(&format!("{key}: {value}\n")),
            }
        }
    }
    let t = &report.tolerances;
    out.push_str(&format!(
        "tolerances: eps_gram={:e} eps_psd={:e} eps_rank={:e} eps_orth={:e} eps_norm={:e}\n",
        t.eps_gram, t.eps_psd, t.eps_rank, t.eps_orth, t.eps_norm
    ));
    out.push_str(&format!("runtime: {:.3} ms\n", report.runtime_ms));
    out
}

fn fmt_complex([re, im]: [f64; 2]) -> String {
    if im.abs() < 1e-12 {
        format!("{re:.8}")
    } else {
        format!("{re:.8}{im:+.8}i")
    }
}

/// Parses arguments, runs the command and prints the report. Returns the exit
/// code; usage errors map to the input-error code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_FEASIBLE };
            let _ = e.print();
            return code;
        }
    };
    let report = execute(&cli);
    if cli.command.common().json {
        println!("{}", serde_json::to_string(&report).expect("report serializes"));
    } else {
        print!("{}", render_human(&report));
    }
    report.exit_code
}
