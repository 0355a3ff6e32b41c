//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use qclone::batch::{run_trials, Execution};
use qclone::cloning::{
    ancilla_to_clone, clone_feasible_mixed, clone_feasible_pure, residues_from_matrix, supplement_matrix,
    two_state_oracle, Verdict,
};
use qclone::completion::{clone_problem, solve, CompletionProblem, SolveOptions, SolveVerdict, TransformProblem};
use qclone::deleting::{analyze_deleter, swap_deleter};
use qclone::equivalence::{unitary_linking, verify_linking};
use qclone::matrixcore::{is_psd, psd_projection};
use qclone::random::{
    apply_unitary, random_family, random_nonorthogonal_family, random_phases, random_state, random_unitary,
};
use qclone::states::{gram, tensor, MixedState, PureState, StateFamily};
use qclone::{Error, ToleranceConfig};
use rand::Rng;

const SEED: u64 = 0x5eed_ac1d;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn tol() -> ToleranceConfig {
    ToleranceConfig::default()
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn qclone(args: &[&str]) -> (i32, serde_json::Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_qclone"))
        .args(args)
        .arg("--json")
        .output()
        .expect("spawn qclone");
    let json = serde_json::from_slice(&out.stdout).unwrap_or(serde_json::Value::Null);
    (out.status.code().unwrap_or(-1), json)
}

fn three_state_families() -> (StateFamily, StateFamily) {
    let psi = StateFamily::new(vec![PureState::basis(2, 0), PureState::basis(2, 1), PureState::plus()]).unwrap();
    let a = PureState::basis(2, 0);
    let alpha = StateFamily::new(vec![a.clone(), a, PureState::basis(2, 1)]).unwrap();
    (psi, alpha)
}

/// `α = W (ψ ⊗ ξ)`: always clonable, with total ancilla dimension ≤ 8.
fn product_ancilla(rng: &mut impl Rng, psi: &StateFamily) -> StateFamily {
    let d = psi.dim();
    let e = rng.random_range(1..=(8 / d).max(1));
    let xi = random_family(rng, psi.len(), e);
    let joint = tensor(psi, &xi).unwrap();
    apply_unitary(&random_unitary(rng, joint.dim()), &joint)
}

fn ac1() -> Outcome {
    let psi = fixture("three_states.json");
    let alpha = fixture("three_states_ancilla.json");
    let (psi, alpha) = (psi.to_str().unwrap(), alpha.to_str().unwrap());
    let start = Instant::now();
    let (clone_code, _) = qclone(&["clone-check", psi, alpha]);
    let (transform_code, report) = qclone(&["transform-check", alpha, psi]);
    let elapsed = start.elapsed().as_secs_f64();
    let w = &report["witnesses"]["infeasibility"];
    let source = w["source_overlap"][0]
        .as_f64()
        .unwrap_or(0.0)
        .hypot(w["source_overlap"][1].as_f64().unwrap_or(0.0));
    let target = w["target_overlap"][0]
        .as_f64()
        .unwrap_or(1.0)
        .hypot(w["target_overlap"][1].as_f64().unwrap_or(1.0));
    let witness_ok = w["kind"] == "contradiction" && source > 0.5 && target == 0.0;
    let detail = format!("clone exit {clone_code}, transform exit {transform_code}, witness {w}, {elapsed:.3}s");
    if clone_code == 0 && transform_code == 1 && witness_ok && elapsed < 1.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ac2() -> Outcome {
    const TRIALS: usize = 240;
    let start = Instant::now();
    let results = run_trials(
        TRIALS,
        SEED ^ 2,
        Execution::Parallel,
        |i, rng| -> Result<(bool, f64), String> {
            let t = tol();
            let n = rng.random_range(2..=5);
            let d = rng.random_range(1..=8);
            let psi = random_nonorthogonal_family(rng, n, d, 0.05);
            let alpha = if i % 2 == 0 {
                product_ancilla(rng, &psi)
            } else {
                let e = rng.random_range(1..=8);
                random_family(rng, n, e)
            };
            let verdict = clone_feasible_pure(&psi, &alpha, &t).map_err(|e| format!("trial {i}: {e}"))?;
            let m = supplement_matrix(&psi, &alpha, &t).map_err(|e| e.to_string())?;
            let built = match &verdict {
                Verdict::Feasible(cert) => ancilla_to_clone(&psi, &alpha, cert.residues(), &t),
                Verdict::Infeasible { .. } => {
                    let (nearest, _) = psd_projection(m.entries(), &t).map_err(|e| e.to_string())?;
                    residues_from_matrix(&nearest, &t).and_then(|c| ancilla_to_clone(&psi, &alpha, &c, &t))
                }
            };
            if built.is_ok() != verdict.is_feasible() {
                return Err(format!(
                    "trial {i}: verdict {} but construction ok = {}",
                    verdict.is_feasible(),
                    built.is_ok()
                ));
            }
            let worst = match verdict.certificate() {
                Some(cert) => {
                    let f = cert.ancilla_clone_fidelities().map_err(|e| e.to_string())?;
                    if f.len() != n {
                        return Err(format!("trial {i}: missing ancilla map"));
                    }
                    f.into_iter().fold(1.0f64, f64::min)
                }
                None => 1.0,
            };
            Ok((verdict.is_feasible(), worst))
        },
    );
    let elapsed = start.elapsed().as_secs_f64();
    let mut feasible = 0;
    let mut worst = 1.0f64;
    for r in results {
        let (f, w) = r?;
        feasible += f as usize;
        worst = worst.min(w);
    }
    let detail = format!(
        "{TRIALS} instances ({feasible} feasible), min fidelity 1-{:.1e}, {elapsed:.2}s",
        1.0 - worst
    );
    if worst >= 1.0 - 1e-9 && elapsed < 30.0 && feasible > 0 && feasible < TRIALS {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ac3() -> Outcome {
    const TRIALS: usize = 250;
    let results = run_trials(
        TRIALS,
        SEED ^ 3,
        Execution::Parallel,
        |i, rng| -> Result<(f64, f64, bool), String> {
            let t = tol();
            let n = rng.random_range(1..=6);
            let d = rng.random_range(1..=8);
            let a = random_family(rng, n, d);
            let u = random_unitary(rng, d);
            let b = apply_unitary(&u, &a);
            let link = unitary_linking(&a, &b, &t).map_err(|e| format!("trial {i}: {e}"))?;
            let report = verify_linking(link.matrix(), &a, &b).map_err(|e| e.to_string())?;

            // Replace one member of a fresh rotated copy until the Gram visibly differs.
            let n = rng.random_range(2..=6);
            let d = rng.random_range(2..=8);
            let a = random_family(rng, n, d);
            let mismatched = loop {
                let u = random_unitary(rng, d);
                let mut members = apply_unitary(&u, &a).members().to_vec();
                let k = rng.random_range(0..n);
                members[k] = random_state(rng, d, "x");
                let cand = StateFamily::new(members).unwrap();
                if gram(&a).max_deviation(&gram(&cand)) > 1e-4 {
                    break cand;
                }
            };
            Ok((
                report.unitarity_defect,
                report.max_residual,
                check_mismatch(&a, &mismatched),
            ))
        },
    );
    let (mut defect, mut residual, mut rejected) = (0.0f64, 0.0f64, 0);
    for r in results {
        let (u, res, ok) = r?;
        defect = defect.max(u);
        residual = residual.max(res);
        rejected += ok as usize;
    }
    let detail = format!(
        "{TRIALS} pairs, max defect {defect:.1e}, max residual {residual:.1e}, GramMismatch {rejected}/{TRIALS}"
    );
    if defect <= 1e-9 && residual <= 1e-8 && rejected == TRIALS {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn check_mismatch(a: &StateFamily, b: &StateFamily) -> bool {
    matches!(unitary_linking(a, b, &tol()), Err(Error::GramMismatch { .. }))
}

fn ac4() -> Outcome {
    const TRIALS: usize = 1000;
    let results = run_trials(TRIALS, SEED ^ 4, Execution::Parallel, |i, rng| -> Result<f64, String> {
        let t = tol();
        let d = rng.random_range(2..=8);
        let psi = random_nonorthogonal_family(rng, 2, d, 1e-3);
        let overlap = psi.member(0).inner(psi.member(1)).norm();
        let e = rng.random_range(1..=4);
        let a = random_state(rng, e, "a");
        let alpha = StateFamily::new(vec![a.clone(), a]).unwrap();
        match clone_feasible_pure(&psi, &alpha, &t).map_err(|e| e.to_string())? {
            Verdict::Feasible(_) => Err(format!("trial {i}: constant ancilla reported feasible")),
            Verdict::Infeasible { min_eigenvalue } => Ok((min_eigenvalue - (1.0 - 1.0 / overlap)).abs()),
        }
    });
    let mut worst = 0.0f64;
    for r in results {
        worst = worst.max(r?);
    }
    let detail = format!("{TRIALS}/{TRIALS} infeasible, max witness error {worst:.1e}");
    if worst <= 1e-8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ac5() -> Outcome {
    const TRIALS: usize = 100;
    let results = run_trials(
        TRIALS,
        SEED ^ 5,
        Execution::Parallel,
        |i, rng| -> Result<(f64, f64), String> {
            let t = tol();
            let n = rng.random_range(1..=4);
            let d = rng.random_range(1..=4);
            let d_env = rng.random_range(d..=8);
            let psi = random_nonorthogonal_family(rng, n, d, 0.05);
            let w = random_unitary(rng, d_env);
            let deleter = swap_deleter(d, d_env)
                .and_then(|s| s.twisted(&w))
                .map_err(|e| e.to_string())?;
            let analysis = analyze_deleter(&deleter, &psi, &t).map_err(|e| format!("trial {i}: {e}"))?;
            let f = analysis.resurrection_fidelities(&psi).map_err(|e| e.to_string())?;
            Ok((analysis.gram_deviation(), f.into_iter().fold(1.0, f64::min)))
        },
    );
    let (mut dev, mut fid) = (0.0f64, 1.0f64);
    for r in results {
        let (g, f) = r?;
        dev = dev.max(g);
        fid = fid.min(f);
    }
    // The binary must report the same thing through its exit code.
    let psi = fixture("zero_plus.json");
    let cli_codes: Vec<i32> = ["1", "2", "3"]
        .iter()
        .map(|s| qclone(&["delete-check", psi.to_str().unwrap(), "--twist", s]).0)
        .collect();
    let detail = format!(
        "{TRIALS} deleters, max Gram deviation {dev:.1e}, min resurrection fidelity 1-{:.1e}, cli exits {cli_codes:?}",
        1.0 - fid
    );
    if dev <= 1e-8 && fid >= 1.0 - 1e-9 && cli_codes.iter().all(|&c| c == 0) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ac6() -> Outcome {
    const TRIALS: usize = 1000;
    let results = run_trials(
        TRIALS,
        SEED ^ 6,
        Execution::Parallel,
        |i, rng| -> Result<bool, String> {
            let t = tol();
            let d = rng.random_range(1..=8);
            let e = rng.random_range(1..=8);
            let psi = random_nonorthogonal_family(rng, 2, d, 0.05);
            let alpha = random_family(rng, 2, e);
            let oracle = two_state_oracle(&psi, &alpha, &t).map_err(|e| e.to_string())?;
            let verdict = clone_feasible_pure(&psi, &alpha, &t)
                .map_err(|e| e.to_string())?
                .is_feasible();
            if oracle != verdict {
                return Err(format!("trial {i}: oracle {oracle}, solver {verdict}"));
            }
            Ok(verdict)
        },
    );
    let mut feasible = 0;
    for r in results {
        feasible += r? as usize;
    }
    Ok(format!("{TRIALS}/{TRIALS} agree ({feasible} feasible)"))
}

fn ac7() -> Outcome {
    let t = tol();
    let zero_plus = StateFamily::new(vec![PureState::basis(2, 0), PureState::plus()]).unwrap();
    let projectors: Vec<MixedState> = zero_plus.iter().map(MixedState::from_pure).collect();
    let self_ok = clone_feasible_mixed(&zero_plus, &projectors, &t)
        .map_err(|e| e.to_string())?
        .is_feasible();
    let mixed = vec![MixedState::maximally_mixed(2), MixedState::maximally_mixed(2)];
    let mixed_verdict = clone_feasible_mixed(&zero_plus, &mixed, &t).map_err(|e| e.to_string())?;

    const TRIALS: usize = 100;
    let results = run_trials(
        TRIALS,
        SEED ^ 7,
        Execution::Parallel,
        |i, rng| -> Result<(bool, bool), String> {
            let t = tol();
            let n = rng.random_range(1..=4);
            let d = rng.random_range(1..=6);
            let psi = random_nonorthogonal_family(rng, n, d, 0.05);
            let alpha = if i % 2 == 0 {
                product_ancilla(rng, &psi)
            } else {
                let e = rng.random_range(1..=6);
                random_family(rng, n, e)
            };
            let rhos: Vec<MixedState> = alpha.iter().map(MixedState::from_pure).collect();
            let pure = clone_feasible_pure(&psi, &alpha, &t).map_err(|e| e.to_string())?;
            let via_mixed = clone_feasible_mixed(&psi, &rhos, &t).map_err(|e| e.to_string())?;
            let same_witness = (pure.min_eigenvalue() - via_mixed.min_eigenvalue()).abs() <= 1e-9;
            if pure.is_feasible() != via_mixed.is_feasible() {
                return Err(format!(
                    "trial {i}: pure {} vs mixed {}",
                    pure.is_feasible(),
                    via_mixed.is_feasible()
                ));
            }
            Ok((pure.is_feasible(), same_witness))
        },
    );
    let (mut feasible, mut witnesses) = (0, 0);
    for r in results {
        let (f, w) = r?;
        feasible += f as usize;
        witnesses += w as usize;
    }
    let detail = format!(
        "projector ancilla feasible={self_ok}, I/2 ancilla feasible={} (min eig {:.4}), rank-1 agreement {TRIALS}/{TRIALS} ({feasible} feasible, witnesses equal {witnesses}/{TRIALS})",
        mixed_verdict.is_feasible(),
        mixed_verdict.min_eigenvalue()
    );
    if self_ok && !mixed_verdict.is_feasible() && witnesses == TRIALS {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ac8() -> Outcome {
    const TRIALS: usize = 200;
    let results = run_trials(
        TRIALS,
        SEED ^ 8,
        Execution::Parallel,
        |i, rng| -> Result<bool, String> {
            let t = tol();
            let n = rng.random_range(2..=5);
            let d = rng.random_range(1..=6);
            let psi = random_nonorthogonal_family(rng, n, d, 0.05);
            let alpha = if i % 2 == 0 {
                product_ancilla(rng, &psi)
            } else {
                let e = rng.random_range(1..=6);
                random_family(rng, n, e)
            };
            let base = clone_feasible_pure(&psi, &alpha, &t)
                .map_err(|e| e.to_string())?
                .is_feasible();
            let u = random_unitary(rng, psi.dim());
            let psi2 = random_phases(rng, &apply_unitary(&u, &psi));
            let u = random_unitary(rng, alpha.dim());
            let alpha2 = random_phases(rng, &apply_unitary(&u, &alpha));
            let moved = clone_feasible_pure(&psi2, &alpha2, &t)
                .map_err(|e| e.to_string())?
                .is_feasible();
            if base != moved {
                return Err(format!("trial {i}: verdict changed from {base} to {moved}"));
            }
            Ok(base)
        },
    );
    let mut feasible = 0;
    for r in results {
        feasible += r? as usize;
    }
    Ok(format!("{TRIALS}/{TRIALS} unchanged ({feasible} feasible)"))
}

fn ac9() -> Outcome {
    const TRIALS: usize = 200;
    let opts = SolveOptions::default();
    let results = run_trials(
        TRIALS,
        SEED ^ 9,
        Execution::Parallel,
        |i, rng| -> Result<bool, String> {
            let t = tol();
            let n = rng.random_range(1..=5);
            let d = rng.random_range(1..=8);
            let psi = random_nonorthogonal_family(rng, n, d, 0.05);
            let e = rng.random_range(1..=8);
            let alpha = random_family(rng, n, e);
            let m = supplement_matrix(&psi, &alpha, &t)
                .map_err(|e| e.to_string())?
                .entries()
                .clone();
            let expected = is_psd(&m, &t).map_err(|e| e.to_string())?.is_psd;
            let problem = CompletionProblem::fully_fixed(m).map_err(|e| e.to_string())?;
            let report = solve(&problem, &opts, &t).map_err(|e| e.to_string())?;
            let got = match report.verdict {
                SolveVerdict::Feasible => true,
                SolveVerdict::Infeasible => false,
                SolveVerdict::Undecided => return Err(format!("trial {i}: undecided on a fully fixed problem")),
            };
            if got != expected {
                return Err(format!("trial {i}: solve {got}, is_psd {expected}"));
            }
            Ok(got)
        },
    );
    let mut feasible = 0;
    for r in results {
        feasible += r? as usize;
    }

    // The three-state fixture, plus re-phased and rotated copies of it.
    const RUNS: usize = 50;
    let runs = run_trials(
        RUNS,
        SEED ^ 90,
        Execution::Parallel,
        |i, rng| -> Result<(SolveVerdict, usize), String> {
            let t = tol();
            let (mut psi, mut alpha) = three_state_families();
            if i > 0 {
                let u = random_unitary(rng, 2);
                psi = random_phases(rng, &apply_unitary(&u, &psi));
                let u = random_unitary(rng, 2);
                alpha = random_phases(rng, &apply_unitary(&u, &alpha));
            }
            match clone_problem(&psi, &alpha, &t).map_err(|e| e.to_string())? {
                TransformProblem::Problem(p) => {
                    let r = solve(&p, &opts, &t).map_err(|e| e.to_string())?;
                    Ok((r.verdict, r.iterations))
                }
                TransformProblem::Contradiction(c) => Err(format!("run {i}: unexpected contradiction {c:?}")),
            }
        },
    );
    let (mut ok, mut undecided, mut max_iter) = (0, 0, 0);
    for r in runs {
        let (v, it) = r?;
        ok += (v == SolveVerdict::Feasible) as usize;
        undecided += (v == SolveVerdict::Undecided) as usize;
        max_iter = max_iter.max(it);
    }
    let detail = format!(
        "fully fixed {TRIALS}/{TRIALS} match ({feasible} feasible); three-state clone problem feasible {ok}/{RUNS}, undecided {undecided}, max iterations {max_iter}"
    );
    if ok == RUNS && undecided == 0 && max_iter <= opts.max_iter {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("three-state fixture", ac1),
        ("ancilla equivalence", ac2),
        ("constructive linking", ac3),
        ("constant ancilla no-cloning", ac4),
        ("no-deleting", ac5),
        ("two-state oracle", ac6),
        ("mixed ancillas", ac7),
        ("verdict invariance", ac8),
        ("completion consistency", ac9),
    ];
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS  criterion {} {name}: {detail}", k + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL  criterion {} {name}: {detail}", k + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
