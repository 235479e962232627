//! Acceptance criteria 1-11. Each criterion prints one PASS/FAIL line with
//! its measured values and runtime; the process exits nonzero if any fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use conewave::analysis::suite::heat_tail_fractions;
use conewave::analysis::{run_suite, Suite, SuiteConfig, SuiteReport};
use conewave::sampling::{kernel_reflection_identity_check, mesh_time, Purpose, RngStream};
use conewave::solver::CellRule;

const SEED: u64 = 11;

struct Outcome {
    passed: bool,
    summary: String,
}

fn from_report(r: &SuiteReport) -> Outcome {
    let worst: Vec<String> = r
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{}={:.3e} (limit {:?})", c.name, c.value, c.threshold))
        .collect();
    Outcome {
        passed: r.passed,
        summary: if worst.is_empty() {
            format!("{} checks", r.checks.len())
        } else {
            format!("failed: {}", worst.join(", "))
        },
    }
}

fn suite(s: Suite) -> Outcome {
    from_report(&run_suite(s, &SuiteConfig::with_seed(SEED)).expect("suite runs"))
}

fn c4_chain_invariance() -> Outcome {
    let cfg = SuiteConfig::with_seed(SEED);
    let ok = run_suite(Suite::ChainInvariance, &cfg).unwrap();
    let corrupt = run_suite(
        Suite::ChainInvariance,
        &SuiteConfig {
            corrupt: Some(CellRule::IdentityStep),
            ..cfg
        },
    )
    .unwrap();
    Outcome {
        passed: ok.passed && !corrupt.passed,
        summary: format!(
            "reflection {}, identity-step control {}",
            verdict(ok.passed),
            if corrupt.passed { "accepted" } else { "rejected" }
        ),
    }
}

fn c5_translation() -> Outcome {
    let cfg = SuiteConfig::with_seed(SEED);
    let ok = run_suite(Suite::Translation, &cfg).unwrap();
    let fixed = run_suite(
        Suite::Translation,
        &SuiteConfig {
            fixed_junction: true,
            ..cfg
        },
    )
    .unwrap();
    Outcome {
        passed: ok.passed && !fixed.passed,
        summary: format!(
            "stationary {}, fixed-junction control {}",
            verdict(ok.passed),
            if fixed.passed { "accepted" } else { "rejected" }
        ),
    }
}

fn c6_kernel_identity() -> Outcome {
    let mut rng = RngStream::with_purpose(SEED, Purpose::Diagnostics, 601);
    let e1 = kernel_reflection_identity_check(0.05, 1, 10_000, None, &mut rng).unwrap();
    let e2 = kernel_reflection_identity_check(0.1, 2, 1_000, Some(60), &mut rng).unwrap();
    Outcome {
        passed: e1 <= 1e-7 && e2 <= 1e-6,
        summary: format!("d=1 max rel err {e1:.2e} (<= 1e-7), d=2 {e2:.2e} (<= 1e-6)"),
    }
}

fn c7_heat_tail() -> Outcome {
    let t = mesh_time(6);
    let f = heat_tail_fractions(SEED, 1, t, 1_000_000, &[4.0, 5.0, 6.0]).unwrap();
    let bound = 10.0 * t.powf(25.0 / 8.0);
    let monotone = f.windows(2).all(|w| w[1] <= w[0]);
    Outcome {
        passed: f[1] <= bound && monotone,
        summary: format!("fractions A=4,5,6: {f:?}; A=5 bound {bound:.3e}; non-increasing {monotone}"),
    }
}

fn c11_reproducibility() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_conewave");
    let dir = tempfile::tempdir().unwrap();
    let runs: [(&str, &[&str]); 3] = [
        ("sample", &["sample", "--d", "1", "--mesh-exp", "6", "--replicas", "16", "--seed", "7"]),
        ("sample-d2", &["sample", "--d", "2", "--mesh-exp", "5", "--replicas", "8", "--seed", "7"]),
        (
            "verify",
            &["verify", "chain-invariance", "--mesh-exp", "6", "--replicas", "200", "--seed", "7"],
        ),
    ];
    let mut mismatches = Vec::new();
    for (name, args) in runs {
        let mut trees = Vec::new();
        for threads in ["1", "8"] {
            let out = dir.path().join(format!("{name}-{threads}"));
            let status = Command::new(bin)
                .args(args)
                .args(["--threads", threads, "--out"])
                .arg(&out)
                .env_remove("CONEWAVE_SEED")
                .stderr(Stdio::null())
                .status()
                .unwrap();
            if !status.success() {
                mismatches.push(format!("{name} --threads {threads} exited {status}"));
            }
            trees.push(snapshot(&out));
        }
        if trees[0] != trees[1] || trees[0].is_empty() {
            mismatches.push(format!("{name} outputs differ"));
        }
    }
    Outcome {
        passed: mismatches.is_empty(),
        summary: if mismatches.is_empty() {
            "sample and verify outputs bitwise equal for --threads 1 and 8".into()
        } else {
            mismatches.join("; ")
        },
    }
}

/// Every file except the manifest, plus the manifest's output digests.
fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let e = e.unwrap();
        let name = e.file_name().into_string().unwrap();
        let bytes = std::fs::read(e.path()).unwrap();
        if name == "manifest.json" {
            let m: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
            files.insert(name, serde_json::to_vec(&(&m["outputs"], &m["params"])).unwrap());
        } else {
            files.insert(name, bytes);
        }
    }
    files
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn main() {
    type Criterion = (u32, &'static str, Duration, Box<dyn Fn() -> Outcome>);
    let criteria: Vec<Criterion> = vec![
        (1, "reflection identities", Duration::from_secs(5), Box::new(|| suite(Suite::Identities))),
        (2, "conservation and sphere preservation", Duration::from_secs(30), Box::new(|| suite(Suite::Conservation))),
        (3, "d=1 oracle equivalence", Duration::from_secs(10), Box::new(|| suite(Suite::OracleD1))),
        (4, "heat-chain invariance", Duration::from_secs(60), Box::new(c4_chain_invariance)),
        (5, "translation invariance", Duration::from_secs(60), Box::new(c5_translation)),
        (6, "kernel reflection identity", Duration::from_secs(30), Box::new(c6_kernel_identity)),
        (7, "heat-kernel tail", Duration::from_secs(30), Box::new(c7_heat_tail)),
        (8, "modulus tail envelope", Duration::from_secs(300), Box::new(|| suite(Suite::Modulus))),
        (9, "convergence", Duration::from_secs(300), Box::new(|| suite(Suite::Converge))),
        (10, "perturbation stability", Duration::from_secs(60), Box::new(|| suite(Suite::Perturb))),
        (11, "reproducibility across thread counts", Duration::from_secs(60), Box::new(c11_reproducibility)),
    ];
    let mut failed = Vec::new();
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let ok = outcome.passed && elapsed < budget;
        println!(
            "{} criterion {id:>2} {name}: {} [{:.2}s / {}s]",
            verdict(ok),
            outcome.summary,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
        if !ok {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
