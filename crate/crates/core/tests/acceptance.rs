//! Acceptance gate. Runs every criterion at its stated tolerance, prints one
//! PASS/FAIL line per criterion and exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use smoother_entropy::costs::Objective;
use smoother_entropy::experiments::{run_experiment, Benchmark, ExperimentConfig, PolicyRow};
use smoother_entropy::verify::{
    bound_chain_suite, grid_oracle_suite, identity_suite, lattice_refinement_suite, pwlc_bound_suite, structure_suite,
    viterbi_suite, CheckOutcome, DEFAULT_SEED,
};

struct Verdict {
    passed: bool,
    detail: String,
}

fn from_checks(checks: &[CheckOutcome]) -> Verdict {
    Verdict {
        passed: checks.iter().all(|c| c.passed),
        detail: checks.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" | "),
    }
}

fn row(rows: &[PolicyRow], objective: Objective) -> &PolicyRow {
    rows.iter().find(|r| r.policy == objective).expect("row present")
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

/// Collects named sub-checks so the printed line says which part failed.
#[derive(Default)]
struct Conditions(Vec<(String, bool)>);

impl Conditions {
    fn check(&mut self, name: impl Into<String>, ok: bool) {
        self.0.push((name.into(), ok));
    }

    fn verdict(self, summary: String) -> Verdict {
        let failed: Vec<&str> = self.0.iter().filter(|(_, ok)| !ok).map(|(n, _)| n.as_str()).collect();
        let detail = if failed.is_empty() { summary } else { format!("{summary}; failed: {}", failed.join(", ")) };
        Verdict { passed: failed.is_empty(), detail }
    }
}

fn describe(rows: &[PolicyRow]) -> String {
    rows.iter()
        .map(|r| {
            format!(
                "{} term {:.4} SE {:.4}±{:.4} MAP {:.4}±{:.4}",
                r.policy,
                r.terminal_cost,
                r.smoother_entropy,
                r.smoother_entropy_stderr,
                r.map_error_prob,
                r.map_error_stderr
            )
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn criterion_identities() -> Verdict {
    from_checks(&[identity_suite(100, DEFAULT_SEED).expect("identity suite runs")])
}

fn criterion_structure() -> Verdict {
    from_checks(&[structure_suite(1000, DEFAULT_SEED)])
}

fn criterion_pwlc_bound() -> Verdict {
    from_checks(&[
        pwlc_bound_suite(10_000).expect("bound suite runs"),
        lattice_refinement_suite(10_000).expect("refinement suite runs"),
    ])
}

fn criterion_grid_oracle() -> Verdict {
    from_checks(&[grid_oracle_suite(500, DEFAULT_SEED).expect("oracle suite runs")])
}

fn criterion_table_one() -> Verdict {
    let report = run_experiment(&ExperimentConfig::for_benchmark(Benchmark::Cloud, 1000, DEFAULT_SEED))
        .expect("cloud experiment runs");
    let rows = &report.rows;
    let obf = row(rows, Objective::ActiveObfuscation);
    let dir = row(rows, Objective::MinDirectedInfo);
    let std = row(rows, Objective::StandardPomdp);
    let mut c = Conditions::default();
    c.check("SE(ActiveObf) > SE(MinDirInfo)", obf.smoother_entropy > dir.smoother_entropy);
    c.check("SE(MinDirInfo) >= SE(StandardPomdp)", dir.smoother_entropy >= std.smoother_entropy);
    c.check("MAP(ActiveObf) > MAP(MinDirInfo)", obf.map_error_prob > dir.map_error_prob);
    c.check("MAP(MinDirInfo) >= MAP(StandardPomdp)", dir.map_error_prob >= std.map_error_prob);
    c.check("SE(ActiveObf) within 0.7 of 6.3797", within(obf.smoother_entropy, 6.3797, 0.7));
    c.check("MAP(ActiveObf) within 0.05 of 0.9400", within(obf.map_error_prob, 0.94, 0.05));
    c.check("SE(MinDirInfo) within 0.7 of 4.1378", within(dir.smoother_entropy, 4.1378, 0.7));
    c.verdict(describe(rows))
}

fn criterion_table_two() -> Verdict {
    let report = run_experiment(&ExperimentConfig::for_benchmark(Benchmark::Navigation, 1000, DEFAULT_SEED))
        .expect("navigation experiment runs");
    let rows = &report.rows;
    let est = row(rows, Objective::ActiveEstimation);
    let std = row(rows, Objective::StandardPomdp);
    let mut c = Conditions::default();
    for r in rows.iter().filter(|r| r.policy != Objective::ActiveEstimation) {
        c.check(format!("SE(ActiveEst) < SE({})", r.policy), est.smoother_entropy < r.smoother_entropy);
        c.check(format!("MAP(ActiveEst) < MAP({})", r.policy), est.map_error_prob < r.map_error_prob);
    }
    for r in rows.iter().filter(|r| r.policy != Objective::StandardPomdp) {
        c.check(format!("term(StandardPomdp) <= term({})", r.policy), std.terminal_cost <= r.terminal_cost);
    }
    c.check("SE(ActiveEst) within 0.4 of 1.1706", within(est.smoother_entropy, 1.1706, 0.4));
    c.check("MAP(ActiveEst) within 0.08 of 0.3860", within(est.map_error_prob, 0.386, 0.08));
    c.check("term(StandardPomdp) <= 0.05", std.terminal_cost <= 0.05);
    c.verdict(describe(rows))
}

fn criterion_viterbi() -> Verdict {
    from_checks(&[viterbi_suite(200, DEFAULT_SEED).expect("viterbi suite runs")])
}

fn criterion_bound_chain() -> Verdict {
    from_checks(&[bound_chain_suite(100, DEFAULT_SEED).expect("bound chain suite runs")])
}

/// Name, time budget and check.
type Criterion = (&'static str, Option<Duration>, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 identities", Some(Duration::from_secs(30)), criterion_identities),
        ("2 structure", Some(Duration::from_secs(10)), criterion_structure),
        ("3 pwlc bound", Some(Duration::from_secs(60)), criterion_pwlc_bound),
        ("4 solver oracle", Some(Duration::from_secs(120)), criterion_grid_oracle),
        ("5 cloud table", Some(Duration::from_secs(600)), criterion_table_one),
        ("6 navigation table", Some(Duration::from_secs(900)), criterion_table_two),
        ("7 viterbi", Some(Duration::from_secs(30)), criterion_viterbi),
        ("8 bound chain", None, criterion_bound_chain),
    ];
    let mut failures = 0;
    for (name, budget, run) in criteria {
        let started = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| Verdict {
            passed: false,
            detail: format!(
                "panicked: {}",
                e.downcast_ref::<String>().map(String::as_str).or(e.downcast_ref::<&str>().copied()).unwrap_or("?")
            ),
        });
        let elapsed = started.elapsed();
        let in_time = budget.is_none_or(|b| elapsed <= b);
        let passed = verdict.passed && in_time;
        if !passed {
            failures += 1;
        }
        let budget_note = budget.map(|b| format!(" (budget {}s)", b.as_secs())).unwrap_or_default();
        println!(
            "acceptance {name}: {} [{:.1}s{budget_note}{}] {}",
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            if in_time { "" } else { ", over budget" },
            verdict.detail
        );
    }
    println!("acceptance summary: {} of 8 criteria passed", 8 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
