//! Benchmark problems and the Monte-Carlo policy comparison harness.

mod models;

use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use models::*;

use crate::costs::{CostModel, Objective, Sense};
use crate::entropy::dot;
use crate::error::{Error, Result};
use crate::inference::{pointwise_smoother_entropy, viterbi, Estimate};
use crate::model::PomdpModel;
use crate::simulate::{run_seed, sample_trajectory, Policy, TrajectoryRecord};
use crate::solver::{solve, BasePointScheme, PruneMode, SolverOptions, SolverStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Benchmark {
    Cloud,
    Navigation,
}

impl FromStr for Benchmark {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cloud" => Ok(Benchmark::Cloud),
            "navigation" | "nav" | "nav-grid" => Ok(Benchmark::Navigation),
            other => Err(Error::InvalidArgument(format!("unknown benchmark '{other}' (expected cloud or navigation)"))),
        }
    }
}

impl Benchmark {
    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Cloud => "cloud",
            Benchmark::Navigation => "navigation",
        }
    }

    pub fn build(self) -> (PomdpModel, CostModel) {
        match self {
            Benchmark::Cloud => build_cloud_model(),
            Benchmark::Navigation => build_navigation_model(),
        }
    }

    /// Whether low or high smoother entropy is the goal.
    pub fn sense(self) -> Sense {
        match self {
            Benchmark::Cloud => Sense::Obfuscation,
            Benchmark::Navigation => Sense::Estimation,
        }
    }

    /// The policies compared on this benchmark.
    pub fn objectives(self) -> Vec<Objective> {
        match self {
            Benchmark::Cloud => {
                vec![Objective::ActiveObfuscation, Objective::MinDirectedInfo, Objective::StandardPomdp]
            }
            Benchmark::Navigation => vec![
                Objective::ActiveEstimation,
                Objective::MinMarginalEntropy,
                Objective::MinTerminalEntropy,
                Objective::StandardPomdp,
            ],
        }
    }

    /// Solver settings that finish in seconds on one core. Exact pruning at
    /// the default margin grows without bound on both problems, so the
    /// cloud problem prunes with a coarser margin and the 12-state problem
    /// backs up at sampled reachable beliefs.
    pub fn solver_options(self) -> SolverOptions {
        match self {
            Benchmark::Cloud => SolverOptions { tolerance: 1e-4, ..SolverOptions::default() },
            Benchmark::Navigation => SolverOptions {
                base_points: BasePointScheme::Vertex,
                prune: PruneMode::PointBased,
                point_samples: 200,
                point_rounds: 2,
                ..SolverOptions::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSource {
    Builtin(Benchmark),
    Files { model: PathBuf, cost: PathBuf },
}

impl ModelSource {
    pub fn load(&self) -> Result<(PomdpModel, CostModel)> {
        match self {
            ModelSource::Builtin(b) => Ok(b.build()),
            ModelSource::Files { model, cost } => {
                let m = PomdpModel::load(model)?;
                let c = CostModel::load(cost, &m)?;
                Ok((m, c))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source: ModelSource,
    pub objectives: Vec<Objective>,
    pub runs: usize,
    pub seed: u64,
    pub lambda: f64,
    pub solver: SolverOptions,
    /// Sign for the entropy term of objectives without their own sense.
    pub sense: Sense,
    /// Keep per-run trajectories in the report.
    #[serde(default)]
    pub trace: bool,
}

impl ExperimentConfig {
    pub fn for_benchmark(benchmark: Benchmark, runs: usize, seed: u64) -> Self {
        Self {
            source: ModelSource::Builtin(benchmark),
            objectives: benchmark.objectives(),
            runs,
            seed,
            lambda: 1.0,
            solver: benchmark.solver_options(),
            sense: benchmark.sense(),
            trace: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::InvalidArgument("runs must be at least 1".into()));
        }
        if self.objectives.is_empty() {
            return Err(Error::InvalidArgument("at least one objective is required".into()));
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::InvalidArgument(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        Ok(())
    }
}

/// Outcome of one simulated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub run: u64,
    /// `c_T(x_T)`, without the trade-off coefficient.
    pub terminal_cost: f64,
    /// `sum_k c_k(x_k, u_k)`, without the trade-off coefficient.
    pub running_cost: f64,
    pub smoother_entropy: f64,
    pub map_error: bool,
    pub map_estimate: Vec<usize>,
    pub record: TrajectoryRecord,
}

/// Aggregated Monte-Carlo results for one policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyEvaluation {
    pub runs: usize,
    pub terminal_cost: Estimate,
    pub running_cost: Estimate,
    pub smoother_entropy: Estimate,
    pub map_error: Estimate,
}

pub fn simulate_run(
    model: &PomdpModel,
    cost: &CostModel,
    policy: &dyn Policy,
    seed: u64,
    run: u64,
) -> Result<RunOutcome> {
    let record = sample_trajectory(model, policy, run_seed(seed, run))?;
    let t = model.horizon();
    let terminal_cost = cost.terminal_cost[record.states[t - 1]];
    let running_cost =
        record.controls.iter().enumerate().map(|(k, &u)| cost.stage_cost_at(k + 1, record.states[k], u)).sum();
    let smoother_entropy = pointwise_smoother_entropy(model, &record.measurements, &record.controls)?;
    let map_estimate = viterbi(model, &record.measurements, &record.controls)?;
    let map_error = map_estimate != record.states;
    Ok(RunOutcome { run, terminal_cost, running_cost, smoother_entropy, map_error, map_estimate, record })
}

/// Simulates `runs` closed-loop trajectories (run `r` uses seed `seed ^ r`).
pub fn simulate_policy(
    model: &PomdpModel,
    cost: &CostModel,
    policy: &dyn Policy,
    runs: usize,
    seed: u64,
) -> Result<Vec<RunOutcome>> {
    (0..runs as u64).into_par_iter().map(|r| simulate_run(model, cost, policy, seed, r)).collect()
}

pub fn aggregate(outcomes: &[RunOutcome]) -> PolicyEvaluation {
    let col = |f: &dyn Fn(&RunOutcome) -> f64| -> Estimate {
        Estimate::from_samples(&outcomes.iter().map(f).collect::<Vec<_>>())
    };
    PolicyEvaluation {
        runs: outcomes.len(),
        terminal_cost: col(&|o| o.terminal_cost),
        running_cost: col(&|o| o.running_cost),
        smoother_entropy: col(&|o| o.smoother_entropy),
        map_error: col(&|o| if o.map_error { 1.0 } else { 0.0 }),
    }
}

pub fn evaluate_policy(
    model: &PomdpModel,
    cost: &CostModel,
    policy: &dyn Policy,
    runs: usize,
    seed: u64,
) -> Result<PolicyEvaluation> {
    if runs == 0 {
        return Err(Error::InvalidArgument("runs must be at least 1".into()));
    }
    Ok(aggregate(&simulate_policy(model, cost, policy, runs, seed)?))
}

/// One line of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRow {
    pub policy: Objective,
    pub terminal_cost: f64,
    pub running_cost: f64,
    pub smoother_entropy: f64,
    pub smoother_entropy_stderr: f64,
    /// `lambda * (running + terminal cost) + sign * smoother entropy`.
    pub total_cost: f64,
    pub map_error_prob: f64,
    pub map_error_stderr: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverStats>,
}

impl PolicyRow {
    pub fn from_evaluation(policy: Objective, eval: &PolicyEvaluation, lambda: f64, sense: Sense) -> Self {
        let sign = policy.sense().unwrap_or(sense).entropy_sign();
        Self {
            policy,
            terminal_cost: eval.terminal_cost.mean,
            running_cost: eval.running_cost.mean,
            smoother_entropy: eval.smoother_entropy.mean,
            smoother_entropy_stderr: eval.smoother_entropy.stderr,
            total_cost: lambda * (eval.running_cost.mean + eval.terminal_cost.mean) + sign * eval.smoother_entropy.mean,
            map_error_prob: eval.map_error.mean,
            map_error_stderr: eval.map_error.stderr,
            error: None,
            solver: None,
        }
    }

    fn failed(policy: Objective, err: &Error) -> Self {
        Self {
            policy,
            terminal_cost: f64::NAN,
            running_cost: f64::NAN,
            smoother_entropy: f64::NAN,
            smoother_entropy_stderr: f64::NAN,
            total_cost: f64::NAN,
            map_error_prob: f64::NAN,
            map_error_stderr: f64::NAN,
            error: Some(err.to_string()),
            solver: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceLine {
    pub policy: Objective,
    #[serde(flatten)]
    pub outcome: RunOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub rows: Vec<PolicyRow>,
    #[serde(skip)]
    pub traces: Vec<TraceLine>,
}

/// Solves and simulates every configured objective. A failure to solve
/// one objective is recorded in its row and does not stop the others.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let (model, base_cost) = config.source.load()?;
    let mut rows = Vec::with_capacity(config.objectives.len());
    let mut traces = Vec::new();
    for &objective in &config.objectives {
        let cost = base_cost.with_objective(objective).with_lambda(config.lambda);
        let policy = match solve(&model, &cost, &config.solver) {
            Ok(p) => p,
            Err(e) => {
                rows.push(PolicyRow::failed(objective, &e));
                continue;
            }
        };
        let outcomes = simulate_policy(&model, &cost, &policy, config.runs, config.seed)?;
        let mut row = PolicyRow::from_evaluation(objective, &aggregate(&outcomes), config.lambda, config.sense);
        row.solver = Some(policy.stats.clone());
        rows.push(row);
        if config.trace {
            traces.extend(outcomes.into_iter().map(|outcome| TraceLine { policy: objective, outcome }));
        }
    }
    Ok(ExperimentReport { config: config.clone(), rows, traces })
}

pub const CSV_HEADER: [&str; 7] = [
    "policy",
    "terminal_cost",
    "smoother_entropy",
    "smoother_entropy_stderr",
    "total_cost",
    "map_error_prob",
    "map_error_stderr",
];

/// Formats with six significant digits, `.` as decimal separator.
pub fn format_sig6(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..=15).contains(&mag) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - mag).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // rounding can carry into a new digit (9.999995 -> 10.00000)
    let s = if s.trim_start_matches('-').split('.').next().map_or(0, |i| i.trim_start_matches('0').len()) > 6 {
        format!("{x:.0}")
    } else {
        s
    };
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn write_csv<W: Write>(rows: &[PolicyRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.write_record([
            r.policy.name().to_string(),
            format_sig6(r.terminal_cost),
            format_sig6(r.smoother_entropy),
            format_sig6(r.smoother_entropy_stderr),
            format_sig6(r.total_cost),
            format_sig6(r.map_error_prob),
            format_sig6(r.map_error_stderr),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace<W: Write>(traces: &[TraceLine], mut out: W) -> Result<()> {
    for t in traces {
        serde_json::to_writer(&mut out, t)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Expected `c_T` under a belief; handy for sanity checks of policies.
pub fn expected_terminal_cost(cost: &CostModel, belief: &[f64]) -> f64 {
    dot(belief, &cost.terminal_cost)
}
