//! `sment`: solve, simulate, evaluate and verify smoother-entropy POMDP policies.
//!
//! Exit codes: 0 success, 1 usage, 2 validation or IO, 3 solver, 4 failed
//! verification checks. Parallel sections honour `RAYON_NUM_THREADS`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use smoother_entropy::experiments::{
    aggregate, run_experiment, simulate_policy, write_csv, write_trace, Benchmark, ExperimentConfig, ModelSource,
    PolicyRow, TraceLine,
};
use smoother_entropy::solver::{BasePointScheme, PruneMode};
use smoother_entropy::verify::{run_scope, Scope, DEFAULT_SEED};
use smoother_entropy::{solve, CostModel, Error, Objective, PomdpModel, Sense, SolvedPolicy, SolverOptions};

#[derive(Parser, Debug)]
#[command(name = "sment", version, about = "Active trajectory estimation and obfuscation with smoother-entropy costs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one objective and write the policy file; solver stats go to stdout.
    Solve(SolveArgs),
    /// Sample closed-loop trajectories under a policy file (JSON lines).
    Simulate(RunArgs),
    /// Monte-Carlo report for a policy file.
    Evaluate(EvaluateArgs),
    /// Run the randomised property suites.
    Verify(VerifyArgs),
    /// Solve and evaluate every policy of a builtin benchmark.
    Reproduce(ReproduceArgs),
}

#[derive(Args, Debug)]
struct SourceArgs {
    /// Model JSON file.
    #[arg(long, requires = "cost", conflicts_with = "benchmark")]
    model: Option<PathBuf>,
    /// Cost JSON file.
    #[arg(long, requires = "model")]
    cost: Option<PathBuf>,
    /// Builtin model instead of files: cloud or navigation.
    #[arg(long)]
    benchmark: Option<Benchmark>,
}

impl SourceArgs {
    fn source(&self) -> Result<(ModelSource, Option<Benchmark>), Failure> {
        match (&self.model, &self.cost, self.benchmark) {
            (Some(m), Some(c), None) => {
                require_file(m)?;
                require_file(c)?;
                Ok((ModelSource::Files { model: m.clone(), cost: c.clone() }, None))
            }
            (None, None, Some(b)) => Ok((ModelSource::Builtin(b), Some(b))),
            _ => Err(Failure::usage("give either --model and --cost, or --benchmark")),
        }
    }

    fn load(&self) -> Result<(PomdpModel, CostModel, Option<Benchmark>), Failure> {
        let (source, benchmark) = self.source()?;
        let (m, c) = source.load()?;
        Ok((m, c, benchmark))
    }
}

#[derive(Args, Debug)]
struct SolverArgs {
    /// vertex or lattice:m.
    #[arg(long)]
    base_points: Option<BasePointScheme>,
    /// incremental, pairwise or point-based.
    #[arg(long)]
    prune: Option<PruneMode>,
    /// Witness margin for exact pruning.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Point-based mode: sampled trajectories per round.
    #[arg(long)]
    point_samples: Option<usize>,
    /// Point-based mode: sampling rounds.
    #[arg(long)]
    point_rounds: Option<usize>,
}

impl SolverArgs {
    fn apply(&self, mut o: SolverOptions) -> SolverOptions {
        if let Some(b) = self.base_points {
            o.base_points = b;
        }
        if let Some(p) = self.prune {
            o.prune = p;
        }
        if let Some(t) = self.tolerance {
            o.tolerance = t;
        }
        if let Some(s) = self.point_samples {
            o.point_samples = s;
        }
        if let Some(r) = self.point_rounds {
            o.point_rounds = r;
        }
        o
    }
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Overrides the objective stored in the cost file.
    #[arg(long)]
    objective: Option<Objective>,
    /// Trade-off coefficient on the operational costs.
    #[arg(long)]
    lambda: Option<f64>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Policy file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Policy file written by `solve`.
    #[arg(long)]
    policy: PathBuf,
    #[arg(long, default_value_t = 1000)]
    runs: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Entropy sign in the total cost for objectives without their own;
    /// defaults to the benchmark's, else estimation.
    #[arg(long, value_enum)]
    sense: Option<SenseArg>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// identities, structure, solver or all.
    #[arg(long, default_value = "all")]
    scope: Scope,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Optional model file, validated before the suites run.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Optional cost file, validated against the model.
    #[arg(long, requires = "model")]
    cost: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReproduceArgs {
    /// cloud or navigation.
    benchmark: Benchmark,
    #[arg(long, default_value_t = 1000)]
    runs: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Trade-off coefficient shared by all policies.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Report file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write every simulated run as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SenseArg {
    Estimation,
    Obfuscation,
}

impl From<SenseArg> for Sense {
    fn from(s: SenseArg) -> Self {
        match s {
            SenseArg::Estimation => Sense::Estimation,
            SenseArg::Obfuscation => Sense::Obfuscation,
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Self { code: 1, message: msg.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonConcaveObjective(_) | Error::BoundaryBasePoint { .. } => 3,
            _ => 2,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e).into()
    }
}

fn require_file(path: &Path) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure { code: 2, message: format!("{}: no such file", path.display()) })
    }
}

fn check_out_dir(path: &Path) -> Result<(), Failure> {
    let parent = out_dir(path);
    if parent.is_dir() {
        Ok(())
    } else {
        Err(Failure { code: 2, message: format!("{}: output directory does not exist", parent.display()) })
    }
}

fn out_dir(path: &Path) -> &Path {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> smoother_entropy::Result<()>) -> Result<(), Failure> {
    let mut tmp = tempfile::NamedTempFile::new_in(out_dir(path))?;
    {
        let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut buf)?;
        buf.flush()?;
    }
    tmp.persist(path).map_err(|e| Failure::from(e.error))?;
    Ok(())
}

fn emit(out: Option<&Path>, fill: impl FnOnce(&mut dyn Write) -> smoother_entropy::Result<()>) -> Result<(), Failure> {
    match out {
        Some(p) => write_atomic(p, fill),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            fill(&mut lock)?;
            lock.flush()?;
            Ok(())
        }
    }
}

fn write_rows(rows: &[PolicyRow], format: Format, w: &mut dyn Write) -> smoother_entropy::Result<()> {
    match format {
        Format::Csv => write_csv(rows, w),
        Format::Json => {
            serde_json::to_writer_pretty(&mut *w, rows)?;
            w.write_all(b"\n")?;
            Ok(())
        }
    }
}

fn cmd_solve(args: SolveArgs) -> Result<(), Failure> {
    check_out_dir(&args.out)?;
    let (model, mut cost, benchmark) = args.source.load()?;
    if let Some(o) = args.objective {
        cost = cost.with_objective(o);
    }
    if let Some(l) = args.lambda {
        cost = cost.with_lambda(l);
    }
    let defaults = benchmark.map(Benchmark::solver_options).unwrap_or_default();
    let policy = solve(&model, &cost, &args.solver.apply(defaults))?;
    let json = policy.to_json();
    write_atomic(&args.out, |w| Ok(w.write_all(json.as_bytes())?))?;
    println!("{}", serde_json::to_string_pretty(&policy.stats).map_err(Error::from)?);
    Ok(())
}

fn load_policy(args: &RunArgs) -> Result<(PomdpModel, CostModel, SolvedPolicy, Option<Benchmark>), Failure> {
    require_file(&args.policy)?;
    if let Some(out) = &args.out {
        check_out_dir(out)?;
    }
    if args.runs == 0 {
        return Err(Error::InvalidArgument("runs must be at least 1".into()).into());
    }
    let (model, cost, benchmark) = args.source.load()?;
    let policy = SolvedPolicy::load(&args.policy, &model)?;
    let cost = cost.with_objective(policy.objective).with_lambda(policy.lambda);
    Ok((model, cost, policy, benchmark))
}

fn cmd_simulate(args: RunArgs) -> Result<(), Failure> {
    let (model, cost, policy, _) = load_policy(&args)?;
    let outcomes = simulate_policy(&model, &cost, &policy, args.runs, args.seed)?;
    let traces: Vec<TraceLine> =
        outcomes.into_iter().map(|outcome| TraceLine { policy: policy.objective, outcome }).collect();
    emit(args.out.as_deref(), |w| write_trace(&traces, w))
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), Failure> {
    let (model, cost, policy, benchmark) = load_policy(&args.run)?;
    let outcomes = simulate_policy(&model, &cost, &policy, args.run.runs, args.run.seed)?;
    let sense = args.sense.map(Sense::from).or(benchmark.map(Benchmark::sense)).unwrap_or(Sense::Estimation);
    let row = PolicyRow::from_evaluation(policy.objective, &aggregate(&outcomes), policy.lambda, sense);
    emit(args.run.out.as_deref(), |w| write_rows(&[row], args.format, w))
}

fn cmd_verify(args: VerifyArgs) -> Result<(), Failure> {
    if let Some(path) = &args.model {
        require_file(path)?;
        let model = PomdpModel::load(path)?;
        if let Some(cost) = &args.cost {
            require_file(cost)?;
            CostModel::load(cost, &model)?;
        }
        println!("model {} is valid", path.display());
    }
    let checks = run_scope(args.scope, args.seed)?;
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} of {} checks passed (seed {})", checks.len() - failed, checks.len(), args.seed);
    if failed > 0 {
        return Err(Failure { code: 4, message: format!("{failed} check(s) failed") });
    }
    Ok(())
}

fn cmd_reproduce(args: ReproduceArgs) -> Result<(), Failure> {
    for p in args.out.iter().chain(args.trace.iter()) {
        check_out_dir(p)?;
    }
    let mut config = ExperimentConfig::for_benchmark(args.benchmark, args.runs, args.seed);
    config.lambda = args.lambda;
    config.solver = args.solver.apply(config.solver);
    config.trace = args.trace.is_some();
    let report = run_experiment(&config)?;
    match args.format {
        Format::Csv => emit(args.out.as_deref(), |w| write_csv(&report.rows, w))?,
        Format::Json => emit(args.out.as_deref(), |w| {
            serde_json::to_writer_pretty(&mut *w, &report)?;
            w.write_all(b"\n")?;
            Ok(())
        })?,
    }
    if let Some(path) = &args.trace {
        write_atomic(path, |w| write_trace(&report.traces, w))?;
    }
    let failed: Vec<String> =
        report.rows.iter().filter_map(|r| r.error.as_ref().map(|e| format!("{}: {e}", r.policy))).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure { code: 3, message: failed.join("; ") })
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Reproduce(a) => cmd_reproduce(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("sment: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
