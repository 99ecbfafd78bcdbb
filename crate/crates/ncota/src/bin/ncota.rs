//! Command-line front end. All logic lives in the library; this binary only
//! parses arguments, shuttles files, and sets the exit code.

use clap::{Args, Parser, Subcommand};
use ncota::channel::Deployment;
use ncota::harness::config::Config;
use ncota::harness::{
    self, run_experiment, run_sweep, theory_report, verify, HarnessError, RunControls,
};
use ncota::optimizer::{solve_tx_probability, tx_design_residual};
use ncota::phy::ResourcePartition;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "ncota",
    version,
    about = "Simulates decentralized gradient descent with non-coherent over-the-air consensus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configured experiment and write per-trial metric rows.
    Run(RunArgs),
    /// Rerun an experiment for each value of one config key.
    Sweep(SweepArgs),
    /// Solve the transmit-probability design equation.
    PtxSolve(PtxSolveArgs),
    /// Evaluate the analytic error-bound curves for a config.
    Bound(BoundArgs),
    /// Run the statistical and numerical self-check suites.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Overrides {
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Trial-count override.
    #[arg(long)]
    trials: Option<u64>,
    /// Metric sampling stride override.
    #[arg(long)]
    stride: Option<u64>,
}

impl Overrides {
    fn apply(&self, config: &mut Config) {
        if let Some(seed) = self.seed {
            config.experiment.seed = seed;
        }
        if let Some(trials) = self.trials {
            config.experiment.trials = trials;
        }
        if let Some(stride) = self.stride {
            config.experiment.stride = stride;
        }
    }
}

#[derive(Args)]
struct GeometryArgs {
    /// Reuse trial 0's geometry and gain draw for every trial.
    #[arg(long)]
    pin_deployment: bool,
    /// Position table fixing node/reflector placement (implies pinning).
    #[arg(long)]
    deployment: Option<PathBuf>,
}

impl GeometryArgs {
    fn controls(&self) -> Result<RunControls, HarnessError> {
        let deployment = match &self.deployment {
            Some(path) => Some(Deployment::from_table(&std::fs::read_to_string(path)?)?),
            None => None,
        };
        Ok(RunControls { pin_deployment: self.pin_deployment, deployment })
    }
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    config: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
    #[command(flatten)]
    geometry: GeometryArgs,
    /// Per-trial rows CSV; the aggregate lands next to it ("-aggregate").
    #[arg(long, default_value = "metrics.csv")]
    out: PathBuf,
    /// Write trial 0's node/reflector positions to a table file.
    #[arg(long)]
    save_deployment: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Experiment config (TOML).
    config: PathBuf,
    /// Dotted config key to vary, e.g. "radio.tx_probability".
    #[arg(long)]
    param: String,
    /// Comma-separated values for the swept key.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<String>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(flatten)]
    geometry: GeometryArgs,
    /// Output directory: one rows/aggregate CSV pair per value plus a
    /// summary of the final aggregate row of each value.
    #[arg(long, default_value = "sweep")]
    out: PathBuf,
}

#[derive(Args)]
struct PtxSolveArgs {
    /// Codebook size M.
    #[arg(long)]
    codewords: usize,
    /// Resource units Q available per frame.
    #[arg(long)]
    resource_units: usize,
    /// Gain dispersion factor.
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    /// Set-size dispersion factor; computed from the strided partition when
    /// omitted.
    #[arg(long)]
    varpi: Option<f64>,
    /// Noise floor relative to the strongest total received energy.
    #[arg(long, default_value_t = 0.0)]
    noise_ratio: f64,
}

#[derive(Args)]
struct BoundArgs {
    /// Experiment config (TOML); the algorithm must be "ncota".
    config: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
    #[command(flatten)]
    geometry: GeometryArgs,
    /// Bound-curve CSV output.
    #[arg(long, default_value = "bound.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Run a single suite (unbiasedness, variance, bias-ablation, rate,
    /// solver) instead of all of them.
    #[arg(long)]
    suite: Option<String>,
    /// Report CSV path; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(command: Command) -> Result<ExitCode, HarnessError> {
    match command {
        Command::Run(args) => run_command(args),
        Command::Sweep(args) => sweep_command(args),
        Command::PtxSolve(args) => ptx_solve_command(args),
        Command::Bound(args) => bound_command(args),
        Command::Verify(args) => verify_command(args),
    }
}

fn load_config(path: &Path, overrides: &Overrides) -> Result<Config, HarnessError> {
    let mut config = Config::load(path)?;
    overrides.apply(&mut config);
    Ok(config)
}

fn run_command(args: RunArgs) -> Result<ExitCode, HarnessError> {
    let config = load_config(&args.config, &args.overrides)?;
    let controls = args.geometry.controls()?;
    let artifacts = run_experiment(&config, &controls)?;
    print!("{}", artifacts.log);
    let agg = harness::write_artifacts(&artifacts, &args.out)?;
    println!("wrote {} ({} rows)", args.out.display(), artifacts.rows.len());
    println!("wrote {} ({} rows)", agg.display(), artifacts.aggregate.len());
    if let Some(path) = &args.save_deployment {
        match &artifacts.deployment {
            Some(dep) => {
                std::fs::write(path, dep.to_table())?;
                println!("wrote {}", path.display());
            }
            None => {
                return Err(HarnessError::Config(
                    "this gain model has no positions to save; use network.model = \"reflector\""
                        .into(),
                ))
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Keeps value strings usable as file names.
fn sanitize(value: &str) -> String {
    value
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || ".-+".contains(c) { c } else { '_' })
        .collect()
}

fn sweep_command(args: SweepArgs) -> Result<ExitCode, HarnessError> {
    let config = load_config(&args.config, &args.overrides)?;
    let controls = args.geometry.controls()?;
    let outcomes = run_sweep(&config, &args.param, &args.values, &controls)?;
    std::fs::create_dir_all(&args.out)?;
    let key = sanitize(args.param.rsplit('.').next().unwrap_or(&args.param));
    let mut summary = String::from("value,k,time_s,norm_err,subopt_gap,test_err\n");
    for outcome in &outcomes {
        print!("{}", outcome.artifacts.log);
        let rows = args.out.join(format!("{key}-{}.csv", sanitize(&outcome.value)));
        let agg = harness::write_artifacts(&outcome.artifacts, &rows)?;
        println!(
            "{} = {}: wrote {} and {}",
            args.param,
            outcome.value,
            rows.display(),
            agg.display()
        );
        let last = outcome
            .artifacts
            .aggregate
            .last()
            .ok_or_else(|| HarnessError::Config("sweep produced no rows".into()))?;
        summary.push_str(&format!(
            "{},{},{},{},{},{}\n",
            outcome.value,
            last.iteration,
            last.time_s,
            last.normalized_error,
            last.suboptimality_gap,
            last.test_error.map_or("nan".to_string(), |e| e.to_string())
        ));
    }
    let summary_path = args.out.join("summary.csv");
    std::fs::write(&summary_path, summary)?;
    println!("wrote {}", summary_path.display());
    Ok(ExitCode::SUCCESS)
}

fn ptx_solve_command(args: PtxSolveArgs) -> Result<ExitCode, HarnessError> {
    let varpi = match args.varpi {
        Some(v) => v,
        None => ResourcePartition::strided(args.resource_units, args.codewords)?
            .inverse_size_mean()
            .sqrt(),
    };
    let p = solve_tx_probability(
        args.theta,
        varpi,
        args.codewords,
        args.resource_units,
        args.noise_ratio,
    )?;
    let residual = tx_design_residual(
        p,
        args.theta,
        varpi,
        args.codewords,
        args.resource_units,
        args.noise_ratio,
    );
    println!(
        "codewords = {}, resource_units = {}, theta = {}, varpi = {varpi}, noise_ratio = {}",
        args.codewords, args.resource_units, args.theta, args.noise_ratio
    );
    println!("p_tx = {p}");
    println!("residual = {residual:e}");
    Ok(ExitCode::SUCCESS)
}

fn bound_command(args: BoundArgs) -> Result<ExitCode, HarnessError> {
    let config = load_config(&args.config, &args.overrides)?;
    let controls = args.geometry.controls()?;
    let report = theory_report(&config, &controls)?;
    print!("{}", report.log);
    std::fs::write(&args.out, &report.csv)?;
    println!("wrote {} ({} rows)", args.out.display(), report.csv.lines().count() - 1);
    Ok(ExitCode::SUCCESS)
}

fn verify_command(args: VerifyArgs) -> Result<ExitCode, HarnessError> {
    let results = verify::run(args.suite.as_deref())?;
    let report = verify::report(&results);
    match &args.out {
        Some(path) => {
            std::fs::write(path, &report)?;
            println!("wrote {}", path.display());
        }
        None => print!("{report}"),
    }
    let failed = results.iter().filter(|r| !r.pass).count();
    if failed > 0 {
        eprintln!("{failed} of {} checks failed", results.len());
        return Ok(ExitCode::FAILURE);
    }
    println!("all {} checks passed", results.len());
    Ok(ExitCode::SUCCESS)
}
