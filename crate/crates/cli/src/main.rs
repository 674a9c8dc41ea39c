use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rrk_lab::{parse_config, resolve, run, show_defaults, CliError, Experiment, Overrides};

#[derive(Parser)]
#[command(
    name = "rrk-lab",
    version,
    about = "Relaxation Runge-Kutta experiment runner (CSV/JSON output)",
    after_help = "Defaults are per experiment and problem; print them with --show-defaults.\n\nEnvironment:\n  RRK_LAB_DATA_DIR  directory overriding the built-in constants data files"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one problem and record invariants along the trajectory
    Integrate(RunArgs),
    /// Convergence study over a set of step sizes
    Converge(RunArgs),
    /// Error growth in time against the analytic reference
    Errgrowth(RunArgs),
    /// Poincare section of a long trajectory
    Poincare(RunArgs),
    /// Phase-space volume of an evolving point cloud
    Volume(RunArgs),
    /// Soliton run of the KdV semidiscretization
    Kdv(RunArgs),
    /// Outer solar system
    Solar(RunArgs),
    /// Frozen argon crystal
    Argon(RunArgs),
    /// Exact-rational sweep of the factorial identity
    #[command(name = "lemma-a2")]
    LemmaA2(RunArgs),
    /// Leading-order expansion of the relaxation parameter
    GammaAsymptotic(RunArgs),
}

#[derive(Args, Default)]
struct RunArgs {
    /// Problem name (see --show-defaults for the experiment's default)
    #[arg(long)]
    problem: Option<String>,
    /// Method name: rk44, ssprk22, ssprk33, heun3, fehlberg4, dp75, bs85,
    /// norsett23, sdirk34, sdirk54
    #[arg(long)]
    method: Option<String>,
    /// baseline | relaxation | projection | symplectic-euler
    #[arg(long)]
    scheme: Option<String>,
    /// Functional to relax or project on
    #[arg(long)]
    invariant: Option<String>,
    /// Step size (default depends on experiment and problem)
    #[arg(long)]
    dt: Option<f64>,
    /// Final time (default depends on experiment and problem)
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    /// RNG seed for cloud sampling
    #[arg(long)]
    seed: Option<u64>,
    /// Output stem; <stem>.csv and <stem>.json are written
    #[arg(long)]
    output: Option<PathBuf>,
    /// JSON config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the resolved defaults for this experiment and exit
    #[arg(long)]
    show_defaults: bool,
    /// Comma-separated step sizes (converge, gamma-asymptotic)
    #[arg(long, value_delimiter = ',')]
    dts: Option<Vec<f64>>,
    /// Largest stage count of the identity sweep (lemma-a2)
    #[arg(long = "max-s")]
    max_s: Option<u32>,
    /// Cloud size (volume)
    #[arg(long)]
    points: Option<usize>,
    /// Cloud radius (volume)
    #[arg(long)]
    radius: Option<f64>,
    /// Sampling stride in steps (volume)
    #[arg(long)]
    stride: Option<usize>,
    /// Error sampling interval (errgrowth)
    #[arg(long = "sample-every")]
    sample_every: Option<f64>,
    /// Grid size of the KdV semidiscretization
    #[arg(long = "grid-n")]
    grid_n: Option<usize>,
    /// Kepler eccentricity
    #[arg(long)]
    eccentricity: Option<f64>,
    /// Crossing direction: positive | negative | both (poincare)
    #[arg(long)]
    direction: Option<String>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            problem: self.problem.clone(),
            method: self.method.clone(),
            scheme: self.scheme.clone(),
            invariant: self.invariant.clone(),
            dt: self.dt,
            t_end: self.t_end,
            seed: self.seed,
            output: self.output.clone(),
            dts: self.dts.clone(),
            max_s: self.max_s,
            points: self.points,
            radius: self.radius,
            stride: self.stride,
            sample_every: self.sample_every,
            grid_n: self.grid_n,
            eccentricity: self.eccentricity,
            direction: self.direction.clone(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match &cli.command {
        Command::Integrate(a) => (Experiment::Integrate, a),
        Command::Converge(a) => (Experiment::Converge, a),
        Command::Errgrowth(a) => (Experiment::Errgrowth, a),
        Command::Poincare(a) => (Experiment::Poincare, a),
        Command::Volume(a) => (Experiment::Volume, a),
        Command::Kdv(a) => (Experiment::Kdv, a),
        Command::Solar(a) => (Experiment::Solar, a),
        Command::Argon(a) => (Experiment::Argon, a),
        Command::LemmaA2(a) => (Experiment::LemmaA2, a),
        Command::GammaAsymptotic(a) => (Experiment::GammaAsymptotic, a),
    };

    if args.show_defaults {
        for (key, value) in show_defaults(experiment, args.problem.as_deref()) {
            println!("{key} = {value}");
        }
        return ExitCode::SUCCESS;
    }

    match execute(experiment, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rrk-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(experiment: Experiment, args: &RunArgs) -> Result<(), CliError> {
    let config = match &args.config {
        Some(path) => Some(parse_config(path)?),
        None => None,
    };
    let spec = resolve(experiment, args.overrides(), config)?;
    match run(&spec) {
        Ok(report) => {
            println!(
                "{}: wrote {} and {}",
                spec.experiment.name(),
                report.csv_path.display(),
                report.json_path.display()
            );
            if let Some(metrics) = report.summary.get("metrics") {
                println!("{}", serde_json::to_string_pretty(metrics).expect("metrics"));
            }
            Ok(())
        }
        Err(e) => {
            // leave a machine-readable trace of the failure next to where
            // the outputs would have gone
            let (_csv, json_path) = (
                spec.output.with_extension("csv"),
                spec.output.with_extension("json"),
            );
            let failure = serde_json::json!({
                "experiment": spec.experiment.name(),
                "error": e.to_string(),
                "failing_step": e.failing_step(),
            });
            if let Ok(text) = serde_json::to_string_pretty(&failure) {
                let _ = std::fs::write(&json_path, text);
            }
            Err(e)
        }
    }
}
