//! `sdgfrac`: adaptive staggered DG simulations of Darcy flow in fractured
//! porous media.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sdgfrac_core::adaptivity::{HaltReason, RefinementMode};
use sdgfrac_core::benchmarks;
use sdgfrac_core::parallel;

use crate::config::{ConfigError, RunConfig};

#[derive(Parser)]
#[command(
    name = "sdgfrac",
    version,
    about = "Adaptive staggered DG for Darcy flow in fractured porous media"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve, estimate and refine until a stopping rule triggers.
    Run(RunArgs),
    /// Print the names of the built-in benchmarks.
    ListBenchmarks,
    /// Audit the initial mesh (and optional uniform refinements).
    Check(CheckArgs),
}

#[derive(Args)]
struct Source {
    /// JSON run configuration.
    #[arg(long, conflicts_with = "benchmark")]
    config: Option<PathBuf>,
    /// Built-in benchmark name.
    #[arg(long)]
    benchmark: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Adaptive,
    Uniform,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// Polynomial order.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Dörfler marking fraction in (0, 1].
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    max_dofs: Option<usize>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Output directory (default: results/<benchmark>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write VTK fields and mesh JSON for every iteration.
    #[arg(long)]
    export_fields: bool,
    /// Write every assembled system in Matrix Market format.
    #[arg(long)]
    dump_system: bool,
    /// Suppress per-iteration progress lines.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Uniform refinement levels to audit after the initial mesh.
    #[arg(long, default_value_t = 0)]
    levels: usize,
}

fn load(source: &Source) -> Result<RunConfig, ConfigError> {
    match (&source.config, &source.benchmark) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
            RunConfig::from_json(&text)
        }
        (None, Some(name)) => Ok(RunConfig {
            benchmark: Some(name.clone()),
            ..RunConfig::default()
        }),
        (None, None) => Err(ConfigError("one of --config or --benchmark is required".into())),
    }
}

fn apply(cfg: &mut RunConfig, args: &RunArgs) {
    let amr = &mut cfg.amr;
    if let Some(k) = args.k {
        amr.order = k;
    }
    if let Some(m) = args.mode {
        amr.mode = match m {
            Mode::Adaptive => RefinementMode::Adaptive,
            Mode::Uniform => RefinementMode::Uniform,
        };
    }
    if let Some(t) = args.theta {
        amr.theta = t;
    }
    if let Some(n) = args.max_dofs {
        amr.max_dofs = n;
    }
    if let Some(n) = args.max_iterations {
        amr.max_iterations = n;
    }
    if args.out.is_some() {
        cfg.out = args.out.clone();
    }
    cfg.export_fields |= args.export_fields;
    cfg.dump_system |= args.dump_system;
}

enum Failure {
    Config(String),
    Runtime(String),
}

fn run_command(args: &RunArgs) -> Result<(), Failure> {
    let mut cfg = load(&args.source).map_err(|e| Failure::Config(e.0))?;
    apply(&mut cfg, args);
    let problem = cfg.resolve().map_err(|e| Failure::Config(e.0))?;
    let out = cfg.out.clone().unwrap_or_else(|| run::default_out(&problem));
    let history = run::run(&cfg, &problem, &out, args.quiet).map_err(|e| Failure::Runtime(e.to_string()))?;
    let last = history.records.last();
    println!(
        "{}: {} iterations, halt {:?}, final N = {}, eta = {:.4e}; history in {}",
        problem.name,
        history.records.len(),
        history.halt,
        last.map_or(0, |r| r.n_dofs),
        last.map_or(f64::NAN, |r| r.eta),
        out.join(run::HISTORY_FILE).display()
    );
    match history.halt {
        HaltReason::Failed(msg) => Err(Failure::Runtime(msg)),
        _ => Ok(()),
    }
}

fn check_command(args: &CheckArgs) -> Result<(), Failure> {
    let cfg = load(&args.source).map_err(|e| Failure::Config(e.0))?;
    let problem = cfg.resolve().map_err(|e| Failure::Config(e.0))?;
    let report = run::check(&problem, args.k, args.levels).map_err(|e| match e {
        sdgfrac_core::Error::UnsupportedOrder(_) => Failure::Config(e.to_string()),
        e => Failure::Runtime(e.to_string()),
    })?;
    print!("{report}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match parallel::threads_from_env() {
        Ok(Some(n)) => {
            if let Err(e) = parallel::configure_threads(n) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        }
        Ok(None) => {}
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Run(args) => run_command(args),
        Command::ListBenchmarks => {
            for name in benchmarks::NAMES {
                println!("{name}");
            }
            Ok(())
        }
        Command::Check(args) => check_command(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
