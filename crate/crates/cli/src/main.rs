use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cbm_cli::commands::{self, Context_};
use cbm_cli::config::{ensure_dir, ExperimentConfig};
use cbm_cli::{exit, manifest};

/// Condition-based maintenance for systems hit by shot-noise driven degradation.
#[derive(Parser)]
#[command(name = "cbm", version)]
struct Cli {
    /// TOML file or preset name (paper_deterministic, paper_random_effects).
    #[arg(long, global = true, default_value = "paper_deterministic")]
    config: String,
    /// Overrides the configured master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Drop wall-clock fields so repeated runs give identical files.
    #[arg(long, global = true)]
    deterministic: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate process arrivals and compare mean counts to the closed form.
    SimulateArrivals,
    /// Tabulate survival and hazard of the time to failure.
    Reliability,
    /// Profile likelihood of the random-effect half-width.
    Fit {
        /// CSV of observations with columns process_id,time,level.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Grid search for the inspection period and preventive threshold.
    Optimize,
    /// Repeat the optimisation over a two-parameter sweep.
    Sensitivity,
    /// Run the built-in consistency checks.
    Validate,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::SimulateArrivals => "simulate-arrivals",
            Command::Reliability => "reliability",
            Command::Fit { .. } => "fit",
            Command::Optimize => "optimize",
            Command::Sensitivity => "sensitivity",
            Command::Validate => "validate",
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(exit::Validation::new("--threads must be at least 1").into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let mut cfg = ExperimentConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    ensure_dir(&cli.out)?;
    let ctx = Context_ { cfg, out: cli.out.clone() };
    let result = match &cli.command {
        Command::SimulateArrivals => commands::simulate_arrivals_cmd(&ctx),
        Command::Reliability => commands::reliability_cmd(&ctx),
        Command::Fit { data } => commands::fit_cmd(&ctx, data.as_deref()),
        Command::Optimize => commands::optimize_cmd(&ctx),
        Command::Sensitivity => commands::sensitivity_cmd(&ctx),
        Command::Validate => commands::validate_cmd(&ctx),
    };
    // The manifest is written even when validation checks fail.
    let outputs = match &result {
        Ok(files) => files.clone(),
        Err(_) if matches!(cli.command, Command::Validate) => vec!["validation_report.csv".to_string()],
        Err(_) => Vec::new(),
    };
    if result.is_ok() || matches!(cli.command, Command::Validate) {
        manifest::write(&cli.out, cli.command.name(), &ctx.cfg, &outputs, cli.deterministic)?;
    }
    result.map(|_| ())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(exit::OK),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::code_for(&e))
        }
    }
}
