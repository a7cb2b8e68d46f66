use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use ion_nmpm_cli::commands;
use ion_nmpm_cli::config::{Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "ion-nmpm", version, about = "Trapped ion in the high-intensity regime: perturbative, small-rotation and exact dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Pe(τ) curves for λ = 0.1, 0.2, 0.3, 0.4 as CSV and SVG.
    Fig1,
    /// Run every invariant suite; exit status 1 on any hard failure.
    Validate,
    /// Comparison rows over the λ × η × α × τ grid.
    Sweep,
    /// Pe(τ) for the configured initial state.
    Evolve,
}

#[derive(Debug, Args)]
struct Flags {
    /// Flat TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    lambda: Option<f64>,
    #[arg(long, global = true)]
    eta: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    kappa: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    order: Option<usize>,
    /// Fock cutoff N.
    #[arg(long, global = true)]
    cutoff: Option<usize>,
    #[arg(long, global = true)]
    tau_max: Option<f64>,
    /// Number of τ points including both ends.
    #[arg(long, global = true)]
    tau_steps: Option<usize>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Print the resolved configuration as TOML and exit.
    #[arg(long, global = true)]
    print_config: bool,
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            lambda: self.lambda,
            eta: self.eta,
            kappa: self.kappa,
            alpha: self.alpha,
            order: self.order,
            fock_cutoff: self.cutoff,
            tau_max: self.tau_max,
            tau_steps: self.tau_steps,
            out_dir: self.out_dir.clone(),
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let mut cfg = match &cli.flags.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply(&cli.flags.overrides());
    if cli.flags.print_config {
        print!("{}", cfg.to_toml());
        return Ok(ExitCode::SUCCESS);
    }
    cfg.validate()?;
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global().context("configuring worker pool")?;
    }
    let Some(command) = cli.command else {
        anyhow::bail!("no subcommand given; use one of fig1, validate, sweep, evolve (see --help)");
    };
    let written = match command {
        Command::Fig1 => commands::fig1(&cfg)?,
        Command::Sweep => commands::sweep(&cfg)?,
        Command::Evolve => commands::evolve(&cfg)?,
        Command::Validate => {
            let (report, path) = commands::validate(&cfg)?;
            for s in &report.suites {
                println!("{}", s.line());
            }
            let failures = report.hard_failures();
            println!("{} deviation records written to {}", report.deviations.len(), path.display());
            println!("{failures} hard failures");
            return Ok(if failures == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE });
        }
    };
    for path in written {
        println!("{}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
