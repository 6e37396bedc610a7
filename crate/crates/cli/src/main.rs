//! Command-line front end for the stochastic-gradient experiment harness.

use anyhow::Result;
use clap::{Parser, Subcommand};
use mlsg_cli::config::{CliOverrides, ConfigFile, ReferenceSpec, ResolvedConfig, RunKind};
use mlsg_cli::experiment;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[clap(
    name = "mlsg",
    about = "Multilevel stochastic-gradient experiments for elliptic optimal control \
             under a random diffusion coefficient."
)]
struct Cli {
    #[clap(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the experiment described by a JSON config file.
    Run {
        /// Experiment description (strategy, parameters, reference, output).
        #[clap(long, value_name = "PATH")]
        config: PathBuf,
        /// Override the config's base seed.
        #[clap(long)]
        seed: Option<u64>,
        /// Override the config's iteration count.
        #[clap(long)]
        iterations: Option<u64>,
        /// Override the config's repetition count.
        #[clap(long)]
        repetitions: Option<u64>,
        /// Override the config's output CSV path.
        #[clap(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Solve the tensor-quadrature reference control and cache it.
    Reference {
        /// Mesh level of the reference control.
        #[clap(long, default_value_t = 4)]
        level: usize,
        /// Gauss-Legendre points per random-vector dimension.
        #[clap(long, default_value_t = 3)]
        q: usize,
        #[clap(long, default_value_t = 60)]
        max_iters: u64,
        #[clap(long, default_value_t = 1e-8)]
        grad_tol: f64,
        /// Cache file to write (reused untouched if it already exists).
        #[clap(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Estimate the level-variance decay of the gradient differences at the
    /// zero control.
    Screen {
        /// Monte Carlo samples per level (at least 2).
        #[clap(long, default_value_t = 100)]
        samples: u64,
        /// Largest difference level to screen.
        #[clap(long, default_value_t = 3)]
        levels: usize,
        #[clap(long, default_value_t = 0)]
        seed: u64,
        /// Optional CSV for the per-level table.
        #[clap(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Screen and check the fitted decay against the expected band.
    ValidateRates {
        #[clap(long, default_value_t = 100)]
        samples: u64,
        #[clap(long, default_value_t = 3)]
        levels: usize,
        #[clap(long, default_value_t = 0)]
        seed: u64,
    },
    /// Extract a log-log column pair from an experiment CSV and fit its
    /// slope.
    PlotData {
        /// Experiment CSV produced by `run`.
        #[clap(long, value_name = "PATH")]
        input: PathBuf,
        /// Column for the horizontal axis (e.g. j, cost, expected_cost).
        #[clap(long)]
        x: String,
        /// Column for the vertical axis (e.g. mean_error).
        #[clap(long)]
        y: String,
        /// Keep only rows with j >= this value.
        #[clap(long)]
        jmin: Option<u64>,
        /// Keep only rows with j <= this value.
        #[clap(long)]
        jmax: Option<u64>,
        /// Output CSV of log10 pairs.
        #[clap(long, value_name = "PATH")]
        out: PathBuf,
    },
}

fn bare_config(strategy: RunKind) -> ConfigFile {
    ConfigFile {
        strategy,
        params: Default::default(),
        iterations: None,
        repetitions: None,
        seed: None,
        level: None,
        samples: None,
        levels: None,
        reference: None,
        output: None,
    }
}

fn resolve_command(command: Command) -> Result<ResolvedConfig> {
    match command {
        Command::Run { config, seed, iterations, repetitions, out } => {
            let file = ConfigFile::load(&config)?;
            file.resolve(&CliOverrides { seed, iterations, repetitions, output: out })
        }
        Command::Reference { level, q, max_iters, grad_tol, out } => {
            let mut file = bare_config(RunKind::Reference);
            file.reference = Some(ReferenceSpec {
                path: Some(out),
                sha256: None,
                level: Some(level),
                q: Some(q),
                max_iters: Some(max_iters),
                grad_tol: Some(grad_tol),
            });
            file.resolve(&CliOverrides::default())
        }
        Command::Screen { samples, levels, seed, out } => {
            let mut file = bare_config(RunKind::Screen);
            file.samples = Some(samples);
            file.levels = Some(levels);
            file.seed = Some(seed);
            file.output = out;
            file.resolve(&CliOverrides::default())
        }
        Command::ValidateRates { samples, levels, seed } => {
            let mut file = bare_config(RunKind::ValidateRates);
            file.samples = Some(samples);
            file.levels = Some(levels);
            file.seed = Some(seed);
            file.resolve(&CliOverrides::default())
        }
        Command::PlotData { .. } => unreachable!("plot-data is handled before resolution"),
    }
}

fn real_main(cli: Cli) -> Result<()> {
    if let Command::PlotData { input, x, y, jmin, jmax, out } = cli.command {
        let slope = experiment::plot_data(&input, &x, &y, jmin, jmax, &out)?;
        println!("wrote log10 pairs to {}", out.display());
        println!("fitted log-log slope: {slope:.4}");
        return Ok(());
    }
    let mut cfg = resolve_command(cli.command)?;
    experiment::execute(&mut cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match real_main(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
