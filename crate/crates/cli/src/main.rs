//! `exboot`: simulate survival data, fit the Cox model, run exchangeably
//! weighted bootstraps and the verification experiments.

mod commands;
mod config;
mod failure;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use exboot_core::bootstrap::SigmaChoice;
use exboot_core::WeightScheme;

use crate::config::RunConfig;
use crate::failure::Failure;

#[derive(Parser, Debug)]
#[command(name = "exboot", version, about = "Exchangeably weighted bootstrap for the Cox model")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct GlobalArgs {
    /// Sectioned TOML configuration; every key has a default.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed, overriding `[rng] seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; outputs do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Treat excluded replicates beyond 5% and level-0 sets as errors.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a dataset from `[simulation]` and write it as CSV.
    Simulate {
        #[arg(long)]
        out: PathBuf,
        /// Sample size, overriding `[simulation] n`.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Fit the Cox model to a CSV dataset.
    Fit {
        #[arg(long)]
        data: PathBuf,
        /// Report file (JSON); printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Hold the regression coefficients at these values (comma separated) and profile only the baseline hazard.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        fix_theta: Option<Vec<f64>>,
    },
    /// Weighted bootstrap with variance estimate and confidence sets.
    Bootstrap {
        #[arg(long)]
        data: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        scheme: Option<WeightScheme>,
        #[arg(long = "B", alias = "replicates")]
        replicates: Option<usize>,
        #[arg(long)]
        sigma: Option<SigmaChoice>,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Run a verification experiment; exits 1 when a check fails.
    Verify {
        kind: VerifyKind,
        /// Output directory for the JSON report and CSV tables.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Restrict to (weights) or use (other experiments) this scheme.
        #[arg(long)]
        scheme: Option<WeightScheme>,
    },
    /// Print the resolved configuration as TOML.
    Config,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum VerifyKind {
    Weights,
    Distribution,
    Variance,
    Moments,
    Coverage,
    Inequalities,
}

fn resolve(global: &GlobalArgs) -> Result<RunConfig, Failure> {
    let mut config = RunConfig::load(global.config.as_deref())?;
    if let Some(seed) = global.seed {
        config.rng.seed = seed;
    }
    if let Some(threads) = global.threads {
        config.execution.threads = Some(threads);
    }
    config.execution.strict |= global.strict;
    if config.execution.threads == Some(0) {
        return Err(Failure::Config("execution.threads: must be at least 1".into()));
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut config = resolve(&cli.global)?;
    let threads = config.execution.threads;
    let pool = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new().num_threads(t).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    }
    .map_err(|e| Failure::Config(format!("execution.threads: {e}")))?;
    pool.install(|| match cli.command {
        Command::Simulate { out, n } => {
            if let Some(n) = n {
                config.simulation.n = n;
            }
            commands::simulate(&config, &out)
        }
        Command::Fit { data, out, fix_theta } => commands::fit(&config, &data, out.as_deref(), fix_theta.as_deref()),
        Command::Bootstrap { data, out, scheme, replicates, sigma, alpha } => {
            if let Some(s) = scheme {
                config.weights.scheme = s;
            }
            if let Some(b) = replicates {
                config.bootstrap.replicates = b;
            }
            if let Some(s) = sigma {
                config.bootstrap.sigma = s;
            }
            if let Some(a) = alpha {
                config.bootstrap.alpha = a;
            }
            commands::bootstrap(&config, &data, &out)
        }
        Command::Verify { kind, out, scheme } => {
            if let Some(s) = scheme {
                config.weights.scheme = s;
                config.weight_law.schemes = vec![s];
            }
            commands::verify(&config, kind, out.as_deref())
        }
        Command::Config => {
            print!("{}", toml::to_string(&config).map_err(|e| Failure::Config(e.to_string()))?);
            Ok(())
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("exboot: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
