//! `wssus`: pulse design and verification for Gabor signaling over WSSUS channels.

mod commands;
mod config;
mod error;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{RunConfig, SweepConfig, SweepParameter};
use error::{CliError, CliResult};

/// Environment variable overriding the worker thread count.
const THREADS_ENV: &str = "WSSUS_THREADS";

#[derive(Parser)]
#[command(name = "wssus", version, about = "WSSUS-optimal pulse design for Gabor signaling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration (a previous result.json also works).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Monte-Carlo seed; overrides `monte_carlo.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Design a transmit/receive pulse pair.
    Design(Common),
    /// Evaluate a given pulse pair by quadrature and Monte Carlo.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Transmit pulse CSV; defaults to gamma.csv in the output directory.
        #[arg(long)]
        gamma: Option<PathBuf>,
        /// Receive pulse CSV; defaults to g.csv in the output directory.
        #[arg(long)]
        g: Option<PathBuf>,
    },
    /// Design, then simulate random channels and write per-realization traces.
    Simulate(Common),
    /// Sweep one parameter; one CSV row per value.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// alpha, T, F, n_realizations or resolution; overrides the config.
        #[arg(long)]
        parameter: Option<String>,
        /// Comma-separated values; overrides the config.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Option<Vec<f64>>,
    },
}

fn load(common: &Common) -> CliResult<(RunConfig, PathBuf)> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.monte_carlo.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    let out = cfg.output_dir.clone();
    Ok((cfg, out))
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    if n == 0 {
        return Err(CliError::Config(format!("{THREADS_ENV} must be at least 1")));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn resolve_sweep(cfg: &RunConfig, parameter: Option<&str>, values: Option<Vec<f64>>) -> CliResult<SweepConfig> {
    let parameter = match parameter {
        Some(p) => SweepParameter::parse(p)?,
        None => cfg
            .sweep
            .as_ref()
            .map(|s| s.parameter)
            .ok_or_else(|| CliError::Config("no sweep parameter given".into()))?,
    };
    let values = values
        .or_else(|| cfg.sweep.as_ref().map(|s| s.values.clone()))
        .unwrap_or_default();
    Ok(SweepConfig { parameter, values })
}

fn run(cli: Cli) -> CliResult<(PathBuf, &'static str)> {
    configure_threads()?;
    match cli.command {
        Command::Design(common) => {
            let (cfg, out) = load(&common)?;
            let res = cfg.resolve()?;
            commands::cmd_design(&res, &out)?;
            Ok((out, "design"))
        }
        Command::Evaluate { common, gamma, g } => {
            let (cfg, out) = load(&common)?;
            let res = cfg.resolve()?;
            let gamma = gamma.unwrap_or_else(|| out.join(commands::GAMMA_FILE));
            let g = g.unwrap_or_else(|| out.join(commands::G_FILE));
            commands::cmd_evaluate(&res, &gamma, &g, &out)?;
            Ok((out, "evaluate"))
        }
        Command::Simulate(common) => {
            let (cfg, out) = load(&common)?;
            let res = cfg.resolve()?;
            commands::cmd_simulate(&res, &out)?;
            Ok((out, "simulate"))
        }
        Command::Sweep {
            common,
            parameter,
            values,
        } => {
            let (mut cfg, out) = load(&common)?;
            let sweep = resolve_sweep(&cfg, parameter.as_deref(), values)?;
            cfg.sweep = Some(sweep.clone());
            let res = cfg.resolve()?;
            commands::cmd_sweep(&res, &sweep, &out)?;
            Ok((out, "sweep"))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok((out, name)) => {
            commands::append_log(Path::new(&out), &format!("{name} ok"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
