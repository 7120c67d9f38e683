//! `ddm`: batch runner for diffuse domain solves and convergence studies.

mod config;
mod output;
mod plot;
mod run;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::{Command, RunConfig};

/// Run a diffuse domain experiment described by a JSON config.
#[derive(Debug, Parser)]
#[command(name = "ddm", version)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; overrides `out` in the config.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads; more than one also solves study rows in parallel.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Skip SVG plots.
    #[arg(long)]
    no_plot: bool,
    /// Command to run; overrides `command` in the config. Only `selftest`
    /// runs without a config.
    command: Option<String>,
}

const EXIT_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn load(cli: &Cli) -> anyhow::Result<RunConfig> {
    let command = match &cli.command {
        Some(name) => Some(Command::parse(name).ok_or_else(|| anyhow::anyhow!("unknown command `{name}`"))?),
        None => None,
    };
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
            config::parse(&text, path)?
        }
        None => match command {
            Some(Command::Selftest) => config::parse(r#"{"command":"selftest"}"#, "<builtin>".as_ref())?,
            _ => anyhow::bail!("--config is required"),
        },
    };
    if let Some(c) = command {
        cfg.command = c;
    }
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    if cli.no_plot {
        cfg.plot = false;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let (job, settings) = match cfg.validate() {
        Ok(v) => v,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(settings.threads).build_global() {
        log::warn!("could not size the thread pool: {e}");
    }
    match run::run(&job, &settings) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("{}: some solves did not converge", cfg.command.name());
            ExitCode::from(EXIT_FAILED)
        }
        Err(e) => {
            eprintln!("{}: {e:#}", cfg.command.name());
            ExitCode::from(EXIT_FAILED)
        }
    }
}
