mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use commands::ConvergenceFailure;
use config::{ConfigError, RunConfig};
use output::{sink, Provenance};

/// Continuous-grating diffraction: simulations, thermal models and fits.
///
/// Every flag can also be set through the environment with the `LATDEPTH_`
/// prefix (`LATDEPTH_CONFIG`, `LATDEPTH_OUT`, `LATDEPTH_SEED`,
/// `LATDEPTH_THREADS`).
#[derive(Debug, Parser)]
#[command(name = "latdepth", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration; defaults are used when omitted.
    #[arg(long, global = true, env = "LATDEPTH_CONFIG")]
    config: Option<PathBuf>,

    /// Output file; stdout when omitted.
    #[arg(long, global = true, env = "LATDEPTH_OUT")]
    out: Option<PathBuf>,

    /// Overrides the configuration's `seed`.
    #[arg(long, global = true, env = "LATDEPTH_SEED")]
    seed: Option<u64>,

    /// Worker threads for ensemble and scan parallelism; results do not
    /// depend on it.
    #[arg(long, global = true, env = "LATDEPTH_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Populations of the ladder sites for each depth, with the two-state curve.
    Evolve,
    /// Zeroth-order population over a grid of quasimomenta.
    Betascan,
    /// Finite-temperature ensemble, quadrature and steady state.
    Thermal,
    /// Steady-state population against reduced temperature.
    Steady,
    /// Synthetic noisy measurement as a tau,p0,sigma table.
    Synth,
    /// Fit depth and temperature to a tau,p0,sigma table; writes JSON.
    Fit,
}

const EXIT_OTHER: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_CONVERGENCE: u8 = 3;
const EXIT_RANGE: u8 = 4;

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return EXIT_CONFIG;
    }
    if err.downcast_ref::<ConvergenceFailure>().is_some() {
        return EXIT_CONVERGENCE;
    }
    match err.downcast_ref::<latdepth::Error>() {
        Some(latdepth::Error::NonConvergence { .. } | latdepth::Error::SeriesNonConvergence { .. }) => {
            EXIT_CONVERGENCE
        }
        Some(_) => EXIT_RANGE,
        None => EXIT_OTHER,
    }
}

fn configure_threads(threads: Option<usize>) -> Result<()> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(ConfigError("--threads must be at least 1".into()).into());
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("starting the thread pool")?;
    #[cfg(not(feature = "parallel"))]
    log::info!("built without the parallel feature; ignoring --threads {n}");
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads(cli.threads)?;
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let provenance = Provenance::new(&cfg.canonical(), cfg.seed);
    let table = match cli.command {
        Command::Evolve => commands::evolve(&cfg)?,
        Command::Betascan => commands::betascan(&cfg)?,
        Command::Thermal => commands::thermal(&cfg)?,
        Command::Steady => commands::steady(&cfg)?,
        Command::Synth => commands::synth(&cfg)?,
        Command::Fit => {
            let result = commands::fit(&cfg)?;
            log::info!(
                "v_eff = {:.9e}, w = {:.9e}, rho = {:.9e}, residual rms = {:.3e}",
                result.v_eff_hat,
                result.w_hat,
                result.rho_hat,
                result.residual_rms
            );
            let mut out = sink(cli.out.as_deref()).context("opening output")?;
            let record = serde_json::json!({
                "version": env!("CARGO_PKG_VERSION"),
                "config_sha256": provenance.config_sha256,
                "seed": provenance.seed,
                "result": result,
            });
            serde_json::to_writer_pretty(&mut out, &record)?;
            writeln!(out)?;
            out.flush()?;
            return Ok(());
        }
    };
    let mut out = sink(cli.out.as_deref()).context("opening output")?;
    table.write_to(&mut out, &provenance).context("writing output")?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
