//! `pfas`: Monte-Carlo channel-estimation and precoding runs.
//!
//! Settings are layered: profile, then `--config`, then `--set`, then the
//! dedicated flags. Exit codes: 0 success, 2 config error, 3 numerical
//! failure, 1 I/O failure.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pfas_core::harness::{
    emit_csv, run_nmse_experiment, run_rate_experiment, write_csv, write_traces, RunResult, ScenarioConfig,
    NMSE_TEST, NMSE_TRAIN, RATE,
};
use pfas_core::Error;

#[derive(Parser)]
#[command(name = "pfas", version, about = "Pixel-based fluid-antenna MIMO-OFDM simulations")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Channel-estimation NMSE on sounding and unseen states.
    Nmse(RunArgs),
    /// Downlink ZF rate for one precoder.
    Rate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Plain-text `key = value` file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// desk or paper.
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// ls, omp or vbi.
    #[arg(long)]
    estimator: Option<String>,
    /// proposed, random, nonfas, groupopt or upper.
    #[arg(long)]
    precoder: Option<String>,
    /// Extra `key=value` overrides, applied after --config.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// CSV destination (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record per-iteration VBI traces (`<out>.trace.csv`, or stderr).
    #[arg(long)]
    debug_trace: bool,
}

fn build_config(a: &RunArgs) -> Result<ScenarioConfig, Error> {
    let mut cfg = match &a.profile {
        Some(p) => ScenarioConfig::profile(p.parse()?),
        None => ScenarioConfig::default(),
    };
    if let Some(path) = &a.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
    }
    for kv in &a.overrides {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config(format!("expected KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(t) = a.trials {
        cfg.n_trials = t;
    }
    if let Some(e) = &a.estimator {
        cfg.set("estimator", e)?;
    }
    if let Some(p) = &a.precoder {
        cfg.set("precoder", p)?;
    }
    cfg.debug_trace |= a.debug_trace;
    cfg.validate()?;
    Ok(cfg)
}

fn trace_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".trace.csv");
    PathBuf::from(s)
}

fn emit(result: &RunResult, a: &RunArgs) -> Result<(), Error> {
    match &a.out {
        Some(p) => {
            emit_csv(result, p)?;
            if result.config.debug_trace {
                write_traces(result, std::fs::File::create(trace_path(p))?)?;
            }
        }
        None => {
            let mut out = std::io::stdout().lock();
            write_csv(result, &mut out)?;
            out.flush()?;
            if result.config.debug_trace {
                write_traces(result, std::io::stderr().lock())?;
            }
        }
    }
    for metric in [NMSE_TRAIN, NMSE_TEST, RATE] {
        if let (Some(mu), Some(sd)) = (result.mean(metric), result.std(metric)) {
            eprintln!("{metric}: mean {mu:.4} std {sd:.4} over {} trials", result.values(metric).len());
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    let (args, f): (_, fn(&ScenarioConfig) -> pfas_core::Result<RunResult>) = match &cli.cmd {
        Cmd::Nmse(a) => (a, run_nmse_experiment),
        Cmd::Rate(a) => (a, run_rate_experiment),
    };
    let cfg = build_config(args)?;
    emit(&f(&cfg)?, args)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 1,
        e if e.is_config() => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pfas: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
