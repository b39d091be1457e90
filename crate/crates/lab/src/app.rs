//! The `doifbp` command line: `run`, `sweep` and `check`.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::checks;
use crate::config::{parse_config, RunConfig};
use crate::error::LabError;
use crate::output::{write_diagnostics, write_sweep};
use crate::snapshot::{load_snapshot, snapshot};
use crate::sweep::{parallel_sweep, thread_cap};

#[derive(Debug, Parser)]
#[command(
    name = "doifbp",
    version,
    about = "Compressible Doi model simulator and gamma-limit lab"
)]
pub struct Cli {
    /// Only report errors.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    pub quiet: bool,
    /// Log every run and step milestone.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation; writes diagnostics.csv and optional snapshots.
    Run {
        config: PathBuf,
        /// Start from this snapshot instead of the configured preset.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Run the gamma sweep; writes sweep.csv.
    Sweep { config: PathBuf },
    /// Run the invariant suites; exits 3 if any fails.
    Check,
}

fn init_logging(cli: &Cli) {
    let level = if cli.quiet {
        log::LevelFilter::Error
    } else if cli.verbose {
        log::LevelFilter::Debug
    } else {
        log::LevelFilter::Info
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
}

/// Runs the parsed command and returns the process exit code.
pub fn execute(cli: Cli) -> u8 {
    init_logging(&cli);
    let result = match &cli.command {
        Command::Run { config, resume } => run(config, resume.as_deref()),
        Command::Sweep { config } => sweep(config),
        Command::Check => return check(cli.quiet),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            log::error!("{e}");
            e.exit_code()
        }
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, LabError> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    Ok(parse_config(&text)?)
}

fn prepare_output(cfg: &RunConfig) -> Result<PathBuf, LabError> {
    let dir = cfg.output.clone();
    fs::create_dir_all(&dir).map_err(|e| LabError::io(&dir, e))?;
    let copy = dir.join("config.conf");
    fs::write(&copy, cfg.serialize()).map_err(|e| LabError::io(&copy, e))?;
    Ok(dir)
}

pub fn run(config: &Path, resume: Option<&Path>) -> Result<(), LabError> {
    let cfg = load_config(config)?;
    let initial = match resume {
        Some(p) => load_snapshot(p)?,
        None => cfg.initial_state(cfg.gamma)?,
    };
    let dir = prepare_output(&cfg)?;
    log::info!(
        "run: {} cells, L = {}, gamma = {}, t = {} -> {}",
        initial.grid().len(),
        initial.f.basis().degree(),
        initial.law.gamma(),
        initial.t,
        cfg.t_final
    );

    let every = cfg.snapshot_every;
    let mut steps = 0usize;
    let mut io_error = None;
    let out = cfg
        .stepper()
        .run_observed(&initial, cfg.t_final, cfg.record_every, |s, _| {
            steps += 1;
            if every > 0 && steps.is_multiple_of(every) && io_error.is_none() {
                let p = dir.join(format!("snapshot_{steps:06}.bin"));
                if let Err(e) = snapshot(s, &p) {
                    io_error = Some(e);
                }
                log::debug!("t = {}: wrote {}", s.t, p.display());
            }
        })?;
    if let Some(e) = io_error {
        return Err(e);
    }
    if every > 0 {
        snapshot(&out.state, &dir.join("final.bin"))?;
    }
    write_diagnostics(&out.records, &dir.join("diagnostics.csv"))?;
    log::info!(
        "run: {} steps, {} records written to {}",
        out.steps,
        out.records.len(),
        dir.display()
    );
    Ok(())
}

pub fn sweep(config: &Path) -> Result<(), LabError> {
    let cfg = load_config(config)?;
    let template = cfg.initial_state(cfg.gammas[0])?;
    let dir = prepare_output(&cfg)?;
    let threads = thread_cap();
    log::info!(
        "sweep: gamma in {:?}, T = {}, threads {}",
        cfg.gammas,
        cfg.t_final,
        threads.map_or("auto".into(), |n| n.to_string())
    );
    let result = parallel_sweep(
        &template,
        &cfg.gammas,
        cfg.t_final,
        &cfg.stepper(),
        cfg.eps,
        threads,
    )?;
    write_sweep(&result, &dir.join("sweep.csv"))?;
    match result.l2_slope {
        Some(s) => log::info!("sweep: fitted L2 slope {s:.4}"),
        None => log::info!("sweep: L2 slope undefined"),
    }
    Ok(())
}

pub fn check(quiet: bool) -> u8 {
    let mut all = true;
    for r in checks::run_all() {
        all &= r.passed;
        if !quiet || !r.passed {
            println!("{r}");
        }
    }
    if all {
        0
    } else {
        3
    }
}
