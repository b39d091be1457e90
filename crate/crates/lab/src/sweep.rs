//! Parallel γ sweep. Runs execute on a rayon pool capped by `DOIFBP_THREADS`;
//! rows come back in γ order regardless of completion order.

use doifbp_core::integrator::Stepper;
use doifbp_core::limit::{sweep_row, SweepResult};
use doifbp_core::FluidState;
use rayon::prelude::*;

use crate::error::LabError;

pub const THREADS_ENV: &str = "DOIFBP_THREADS";

/// Thread cap from `DOIFBP_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

pub fn parallel_sweep(
    template: &FluidState,
    gammas: &[f64],
    t_final: f64,
    stepper: &Stepper,
    eps: f64,
    threads: Option<usize>,
) -> Result<SweepResult, LabError> {
    if gammas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(doifbp_core::Error::InvalidParameter {
            name: "gamma_list",
            reason: "gamma values must be strictly increasing",
        }
        .into());
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.min(gammas.len().max(1)));
    }
    let pool = builder.build().map_err(|e| LabError::Format {
        path: THREADS_ENV.into(),
        message: format!("cannot start worker pool: {e}"),
    })?;
    let rows = pool.install(|| {
        gammas
            .par_iter()
            .map(|&g| {
                log::info!("gamma = {g}: started");
                let r = sweep_row(template, g, t_final, stepper, eps);
                if let Ok(row) = &r {
                    log::info!("gamma = {g}: done in {} steps", row.steps);
                }
                r
            })
            .collect::<doifbp_core::Result<Vec<_>>>()
    })?;
    Ok(SweepResult::from_rows(rows, eps)?)
}
