//! Drives configured simulations and bound sweeps to disk.
//!
//! A run produces, inside `output_dir`:
//!
//! - `config_used.ini` — the exact configuration (including the stop rule)
//!   that produced the outputs, in round-trippable form;
//! - `energies.csv` — the logged energy breakdown and mass trail;
//! - `u_<step>.dat` — field snapshots when `snapshot_every > 0` (always
//!   including step 0 and the final step);
//! - `u_final.dat` — the terminal field, written unconditionally.

use std::fs;

use oksim_core::flow::{run, write_energy_csv_to_path, RunResult};
use oksim_core::grid::write_field_to_path;
use oksim_core::oracle::{rect_competitor, scaling_bounds, sharp_energy, BoundReport, Diagnostics};

use crate::config::{realize_initial, render, RunConfig};
use crate::error::Result;

/// Everything a caller needs to report on a finished run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub result: RunResult,
    /// Geometry of the terminal 0.5-superlevel set.
    pub diagnostics: Diagnostics,
}

/// Realizes the initial field, runs the flow, and writes all outputs.
pub fn execute_run(config: &RunConfig) -> Result<RunSummary> {
    let u0 = realize_initial(&config.grid, &config.initial, config.params.eps)?;
    fs::create_dir_all(&config.output_dir)?;
    fs::write(config.output_dir.join("config_used.ini"), render(config))?;

    let every = config.snapshot_every;
    let dir = config.output_dir.clone();
    let mut snapshot_error: Option<oksim_core::Error> = None;
    let mut last_dumped = usize::MAX;
    let result = run(
        &u0,
        &config.params,
        &config.stop,
        &config.sampling,
        config.log_every,
        |state| {
            if every > 0 && state.step % every == 0 && snapshot_error.is_none() {
                let path = dir.join(format!("u_{}.dat", state.step));
                match write_field_to_path(&path, &state.u) {
                    Ok(()) => last_dumped = state.step,
                    Err(e) => snapshot_error = Some(e),
                }
            }
        },
    )?;
    if let Some(e) = snapshot_error {
        return Err(e.into());
    }
    let final_step = result.state.step;
    if every > 0 && last_dumped != final_step {
        write_field_to_path(&dir.join(format!("u_{final_step}.dat")), &result.state.u)?;
    }
    write_field_to_path(&dir.join("u_final.dat"), &result.state.u)?;
    write_energy_csv_to_path(&dir.join("energies.csv"), &result.rows)?;

    let diagnostics = Diagnostics::measure(&result.state.u, 0.5);
    Ok(RunSummary {
        result,
        diagnostics,
    })
}

/// One row of a bound sweep: the closed-form sandwich at `lambda` plus the
/// measured energy of the thin-rectangle competitor that motivates it.
#[derive(Debug, Clone)]
pub struct BoundRow {
    pub report: BoundReport,
    pub rect_energy: f64,
}

/// Evaluates the scaling sandwich on a log-spaced grid of `points` values
/// of lambda covering `[lambda_min, lambda_max]`.
pub fn bounds_rows(lambda_min: f64, lambda_max: f64, points: usize) -> Result<Vec<BoundRow>> {
    if !(lambda_min > 0.0) || !lambda_min.is_finite() {
        return Err(crate::error::CliError::Field {
            field: "lambda-min".to_string(),
            message: format!("must be positive and finite, got {lambda_min}"),
        });
    }
    if !(lambda_max >= lambda_min) || !lambda_max.is_finite() {
        return Err(crate::error::CliError::Field {
            field: "lambda-max".to_string(),
            message: format!("must be finite and at least lambda-min, got {lambda_max}"),
        });
    }
    if points == 0 {
        return Err(crate::error::CliError::Field {
            field: "points".to_string(),
            message: "must be at least 1".to_string(),
        });
    }
    let (ln_a, ln_b) = (lambda_min.ln(), lambda_max.ln());
    let mut rows = Vec::with_capacity(points);
    for i in 0..points {
        let t = if points == 1 {
            0.0
        } else {
            i as f64 / (points - 1) as f64
        };
        let lambda = (ln_a + t * (ln_b - ln_a)).exp();
        let report = scaling_bounds(lambda)?;
        let rect_energy = sharp_energy(&rect_competitor(lambda), lambda, 128)?;
        rows.push(BoundRow {
            report,
            rect_energy,
        });
    }
    Ok(rows)
}

/// Renders bound rows as CSV with a header line.
pub fn bounds_csv(rows: &[BoundRow]) -> String {
    let mut s = String::from("lambda,lower,upper,leading,rect_energy\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.report.lambda, r.report.lower, r.report.upper, r.report.leading, r.rect_energy
        ));
    }
    s
}
