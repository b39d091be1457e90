//! CSV writers for the diagnostics time series and the sweep table.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which parses back
//! to the identical `f64`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use doifbp_core::{DiagnosticsRecord, SweepResult};

use crate::error::LabError;

pub const DIAGNOSTICS_HEADER: [&str; 13] = [
    "t",
    "e_total",
    "e_kinetic",
    "e_pressure",
    "e_eta",
    "e_entropy",
    "diss_fisher_tau",
    "diss_fisher_x",
    "diss_grad_u",
    "diss_div_u",
    "diss_grad_eta",
    "mass",
    "rod_mass",
];

/// `l2_slope` is repeated on every row and left empty when absent.
pub const SWEEP_HEADER: [&str; 13] = [
    "gamma",
    "excess_l1",
    "excess_l2",
    "excess_l4",
    "excess_linf",
    "excess_sup_l2",
    "pressure_time_integral",
    "complementarity",
    "div_defect",
    "congested_volume",
    "steps",
    "eps",
    "l2_slope",
];

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, LabError> {
    let file = File::create(path).map_err(|e| LabError::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn csv_err(path: &Path, e: csv::Error) -> LabError {
    LabError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn finish(path: &Path, w: csv::Writer<BufWriter<File>>) -> Result<(), LabError> {
    let mut inner = w
        .into_inner()
        .map_err(|e| LabError::io(path, e.into_error()))?;
    inner.flush().map_err(|e| LabError::io(path, e))
}

pub fn write_diagnostics(records: &[DiagnosticsRecord], path: &Path) -> Result<(), LabError> {
    let mut w = writer(path)?;
    w.write_record(DIAGNOSTICS_HEADER)
        .map_err(|e| csv_err(path, e))?;
    for r in records {
        let row = [
            r.t,
            r.e_total,
            r.e_kinetic,
            r.e_pressure,
            r.e_eta,
            r.e_entropy,
            r.diss_fisher_tau,
            r.diss_fisher_x,
            r.diss_grad_u,
            r.diss_div_u,
            r.diss_grad_eta,
            r.mass,
            r.rod_mass,
        ];
        w.write_record(row.iter().map(|&x| num(x)))
            .map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

pub fn write_sweep(sweep: &SweepResult, path: &Path) -> Result<(), LabError> {
    let mut w = writer(path)?;
    w.write_record(SWEEP_HEADER).map_err(|e| csv_err(path, e))?;
    let slope = sweep.l2_slope.map(num).unwrap_or_default();
    for r in &sweep.rows {
        let mut row: Vec<String> = [r.gamma]
            .iter()
            .chain(&r.excess)
            .chain(&[
                r.excess_sup_l2,
                r.pressure_time_integral,
                r.complementarity,
                r.div_defect,
                r.congested_volume,
            ])
            .map(|&x| num(x))
            .collect();
        row.push(r.steps.to_string());
        row.push(num(sweep.eps));
        row.push(slope.clone());
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

/// Reads a diagnostics file back, checking the header.
pub fn read_diagnostics(path: &Path) -> Result<Vec<DiagnosticsRecord>, LabError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().ne(DIAGNOSTICS_HEADER) {
        return Err(LabError::Format {
            path: path.to_path_buf(),
            message: "unexpected diagnostics header".into(),
        });
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let v: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| LabError::Format {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        out.push(DiagnosticsRecord {
            t: v[0],
            e_total: v[1],
            e_kinetic: v[2],
            e_pressure: v[3],
            e_eta: v[4],
            e_entropy: v[5],
            diss_fisher_tau: v[6],
            diss_fisher_x: v[7],
            diss_grad_u: v[8],
            diss_div_u: v[9],
            diss_grad_eta: v[10],
            mass: v[11],
            rod_mass: v[12],
        });
    }
    Ok(out)
}
