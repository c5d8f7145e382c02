//! CSV emission.
//!
//! Sweep files have one row per (variant, RCS grid value) with columns
//!
//! | column | meaning |
//! |---|---|
//! | `variant` | strategy name |
//! | `rcs_db` | RCS variance on the grid, dB |
//! | `cnr_db` | clutter-to-noise ratio, dB |
//! | `pd` | detection probability averaged over realizations |
//! | `pd_stderr` | Monte Carlo standard error of `pd` |
//! | `scnr` | mean design SCNR at this RCS (linear) |
//! | `realizations` | scenario realizations averaged |
//! | `trials` | null and target-present trials per realization |
//! | `pfa` | false-alarm probability used for calibration |
//! | `resampled` | SINR-infeasible draws that were redrawn |
//! | `mean_ao_iterations` | mean outer AO iterations (empty for the baseline) |
//! | `seed` | master seed |
//! | `config_hash` | 16 hex digits of the config's SHA-256 |
//!
//! Floats carry 12 significant digits; files are UTF-8 with LF line endings.

use std::io::Write;
use std::path::Path;

use crate::error::Result;

use super::sweep::SweepResult;

pub const CSV_COLUMNS: [&str; 13] = [
    "variant",
    "rcs_db",
    "cnr_db",
    "pd",
    "pd_stderr",
    "scnr",
    "realizations",
    "trials",
    "pfa",
    "resampled",
    "mean_ao_iterations",
    "seed",
    "config_hash",
];

pub const TRACE_COLUMNS: [&str; 8] = [
    "variant",
    "realization",
    "iteration",
    "scnr",
    "sinr_residual",
    "power_residual",
    "ccp_iterations",
    "mm_iterations",
];

/// Twelve significant digits in scientific notation.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.11e}")
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

pub fn write_csv<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(CSV_COLUMNS)?;
    for v in &result.variants {
        let ao = v.mean_ao_iterations().map(fmt_float).unwrap_or_default();
        for p in &v.points {
            w.write_record([
                v.variant.clone(),
                fmt_float(p.rcs_db),
                fmt_float(result.cnr_db),
                fmt_float(p.pd),
                fmt_float(p.stderr),
                fmt_float(p.scnr),
                p.pd_per_realization.len().to_string(),
                result.trials.to_string(),
                fmt_float(result.pfa),
                result.resampled.to_string(),
                ao.clone(),
                result.seed.to_string(),
                result.config_hash.clone(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    write_csv(result, std::io::BufWriter::new(std::fs::File::create(path)?))
}

/// Outer-iteration AO traces of every optimized realization.
pub fn emit_trace_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let mut w = writer(std::io::BufWriter::new(std::fs::File::create(path)?));
    w.write_record(TRACE_COLUMNS)?;
    for v in &result.variants {
        for r in &v.realizations {
            for t in &r.ao_trace {
                w.write_record([
                    v.variant.clone(),
                    r.index.to_string(),
                    t.iteration.to_string(),
                    fmt_float(t.scnr),
                    fmt_float(t.sinr_residual),
                    fmt_float(t.power_residual),
                    t.ccp_iterations.to_string(),
                    t.mm_iterations.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
