//! CSV and JSON output files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use hybridsim::harness::{BenchRow, ConvergenceRow, EnsembleResult};
use hybridsim::output::format_g;
use hybridsim::ReactionNetwork;
use serde::Serialize;

use crate::CliError;

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// `replicate,<species...>`, one row per successful replicate.
pub(crate) fn write_final_states(
    path: &Path,
    net: &ReactionNetwork,
    result: &EnsembleResult,
) -> Result<(), CliError> {
    let mut out = create(path)?;
    write!(out, "replicate")?;
    for sp in net.species() {
        write!(out, ",{}", sp.name)?;
    }
    writeln!(out)?;
    for (id, s) in result.replicate_ids.iter().zip(&result.final_states) {
        write!(out, "{id}")?;
        for v in net.values(s) {
            write!(out, ",{}", format_g(v, 10))?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

pub(crate) struct HistogramRow {
    pub species: String,
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
    pub frequency: f64,
}

pub(crate) fn write_histograms(path: &Path, rows: &[HistogramRow]) -> Result<(), CliError> {
    let mut out = create(path)?;
    writeln!(out, "species,lo,hi,count,frequency")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.species,
            format_g(r.lo, 10),
            format_g(r.hi, 10),
            r.count,
            format_g(r.frequency, 10)
        )?;
    }
    out.flush()?;
    Ok(())
}

pub(crate) fn write_convergence(path: &Path, rows: &[ConvergenceRow]) -> Result<(), CliError> {
    let mut out = create(path)?;
    writeln!(out, "h,mse,n")?;
    for r in rows {
        writeln!(out, "{},{},{}", format_g(r.h, 10), format_g(r.mse, 10), r.n)?;
    }
    out.flush()?;
    Ok(())
}

pub(crate) fn write_bench(path: &Path, rows: &[BenchRow]) -> Result<(), CliError> {
    let mut out = create(path)?;
    writeln!(out, "h,t_ssa,t_hybrid,ratio")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            format_g(r.h, 10),
            format_g(r.t_ssa, 10),
            format_g(r.t_hybrid, 10),
            format_g(r.ratio, 10)
        )?;
    }
    out.flush()?;
    Ok(())
}
