use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::Aggregate;
use crate::error::Result;
use crate::linalg::Vector;

/// Shortest round-trip scientific notation, e.g. `1.5e-3`.
pub fn format_float(v: f64) -> String {
    format!("{v:e}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// `iteration,mean_error,q05,q95,bound`.
pub fn write_error_csv(path: &Path, aggregate: &Aggregate, bound: &[f64]) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "iteration,mean_error,q05,q95,bound")?;
    for (k, mean) in aggregate.mean.iter().enumerate() {
        writeln!(
            out,
            "{k},{},{},{},{}",
            format_float(*mean),
            format_float(aggregate.q05[k]),
            format_float(aggregate.q95[k]),
            format_float(bound[k])
        )?;
    }
    out.flush()?;
    Ok(())
}

/// `iteration,node_0,…,node_{n-1}`: one row per recorded iterate.
pub fn write_collapse_csv(path: &Path, values: &[Vector]) -> Result<()> {
    let mut out = create(path)?;
    let n = values.first().map_or(0, Vector::len);
    write!(out, "iteration")?;
    for i in 0..n {
        write!(out, ",node_{i}")?;
    }
    writeln!(out)?;
    for (k, c) in values.iter().enumerate() {
        write!(out, "{k}")?;
        for v in c.iter() {
            write!(out, ",{}", format_float(*v))?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// `iteration,{label}_mean…,{label}_bound…`.
pub(crate) fn write_compare_csv(path: &Path, series: &[(String, Aggregate, Vec<f64>)]) -> Result<()> {
    let mut out = create(path)?;
    write!(out, "iteration")?;
    for (label, _, _) in series {
        write!(out, ",{label}_mean")?;
    }
    for (label, _, _) in series {
        write!(out, ",{label}_bound")?;
    }
    writeln!(out)?;
    let len = series.first().map_or(0, |(_, a, _)| a.mean.len());
    for k in 0..len {
        write!(out, "{k}")?;
        for (_, a, _) in series {
            write!(out, ",{}", format_float(a.mean[k]))?;
        }
        for (_, _, b) in series {
            write!(out, ",{}", format_float(b[k]))?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}
