use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::Result;
use crate::metrics::Ospa;
use crate::sim::runner::{mean_series, summarize, ExperimentResult, FilterKind};

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub case: String,
    pub filter: &'static str,
    pub runs: usize,
    pub mean: Ospa,
}

/// `case,filter,run,t,ospa,ospa_loc,ospa_card`, one line per run and scan.
pub fn write_series_csv(path: &Path, case: &str, result: &ExperimentResult) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "case,filter,run,t,ospa,ospa_loc,ospa_card")?;
    for kind in [FilterKind::Hisp, FilterKind::Phd] {
        for run in &result.runs {
            if let Some(series) = run.series(kind) {
                for (t, o) in result.times.iter().zip(series) {
                    writeln!(
                        w,
                        "{case},{},{},{t},{:.6},{:.6},{:.6}",
                        kind.label(),
                        run.run,
                        o.total,
                        o.localisation,
                        o.cardinality
                    )?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// `case,filter,t,ospa,ospa_loc,ospa_card`: the mean across runs.
pub fn write_mean_csv(path: &Path, case: &str, result: &ExperimentResult) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "case,filter,t,ospa,ospa_loc,ospa_card")?;
    for kind in [FilterKind::Hisp, FilterKind::Phd] {
        if let Some(series) = mean_series(result, kind) {
            for (t, o) in result.times.iter().zip(&series) {
                writeln!(
                    w,
                    "{case},{},{t},{:.6},{:.6},{:.6}",
                    kind.label(),
                    o.total,
                    o.localisation,
                    o.cardinality
                )?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// `case,filter,runs,burn_in_steps,ospa,ospa_loc,ospa_card`: time-averaged
/// after the burn-in.
pub fn write_summary_csv(
    path: &Path,
    case: &str,
    result: &ExperimentResult,
    burn_in: usize,
) -> Result<Vec<SummaryRow>> {
    let rows: Vec<SummaryRow> = summarize(result, burn_in)
        .into_iter()
        .map(|(k, mean)| SummaryRow {
            case: case.to_string(),
            filter: k.label(),
            runs: result.runs.len(),
            mean,
        })
        .collect();
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "case,filter,runs,burn_in_steps,ospa,ospa_loc,ospa_card")?;
    for r in &rows {
        writeln!(
            w,
            "{},{},{},{burn_in},{:.6},{:.6},{:.6}",
            r.case, r.filter, r.runs, r.mean.total, r.mean.localisation, r.mean.cardinality
        )?;
    }
    w.flush()?;
    Ok(rows)
}
