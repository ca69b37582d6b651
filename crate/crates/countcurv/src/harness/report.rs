//! CSV tables, JSON summaries and gnuplot-compatible data files.
//!
//! Output is byte-deterministic for identical inputs: records are written
//! in their (already deterministic) order, floats print with Rust's
//! shortest round-trip formatting, and JSON fields follow struct order.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::estimators::EstimateRecord;
use crate::harness::experiments::HarnessError;
use crate::harness::ratefit::RateFit;

/// Files produced by [`report`].
#[derive(Debug, Clone, Serialize)]
pub struct ReportPaths {
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub gnuplot: PathBuf,
}

/// Fixed estimate-record column set.
pub const CSV_HEADER: &str = "center,r,a,raw_count,r_c,rho,value,oracle,abs_error";

/// Writes the fixed-column CSV of estimate records.
pub fn write_csv(path: impl AsRef<Path>, records: &[EstimateRecord]) -> Result<(), HarnessError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        let oracle = r.oracle_value.map_or(String::new(), |v| format!("{v}"));
        let err = r.abs_error.map_or(String::new(), |v| format!("{v}"));
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.center, r.r, r.a, r.raw_count, r.r_c, r.rho, r.value, oracle, err
        )?;
    }
    Ok(())
}

/// Reads records back from the fixed-column CSV.
pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<EstimateRecord>, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 9 {
            return Err(HarnessError::Precondition(format!(
                "csv line {} has {} columns",
                i + 1,
                cols.len()
            )));
        }
        let parse = |s: &str| -> Result<f64, HarnessError> {
            s.parse()
                .map_err(|_| HarnessError::Precondition(format!("bad number {s:?} on line {}", i + 1)))
        };
        let opt = |s: &str| -> Result<Option<f64>, HarnessError> {
            if s.is_empty() {
                Ok(None)
            } else {
                parse(s).map(Some)
            }
        };
        out.push(EstimateRecord {
            center: cols[0]
                .parse()
                .map_err(|_| HarnessError::Precondition("bad center id".into()))?,
            r: cols[1]
                .parse()
                .map_err(|_| HarnessError::Precondition("bad radius".into()))?,
            a: parse(cols[2])?,
            raw_count: parse(cols[3])?,
            r_c: parse(cols[4])?,
            rho: parse(cols[5])?,
            kind: crate::estimators::EstimatorKind::RNormalized,
            value: parse(cols[6])?,
            oracle_value: opt(cols[7])?,
            abs_error: opt(cols[8])?,
        });
    }
    Ok(out)
}

/// Writes any serializable summary as pretty JSON (stable field order).
pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<(), HarnessError> {
    let mut w = BufWriter::new(File::create(path)?);
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| HarnessError::Precondition(format!("json: {e}")))?;
    w.write_all(text.as_bytes())?;
    w.write_all(b"\n")?;
    Ok(())
}

/// Gnuplot-compatible blocks: error vs r per mesh level, then error vs h.
pub fn write_gnuplot(
    path: impl AsRef<Path>,
    records: &[EstimateRecord],
    fit: &RateFit,
) -> Result<(), HarnessError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# countcurv error curves")?;
    let mut scales: Vec<f64> = records.iter().map(|r| r.a).collect();
    scales.sort_by(|x, y| x.partial_cmp(y).unwrap());
    scales.dedup();
    for a in &scales {
        writeln!(w, "\n\n# error vs r at a = {a}")?;
        writeln!(w, "# r abs_error")?;
        let mut rows: Vec<(u32, f64)> = records
            .iter()
            .filter(|r| r.a == *a)
            .filter_map(|r| r.abs_error.map(|e| (r.r, e)))
            .collect();
        rows.sort_by_key(|(r, _)| *r);
        for (r, e) in rows {
            writeln!(w, "{r} {e}")?;
        }
    }
    writeln!(w, "\n\n# median error vs h (slope {})", fit.slope)?;
    writeln!(w, "# h median_err")?;
    for level in &fit.levels {
        writeln!(w, "{} {}", level.h, level.median_err)?;
    }
    Ok(())
}

/// Full report: CSV + JSON summary + gnuplot data. Refuses empty records.
pub fn report(
    records: &[EstimateRecord],
    fit: &RateFit,
    out_dir: impl AsRef<Path>,
    stem: &str,
) -> Result<ReportPaths, HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::Precondition("refusing to report empty records".into()));
    }
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let paths = ReportPaths {
        csv: dir.join(format!("{stem}.csv")),
        summary: dir.join(format!("{stem}_summary.json")),
        gnuplot: dir.join(format!("{stem}.dat")),
    };
    write_csv(&paths.csv, records)?;
    write_json(&paths.summary, fit)?;
    write_gnuplot(&paths.gnuplot, records, fit)?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::EstimatorKind;
    use crate::harness::ratefit::LevelStat;

    fn sample_records() -> Vec<EstimateRecord> {
        vec![
            EstimateRecord {
                center: 3,
                r: 4,
                a: 0.05,
                raw_count: 51.0,
                r_c: 0.2,
                rho: 1.01,
                kind: EstimatorKind::RNormalized,
                value: -0.4,
                oracle_value: Some(0.2),
                abs_error: Some(0.6),
            },
            EstimateRecord {
                center: 3,
                r: 5,
                a: 0.05,
                raw_count: 80.0,
                r_c: 0.25,
                rho: 0.99,
                kind: EstimatorKind::RNormalized,
                value: 0.3,
                oracle_value: None,
                abs_error: None,
            },
        ]
    }

    fn sample_fit() -> RateFit {
        RateFit {
            levels: vec![LevelStat {
                h: 0.05,
                cells: 100,
                r_policy: 4,
                median_err: 0.6,
                max_err: 0.6,
                argmin_r: 4,
                median_err_at_argmin: 0.6,
            }],
            slope: 0.5,
            intercept: 0.0,
            residuals: vec![0.0],
            c1: 1.0,
            c2: 0.2,
            envelope_coverage: 1.0,
        }
    }

    #[test]
    fn csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let records = sample_records();
        write_csv(&path, &records).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].center, 3);
        assert_eq!(back[0].oracle_value, Some(0.2));
        assert_eq!(back[1].oracle_value, None);
    }

    #[test]
    fn report_refuses_empty() {
        let dir = tempfile::tempdir().unwrap();
        assert!(report(&[], &sample_fit(), dir.path(), "x").is_err());
    }

    #[test]
    fn report_outputs_are_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let records = sample_records();
        let fit = sample_fit();
        let a = report(&records, &fit, dir.path().join("a"), "run").unwrap();
        let b = report(&records, &fit, dir.path().join("b"), "run").unwrap();
        assert_eq!(std::fs::read(&a.csv).unwrap(), std::fs::read(&b.csv).unwrap());
        assert_eq!(
            std::fs::read(&a.summary).unwrap(),
            std::fs::read(&b.summary).unwrap()
        );
        assert_eq!(
            std::fs::read(&a.gnuplot).unwrap(),
            std::fs::read(&b.gnuplot).unwrap()
        );
        // Summary JSON carries the fitted slope and residuals.
        let text = std::fs::read_to_string(&a.summary).unwrap();
        assert!(text.contains("\"slope\""));
        assert!(text.contains("\"residuals\""));
    }
}
