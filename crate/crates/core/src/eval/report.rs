use std::fmt::Write as _;
use std::path::Path;

use super::grid::ConditionReport;
use super::{EvalError, Result};
use crate::siib::relative_gain_pct;

pub const CSV_HEADER: &str = "system,noise,snr_db,n,mean_bits_per_sec,median_bits_per_sec,rel_gain_pct";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Csv,
    Table,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "table" => Ok(ReportFormat::Table),
            other => Err(format!("unknown format '{other}', expected csv or table")),
        }
    }
}

// Adding zero turns -0.0 into 0.0 so it prints without a sign.
fn f4(x: f64) -> String {
    format!("{:.4}", x + 0.0)
}

/// Gain of every cell's mean over the baseline's mean in the same condition,
/// in cell order. `None` where no gain is defined.
fn gains(report: &ConditionReport, baseline: Option<&str>) -> Result<Vec<Option<f64>>> {
    let Some(base) = baseline else {
        return Ok(vec![None; report.cells.len()]);
    };
    if !report.is_empty() && !report.systems.iter().any(|s| s == base) {
        return Err(EvalError::UnknownSystem(base.to_string()));
    }
    Ok(report
        .cells
        .iter()
        .map(|c| {
            let b = report.cell(base, &c.condition)?;
            relative_gain_pct(c.mean, b.mean).ok()
        })
        .collect())
}

/// Renders the report. CSV has one row per (system, condition) cell; the
/// table is pivoted with systems as rows and conditions as columns.
pub fn emit_report(report: &ConditionReport, format: ReportFormat, baseline: Option<&str>) -> Result<String> {
    let gains = gains(report, baseline)?;
    Ok(match format {
        ReportFormat::Csv => csv(report, &gains),
        ReportFormat::Table => table(report, &gains),
    })
}

fn csv(report: &ConditionReport, gains: &[Option<f64>]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (cell, gain) in report.cells.iter().zip(gains) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            cell.system,
            cell.condition.noise_type,
            f4(cell.condition.snr_db),
            cell.scores.len(),
            f4(cell.mean),
            f4(cell.median),
            gain.map(f4).unwrap_or_default()
        );
    }
    out
}

fn table(report: &ConditionReport, gains: &[Option<f64>]) -> String {
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut header = vec!["system".to_string()];
    header.extend(report.conditions.iter().map(|c| c.to_string()));
    rows.push(header);
    for system in &report.systems {
        for (label, median) in [("mean", false), ("median", true)] {
            let mut row = vec![format!("{system} ({label})")];
            for cond in &report.conditions {
                let idx = report.cells.iter().position(|c| c.system == *system && c.condition == *cond);
                let text = match idx {
                    Some(i) => {
                        let c = &report.cells[i];
                        let v = if median { c.median } else { c.mean };
                        match (median, gains[i]) {
                            (false, Some(g)) => format!("{v:.2} ({:.1}%)", g + 0.0),
                            _ => format!("{v:.2}"),
                        }
                    }
                    None => "-".to_string(),
                };
                row.push(text);
            }
            rows.push(row);
        }
    }
    let cols = rows[0].len();
    let widths: Vec<usize> = (0..cols)
        .map(|j| rows.iter().map(|r| r[j].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = format!(
        "SIIB-Gauss bits/s, {} utterances, seed {}\n",
        report.utterances.len(),
        report.seed
    );
    for (i, row) in rows.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(j, (cell, w))| {
                if j == 0 {
                    format!("{cell:<w$}")
                } else {
                    format!("{cell:>w$}")
                }
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            let total = widths.iter().sum::<usize>() + 2 * (cols - 1);
            out.push_str(&"-".repeat(total));
            out.push('\n');
        }
    }
    out
}

/// [`emit_report`] straight to a file.
pub fn write_report(
    report: &ConditionReport,
    format: ReportFormat,
    baseline: Option<&str>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let text = emit_report(report, format, baseline)?;
    std::fs::write(path, text).map_err(|source| EvalError::Unwritable { path: path.to_path_buf(), source })
}

/// Seed, corpus manifest and configuration of a run, as TOML.
pub fn report_metadata(report: &ConditionReport) -> String {
    let mut out = format!("seed = {}\nutterances = [", report.seed);
    let names: Vec<String> = report.utterances.iter().map(|u| format!("{u:?}")).collect();
    out.push_str(&names.join(", "));
    out.push_str("]\n\n");
    out.push_str(&report.config);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::grid::Cell;
    use crate::noise::{NoiseCondition, NoiseType};

    fn report() -> ConditionReport {
        let c0 = NoiseCondition::new(NoiseType::Ssn, 0.0);
        let c1 = NoiseCondition::new(NoiseType::Csn, -7.0);
        let cell = |s: &str, c, v: f64| Cell {
            system: s.into(),
            condition: c,
            scores: vec![v, v],
            mean: v,
            median: v,
        };
        ConditionReport {
            systems: vec!["unprocessed".into(), "ssdrc".into()],
            conditions: vec![c0, c1],
            utterances: vec!["a.wav".into(), "b.wav".into()],
            cells: vec![
                cell("unprocessed", c0, 42.43),
                cell("unprocessed", c1, 10.0),
                cell("ssdrc", c0, 88.35),
                cell("ssdrc", c1, 0.0),
            ],
            seed: 3,
            config: String::new(),
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        let r = ConditionReport::default();
        assert_eq!(
            emit_report(&r, ReportFormat::Csv, Some("unprocessed")).unwrap(),
            format!("{CSV_HEADER}\n")
        );
    }

    #[test]
    fn csv_rows() {
        let text = emit_report(&report(), ReportFormat::Csv, Some("unprocessed")).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "unprocessed,SSN,0.0000,2,42.4300,42.4300,0.0000");
        assert_eq!(lines[3], "ssdrc,SSN,0.0000,2,88.3500,88.3500,108.2253");
        assert_eq!(lines[4], "ssdrc,CSN,-7.0000,2,0.0000,0.0000,-100.0000");
        assert!(!text.contains('\r'));
        let none = emit_report(&report(), ReportFormat::Csv, None).unwrap();
        assert!(none.lines().nth(1).unwrap().ends_with(",42.4300,"));
    }

    #[test]
    fn table_shows_gains() {
        let text = emit_report(&report(), ReportFormat::Table, Some("unprocessed")).unwrap();
        assert!(text.contains("108.2%"), "{text}");
        assert!(text.contains("(0.0%)"));
        assert!(text.lines().nth(1).unwrap().starts_with("system"));
    }

    #[test]
    fn unknown_baseline_and_bad_path() {
        assert!(matches!(
            emit_report(&report(), ReportFormat::Csv, Some("tts")),
            Err(EvalError::UnknownSystem(_))
        ));
        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("missing").join("r.csv");
        assert!(matches!(
            write_report(&report(), ReportFormat::Csv, None, &bad),
            Err(EvalError::Unwritable { .. })
        ));
        let good = dir.path().join("r.csv");
        write_report(&report(), ReportFormat::Csv, None, &good).unwrap();
        assert!(std::fs::read_to_string(good).unwrap().starts_with(CSV_HEADER));
    }

    #[test]
    fn metadata() {
        let m = report_metadata(&report());
        assert!(m.starts_with("seed = 3\nutterances = [\"a.wav\", \"b.wav\"]"));
        assert!(toml::from_str::<toml::Table>(&m).is_ok());
    }
}
