//! Dataset ingestion and run-report persistence.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::Metrics;
use crate::linalg::DataMatrix;
use crate::pipeline::{FitConfig, FitReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Whitespace,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "whitespace" | "ws" | "txt" => Ok(Format::Whitespace),
            other => Err(Error::invalid(format!("unknown format '{other}'"))),
        }
    }
}

fn split_fields(line: &str, format: Format) -> Vec<&str> {
    match format {
        Format::Csv => line.split(',').map(str::trim).collect(),
        Format::Whitespace => line.split_whitespace().collect(),
    }
}

/// Parses a numeric table. Blank lines are ignored; a first line that does
/// not parse as numbers is taken as a header.
pub fn parse_matrix(text: &str, format: Format) -> Result<DataMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    let mut seen_first = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields = split_fields(line, format);
        let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        let first = !seen_first;
        seen_first = true;
        let values = match parsed {
            Ok(v) => v,
            Err(_) if first => continue,
            Err(_) => {
                let bad = fields.iter().find(|f| f.parse::<f64>().is_err()).unwrap_or(&"");
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("non-numeric cell '{bad}'"),
                });
            }
        };
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("non-finite value {bad}"),
            });
        }
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected {w} columns, found {}", values.len()),
                });
            }
            _ => {}
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "no data rows".into(),
        });
    }
    let (n, d) = (rows.len(), rows[0].len());
    DataMatrix::new(DMatrix::from_fn(n, d, |i, j| rows[i][j]))
}

pub fn load_matrix(path: impl AsRef<Path>, format: Format) -> Result<DataMatrix> {
    parse_matrix(&fs::read_to_string(path)?, format)
}

/// Parses one integer label per line, with an optional header.
pub fn parse_labels(text: &str) -> Result<Vec<i64>> {
    let mut out = Vec::new();
    let mut seen_first = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim().trim_end_matches(',');
        if line.is_empty() {
            continue;
        }
        let first = !seen_first;
        seen_first = true;
        match parse_label(line) {
            Some(v) => out.push(v),
            None if first => continue,
            None => {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("'{line}' is not an integer label"),
                })
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "no labels".into(),
        });
    }
    Ok(out)
}

fn parse_label(s: &str) -> Option<i64> {
    if let Ok(v) = s.parse::<i64>() {
        return Some(v);
    }
    // Integral floats such as "3.0" are accepted.
    let f = s.parse::<f64>().ok()?;
    (f.is_finite() && f.fract() == 0.0 && f.abs() < 9.0e15).then_some(f as i64)
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<i64>> {
    parse_labels(&fs::read_to_string(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub outer_iters: usize,
    pub converged: bool,
    pub wall_time: f64,
    pub objective_trace: Vec<f64>,
}

/// Everything persisted about one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: FitConfig,
    pub n_samples: usize,
    pub n_clusters: usize,
    pub summary: FitSummary,
    /// 0-based cluster id per input row, in input order.
    pub assignments: Vec<usize>,
    pub metrics: Option<Metrics>,
    /// Unix seconds.
    pub started_at: u64,
    pub finished_at: u64,
}

impl RunRecord {
    pub fn from_report(report: &FitReport, metrics: Option<Metrics>, started_at: u64, finished_at: u64) -> Self {
        Self {
            config: report.config.clone(),
            n_samples: report.assignment.len(),
            n_clusters: report.assignment.n_clusters(),
            summary: FitSummary {
                outer_iters: report.outer_iters,
                converged: report.converged,
                wall_time: report.wall_time,
                objective_trace: report.objective_trace.clone(),
            },
            assignments: report.assignment.labels().to_vec(),
            metrics,
            started_at,
            finished_at,
        }
    }
}

pub fn save_report(record: &RunRecord, path: impl AsRef<Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(record)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_report(path: impl AsRef<Path>) -> Result<RunRecord> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// One cluster id per line.
pub fn format_assignments(labels: &[usize]) -> String {
    let mut out = String::with_capacity(labels.len() * 3);
    for l in labels {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_csv() {
        let x = parse_matrix("0,1\n2,3\n", Format::Csv).unwrap();
        assert_eq!(x.as_matrix(), &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 3.0]));
    }

    #[test]
    fn header_is_skipped() {
        let x = parse_matrix("f1,f2\n0,1\n2,3\n", Format::Csv).unwrap();
        assert_eq!(x.n_samples(), 2);
        let x = parse_matrix("a b c\n1 2 3\n4  5\t6\n", Format::Whitespace).unwrap();
        assert_eq!(x.as_matrix()[(1, 2)], 6.0);
    }

    #[test]
    fn ragged_row_reports_line() {
        match parse_matrix("0,1\n2\n", Format::Csv) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_and_empty() {
        assert!(matches!(parse_matrix("0,1\n2,x\n", Format::Csv), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_matrix("", Format::Csv), Err(Error::Parse { .. })));
        assert!(matches!(parse_matrix("h1,h2\n", Format::Csv), Err(Error::Parse { .. })));
    }

    #[test]
    fn labels_with_header() {
        assert_eq!(parse_labels("label\n3\n1\n3.0\n").unwrap(), vec![3, 1, 3]);
        assert!(matches!(parse_labels("1\nfoo\n"), Err(Error::Parse { line: 2, .. })));
    }
}
