//! RFC-4180 CSV output with fixed float formatting, plus the scenario and
//! solution-file readers.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Nine fractional digits, matching the report format everywhere.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        return "nan".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    format!("{v:.9}")
}

fn quote(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') || field.contains('\r') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

pub fn write_records(records: &[Vec<String>]) -> String {
    let mut out = String::new();
    for rec in records {
        let line: Vec<String> = rec.iter().map(|f| quote(f)).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    out
}

pub fn write_csv_file(path: &Path, records: &[Vec<String>]) -> Result<()> {
    std::fs::write(path, write_records(records)).map_err(Error::Io)
}

/// Open-line sets are one field, semicolon-joined, 1-based.
pub fn fmt_open_lines(open: &[usize]) -> String {
    open.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}

/// Scenario dump: K columns, one scenario per row, no header.
pub fn write_scenarios(scenarios: &[Vec<f64>]) -> String {
    let records: Vec<Vec<String>> = scenarios
        .iter()
        .map(|s| s.iter().map(|&v| fmt_float(v)).collect())
        .collect();
    write_records(&records)
}

pub fn read_scenarios(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        match row {
            Ok(r) => out.push(r),
            Err(e) => {
                return Err(Error::Schema {
                    path: format!("scenario line {}", lineno + 1),
                    message: e.to_string(),
                })
            }
        }
    }
    if let Some(k) = out.first().map(|r| r.len()) {
        if out.iter().any(|r| r.len() != k) {
            return Err(Error::Schema {
                path: "scenarios".to_string(),
                message: "ragged scenario rows".to_string(),
            });
        }
    }
    Ok(out)
}

/// Solution files re-imported from external solvers: `name,value` rows with
/// an optional header.
pub fn read_solution(text: &str) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (name, value) = line.split_once(',').ok_or_else(|| Error::Schema {
            path: format!("solution line {}", lineno + 1),
            message: "expected `name,value`".to_string(),
        })?;
        if lineno == 0 && value.trim().parse::<f64>().is_err() {
            continue; // header row
        }
        let v: f64 = value.trim().parse().map_err(|e: std::num::ParseFloatError| Error::Schema {
            path: format!("solution line {}", lineno + 1),
            message: e.to_string(),
        })?;
        out.push((name.trim().to_string(), v));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoting_follows_rfc4180() {
        let recs = vec![vec!["a,b".to_string(), "plain".to_string(), "say \"hi\"".to_string()]];
        assert_eq!(write_records(&recs), "\"a,b\",plain,\"say \"\"hi\"\"\"\n");
    }

    #[test]
    fn float_format_nine_decimals() {
        assert_eq!(fmt_float(364.1), "364.100000000");
        assert_eq!(fmt_float(0.0), "0.000000000");
    }

    #[test]
    fn scenario_roundtrip() {
        let s = vec![vec![0.5, -1.0], vec![1.25, 2.0]];
        let text = write_scenarios(&s);
        let back = read_scenarios(&text).unwrap();
        assert_eq!(back.len(), 2);
        assert!((back[1][0] - 1.25).abs() < 1e-12);
    }
}
