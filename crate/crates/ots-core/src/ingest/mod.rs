//! Case parsing, MPS export/import, CSV reports.

pub mod case;
pub mod csv;
pub mod mps;

pub use case::{parse_case, serialize_case, CaseFile};
pub use csv::{fmt_float, fmt_open_lines, read_scenarios, read_solution, write_scenarios};
pub use mps::{export_program, parse_mps};

use std::path::Path;

use crate::error::Result;
use crate::solver::SolveReport;

/// One-row CSV summary of a solve: `objective,open_lines,status,node_count,
/// simplex_iters,wall_seconds`. Wall time is redacted to zero unless
/// `timings` is set, so default outputs are byte-reproducible.
pub fn write_csv_report(
    report: &SolveReport,
    open_lines: &[usize],
    path: &Path,
    timings: bool,
) -> Result<()> {
    let header = vec![
        "objective".to_string(),
        "open_lines".to_string(),
        "status".to_string(),
        "node_count".to_string(),
        "simplex_iters".to_string(),
        "wall_seconds".to_string(),
    ];
    let row = vec![
        fmt_float(report.objective),
        fmt_open_lines(open_lines),
        format!("{:?}", report.status),
        report.node_count.to_string(),
        report.simplex_iters.to_string(),
        fmt_float(if timings { report.wall_seconds } else { 0.0 }),
    ];
    csv::write_csv_file(path, &[header, row])
}
