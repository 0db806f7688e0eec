//! CSV and JSON artifacts. Floats are written with 17 significant digits so
//! that re-reading reproduces every value bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::analysis::{ConvergenceRow, DependenceReport, DiagnosticsRecord};
use crate::error::{Error, Result};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CONVERGENCE_FILE: &str = "convergence.csv";
pub const DEPENDENCE_FILE: &str = "dependence.csv";
pub const TIMING_FILE: &str = "timing.json";

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_row(values: impl IntoIterator<Item = String>) -> String {
    let mut s = values.into_iter().collect::<Vec<_>>().join(",");
    s.push('\n');
    s
}

pub fn trajectory_csv(records: &[DiagnosticsRecord]) -> String {
    let mut out = csv_row(DiagnosticsRecord::header().into_iter().map(String::from));
    for r in records {
        out.push_str(&csv_row(r.values().into_iter().map(fmt_f64)));
    }
    out
}

/// Inverse of [`trajectory_csv`]; the header must match exactly.
pub fn parse_trajectory_csv(text: &str) -> Result<Vec<DiagnosticsRecord>> {
    let mut lines = text.lines().enumerate();
    let expected = DiagnosticsRecord::header().join(",");
    match lines.next() {
        Some((_, h)) if h.trim() == expected => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("trajectory header must be {expected:?}"),
            })
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let vals = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                line: i + 1,
                message: format!("bad number: {e}"),
            })?;
        out.push(DiagnosticsRecord::from_values(&vals).ok_or_else(|| Error::Parse {
            line: i + 1,
            message: format!("expected {} columns, found {}", DiagnosticsRecord::header().len(), vals.len()),
        })?);
    }
    Ok(out)
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from("parameter,error,rate\n");
    for r in rows {
        let rate = r.rate.map(fmt_f64).unwrap_or_default();
        let _ = writeln!(out, "{},{},{}", fmt_f64(r.parameter), fmt_f64(r.error), rate);
    }
    out
}

pub fn dependence_csv(rows: &[DependenceReport]) -> String {
    let mut out = String::from(
        "lhs,phi_linf_vstar,phi_l2_v,w_h1_h,w_linf_v,f_l2_vstar_l1,f_l1_sqrt,g_conv_l2_h,empirical_k2,xi1_l1_q,xi2_l1_q\n",
    );
    for r in rows {
        let c = &r.rhs_components;
        let vals = [
            r.lhs,
            r.phi_linf_vstar,
            r.phi_l2_v,
            r.w_h1_h,
            r.w_linf_v,
            c.f_l2_vstar_l1,
            c.f_l1_sqrt,
            c.g_conv_l2_h,
        ];
        let mut fields: Vec<String> = vals.iter().map(|v| fmt_f64(*v)).collect();
        fields.push(r.empirical_k2.map(fmt_f64).unwrap_or_default());
        fields.extend(r.xi_l1_q.iter().map(|v| fmt_f64(*v)));
        out.push_str(&csv_row(fields));
    }
    out
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("cannot serialize: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::NormInventory;

    fn record(t: f64) -> DiagnosticsRecord {
        DiagnosticsRecord {
            t,
            mean_phi: 0.1 + 0.2,
            mean_phi_exact: 1.0 / 3.0,
            energy: -2.5e-17,
            dissipation_mu: 1e300,
            dissipation_w: 0.0,
            source_power: std::f64::consts::PI,
            norms: NormInventory {
                xi_l6: f64::MIN_POSITIVE,
                ..Default::default()
            },
        }
    }

    #[test]
    fn trajectory_round_trip_is_exact() {
        let recs = vec![record(0.0), record(0.1)];
        let text = trajectory_csv(&recs);
        assert_eq!(parse_trajectory_csv(&text).unwrap(), recs);
    }

    #[test]
    fn malformed_rows_report_line() {
        let mut text = trajectory_csv(&[record(0.0)]);
        text.push_str("1.0,2.0\n");
        match parse_trajectory_csv(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(parse_trajectory_csv("t,x\n").is_err());
    }

    #[test]
    fn convergence_table_layout() {
        let rows = [
            ConvergenceRow { parameter: 0.1, error: 1.0, rate: None },
            ConvergenceRow { parameter: 0.05, error: 0.5, rate: Some(1.0) },
        ];
        let text = convergence_csv(&rows);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "parameter,error,rate");
        assert!(lines[1].ends_with(','));
        assert_eq!(lines[2].split(',').count(), 3);
    }
}
