//! On-disk interchange formats: trajectory and matching-error CSV, plus the
//! JSON sidecar of a scalar run. Writers produce deterministic shortest
//! round-trip decimals; readers validate headers and reject malformed rows
//! instead of guessing.

use nalgebra::DVector;
use serde::Serialize;

use crate::asymptotic::MatchingRow;
use crate::comparison::{ScalarStatus, ScalarTrajectory};
use crate::error::{Error, Result};

/// Shortest round-trip decimal; scientific notation outside a sane window so
/// subnormal-range values do not expand to hundreds of digits.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 1e-4 && v.abs() < 1e16 {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// `t,norm` rows for a vector trajectory.
pub fn norm_csv_string(times: &[f64], norms: &[f64]) -> String {
    series_csv("t,norm", times, norms)
}

/// `t,g` rows for a scalar trajectory.
pub fn scalar_csv_string(times: &[f64], values: &[f64]) -> String {
    series_csv("t,g", times, values)
}

fn series_csv(header: &str, times: &[f64], values: &[f64]) -> String {
    debug_assert_eq!(times.len(), values.len());
    let mut out = String::with_capacity(24 * times.len() + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for (t, v) in times.iter().zip(values) {
        out.push_str(&fmt_f64(*t));
        out.push(',');
        out.push_str(&fmt_f64(*v));
        out.push('\n');
    }
    out
}

/// `t,u_1,...,u_n` rows for full state output.
pub fn states_csv_string(times: &[f64], states: &[DVector<f64>]) -> String {
    let dim = states.first().map(|s| s.len()).unwrap_or(0);
    let mut out = String::new();
    out.push('t');
    for i in 1..=dim {
        out.push_str(&format!(",u_{i}"));
    }
    out.push('\n');
    for (t, s) in times.iter().zip(states) {
        out.push_str(&fmt_f64(*t));
        for v in s.iter() {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

/// `t,error,bound,ratio` rows of a matching-error table.
pub fn matching_csv_string(rows: &[MatchingRow]) -> String {
    let mut out = String::from("t,error,bound,ratio\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(r.t),
            fmt_f64(r.error),
            fmt_f64(r.bound),
            fmt_f64(r.ratio)
        ));
    }
    out
}

fn parse_field(raw: &str, line: usize) -> Result<f64> {
    raw.trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidParameter(format!("line {line}: bad number {raw:?}")))
}

/// Parse a two-column series (`t,norm` or `t,g`); the header must match.
pub fn parse_series_csv(text: &str, expected_header: &str) -> Result<Vec<(f64, f64)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == expected_header => {}
        Some((_, h)) => {
            return Err(Error::InvalidParameter(format!(
                "header mismatch: expected {expected_header:?}, got {h:?}"
            )))
        }
        None => return Err(Error::InvalidParameter("empty CSV".into())),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::InvalidParameter(format!("line {}: expected 2 fields", i + 1)));
        };
        rows.push((parse_field(a, i + 1)?, parse_field(b, i + 1)?));
    }
    if rows.is_empty() {
        return Err(Error::InvalidParameter("CSV has a header but no rows".into()));
    }
    Ok(rows)
}

/// Parse a `t,error,bound,ratio` table.
pub fn parse_matching_csv(text: &str) -> Result<Vec<MatchingRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "t,error,bound,ratio" => {}
        Some((_, h)) => {
            return Err(Error::InvalidParameter(format!(
                "header mismatch: expected \"t,error,bound,ratio\", got {h:?}"
            )))
        }
        None => return Err(Error::InvalidParameter("empty CSV".into())),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::InvalidParameter(format!("line {}: expected 4 fields", i + 1)));
        }
        rows.push(MatchingRow {
            t: parse_field(fields[0], i + 1)?,
            error: parse_field(fields[1], i + 1)?,
            bound: parse_field(fields[2], i + 1)?,
            ratio: parse_field(fields[3], i + 1)?,
        });
    }
    if rows.is_empty() {
        return Err(Error::InvalidParameter("CSV has a header but no rows".into()));
    }
    Ok(rows)
}

#[derive(Serialize)]
struct ScalarSidecar<'a> {
    status: &'a str,
    tau: Option<f64>,
    steps_accepted: usize,
    steps_rejected: usize,
}

/// JSON sidecar `{status, tau, steps_accepted, steps_rejected}` of a scalar run.
pub fn scalar_sidecar_json(traj: &ScalarTrajectory) -> String {
    let (status, tau) = match traj.status {
        ScalarStatus::Completed => ("Completed", None),
        ScalarStatus::BlowUp { tau } => ("BlowUp", Some(tau)),
    };
    let doc = ScalarSidecar {
        status,
        tau,
        steps_accepted: traj.diagnostics.steps_accepted,
        steps_rejected: traj.diagnostics.steps_rejected,
    };
    serde_json::to_string_pretty(&doc).expect("sidecar serialization cannot fail")
}
