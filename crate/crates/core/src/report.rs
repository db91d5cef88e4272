//! Text renderings: CSV tables and `key=value` point reports.

use std::fmt::Write;

use crate::bayes::BayesTrace;
use crate::scan::{scaling_slopes, PointEvaluation, ScalingRow, ScanRow};

pub const SCAN_COLUMNS: [&str; 18] = [
    "axis1",
    "axis2",
    "q11",
    "q12",
    "q22",
    "delta",
    "mu",
    "mu_prime",
    "mu_dblprime",
    "mu_tilde",
    "gamma_opt",
    "strategy",
    "region",
    "ratio",
    "eq7_value",
    "eq7_satisfied",
    "singular",
    "degenerate_flag",
];

pub const SCALING_COLUMNS: [&str; 5] = ["L", "mu", "mu_tilde", "gamma_opt", "region"];

pub const TRACE_COLUMNS: [&str; 8] = [
    "shots_used",
    "est1",
    "est2",
    "var1",
    "var2",
    "scaled_error",
    "mu",
    "mu_tilde",
];

/// Twelve significant digits in scientific notation; `inf`, `-inf`, `nan` otherwise.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.11e}")
    }
}

fn header(columns: &[&str]) -> String {
    let mut s = columns.join(",");
    s.push('\n');
    s
}

pub fn scan_csv(rows: &[ScanRow]) -> String {
    let mut out = header(&SCAN_COLUMNS);
    for row in rows {
        let e = &row.eval;
        let r = &e.report;
        let fields = [
            fmt_float(row.axis1),
            fmt_float(row.axis2),
            fmt_float(e.qfim.q11),
            fmt_float(e.qfim.q12),
            fmt_float(e.qfim.q22),
            fmt_float(e.delta.unwrap_or(f64::NAN)),
            fmt_float(r.mu),
            fmt_float(r.mu_prime),
            fmt_float(r.mu_dblprime),
            fmt_float(r.mu_tilde),
            fmt_float(r.gamma_opt),
            r.strategy.to_string(),
            r.region.to_string(),
            fmt_float(r.ratio),
            fmt_float(r.eq7_value),
            r.eq7_satisfied.to_string(),
            r.singular.to_string(),
            e.degenerate.to_string(),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Scaling table followed by a `#` line with the log-log slopes.
pub fn scaling_csv(rows: &[ScalingRow]) -> String {
    let mut out = header(&SCALING_COLUMNS);
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.length,
            fmt_float(r.mu),
            fmt_float(r.mu_tilde),
            fmt_float(r.gamma_opt),
            r.region
        );
    }
    let (s_mu, s_mt) = scaling_slopes(rows);
    let _ = writeln!(
        out,
        "# slope_mu={} slope_mu_tilde={}",
        fmt_float(s_mu),
        fmt_float(s_mt)
    );
    out
}

pub fn trace_csv(trace: &BayesTrace) -> String {
    let mut out = header(&TRACE_COLUMNS);
    for r in &trace.rows {
        let fields = [
            r.shots_used.to_string(),
            fmt_float(r.est1),
            fmt_float(r.est2),
            fmt_float(r.var1),
            fmt_float(r.var2),
            fmt_float(r.scaled_error),
            fmt_float(r.mu),
            fmt_float(r.mu_tilde),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Every report field plus the QFIM entries and curvature, one per line.
pub fn point_report(e: &PointEvaluation) -> String {
    let r = &e.report;
    let pairs = [
        ("q11", fmt_float(e.qfim.q11)),
        ("q12", fmt_float(e.qfim.q12)),
        ("q22", fmt_float(e.qfim.q22)),
        ("delta", fmt_float(e.delta.unwrap_or(f64::NAN))),
        ("mu", fmt_float(r.mu)),
        ("mu_prime", fmt_float(r.mu_prime)),
        ("mu_dblprime", fmt_float(r.mu_dblprime)),
        ("mu_tilde", fmt_float(r.mu_tilde)),
        ("gamma_opt", fmt_float(r.gamma_opt)),
        ("strategy", r.strategy.to_string()),
        ("region", r.region.to_string()),
        ("ratio", fmt_float(r.ratio)),
        ("eq7_value", fmt_float(r.eq7_value)),
        ("eq7_satisfied", r.eq7_satisfied.to_string()),
        ("singular", r.singular.to_string()),
        ("degenerate_flag", e.degenerate.to_string()),
        ("hcrb", fmt_float(e.hcrb().unwrap_or(f64::NAN))),
    ];
    let mut out = String::new();
    for (k, v) in pairs {
        let _ = writeln!(out, "{k}={v}");
    }
    out
}
