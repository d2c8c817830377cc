//! CSV, summary table and run manifest.

use std::fmt::Write as _;

use irsjam::sim::{ScenarioConfig, SweepResult};

use crate::config::echo;

pub const CSV_HEADER: &str = "axis_name,axis_value,scheme,mean_sum_rate_bps_hz,stderr_sum_rate,\
mean_i_over_n_db,stderr_i_over_n_db,n_trials,n_resamples";

/// C `%.9g`: nine significant digits, trailing zeros removed, exponent form
/// outside `[1e-4, 1e9)`.
pub fn fmt_g9(x: f64) -> String {
    const P: i32 = 9;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..P).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (P - 1 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub axis_name: &'static str,
    pub axis_value: f64,
    pub scheme: String,
    pub mean_sum_rate: f64,
    pub stderr_sum_rate: f64,
    pub mean_i_over_n_db: f64,
    pub stderr_i_over_n_db: f64,
    pub n_trials: usize,
    pub n_resamples: usize,
}

/// Rows sorted by axis value, then scheme id.
pub fn rows(result: &SweepResult) -> Vec<Row> {
    let mut rows: Vec<Row> = result
        .points
        .iter()
        .flat_map(|p| {
            p.series.iter().map(move |s| Row {
                axis_name: result.axis.name(),
                axis_value: p.axis_value,
                scheme: s.scheme.id(),
                mean_sum_rate: s.mean_sum_rate,
                stderr_sum_rate: s.stderr_sum_rate,
                mean_i_over_n_db: s.mean_i_over_n_db,
                stderr_i_over_n_db: s.stderr_i_over_n_db,
                n_trials: s.n_trials,
                n_resamples: s.n_resamples,
            })
        })
        .collect();
    rows.sort_by(|a, b| {
        a.axis_value
            .total_cmp(&b.axis_value)
            .then_with(|| a.scheme.cmp(&b.scheme))
    });
    rows
}

pub fn to_csv(result: &SweepResult) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows(result) {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.axis_name,
            fmt_g9(r.axis_value),
            r.scheme,
            fmt_g9(r.mean_sum_rate),
            fmt_g9(r.stderr_sum_rate),
            fmt_g9(r.mean_i_over_n_db),
            fmt_g9(r.stderr_i_over_n_db),
            r.n_trials,
            r.n_resamples
        );
    }
    s
}

/// Fixed-width table for the terminal.
pub fn summary(result: &SweepResult) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>12}  {:<10}  {:>18}  {:>18}  {:>7}",
        result.axis.name(),
        "scheme",
        "sum rate [b/s/Hz]",
        "I/N [dB]",
        "trials"
    );
    for r in rows(result) {
        let _ = writeln!(
            s,
            "{:>12}  {:<10}  {:>9.3} ± {:<6.3}  {:>9.2} ± {:<6.2}  {:>7}",
            fmt_g9(r.axis_value),
            r.scheme,
            r.mean_sum_rate,
            r.stderr_sum_rate,
            r.mean_i_over_n_db,
            r.stderr_i_over_n_db,
            r.n_trials
        );
    }
    s
}

/// Provenance of a run. Rendered as a scenario file whose comment header
/// carries the version, seed, timestamp and output paths; the body alone
/// reproduces every output.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config: ScenarioConfig,
    pub version: &'static str,
    pub timestamp: String,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(config: ScenarioConfig, outputs: Vec<String>) -> Self {
        Self {
            config,
            version: env!("CARGO_PKG_VERSION"),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            outputs,
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# irsjam {}", self.version);
        let _ = writeln!(s, "# master seed: {}", self.config.master_seed);
        let _ = writeln!(s, "# created: {}", self.timestamp);
        for o in &self.outputs {
            let _ = writeln!(s, "# output: {o}");
        }
        s.push_str(&echo(&self.config));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g9_matches_printf() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (-10.0, "-10"),
            (76.4470123456789, "76.4470123"),
            (1.0 / 3.0, "0.333333333"),
            (-120.0, "-120"),
            (1e-5, "1e-05"),
            (1.5e-4, "0.00015"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (9.9999999999, "10"),
            (0.000123456789012, "0.000123456789"),
            (2.5e-300, "2.5e-300"),
        ];
        for (x, want) in cases {
            assert_eq!(fmt_g9(x), want, "{x}");
        }
    }
}
