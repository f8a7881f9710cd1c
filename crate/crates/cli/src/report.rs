//! Report rows and the two output formats: CSV (default) and
//! newline-delimited JSON records. Both carry the same fields in the same
//! order, and all output is byte-deterministic for fixed inputs.

use serde::Serialize;
use std::io::Write;
use sweeplab_core::ratio::to_f64;
use sweeplab_core::sweep::{MethodKind, SweepReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Records,
}

/// One sweep-probability row. Empty strings mark fields the method does
/// not produce (exact rows carry no samples/CI/seed; Monte Carlo rows
/// carry no exact fraction).
#[derive(Clone, Debug, Serialize)]
pub struct ReportRow {
    pub scenario: String,
    pub schedule: String,
    pub party: String,
    pub sweep_probability: String,
    pub exact_fraction: String,
    pub method: String,
    pub samples: String,
    pub ci_half_width: String,
    pub seed: String,
}

pub const REPORT_HEADER: [&str; 9] = [
    "scenario",
    "schedule",
    "party",
    "sweep_probability",
    "exact_fraction",
    "method",
    "samples",
    "ci_half_width",
    "seed",
];

/// Format with exactly 12 significant digits, plain decimal notation.
pub fn fmt_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    // round-trip through scientific notation to pin the digit count
    let sci = format!("{:.*e}", 11, x);
    let (mantissa, exponent) = sci.split_once('e').expect("scientific format");
    let exponent: i32 = exponent.parse().expect("numeric exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    debug_assert_eq!(digits.len(), 12);
    let sign = if negative { "-" } else { "" };
    let point = exponent + 1; // digits before the decimal point
    let body = if point <= 0 {
        format!("0.{}{}", "0".repeat(-point as usize), digits)
    } else if (point as usize) >= digits.len() {
        format!("{}{}", digits, "0".repeat(point as usize - digits.len()))
    } else {
        format!("{}.{}", &digits[..point as usize], &digits[point as usize..])
    };
    format!("{sign}{body}")
}

/// Rows for a sweep report: one per contender, then the ANY row.
pub fn report_rows(scenario: &str, schedule: &str, report: &SweepReport) -> Vec<ReportRow> {
    let mut rows = Vec::with_capacity(report.per_contender.len() + 1);
    let make = |party: &str, est: &sweeplab_core::sweep::SweepEstimate| ReportRow {
        scenario: scenario.to_string(),
        schedule: schedule.to_string(),
        party: party.to_string(),
        sweep_probability: fmt_sig12(est.value),
        exact_fraction: est
            .exact
            .as_ref()
            .map(|e| e.to_string())
            .unwrap_or_default(),
        method: report.method.to_string(),
        samples: report.samples.map(|s| s.to_string()).unwrap_or_default(),
        ci_half_width: est
            .ci_half_width
            .map(fmt_sig12)
            .unwrap_or_default(),
        seed: report.seed.map(|s| s.to_string()).unwrap_or_default(),
    };
    for (name, est) in report.contenders.iter().zip(&report.per_contender) {
        rows.push(make(name, est));
    }
    rows.push(make("ANY", &report.any_contender));
    rows
}

/// One schedule-comparison row per contender (plus ANY).
#[derive(Clone, Debug, Serialize)]
pub struct CompareRow {
    pub scenario: String,
    pub party: String,
    pub schedule_a: String,
    pub sweep_a: String,
    pub schedule_b: String,
    pub sweep_b: String,
    pub relation: String,
    /// sweep_a minus sweep_b.
    pub delta: String,
    /// `violation` when the coarser side is strictly below the finer one
    /// (beyond CI overlap for Monte Carlo), else empty.
    pub flag: String,
}

pub fn compare_rows(
    scenario: &str,
    schedule_a: &str,
    schedule_b: &str,
    cmp: &sweeplab_core::sweep::ScheduleComparison,
) -> Vec<CompareRow> {
    let k = cmp.report_a.per_contender.len();
    let mut rows = Vec::with_capacity(k + 1);
    for c in 0..k {
        let est_a = &cmp.report_a.per_contender[c];
        let est_b = &cmp.report_b.per_contender[c];
        let flagged = cmp.violations.iter().any(|v| v.contender == c);
        rows.push(CompareRow {
            scenario: scenario.to_string(),
            party: cmp.report_a.contenders[c].clone(),
            schedule_a: schedule_a.to_string(),
            sweep_a: value_with_fraction(est_a, cmp.report_a.method),
            schedule_b: schedule_b.to_string(),
            sweep_b: value_with_fraction(est_b, cmp.report_b.method),
            relation: cmp.relation.to_string(),
            delta: fmt_sig12(cmp.deltas[c]),
            flag: if flagged { "violation".into() } else { String::new() },
        });
    }
    rows.push(CompareRow {
        scenario: scenario.to_string(),
        party: "ANY".into(),
        schedule_a: schedule_a.to_string(),
        sweep_a: value_with_fraction(&cmp.report_a.any_contender, cmp.report_a.method),
        schedule_b: schedule_b.to_string(),
        sweep_b: value_with_fraction(&cmp.report_b.any_contender, cmp.report_b.method),
        relation: cmp.relation.to_string(),
        delta: fmt_sig12(cmp.report_a.any_contender.value - cmp.report_b.any_contender.value),
        flag: String::new(),
    });
    rows
}

fn value_with_fraction(
    est: &sweeplab_core::sweep::SweepEstimate,
    method: MethodKind,
) -> String {
    match (&est.exact, method) {
        (Some(e), MethodKind::Exact) => format!("{} ({e})", fmt_sig12(to_f64(e))),
        _ => fmt_sig12(est.value),
    }
}

/// Validation-report row.
#[derive(Clone, Debug, Serialize)]
pub struct CheckRow {
    pub check: String,
    pub target: String,
    pub result: String,
    pub detail: String,
}

/// Inequality-trial summary row.
#[derive(Clone, Debug, Serialize)]
pub struct TrialRow {
    pub check: String,
    pub trials: String,
    pub cases: String,
    pub failures: String,
    pub min_margin: String,
    pub result: String,
}

/// Write serializable rows in the selected format. CSV gets a header row
/// derived from the struct's field names; records are one JSON object per
/// line with identical fields.
pub fn write_rows<R: Serialize>(
    out: &mut dyn Write,
    format: OutputFormat,
    rows: &[R],
) -> std::io::Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut writer = csv::WriterBuilder::new()
                .has_headers(true)
                .from_writer(vec![]);
            for row in rows {
                writer.serialize(row).map_err(csv_to_io)?;
            }
            let data = writer.into_inner().map_err(|e| {
                std::io::Error::other(e.to_string())
            })?;
            out.write_all(&data)
        }
        OutputFormat::Records => {
            for row in rows {
                let line = serde_json::to_string(row)?;
                writeln!(out, "{line}")?;
            }
            Ok(())
        }
    }
}

fn csv_to_io(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_sig12(0.625), "0.625000000000");
        assert_eq!(fmt_sig12(0.5625), "0.562500000000");
        assert_eq!(fmt_sig12(1.0), "1.00000000000");
        assert_eq!(fmt_sig12(0.0), "0");
        assert_eq!(fmt_sig12(0.000123456789), "0.000123456789000");
        assert_eq!(fmt_sig12(123456.0), "123456.000000");
        assert_eq!(fmt_sig12(-0.25), "-0.250000000000");
        // 12 significant digits of 1/3
        assert_eq!(fmt_sig12(1.0 / 3.0), "0.333333333333");
    }

    #[test]
    fn csv_header_matches_report_row_fields() {
        let row = ReportRow {
            scenario: "s".into(),
            schedule: "x".into(),
            party: "A".into(),
            sweep_probability: "0.5".into(),
            exact_fraction: "1/2".into(),
            method: "exact".into(),
            samples: String::new(),
            ci_half_width: String::new(),
            seed: String::new(),
        };
        let mut buf = Vec::new();
        write_rows(&mut buf, OutputFormat::Csv, &[row.clone()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header, REPORT_HEADER.join(","));

        let mut buf = Vec::new();
        write_rows(&mut buf, OutputFormat::Records, &[row]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
        assert_eq!(parsed["exact_fraction"], "1/2");
    }
}
