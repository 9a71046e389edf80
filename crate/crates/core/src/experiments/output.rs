//! Flat-file writers for the harness outputs.

use std::io::Write;

use serde::Serialize;

use super::records::{AggregateStat, Approximant, RunRecord};
use super::{DensityTable, ExperimentConfig};
use crate::error::Result;

pub const DENSITY_HEADER: [&str; 7] = ["z", "kde", "sl", "gauss_mc", "beta_mc", "gauss_an", "beta_an"];

pub const RECORDS_HEADER: [&str; 8] = [
    "operator",
    "start",
    "n_samples",
    "l_factors",
    "rep",
    "approximant",
    "distance",
    "stderr",
];

pub const AGGREGATES_HEADER: [&str; 10] = [
    "operator",
    "start",
    "n_samples",
    "l_factors",
    "approximant",
    "mean",
    "std",
    "reps",
    "rejections",
    "bias_gate_ok",
];

/// `printf("%.9g")`: 9 significant digits, trailing zeros dropped,
/// scientific notation outside `1e-4 <= |x| < 1e9`.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    // Let the formatter do the rounding, then read the decimal exponent.
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (8 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_density_csv<W: Write>(table: &DensityTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DENSITY_HEADER)?;
    for (i, z) in table.z.iter().enumerate() {
        let mut row = Vec::with_capacity(DENSITY_HEADER.len());
        row.push(format_sig9(*z));
        for a in Approximant::ALL {
            row.push(
                table
                    .column(a)
                    .map(|c| format_sig9(c[i]))
                    .unwrap_or_default(),
            );
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_records_csv<W: Write>(records: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORDS_HEADER)?;
    for r in records {
        w.write_record([
            r.operator.to_string(),
            r.start.to_string(),
            r.n_samples.to_string(),
            r.l_factors.to_string(),
            r.rep.to_string(),
            r.approximant.to_string(),
            format_sig9(r.distance),
            format_sig9(r.stderr),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_aggregates_csv<W: Write>(aggregates: &[AggregateStat], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AGGREGATES_HEADER)?;
    for a in aggregates {
        w.write_record([
            a.operator.to_string(),
            a.start.to_string(),
            a.n_samples.to_string(),
            a.l_factors.to_string(),
            a.approximant.to_string(),
            format_sig9(a.mean),
            format_sig9(a.std),
            a.reps.to_string(),
            a.rejections.to_string(),
            a.bias_gate_ok.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct JsonDoc<'a, T: Serialize> {
    subcommand: &'a str,
    config: &'a ExperimentConfig,
    notes: &'a [String],
    #[serde(flatten)]
    body: T,
}

#[derive(Serialize)]
struct DistanceBody<'a> {
    records: &'a [RunRecord],
    aggregates: &'a [AggregateStat],
}

pub fn write_distance_json<W: Write>(
    subcommand: &str,
    config: &ExperimentConfig,
    notes: &[String],
    records: &[RunRecord],
    aggregates: &[AggregateStat],
    out: W,
) -> Result<()> {
    let doc = JsonDoc {
        subcommand,
        config,
        notes,
        body: DistanceBody {
            records,
            aggregates,
        },
    };
    serde_json::to_writer_pretty(out, &doc)?;
    Ok(())
}

pub fn write_density_json<W: Write>(config: &ExperimentConfig, table: &DensityTable, out: W) -> Result<()> {
    let doc = JsonDoc {
        subcommand: "qualitative",
        config,
        notes: &table.notes,
        body: table,
    };
    serde_json::to_writer_pretty(out, &doc)?;
    Ok(())
}
