//! Tidy output rows and their CSV / JSON encodings.
//!
//! Every float is written with 12 significant digits (`%.12g` style) so that
//! reruns of the same configuration are byte-identical.

use std::io::Write;

use serde_json::{json, Map, Value};

use crate::config::{OutputFormat, Scheme};

pub const SWEEP_COLUMNS: &str = "scheme,seed,snr_c_db,p_s,d_s,d_c,d_sc,capacity,iterations,converged,alloc_summary";

/// One solved (scheme, seed, SNR) point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub scheme: Scheme,
    pub seed: u64,
    pub snr_c_db: f64,
    /// Sensing power of the separated split; `None` for dual records.
    pub p_s: Option<f64>,
    /// Communication allocation (separated) or shared allocation (dual).
    pub alloc_summary: Vec<f64>,
    pub d_s: f64,
    pub d_c: f64,
    pub d_sc: f64,
    pub capacity: f64,
    pub iterations: usize,
    /// False on non-convergence or a degenerate numeric flag.
    pub converged: bool,
}

/// `%.12g`-style rendering.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn rounded(x: f64) -> Value {
    format_sig(x).parse::<f64>().ok().and_then(serde_json::Number::from_f64).map_or(Value::Null, Value::Number)
}

impl SweepRecord {
    pub fn csv_row(&self) -> String {
        let summary: Vec<String> = self.alloc_summary.iter().map(|&v| format_sig(v)).collect();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.scheme.as_str(),
            self.seed,
            format_sig(self.snr_c_db),
            self.p_s.map(format_sig).unwrap_or_default(),
            format_sig(self.d_s),
            format_sig(self.d_c),
            format_sig(self.d_sc),
            format_sig(self.capacity),
            self.iterations,
            self.converged,
            summary.join(";"),
        )
    }

    pub fn to_json(&self) -> Value {
        json!({
            "scheme": self.scheme.as_str(),
            "seed": self.seed,
            "snr_c_db": rounded(self.snr_c_db),
            "p_s": self.p_s.map_or(Value::Null, rounded),
            "d_s": rounded(self.d_s),
            "d_c": rounded(self.d_c),
            "d_sc": rounded(self.d_sc),
            "capacity": rounded(self.capacity),
            "iterations": self.iterations,
            "converged": self.converged,
            "alloc_summary": self.alloc_summary.iter().map(|&v| rounded(v)).collect::<Vec<_>>(),
        })
    }
}

/// A generic tidy table: header names plus rows of already-typed cells.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(u64),
    Float(f64),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format_sig(*x),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Int(i) => Value::from(*i),
            Cell::Float(x) => rounded(*x),
        }
    }
}

pub fn write_table<W: Write>(
    out: &mut W,
    format: OutputFormat,
    columns: &[&str],
    rows: &[Vec<Cell>],
) -> std::io::Result<()> {
    match format {
        OutputFormat::Csv => {
            writeln!(out, "{}", columns.join(","))?;
            for row in rows {
                let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                writeln!(out, "{}", cells.join(","))?;
            }
        }
        OutputFormat::Json => {
            let items: Vec<Value> = rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> =
                        columns.iter().zip(row).map(|(k, c)| (k.to_string(), c.json())).collect();
                    Value::Object(obj)
                })
                .collect();
            serde_json::to_writer_pretty(&mut *out, &items)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

pub fn write_records<W: Write>(out: &mut W, format: OutputFormat, records: &[SweepRecord]) -> std::io::Result<()> {
    match format {
        OutputFormat::Csv => {
            writeln!(out, "{SWEEP_COLUMNS}")?;
            for r in records {
                writeln!(out, "{}", r.csv_row())?;
            }
        }
        OutputFormat::Json => {
            let items: Vec<Value> = records.iter().map(SweepRecord::to_json).collect();
            serde_json::to_writer_pretty(&mut *out, &items)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(2.5), "2.5");
        assert_eq!(format_sig(4.675708167864326), "4.67570816786");
        assert_eq!(format_sig(-5.0), "-5");
        assert_eq!(format_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_sig(1e-7), "1e-07");
        assert_eq!(format_sig(123456789012345.0), "1.23456789012e+14");
        assert_eq!(format_sig(0.000123), "0.000123");
        assert_eq!(format_sig(99999999999.99999), "100000000000");
    }

    #[test]
    fn csv_row_layout() {
        let r = SweepRecord {
            scheme: Scheme::Separated,
            seed: 3,
            snr_c_db: -5.0,
            p_s: Some(0.5),
            alloc_summary: vec![0.25, 0.25, 0.0],
            d_s: 2.5,
            d_c: 1.0,
            d_sc: 3.5,
            capacity: 1.25,
            iterations: 4,
            converged: true,
        };
        assert_eq!(r.csv_row(), "separated,3,-5,0.5,2.5,1,3.5,1.25,4,true,0.25;0.25;0");
        let dual = SweepRecord { scheme: Scheme::Dual, p_s: None, ..r };
        assert!(dual.csv_row().starts_with("dual,3,-5,,2.5"));
        let v = dual.to_json();
        assert_eq!(v["p_s"], Value::Null);
        assert_eq!(v["alloc_summary"][0], json!(0.25));
        assert_eq!(SWEEP_COLUMNS.split(',').count(), 11);
    }
}
