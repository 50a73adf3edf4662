use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde_json::{json, Map, Value};

use super::sweep::ResultRow;
use crate::error::{Error, Result};
use crate::stats::MCEstimate;

pub const CSV_HEADER: &str = "n,p,c,trials,frac_complete,mean_unmatched,se_unmatched,\
mean_Q_minus,se_Q_minus,mean_Q_plus,se_Q_plus,mean_R_minus,se_R_minus,\
mean_R_plus,se_R_plus,mean_proposals,se_proposals,elapsed_s";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            _ => Err(Error::Config(format!("unknown format {s:?}"))),
        }
    }
}

/// Nine significant digits, fixed notation for moderate exponents and
/// scientific otherwise, trailing zeros removed (like C's `%.9g`).
pub fn format_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..9).contains(&exp) {
        let fixed = format!("{:.*}", (8 - exp) as usize, v);
        trim_zeros(&fixed).to_string()
    } else {
        format!(
            "{}e{}{:02}",
            trim_zeros(mantissa),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn rounded(v: f64) -> f64 {
    format_sig(v).parse().expect("formatted float")
}

fn pairs(row: &ResultRow) -> [Option<MCEstimate>; 6] {
    [
        row.unmatched,
        row.q_minus,
        row.q_plus,
        row.r_minus,
        row.r_plus,
        row.proposals,
    ]
}

pub fn to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        write!(
            out,
            "{},{},{},{},{}",
            row.n,
            format_sig(row.p),
            format_sig(row.c),
            row.trials,
            format_sig(row.frac_complete)
        )
        .unwrap();
        for est in pairs(row) {
            match est {
                Some(e) => write!(out, ",{},{}", format_sig(e.mean), format_sig(e.se)).unwrap(),
                None => out.push_str(",,"),
            }
        }
        writeln!(out, ",{}", format_sig(row.elapsed_s)).unwrap();
    }
    out
}

fn num(v: f64) -> Value {
    serde_json::Number::from_f64(rounded(v)).map_or(Value::Null, Value::Number)
}

/// One JSON object per row with the CSV fields plus `mean_S_complete`,
/// `se_S_complete` and `size_mismatches`.
pub fn to_jsonl(rows: &[ResultRow]) -> String {
    let names = [
        "unmatched",
        "Q_minus",
        "Q_plus",
        "R_minus",
        "R_plus",
        "proposals",
    ];
    let mut out = String::new();
    for row in rows {
        let mut obj = Map::new();
        obj.insert("n".into(), json!(row.n));
        obj.insert("p".into(), num(row.p));
        obj.insert("c".into(), num(row.c));
        obj.insert("trials".into(), json!(row.trials));
        obj.insert("frac_complete".into(), num(row.frac_complete));
        let named = names
            .iter()
            .zip(pairs(row))
            .chain([(&"S_complete", row.s_complete)]);
        for (name, est) in named {
            let (mean, se) = est.map_or((Value::Null, Value::Null), |e| (num(e.mean), num(e.se)));
            obj.insert(format!("mean_{name}"), mean);
            obj.insert(format!("se_{name}"), se);
        }
        obj.insert("size_mismatches".into(), json!(row.size_mismatches));
        obj.insert("elapsed_s".into(), num(row.elapsed_s));
        out.push_str(&Value::Object(obj).to_string());
        out.push('\n');
    }
    out
}

pub fn render(rows: &[ResultRow], format: Format) -> String {
    match format {
        Format::Csv => to_csv(rows),
        Format::Jsonl => to_jsonl(rows),
    }
}

pub fn emit(rows: &[ResultRow], format: Format, path: &Path) -> Result<()> {
    std::fs::write(path, render(rows, format)).map_err(|e| Error::io(path, e))
}
