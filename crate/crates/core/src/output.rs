//! JSON and CSV writers for results and tables.
//!
//! Reals are written with 15 significant digits so that output files are
//! stable across platforms whose last-bit rounding may differ.

use std::io::Write;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::finite::{round3, ThresholdProfile};

pub const SIGNIFICANT_DIGITS: usize = 15;

fn out_err(e: impl std::fmt::Display) -> Error {
    Error::Output(e.to_string())
}

/// Rounds to `SIGNIFICANT_DIGITS` significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => {
            if let Some(x) = n.as_f64() {
                if let Some(r) = serde_json::Number::from_f64(round_sig(x)) {
                    *n = r;
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Serializes to a JSON value with every real rounded.
pub fn to_value<T: Serialize + ?Sized>(value: &T) -> Result<Value> {
    let mut v = serde_json::to_value(value).map_err(out_err)?;
    round_value(&mut v);
    Ok(v)
}

/// Pretty-printed JSON with rounded reals and a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&to_value(value)?).map_err(out_err)?;
    s.push('\n');
    Ok(s)
}

fn fmt_real(x: f64) -> String {
    let r = round_sig(x);
    format!("{r}")
}

fn fmt3(x: f64) -> String {
    format!("{:.3}", round3(x))
}

/// Writes any serializable rows as CSV with a header from the field names.
pub fn write_records<S: Serialize, W: Write>(rows: &[S], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r).map_err(out_err)?;
    }
    wtr.flush().map_err(out_err)
}

/// Long-format finite-horizon table: one row per `(k, c/W, N)` with the
/// round-1 quantile at three decimals and full precision. Missing equilibria
/// leave both value columns empty.
pub fn write_finite_table<W: Write>(profiles: &[ThresholdProfile], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["k", "cost_ratio", "N", "a1_3dp", "a1", "exists", "br_stable", "peak"])
        .map_err(out_err)?;
    for p in profiles {
        for row in &p.rows {
            let n = row.params.n_players;
            let (short, full) = match row.first_quantile() {
                Some(a) => (fmt3(a), fmt_real(a)),
                None => (String::new(), String::new()),
            };
            let stable = match row.diagnostics.br_stable {
                Some(b) => b.to_string(),
                None => String::new(),
            };
            wtr.write_record([
                p.n_draws.to_string(),
                fmt_real(p.cost_ratio),
                n.to_string(),
                short,
                full,
                row.exists.to_string(),
                stable,
                p.peak_ties.contains(&n).to_string(),
            ])
            .map_err(out_err)?;
        }
    }
    wtr.flush().map_err(out_err)
}

/// Wide profile: `N, a1, ..., a_{k-1}, exists`.
pub fn write_profile<W: Write>(profile: &ThresholdProfile, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["N".to_string()];
    header.extend((1..profile.n_draws).map(|j| format!("a{j}")));
    header.push("exists".into());
    wtr.write_record(&header).map_err(out_err)?;
    for row in &profile.rows {
        let mut rec = vec![row.params.n_players.to_string()];
        for j in 0..profile.n_draws - 1 {
            rec.push(row.round_quantiles.get(j).map(|&a| fmt_real(a)).unwrap_or_default());
        }
        rec.push(row.exists.to_string());
        wtr.write_record(&rec).map_err(out_err)?;
    }
    wtr.flush().map_err(out_err)
}

/// Provenance attached to every artifact.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distribution: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub outputs: Vec<String>,
    pub tool_version: String,
    pub interface_version: String,
    pub parallel: bool,
    /// Only set on standalone manifest files so that result files stay
    /// byte-identical across reruns.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub created_unix: Option<u64>,
}

pub const INTERFACE_VERSION: &str = "1.0";

impl RunManifest {
    pub fn new(command: impl Into<String>, parameters: Value) -> Self {
        RunManifest {
            command: command.into(),
            parameters,
            distribution: None,
            seed: None,
            outputs: Vec::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            interface_version: INTERFACE_VERSION.to_string(),
            parallel: crate::par::parallel_available(),
            created_unix: None,
        }
    }
}

/// A result together with its manifest.
#[derive(Debug, Clone, Serialize)]
pub struct Artifact<'a, T: Serialize> {
    pub manifest: &'a RunManifest,
    pub result: &'a T,
}
