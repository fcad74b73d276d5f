//! CSV writers and the run manifest.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which round-trips
//! every `f64` and makes identical runs byte-identical.

use std::fmt::Write as _;
use std::path::Path;

use dsbandit::bench::{AggregateCurve, DiagnosticsCurve, SweepResult};
use dsbandit::BanditInstance;
use serde::Serialize;

use crate::config::Value;

pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// `t,mean_regret,std_regret` with `t` starting at 1.
pub fn regret_csv(curve: &AggregateCurve) -> String {
    let mut out = String::from("t,mean_regret,std_regret\n");
    for (i, (m, s)) in curve.mean.iter().zip(&curve.std).enumerate() {
        writeln!(out, "{},{},{}", i + 1, fmt_float(*m), fmt_float(*s)).unwrap();
    }
    out
}

/// `t,mean_N,mean_p_fa,mean_p_hat_0,…`; row `t` describes the decision made
/// at step `t`.
pub fn diagnostics_csv(curve: &DiagnosticsCurve) -> String {
    let mut out = String::from("t,mean_N,mean_p_fa");
    for a in 0..curve.mean_p_hat.len() {
        write!(out, ",mean_p_hat_{a}").unwrap();
    }
    out.push('\n');
    for t in 0..curve.mean_n.len() {
        write!(
            out,
            "{},{},{}",
            t + 1,
            fmt_float(curve.mean_n[t]),
            fmt_float(curve.mean_p_fa[t])
        )
        .unwrap();
        for p in &curve.mean_p_hat {
            write!(out, ",{}", fmt_float(p[t])).unwrap();
        }
        out.push('\n');
    }
    out
}

fn instance_header(rows: &[&BanditInstance]) -> Vec<String> {
    let arms = rows.iter().map(|i| i.arms()).max().unwrap_or(0);
    match rows.first() {
        Some(BanditInstance::LinearGaussian(g)) => {
            let d = g.context_dim();
            let mut cols: Vec<String> = (0..arms)
                .flat_map(|a| (0..d).map(move |i| format!("w_{a}_{i}")))
                .collect();
            cols.extend((0..arms).map(|a| format!("sigma_{a}")));
            cols
        }
        _ => (0..arms).map(|a| format!("theta_{a}")).collect(),
    }
}

/// Parameters use shortest round-trip formatting; rows with fewer arms than
/// the widest leave trailing parameter cells empty.
fn instance_cells(instance: &BanditInstance, width: usize) -> Vec<String> {
    let mut cells: Vec<String> = match instance {
        BanditInstance::Bernoulli(b) => b.theta().iter().map(|x| x.to_string()).collect(),
        BanditInstance::LinearGaussian(g) => g
            .weights()
            .iter()
            .flatten()
            .chain(g.noise_std())
            .map(|x| x.to_string())
            .collect(),
    };
    cells.resize(width, String::new());
    cells
}

/// Instance parameters, then `kl,delta_ts,delta_bucb,defined`, then the three
/// mean regrets at the evaluation step. Undefined deltas are empty cells.
pub fn sweep_csv(result: &SweepResult) -> String {
    let instances: Vec<_> = result.rows.iter().map(|r| &r.instance).collect();
    let header = instance_header(&instances);
    let mut out = header.join(",");
    out.push_str(",kl,delta_ts,delta_bucb,defined,regret_ds,regret_ts,regret_bucb\n");
    let opt = |d: Option<f64>| d.map(fmt_float).unwrap_or_default();
    for row in &result.rows {
        let mut cells = instance_cells(&row.instance, header.len());
        cells.extend([
            fmt_float(row.kl),
            opt(row.delta_ts),
            opt(row.delta_bucb),
            row.defined().to_string(),
            fmt_float(row.regret_ds),
            fmt_float(row.regret_ts),
            fmt_float(row.regret_bucb),
        ]);
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub const VERSION: &str = env!("DSBANDIT_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub status: &'static str,
    pub seed: u64,
    pub threads: Option<usize>,
    pub started_unix: u64,
    pub finished_unix: Option<u64>,
    /// The resolved settings; also written as `config.resolved`, which can be
    /// passed back with `--config` to rerun.
    pub config: serde_json::Map<String, serde_json::Value>,
    pub outputs: Vec<String>,
}

pub fn to_json(value: &Value) -> serde_json::Value {
    match value {
        Value::Num(x) if x.fract() == 0.0 && x.abs() < 9.0e15 => serde_json::Value::from(*x as i64),
        Value::Num(x) => serde_json::Number::from_f64(*x)
            .map(serde_json::Value::Number)
            .unwrap_or_else(|| serde_json::Value::String(x.to_string())),
        Value::Word(w) => serde_json::Value::String(w.clone()),
        Value::List(items) => serde_json::Value::Array(items.iter().map(to_json).collect()),
    }
}

pub fn now_unix() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn write_file(path: &Path, contents: &str) -> std::io::Result<()> {
    std::fs::write(path, contents)
}
