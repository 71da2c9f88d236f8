//! CSV schemas: per-run rows, per-run comparisons and per-group summaries.

use std::collections::HashMap;
use std::io::{Read, Write};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize, Serializer};

pub const RUN_HEADER: [&str; 9] = ["instance_id", "method", "status", "makespan", "wall_time_ms", "J", "I", "level", "seed"];

fn one_decimal<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{v:.1}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub instance_id: String,
    pub method: String,
    pub status: String,
    pub makespan: Option<u64>,
    #[serde(serialize_with = "one_decimal")]
    pub wall_time_ms: f64,
    #[serde(rename = "J")]
    pub clients: usize,
    #[serde(rename = "I")]
    pub helpers: usize,
    pub level: Option<u8>,
    pub seed: Option<u64>,
}

pub fn write_rows<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads run rows, naming any missing column.
pub fn read_run_rows(input: impl Read) -> Result<Vec<RunRow>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().context("reading CSV header")?.clone();
    let missing: Vec<&str> = RUN_HEADER
        .iter()
        .copied()
        .filter(|col| !headers.iter().any(|h| h == *col))
        .collect();
    if !missing.is_empty() {
        bail!("CSV schema mismatch: missing column(s) {}", missing.join(", "));
    }
    let mut rows = Vec::new();
    for (k, rec) in r.deserialize().enumerate() {
        let row: RunRow = rec.with_context(|| format!("CSV row {}", k + 2))?;
        rows.push(row);
    }
    Ok(rows)
}

fn opt_fmt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub instance_id: String,
    #[serde(rename = "J")]
    pub clients: usize,
    #[serde(rename = "I")]
    pub helpers: usize,
    pub level: Option<u8>,
    pub seed: Option<u64>,
    pub method: String,
    pub makespan: Option<u64>,
    pub equid_makespan: Option<u64>,
    /// `(ALG - EquiD) / EquiD`
    pub rel_diff_vs_equid: String,
    pub oracle_makespan: Option<u64>,
    /// `(ALG - OPT) / OPT`
    pub suboptimality: String,
    pub ratio_to_oracle: String,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// One comparison row per run row. The oracle reference is used only when
/// the oracle proved optimality (`ok`).
pub fn comparisons(rows: &[RunRow]) -> Vec<ComparisonRow> {
    let mut equid: HashMap<&str, u64> = HashMap::new();
    let mut oracle: HashMap<&str, u64> = HashMap::new();
    for r in rows {
        match (r.method.as_str(), r.makespan) {
            ("equid", Some(m)) => {
                equid.insert(&r.instance_id, m);
            }
            ("oracle", Some(m)) if r.status == "ok" => {
                oracle.insert(&r.instance_id, m);
            }
            _ => {}
        }
    }
    rows.iter()
        .map(|r| {
            let e = equid.get(r.instance_id.as_str()).copied();
            let o = oracle.get(r.instance_id.as_str()).copied();
            let rel = r.makespan.zip(e).and_then(|(m, e)| ratio(m, e)).map(|x| x - 1.0);
            let to_opt = r.makespan.zip(o).and_then(|(m, o)| ratio(m, o));
            ComparisonRow {
                instance_id: r.instance_id.clone(),
                clients: r.clients,
                helpers: r.helpers,
                level: r.level,
                seed: r.seed,
                method: r.method.clone(),
                makespan: r.makespan,
                equid_makespan: e,
                rel_diff_vs_equid: opt_fmt(rel),
                oracle_makespan: o,
                suboptimality: opt_fmt(to_opt.map(|x| x - 1.0)),
                ratio_to_oracle: opt_fmt(to_opt),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    #[serde(rename = "J")]
    pub clients: usize,
    #[serde(rename = "I")]
    pub helpers: usize,
    pub level: Option<u8>,
    pub method: String,
    pub runs: usize,
    pub ok: usize,
    pub median_makespan: String,
    pub mean_makespan: String,
    pub median_wall_time_ms: String,
    pub mean_wall_time_ms: String,
    pub median_rel_diff_vs_equid: String,
    pub mean_suboptimality: String,
    pub max_ratio_to_oracle: String,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn parse(s: &str) -> Option<f64> {
    s.parse().ok()
}

/// Aggregates per `(J, I, level, method)` in first-appearance order.
pub fn summarize(rows: &[RunRow]) -> Vec<SummaryRow> {
    let cmp = comparisons(rows);
    let mut keys: Vec<(usize, usize, Option<u8>, String)> = Vec::new();
    let mut groups: HashMap<(usize, usize, Option<u8>, String), Vec<usize>> = HashMap::new();
    for (k, r) in rows.iter().enumerate() {
        let key = (r.clients, r.helpers, r.level, r.method.clone());
        groups
            .entry(key.clone())
            .or_insert_with(|| {
                keys.push(key);
                Vec::new()
            })
            .push(k);
    }
    keys.into_iter()
        .map(|key| {
            let idx = &groups[&key];
            let makespans: Vec<f64> = idx.iter().filter_map(|&k| rows[k].makespan).map(|m| m as f64).collect();
            let times: Vec<f64> = idx.iter().map(|&k| rows[k].wall_time_ms).collect();
            let rel: Vec<f64> = idx.iter().filter_map(|&k| parse(&cmp[k].rel_diff_vs_equid)).collect();
            let sub: Vec<f64> = idx.iter().filter_map(|&k| parse(&cmp[k].suboptimality)).collect();
            let ratios: Vec<f64> = idx.iter().filter_map(|&k| parse(&cmp[k].ratio_to_oracle)).collect();
            let (clients, helpers, level, method) = key;
            SummaryRow {
                clients,
                helpers,
                level,
                method,
                runs: idx.len(),
                ok: idx.iter().filter(|&&k| rows[k].status == "ok").count(),
                median_makespan: opt_fmt(median(&makespans)),
                mean_makespan: opt_fmt(mean(&makespans)),
                median_wall_time_ms: opt_fmt(median(&times)),
                mean_wall_time_ms: opt_fmt(mean(&times)),
                median_rel_diff_vs_equid: opt_fmt(median(&rel)),
                mean_suboptimality: opt_fmt(mean(&sub)),
                max_ratio_to_oracle: opt_fmt(ratios.into_iter().reduce(f64::max)),
            }
        })
        .collect()
}
