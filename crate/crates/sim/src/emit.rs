//! CSV and JSON writers.
//!
//! Floats are written with Rust's shortest round-trip formatting so that
//! values read back from a CSV are bit-identical to the samples.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::result::{MonteCarloResult, Table};
use crate::stats::{empirical_cdf, summarize, Summary};
use crate::{ExperimentKind, SimError};

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

fn write(path: &Path, text: &str) -> Result<(), SimError> {
    std::fs::write(path, text).map_err(|e| SimError::Io { path: path.to_owned(), source: e })
}

pub fn cdf_csv(values: &[f64]) -> Result<String, SimError> {
    if values.is_empty() {
        return Err(SimError::Empty("cdf of an empty sample".into()));
    }
    let mut out = String::from("value,cdf\n");
    for (v, c) in empirical_cdf(values) {
        writeln!(out, "{v:?},{c:?}").unwrap();
    }
    Ok(out)
}

pub fn write_cdf_csv(values: &[f64], path: &Path) -> Result<(), SimError> {
    write(path, &cdf_csv(values)?)
}

pub fn table_csv(table: &Table) -> String {
    let mut out = table.columns.join(",");
    out.push('\n');
    for row in &table.rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct SummaryDoc<'a> {
    schema_version: u32,
    kind: ExperimentKind,
    seed: u64,
    drops: usize,
    config: &'a serde_json::Value,
    samples: BTreeMap<&'a str, Summary>,
    counters: &'a BTreeMap<String, u64>,
}

pub fn summary_json(result: &MonteCarloResult) -> Result<String, SimError> {
    let samples: BTreeMap<&str, Summary> =
        result.samples.iter().filter_map(|(k, v)| summarize(v).map(|s| (k.as_str(), s))).collect();
    if samples.is_empty() {
        return Err(SimError::Empty(format!("{} run produced no valid drops", result.kind)));
    }
    let doc = SummaryDoc {
        schema_version: SUMMARY_SCHEMA_VERSION,
        kind: result.kind,
        seed: result.seed,
        drops: result.drops,
        config: &result.config,
        samples,
        counters: &result.counters,
    };
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

pub fn write_summary_json(result: &MonteCarloResult, path: &Path) -> Result<(), SimError> {
    write(path, &summary_json(result)?)
}

/// Writes `summary.json`, `cdf_<sample>.csv` for every non-empty sample and
/// `<table>.csv` for every table. Returns the paths written.
pub fn write_outputs(result: &MonteCarloResult, dir: &Path) -> Result<Vec<PathBuf>, SimError> {
    // Build everything first so a refused result leaves no partial output.
    let summary = summary_json(result)?;
    std::fs::create_dir_all(dir).map_err(|e| SimError::Io { path: dir.to_owned(), source: e })?;
    let mut written = Vec::new();
    for (name, values) in &result.samples {
        if values.is_empty() {
            continue;
        }
        let path = dir.join(format!("cdf_{name}.csv"));
        write_cdf_csv(values, &path)?;
        written.push(path);
    }
    for (name, table) in &result.tables {
        let path = dir.join(format!("{name}.csv"));
        write(&path, &table_csv(table))?;
        written.push(path);
    }
    let path = dir.join("summary.json");
    write(&path, &summary)?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::result::DropRecord;

    #[test]
    fn cdf_rows_use_rank_over_n() {
        assert_eq!(cdf_csv(&[2.0, 1.0]).unwrap(), "value,cdf\n1.0,0.5\n2.0,1.0\n");
        assert_eq!(cdf_csv(&[3.5]).unwrap(), "value,cdf\n3.5,1.0\n");
        assert!(cdf_csv(&[]).is_err());
    }

    #[test]
    fn summary_refuses_an_empty_result() {
        let mut rec = DropRecord::default();
        rec.count("infeasible");
        let r = MonteCarloResult::collect(ExperimentKind::Auction, 9, serde_json::Value::Null, vec![rec]);
        assert!(matches!(summary_json(&r), Err(SimError::Empty(_))));
    }

    #[test]
    fn summary_echoes_seed_and_counts() {
        let mut rec = DropRecord::default();
        rec.push("x", 1.5);
        rec.count("infeasible");
        let r = MonteCarloResult::collect(ExperimentKind::Lifetime, 12345678901, serde_json::json!({"a": 1}), vec![rec]);
        let v: serde_json::Value = serde_json::from_str(&summary_json(&r).unwrap()).unwrap();
        assert_eq!(v["seed"], 12345678901u64);
        assert_eq!(v["kind"], "lifetime");
        assert_eq!(v["counters"]["infeasible"], 1);
        assert_eq!(v["samples"]["x"]["mean"], 1.5);
        assert_eq!(v["schema_version"], SUMMARY_SCHEMA_VERSION);
    }
}
