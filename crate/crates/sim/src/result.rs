use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ExperimentKind;

/// Extra per-row output such as price traces.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Everything one drop contributes.
#[derive(Clone, Debug, Default)]
pub struct DropRecord {
    pub(crate) values: Vec<(&'static str, f64)>,
    pub(crate) counts: Vec<(&'static str, u64)>,
    pub(crate) tables: Vec<(&'static str, Table)>,
}

impl DropRecord {
    /// Records the drop's value of `name`. A drop contributes at most one
    /// value per name, so no sample vector outgrows the drop count.
    pub fn push(&mut self, name: &'static str, value: f64) {
        debug_assert!(self.values.iter().all(|(n, _)| *n != name), "{name} recorded twice");
        self.values.push((name, value));
    }

    pub fn count(&mut self, name: &'static str) {
        self.counts.push((name, 1));
    }

    pub fn table(&mut self, name: &'static str, table: Table) {
        self.tables.push((name, table));
    }

    /// Values recorded under `name`, in order.
    pub fn values(&self, name: &str) -> Vec<f64> {
        self.values.iter().filter(|(n, _)| *n == name).map(|&(_, v)| v).collect()
    }

    pub fn has(&self, name: &str) -> bool {
        self.counts.iter().any(|(n, _)| *n == name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub drops: usize,
    /// Parameters the run used, echoed into the summary.
    pub config: serde_json::Value,
    pub samples: BTreeMap<String, Vec<f64>>,
    /// Event counts such as infeasible drops or clamp outcomes.
    pub counters: BTreeMap<String, u64>,
    pub tables: BTreeMap<String, Table>,
}

impl MonteCarloResult {
    /// Concatenates drop records in drop order. Tables are taken from the
    /// first drop that produced them.
    pub fn collect(
        kind: ExperimentKind,
        seed: u64,
        config: serde_json::Value,
        records: Vec<DropRecord>,
    ) -> Self {
        let mut out = Self {
            kind,
            seed,
            drops: records.len(),
            config,
            samples: BTreeMap::new(),
            counters: BTreeMap::new(),
            tables: BTreeMap::new(),
        };
        for rec in records {
            for (name, v) in rec.values {
                out.samples.entry(name.to_string()).or_default().push(v);
            }
            for (name, n) in rec.counts {
                *out.counters.entry(name.to_string()).or_default() += n;
            }
            for (name, t) in rec.tables {
                out.tables.entry(name.to_string()).or_insert(t);
            }
        }
        out
    }

    pub fn sample(&self, name: &str) -> &[f64] {
        self.samples.get(name).map_or(&[], Vec::as_slice)
    }

    pub fn counter(&self, name: &str) -> u64 {
        self.counters.get(name).copied().unwrap_or(0)
    }
}
