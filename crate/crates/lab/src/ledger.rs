//! Best objective value found so far at each cardinality.
//!
//! The true minimum over all sets of a given size is not computable, so the
//! excess `alpha_N` of a configuration is measured against the smallest value
//! any run has recorded here. Recording only ever lowers an entry.

use std::collections::BTreeMap;
use std::path::Path;

use isocap_core::optimizer::Objective;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Map key: dimension, objective parameter and cardinality.
pub fn key(d: usize, objective: Objective, n: usize) -> String {
    match objective {
        Objective::Capacity { p } => format!("d={d} p={p} N={n}"),
        Objective::Relative { r } => format!("d={d} R={r} N={n}"),
        Objective::Eigen => format!("d={d} eigen N={n}"),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub value: f64,
    pub seed: u64,
    /// Runs that have reported at this key.
    pub runs: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
    pub entries: BTreeMap<String, LedgerEntry>,
}

impl Ledger {
    /// Loads a ledger, or starts an empty one when the file does not exist.
    pub fn load(path: &Path) -> Result<Self> {
        match std::fs::read_to_string(path) {
            Ok(text) => Ok(serde_json::from_str(&text)?),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::default()),
            Err(e) => Err(LabError::io(path, e)),
        }
    }

    /// Writes through a temporary file so readers never see a partial ledger.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("json.tmp");
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&tmp, text + "\n").map_err(|e| LabError::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| LabError::io(path, e))
    }

    pub fn best(&self, key: &str) -> Option<f64> {
        self.entries.get(key).map(|e| e.value)
    }

    /// Records a run; returns whether it lowered the entry.
    pub fn record(&mut self, key: &str, value: f64, seed: u64) -> bool {
        if !value.is_finite() {
            return false;
        }
        match self.entries.get_mut(key) {
            Some(e) => {
                e.runs += 1;
                if value < e.value {
                    e.value = value;
                    e.seed = seed;
                    true
                } else {
                    false
                }
            }
            None => {
                self.entries.insert(key.to_owned(), LedgerEntry { value, seed, runs: 1 });
                true
            }
        }
    }

    /// Folds another ledger in, keeping the smaller value at each key.
    pub fn merge(&mut self, other: &Ledger) {
        for (k, e) in &other.entries {
            let runs_before = self.entries.get(k).map_or(0, |x| x.runs);
            self.record(k, e.value, e.seed);
            if let Some(x) = self.entries.get_mut(k) {
                x.runs = runs_before + e.runs;
            }
        }
    }
}
