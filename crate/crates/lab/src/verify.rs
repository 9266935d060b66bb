//! Runs the randomized invariant suites and collects a JSON report.

use isocap_core::checks::{run_suite, CheckConfig, Kernels, Suite};
use serde::Serialize;

use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyRecord {
    pub suite: &'static str,
    pub property: &'static str,
    pub trials: usize,
    pub failures: usize,
    pub worst: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub trials: usize,
    pub passed: bool,
    pub properties: Vec<PropertyRecord>,
}

pub fn verify(suites: &[Suite], seed: u64, trials: usize, kernels: Kernels) -> Result<VerifyReport> {
    let cfg = CheckConfig { seed, trials, kernels };
    let mut properties = Vec::new();
    for &suite in suites {
        for o in run_suite(suite, &cfg)? {
            properties.push(PropertyRecord {
                suite: suite.name(),
                property: o.name,
                trials: o.trials,
                failures: o.failures,
                worst: o.worst,
                witness: o.witness,
            });
        }
    }
    Ok(VerifyReport {
        seed,
        trials,
        passed: properties.iter().all(|p| p.failures == 0),
        properties,
    })
}
