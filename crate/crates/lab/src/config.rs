//! TOML configuration for solver tolerances, truncation and search budgets.
//!
//! Every key is optional; missing keys take the library defaults.
//!
//! ```toml
//! [solver]
//! cg_tolerance = 1e-12
//! schedule = "red-black"
//!
//! [truncation]
//! diameter_factor = 4.0
//!
//! [optimizer]
//! max_evaluations = 500
//! ```

use std::path::Path;

use isocap_core::optimizer::{ExchangeMode, OptimizerConfig};
use isocap_core::solver::{NonlinearMethod, SolverConfig, SweepSchedule, TruncationPolicy};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::io::read_to_string;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleName {
    Alternating,
    RedBlack,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    GaussSeidel,
    NewtonGaussSeidel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeName {
    Greedy,
    Annealing,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub cg_tolerance: Option<f64>,
    pub max_iterations_factor: Option<usize>,
    pub defect_tolerance: Option<f64>,
    pub update_tolerance: Option<f64>,
    pub energy_tolerance: Option<f64>,
    pub max_sweeps: Option<usize>,
    pub relaxation: Option<f64>,
    pub schedule: Option<ScheduleName>,
    pub method: Option<MethodName>,
    pub newton_max_iterations: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationSection {
    /// Truncation radius of single solves: `factor * (diam + N^{1/d})`.
    pub diameter_factor: f64,
    /// Truncation radius of the convergence experiment: `factor * r_N`.
    pub volume_factor: f64,
}

impl Default for TruncationSection {
    fn default() -> Self {
        Self {
            diameter_factor: 4.0,
            volume_factor: 3.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    pub truncation_factor: Option<f64>,
    pub truncation_margin: Option<f64>,
    pub exchange_batch: Option<usize>,
    pub max_evaluations: Option<usize>,
    pub max_rounds: Option<usize>,
    pub mode: Option<ModeName>,
    pub improvement_tolerance: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabConfig {
    pub solver: SolverSection,
    pub truncation: TruncationSection,
    pub optimizer: OptimizerSection,
}

fn positive(name: &str, v: Option<f64>) -> Result<()> {
    match v {
        Some(x) if !(x.is_finite() && x > 0.0) => Err(LabError::Config(format!("`{name}` must be positive, got {x}"))),
        _ => Ok(()),
    }
}

impl LabConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: LabConfig = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_to_string(path)?)
    }

    fn validate(&self) -> Result<()> {
        let s = &self.solver;
        positive("solver.cg_tolerance", s.cg_tolerance)?;
        positive("solver.defect_tolerance", s.defect_tolerance)?;
        positive("solver.update_tolerance", s.update_tolerance)?;
        positive("solver.energy_tolerance", s.energy_tolerance)?;
        if let Some(w) = s.relaxation {
            if !(w > 0.0 && w < 2.0) {
                return Err(LabError::Config(format!("`solver.relaxation` must lie in (0, 2), got {w}")));
            }
        }
        positive("truncation.diameter_factor", Some(self.truncation.diameter_factor))?;
        positive("truncation.volume_factor", Some(self.truncation.volume_factor))?;
        positive("optimizer.truncation_factor", self.optimizer.truncation_factor)?;
        Ok(())
    }

    pub fn solver(&self) -> SolverConfig {
        let s = &self.solver;
        let d = SolverConfig::default();
        SolverConfig {
            cg_tolerance: s.cg_tolerance.unwrap_or(d.cg_tolerance),
            max_iterations_factor: s.max_iterations_factor.unwrap_or(d.max_iterations_factor),
            defect_tolerance: s.defect_tolerance.unwrap_or(d.defect_tolerance),
            update_tolerance: s.update_tolerance.unwrap_or(d.update_tolerance),
            energy_tolerance: s.energy_tolerance.unwrap_or(d.energy_tolerance),
            max_sweeps: s.max_sweeps.unwrap_or(d.max_sweeps),
            relaxation: s.relaxation.unwrap_or(d.relaxation),
            schedule: match s.schedule {
                None => d.schedule,
                Some(ScheduleName::Alternating) => SweepSchedule::Alternating,
                Some(ScheduleName::RedBlack) => SweepSchedule::RedBlack,
            },
            method: match s.method {
                None => d.method,
                Some(MethodName::GaussSeidel) => NonlinearMethod::GaussSeidel,
                Some(MethodName::NewtonGaussSeidel) => NonlinearMethod::NewtonThenGaussSeidel,
            },
            newton_max_iterations: s.newton_max_iterations.unwrap_or(d.newton_max_iterations),
        }
    }

    pub fn truncation(&self) -> TruncationPolicy {
        TruncationPolicy::Diameter {
            factor: self.truncation.diameter_factor,
        }
    }

    pub fn optimizer(&self, seed: u64) -> OptimizerConfig {
        let o = &self.optimizer;
        let d = OptimizerConfig::default();
        OptimizerConfig {
            solver: self.solver(),
            truncation_factor: o.truncation_factor.unwrap_or(d.truncation_factor),
            truncation_margin: o.truncation_margin.unwrap_or(d.truncation_margin),
            exchange_batch: o.exchange_batch.unwrap_or(d.exchange_batch),
            max_evaluations: o.max_evaluations.unwrap_or(d.max_evaluations),
            max_rounds: o.max_rounds.unwrap_or(d.max_rounds),
            mode: match o.mode {
                None => d.mode,
                Some(ModeName::Greedy) => ExchangeMode::Greedy,
                Some(ModeName::Annealing) => ExchangeMode::Annealing,
            },
            seed,
            improvement_tolerance: o.improvement_tolerance.unwrap_or(d.improvement_tolerance),
        }
    }
}
