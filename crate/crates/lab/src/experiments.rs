//! Convergence of lattice-ball capacities and the fluctuation experiment.

use std::fmt::Write as _;
use std::time::{SystemTime, UNIX_EPOCH};

use isocap_core::continuum::{r_alpha, scaled_ball_target};
use isocap_core::energy::ORDERED_PAIR_FACTOR;
use isocap_core::lattice::{lattice_ball, min_sym_diff_to_ball, sym_diff_count};
use isocap_core::optimizer::{minimize, ExchangeMode, Objective, OptimizerConfig, SearchState};
use isocap_core::solver::{p_capacity, SolverConfig, TruncationPolicy};
use isocap_core::{LatticePoint, LatticeSet};

use crate::error::{LabError, Result};
use crate::ledger::{self, Ledger};
use crate::stats::{log_log_slope, median, spearman};

pub const CONVERGENCE_HEADER: &str = "k,N,discreteValue,continuumTarget,error,fittedExponent";
pub const FLUCTUATION_HEADER: &str = "N,d,param,alphaN,PN,rN,symDiff,boundValue,ratio,seed";

fn timestamp_line(kind: &str) -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    format!("# isocap {kind} generated at unix time {secs}\n")
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRecord {
    pub k: f64,
    pub n: usize,
    pub discrete_value: f64,
    pub continuum_target: f64,
    /// `|discrete - target|`.
    pub error: f64,
    /// Slope of log relative error against log N over the whole run.
    pub fitted_exponent: f64,
}

impl ConvergenceRecord {
    pub fn relative_error(&self) -> f64 {
        self.error / self.continuum_target
    }
}

/// Scaled capacities of lattice balls `B_k` against the continuum value.
///
/// Each ball is solved on the concentric ball of radius `volume_factor * r_N`
/// and the truncation bias is divided out; the lattice energy is halved to
/// count each edge once, as the continuum integral does.
pub fn convergence(
    p: f64,
    d: usize,
    ks: &[f64],
    volume_factor: f64,
    cfg: &SolverConfig,
) -> Result<Vec<ConvergenceRecord>> {
    if ks.iter().any(|&k| k.is_nan() || k < 2.0) {
        return Err(LabError::Config("ball radii must be at least 2".into()));
    }
    let target = scaled_ball_target(p, d)?;
    let origin = LatticePoint::origin(d);
    let mut out = Vec::with_capacity(ks.len());
    for &k in ks {
        let x = lattice_ball(k, &origin)?;
        let n = x.len();
        let radius = volume_factor * r_alpha(n as f64, d)?;
        let res = p_capacity(&x, p, TruncationPolicy::Fixed { radius, center: None }, cfg)?;
        let value = res.corrected_value.unwrap_or(res.value) / ORDERED_PAIR_FACTOR;
        out.push(ConvergenceRecord {
            k,
            n,
            discrete_value: value,
            continuum_target: target,
            error: (value - target).abs(),
            fitted_exponent: f64::NAN,
        });
    }
    let ns: Vec<f64> = out.iter().map(|r| r.n as f64).collect();
    let errs: Vec<f64> = out.iter().map(ConvergenceRecord::relative_error).collect();
    let slope = log_log_slope(&ns, &errs).unwrap_or(f64::NAN);
    for r in &mut out {
        r.fitted_exponent = slope;
    }
    Ok(out)
}

pub fn convergence_csv(records: &[ConvergenceRecord], stamp: bool) -> String {
    let mut s = if stamp { timestamp_line("convergence") } else { String::new() };
    s.push_str(CONVERGENCE_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.k, r.n, r.discrete_value, r.continuum_target, r.error, r.fitted_exponent
        );
    }
    s
}

/// One optimizer run of the fluctuation experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Run {
    pub n: usize,
    pub seed: u64,
    pub set: LatticeSet,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRecord {
    pub n: usize,
    pub d: usize,
    /// `p`, `R`, or zero for the eigenvalue.
    pub param: f64,
    pub alpha_n: f64,
    pub p_n: f64,
    pub r_n: f64,
    pub sym_diff: usize,
    /// `N (alpha_N^{1/2} + N^{-1/(2d)} P_N^{1/2})`.
    pub bound_value: f64,
    pub ratio: f64,
    pub seed: u64,
}

/// Two runs at the same `N`, compared through the ball fitted to the first.
#[derive(Clone, Debug, PartialEq)]
pub struct PairCheck {
    pub n: usize,
    pub seeds: (u64, u64),
    pub sym_diff: usize,
    /// `#(X Δ B) + #(Y Δ B)` for the ball `B` closest to `X`.
    pub bound: usize,
}

impl PairCheck {
    pub fn holds(&self) -> bool {
        self.sym_diff <= self.bound
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FluctuationReport {
    pub records: Vec<ExperimentRecord>,
    pub pairs: Vec<PairCheck>,
    pub max_ratio: f64,
    /// Largest over median ratio.
    pub spread: f64,
    /// Rank correlation of ratio with `N`; `None` when either is constant.
    pub trend: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct FluctuationSettings {
    pub dim: usize,
    pub objective: Objective,
    pub ns: Vec<usize>,
    pub restarts: usize,
    pub seed: u64,
    pub optimizer: OptimizerConfig,
    /// Worker threads for the optimizer runs.
    pub jobs: usize,
}

pub fn objective_param(objective: Objective) -> f64 {
    match objective {
        Objective::Capacity { p } => p,
        Objective::Relative { r } => r,
        Objective::Eigen => 0.0,
    }
}

/// Runs the optimizer. The first restart at each `N` uses the configured
/// exchange mode and later ones anneal, each with its own seed.
pub fn optimize_cell(s: &FluctuationSettings, n: usize, restart: usize) -> Result<Run> {
    let seed = s.seed.wrapping_add(restart as u64);
    let mut cfg = s.optimizer;
    cfg.seed = seed;
    if restart > 0 {
        cfg.mode = ExchangeMode::Annealing;
    }
    let st: SearchState = minimize(s.dim, n, s.objective, &cfg)?;
    Ok(Run {
        n,
        seed,
        value: st.best.1,
        set: st.best.0,
        evaluations: st.evaluations,
        converged: st.converged,
    })
}

/// Runs every (N, restart) cell, in cell order whatever the number of workers.
pub fn run_cells(s: &FluctuationSettings) -> Result<Vec<Run>> {
    let cells: Vec<(usize, usize)> = s
        .ns
        .iter()
        .flat_map(|&n| (0..s.restarts.max(1)).map(move |r| (n, r)))
        .collect();
    let jobs = s.jobs.clamp(1, cells.len().max(1));
    if jobs == 1 {
        return cells.iter().map(|&(n, r)| optimize_cell(s, n, r)).collect();
    }
    // Workers take every `jobs`-th cell; results are put back in cell order.
    let mut slots: Vec<Option<Result<Run>>> = (0..cells.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..jobs)
            .map(|w| {
                let cells = &cells;
                scope.spawn(move || {
                    (w..cells.len())
                        .step_by(jobs)
                        .map(|i| (i, optimize_cell(s, cells[i].0, cells[i].1)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("optimizer worker panicked") {
                slots[i] = Some(r);
            }
        }
    });
    slots.into_iter().map(|r| r.expect("every cell ran")).collect()
}

/// Turns finished runs into records, after folding them into the ledger.
pub fn evaluate_runs(dim: usize, objective: Objective, runs: &[Run], ledger: &mut Ledger) -> Result<FluctuationReport> {
    for r in runs {
        ledger.record(&ledger::key(dim, objective, r.n), r.value, r.seed);
    }
    let df = dim as f64;
    let mut records = Vec::with_capacity(runs.len());
    let mut pairs = Vec::new();
    for (i, r) in runs.iter().enumerate() {
        let nf = r.n as f64;
        let best = ledger.best(&ledger::key(dim, objective, r.n)).unwrap_or(r.value);
        let alpha_n = (r.value - best).max(0.0);
        let p_n = r.set.scaled_perimeter();
        let r_n = r_alpha(nf, dim)?;
        let (center, sym_diff) = min_sym_diff_to_ball(&r.set, r_n)?;
        let bound_value = nf * (alpha_n.sqrt() + nf.powf(-1.0 / (2.0 * df)) * p_n.sqrt());
        records.push(ExperimentRecord {
            n: r.n,
            d: dim,
            param: objective_param(objective),
            alpha_n,
            p_n,
            r_n,
            sym_diff,
            bound_value,
            ratio: sym_diff as f64 / bound_value,
            seed: r.seed,
        });
        let first_at_n = i == 0 || runs[i - 1].n != r.n;
        if let Some(other) = runs.get(i + 1).filter(|o| first_at_n && o.n == r.n) {
            let ball = lattice_ball(r_n, &center)?;
            pairs.push(PairCheck {
                n: r.n,
                seeds: (r.seed, other.seed),
                sym_diff: sym_diff_count(&r.set, &other.set)?,
                bound: sym_diff + sym_diff_count(&other.set, &ball)?,
            });
        }
    }
    let ratios: Vec<f64> = records.iter().map(|r| r.ratio).collect();
    let ns: Vec<f64> = records.iter().map(|r| r.n as f64).collect();
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let spread = median(&ratios).map_or(f64::NAN, |m| max_ratio / m);
    Ok(FluctuationReport {
        trend: spearman(&ns, &ratios),
        records,
        pairs,
        max_ratio,
        spread,
    })
}

pub fn fluctuation(s: &FluctuationSettings, ledger: &mut Ledger) -> Result<FluctuationReport> {
    if s.ns.windows(2).any(|w| w[1] < w[0]) {
        return Err(LabError::Config("cardinalities must be nondecreasing".into()));
    }
    if s.ns.first() == Some(&0) {
        return Err(LabError::Config("cardinalities must be positive".into()));
    }
    let runs = run_cells(s)?;
    evaluate_runs(s.dim, s.objective, &runs, ledger)
}

pub fn fluctuation_csv(report: &FluctuationReport, stamp: bool) -> String {
    let mut s = if stamp { timestamp_line("fluctuation") } else { String::new() };
    s.push_str(FLUCTUATION_HEADER);
    s.push('\n');
    for r in &report.records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.n, r.d, r.param, r.alpha_n, r.p_n, r.r_n, r.sym_diff, r.bound_value, r.ratio, r.seed
        );
    }
    for p in &report.pairs {
        let _ = writeln!(
            s,
            "# pair N={} seeds={}/{} symDiffXY={} bound={} holds={}",
            p.n,
            p.seeds.0,
            p.seeds.1,
            p.sym_diff,
            p.bound,
            p.holds()
        );
    }
    let trend = report.trend.map_or_else(|| "undefined".to_owned(), |t| t.to_string());
    let _ = writeln!(
        s,
        "# maxRatio={} maxOverMedian={} spearman={} (alphaN is measured against the best value on record)",
        report.max_ratio, report.spread, trend
    );
    s
}
