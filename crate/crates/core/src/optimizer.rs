//! Search for low-capacity (or low-eigenvalue) sets of fixed cardinality.
//!
//! Two kinds of moves are used. A symmetrization step solves for the
//! potential `u`, rearranges it along a direction and keeps the `N` points
//! where the rearranged function equals one. Since the rearranged function is
//! admissible for the new set and has no larger energy, the step never
//! increases the objective. Exchange moves relocate one boundary point to an
//! exterior neighbour.

use alloc::vec::Vec;
use core::cmp::Ordering;

use hashbrown::HashMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::continuum::r_alpha;
use crate::error::{Error, Result};
use crate::float::{exp, powf};
use crate::function::LatticeFunction;
use crate::lattice::{quasi_ball, Direction, LatticePoint, LatticeSet};
use crate::rearrange::{level_set, symmetrize_direction, walled_in_check};
use crate::embedding::permutations;
use crate::solver::{eigen_ground_state, CapacityProblem, SolverConfig};

/// What the optimizer minimizes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Objective {
    /// Scaled p-capacity on an origin-centred truncation ball.
    Capacity { p: f64 },
    /// Scaled relative capacity inside `B_{R N^{1/d}}`.
    Relative { r: f64 },
    /// First Dirichlet eigenvalue of the combinatorial Laplacian.
    Eigen,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ExchangeMode {
    #[default]
    Greedy,
    Annealing,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub solver: SolverConfig,
    /// Truncation radius of the capacity objective: `factor * r_N + margin`.
    pub truncation_factor: f64,
    pub truncation_margin: f64,
    /// Exchange proposals per round.
    pub exchange_batch: usize,
    /// Budget in objective evaluations (cache hits are free).
    pub max_evaluations: usize,
    pub max_rounds: usize,
    pub mode: ExchangeMode,
    pub seed: u64,
    /// Stop when a round improves by less than this (relative).
    pub improvement_tolerance: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            truncation_factor: 2.5,
            truncation_margin: 2.0,
            exchange_batch: 40,
            max_evaluations: 2_000,
            max_rounds: 50,
            mode: ExchangeMode::Greedy,
            seed: 0,
            improvement_tolerance: 1e-10,
        }
    }
}

/// A solved configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    /// Capacitary potential, or the normalized ground state for [`Objective::Eigen`].
    pub potential: LatticeFunction,
}

/// Evaluates an objective for sets of one cardinality, caching values by
/// canonical form.
pub struct Evaluator {
    pub objective: Objective,
    pub dim: usize,
    pub n: usize,
    problem: Option<CapacityProblem>,
    solver: SolverConfig,
    cache: HashMap<Vec<LatticePoint>, f64>,
    warm: Option<LatticeFunction>,
    transforms: Vec<([u8; crate::MAX_DIM], u32)>,
    pub evaluations: usize,
    pub cache_hits: usize,
}

impl Evaluator {
    pub fn new(objective: Objective, dim: usize, n: usize, cfg: &OptimizerConfig) -> Result<Self> {
        Self::build(objective, dim, n, cfg, 0.0)
    }

    /// An evaluator whose capacity ball is widened, if needed, to hold `x`
    /// with the usual margin around it.
    pub fn covering(objective: Objective, x: &LatticeSet, cfg: &OptimizerConfig) -> Result<Self> {
        let reach = x.iter().map(|q| q.norm()).fold(0.0, f64::max);
        Self::build(objective, x.dim(), x.len(), cfg, reach)
    }

    fn build(objective: Objective, dim: usize, n: usize, cfg: &OptimizerConfig, reach: f64) -> Result<Self> {
        crate::lattice::check_dim(dim)?;
        if n == 0 {
            return Err(Error::EmptySet);
        }
        let origin = LatticePoint::origin(dim);
        let nf = n as f64;
        let problem = match objective {
            Objective::Capacity { p } => {
                if !(p > 1.0 && p < dim as f64) {
                    return Err(Error::param("p", "need 1 < p < d"));
                }
                let r_n = r_alpha(nf, dim)?;
                let radius = (cfg.truncation_factor * r_n).max(reach + r_n) + cfg.truncation_margin;
                Some(CapacityProblem::new(dim, p, origin, radius, cfg.solver)?)
            }
            Objective::Relative { r } => {
                let radius = r * powf(nf, 1.0 / dim as f64);
                Some(CapacityProblem::new(dim, 2.0, origin, radius, cfg.solver)?)
            }
            Objective::Eigen => None,
        };
        let transforms = permutations(dim)
            .into_iter()
            .flat_map(|perm| (0..1u32 << dim).map(move |signs| (perm, signs)))
            .collect();
        Ok(Self {
            objective,
            dim,
            n,
            problem,
            solver: cfg.solver,
            cache: HashMap::new(),
            warm: None,
            transforms,
            evaluations: 0,
            cache_hits: 0,
        })
    }

    /// Radius of the admissible ball, if the objective has one.
    pub fn domain_radius(&self) -> Option<f64> {
        self.problem.as_ref().map(|p| p.radius)
    }

    pub fn admits(&self, x: &LatticeSet) -> bool {
        x.len() == self.n && self.problem.as_ref().is_none_or(|p| p.admits(x))
    }

    /// Lexicographically smallest image of the set under coordinate
    /// permutations and sign flips (plus translation for the eigenvalue, which
    /// does not see the origin).
    pub fn canonical_form(&self, x: &LatticeSet) -> Vec<LatticePoint> {
        let d = self.dim;
        let translate = matches!(self.objective, Objective::Eigen);
        let mut best: Option<Vec<LatticePoint>> = None;
        let mut buf: Vec<LatticePoint> = Vec::with_capacity(x.len());
        for (perm, signs) in &self.transforms {
            buf.clear();
            buf.extend(x.iter().map(|q| {
                LatticePoint::from_fn(d, |k| {
                    let c = q[perm[k] as usize];
                    if signs >> k & 1 == 1 {
                        -c
                    } else {
                        c
                    }
                })
            }));
            if translate {
                let lo = LatticePoint::from_fn(d, |k| buf.iter().map(|q| q[k]).min().unwrap_or(0));
                for q in buf.iter_mut() {
                    *q = *q - lo;
                }
            }
            buf.sort_unstable();
            if best.as_ref().is_none_or(|b| buf.as_slice() < b.as_slice()) {
                best = Some(buf.clone());
            }
        }
        best.unwrap_or_default()
    }

    /// Solves without consulting the cache (the potential is needed).
    pub fn solve(&mut self, x: &LatticeSet) -> Result<Evaluation> {
        if x.len() != self.n {
            return Err(Error::ConstraintViolation("cardinality changed".into()));
        }
        self.evaluations += 1;
        let eval = match &self.problem {
            Some(prob) => {
                if !prob.admits(x) {
                    return Err(Error::ConstraintViolation("set leaves the admissible ball".into()));
                }
                let res = prob.solve(x, self.warm.as_ref())?;
                self.warm = Some(res.potential.clone());
                Evaluation {
                    value: res.value,
                    potential: res.potential,
                }
            }
            None => {
                let res = eigen_ground_state(x, &self.solver)?;
                Evaluation {
                    value: res.eigenvalue,
                    potential: res.eigenfunction,
                }
            }
        };
        let key = self.canonical_form(x);
        self.cache.entry(key).or_insert(eval.value);
        Ok(eval)
    }

    pub fn value(&mut self, x: &LatticeSet) -> Result<f64> {
        let key = self.canonical_form(x);
        if let Some(&v) = self.cache.get(&key) {
            self.cache_hits += 1;
            return Ok(v);
        }
        Ok(self.solve(x)?.value)
    }

    /// The set produced by rearranging the potential of `x` along `dir`.
    pub fn descent_step(&mut self, x: &LatticeSet, dir: Direction) -> Result<LatticeSet> {
        let eval = self.solve(x)?;
        let star = symmetrize_direction(&eval.potential, dir)?;
        let next = match self.objective {
            Objective::Eigen => positive_set(&star, self.n)?,
            _ => top_set(&star, self.n)?,
        };
        Ok(if self.admits(&next) { next } else { x.clone() })
    }
}

fn by_value_then_norm(a: &(LatticePoint, f64), b: &(LatticePoint, f64)) -> Ordering {
    b.1.total_cmp(&a.1)
        .then(a.0.norm2().cmp(&b.0.norm2()))
        .then(a.0.cmp(&b.0))
}

/// `{u* = 1}` when it has `n` points; otherwise the `n` largest values, ties
/// broken towards the origin.
fn top_set(u: &LatticeFunction, n: usize) -> Result<LatticeSet> {
    let mut entries: Vec<(LatticePoint, f64)> = u.nonzero().collect();
    entries.sort_unstable_by(by_value_then_norm);
    entries.truncate(n);
    LatticeSet::new(u.dim(), entries.into_iter().map(|e| e.0).collect())
}

/// `{u* > 0}`, padded with exterior neighbours (closest to the origin first)
/// when the ground state vanishes somewhere on the set.
fn positive_set(u: &LatticeFunction, n: usize) -> Result<LatticeSet> {
    let mut set = u.support().ok_or(Error::EmptySet)?;
    while set.len() < n {
        let mut ext = set.exterior_boundary();
        ext.sort_unstable_by(|a, b| a.norm2().cmp(&b.norm2()).then(a.cmp(b)));
        let mut pts = set.points().to_vec();
        pts.extend(ext.into_iter().take(n - set.len()));
        set = LatticeSet::new(u.dim(), pts)?;
    }
    if set.len() > n {
        return top_set(u, n);
    }
    Ok(set)
}

/// One certified descent step for a standalone set.
pub fn symmetrization_descent_step(
    x: &LatticeSet,
    dir: Direction,
    objective: Objective,
    cfg: &OptimizerConfig,
) -> Result<LatticeSet> {
    Evaluator::covering(objective, x, cfg)?.descent_step(x, dir)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MoveKind {
    Initial,
    Symmetrization(Direction),
    Exchange,
    Convexification(Direction),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExchangeOutcome {
    Accepted { set: LatticeSet, value: f64 },
    Rejected,
}

fn weighted_pick(rng: &mut ChaCha8Rng, items: &[(LatticePoint, usize)]) -> Option<LatticePoint> {
    let total: usize = items.iter().map(|e| e.1).sum();
    if total == 0 {
        return None;
    }
    let mut t = rng.random_range(0..total);
    for &(p, w) in items {
        if t < w {
            return Some(p);
        }
        t -= w;
    }
    None
}

/// Proposes `X ∪ {y} \ {x}` with `x` a boundary point and `y` an exterior
/// neighbour, favouring exposed points and well-surrounded holes.
pub fn propose_exchange(eval: &Evaluator, x: &LatticeSet, rng: &mut ChaCha8Rng) -> Option<LatticeSet> {
    if x.len() < 2 {
        return None;
    }
    let removable: Vec<(LatticePoint, usize)> = x
        .inner_boundary()
        .into_iter()
        .map(|q| {
            let open = q.neighbors().filter(|r| !x.contains(r)).count();
            (q, open * open)
        })
        .collect();
    let addable: Vec<(LatticePoint, usize)> = x
        .exterior_boundary()
        .into_iter()
        .map(|q| {
            let touching = q.neighbors().filter(|r| x.contains(r)).count();
            (q, touching * touching)
        })
        .collect();
    for _ in 0..32 {
        let out = weighted_pick(rng, &removable)?;
        let inn = weighted_pick(rng, &addable)?;
        let mut pts: Vec<LatticePoint> = x.iter().copied().filter(|q| *q != out).collect();
        pts.push(inn);
        let cand = LatticeSet::new(x.dim(), pts).ok()?;
        if eval.admits(&cand) {
            return Some(cand);
        }
    }
    None
}

/// Proposes one exchange and accepts it greedily (no increase) or by the
/// Metropolis rule at `temperature`.
pub fn exchange_move(
    eval: &mut Evaluator,
    x: &LatticeSet,
    current: f64,
    rng: &mut ChaCha8Rng,
    mode: ExchangeMode,
    temperature: f64,
) -> Result<ExchangeOutcome> {
    let Some(cand) = propose_exchange(eval, x, rng) else {
        return Ok(ExchangeOutcome::Rejected);
    };
    let value = eval.value(&cand)?;
    let accept = match mode {
        ExchangeMode::Greedy => value <= current,
        ExchangeMode::Annealing => {
            value <= current || (temperature > 0.0 && rng.random::<f64>() < exp(-(value - current) / temperature))
        }
    };
    Ok(if accept {
        ExchangeOutcome::Accepted { set: cand, value }
    } else {
        ExchangeOutcome::Rejected
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchState {
    pub current: LatticeSet,
    pub current_value: f64,
    pub best: (LatticeSet, f64),
    pub history: Vec<(MoveKind, f64)>,
    pub seed: u64,
    pub evaluations: usize,
    pub budget_exhausted: bool,
    pub converged: bool,
}

impl SearchState {
    fn record(&mut self, kind: MoveKind, set: LatticeSet, value: f64) {
        self.current = set;
        self.current_value = value;
        self.history.push((kind, value));
        if value < self.best.1 {
            self.best = (self.current.clone(), value);
        }
    }

    /// Whether recorded values never increase beyond `slack` (relative).
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.history.windows(2).all(|w| w[1].1 <= w[0].1 + slack * w[0].1.abs())
    }
}

/// Initial temperature: median absolute objective change over 50 probe moves.
fn initial_temperature(eval: &mut Evaluator, x: &LatticeSet, v: f64, rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut deltas = Vec::new();
    for _ in 0..50 {
        if let Some(c) = propose_exchange(eval, x, rng) {
            deltas.push((eval.value(&c)? - v).abs());
        }
    }
    if deltas.is_empty() {
        return Ok(0.0);
    }
    deltas.sort_unstable_by(f64::total_cmp);
    Ok(deltas[deltas.len() / 2])
}

/// Minimizes the objective over sets of cardinality `n`, starting from the quasi-ball.
pub fn minimize(dim: usize, n: usize, objective: Objective, cfg: &OptimizerConfig) -> Result<SearchState> {
    let start = quasi_ball(dim, n)?;
    minimize_from(start, objective, cfg)
}

/// [`minimize`] from a given starting set.
pub fn minimize_from(start: LatticeSet, objective: Objective, cfg: &OptimizerConfig) -> Result<SearchState> {
    let dim = start.dim();
    let n = start.len();
    let mut eval = Evaluator::new(objective, dim, n, cfg)?;
    if !eval.admits(&start) {
        return Err(Error::ConstraintViolation("starting set is not admissible".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let v0 = eval.value(&start)?;
    let mut st = SearchState {
        current: start.clone(),
        current_value: v0,
        best: (start.clone(), v0),
        history: alloc::vec![(MoveKind::Initial, v0)],
        seed: cfg.seed,
        evaluations: 0,
        budget_exhausted: false,
        converged: false,
    };
    let dirs = Direction::deduped(dim);
    let mut temperature = match cfg.mode {
        ExchangeMode::Annealing => initial_temperature(&mut eval, &start, v0, &mut rng)?,
        ExchangeMode::Greedy => 0.0,
    };
    let mut proposals = 0usize;
    let out_of_budget = |e: &Evaluator| e.evaluations >= cfg.max_evaluations;
    'rounds: for _ in 0..cfg.max_rounds {
        let round_start = st.current_value;
        for &dir in &dirs {
            if out_of_budget(&eval) {
                st.budget_exhausted = true;
                break 'rounds;
            }
            let next = eval.descent_step(&st.current, dir)?;
            if next != st.current {
                let v = eval.value(&next)?;
                if v <= st.current_value {
                    st.record(MoveKind::Symmetrization(dir), next, v);
                }
            }
        }
        if n >= 2 {
            for _ in 0..cfg.exchange_batch {
                if out_of_budget(&eval) {
                    st.budget_exhausted = true;
                    break 'rounds;
                }
                let cur = st.current.clone();
                if let ExchangeOutcome::Accepted { set, value } =
                    exchange_move(&mut eval, &cur, st.current_value, &mut rng, cfg.mode, temperature)?
                {
                    if set != st.current {
                        st.record(MoveKind::Exchange, set, value);
                    }
                }
                proposals += 1;
                if proposals.is_multiple_of(100) {
                    temperature *= 0.95;
                }
            }
        }
        let gain = round_start - st.current_value;
        if cfg.mode == ExchangeMode::Greedy && gain <= cfg.improvement_tolerance * round_start.abs() {
            st.converged = true;
            break;
        }
    }
    if cfg.mode == ExchangeMode::Annealing && st.best.1 < st.current_value {
        let (set, v) = st.best.clone();
        st.current = set;
        st.current_value = v;
    }
    convexify(&mut eval, &mut st)?;
    st.evaluations = eval.evaluations;
    Ok(st)
}

/// Coordinate descent steps until the set is convex along every axis (at most
/// ten passes). A step is kept when the objective stays within solver noise.
fn convexify(eval: &mut Evaluator, st: &mut SearchState) -> Result<()> {
    let d = st.current.dim();
    for _ in 0..10 {
        if st.current.is_convex_all_axes() {
            return Ok(());
        }
        for j in 0..d {
            if st.current.is_direction_convex(j) {
                continue;
            }
            let dir = Direction::Coordinate(j);
            let next = eval.descent_step(&st.current, dir)?;
            let v = eval.value(&next)?;
            if v <= st.current_value + 1e-9 * st.current_value.abs() {
                st.record(MoveKind::Convexification(dir), next, v.min(st.current_value));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditReport {
    pub n: usize,
    pub value: f64,
    pub scaled_perimeter: f64,
    /// `diam(X) / N^{1/d}`.
    pub diameter_ratio: f64,
    pub convex_axes: Vec<bool>,
    /// Walled-in check of the potential's level sets, per axis, over thresholds 1/4, 1/2, 3/4 and 1.
    pub walled_in: Vec<bool>,
    /// `{u >= 1} = X` (capacities) or `{u > 0} = X` (eigenvalue).
    pub level_set_matches: bool,
}

impl AuditReport {
    pub fn convex(&self) -> bool {
        self.convex_axes.iter().all(|&c| c)
    }
}

pub fn structural_audit(x: &LatticeSet, objective: Objective, cfg: &OptimizerConfig) -> Result<AuditReport> {
    let d = x.dim();
    let n = x.len();
    let mut eval = Evaluator::covering(objective, x, cfg)?;
    let sol = eval.solve(x)?;
    let u = &sol.potential;
    let level = match objective {
        Objective::Eigen => level_set(u, 0.0, true)?,
        _ => level_set(u, 1.0, false)?,
    };
    let axes: Vec<usize> = (0..d).collect();
    let x0 = LatticePoint::origin(d);
    let top = u.max_value();
    let mut walled_in = Vec::with_capacity(d);
    for j in 0..d {
        let mut ok = true;
        for frac in [0.25, 0.5, 0.75, 1.0] {
            ok &= walled_in_check(u, frac * top, j, &x0, &axes)?.holds;
        }
        walled_in.push(ok);
    }
    Ok(AuditReport {
        n,
        value: sol.value,
        scaled_perimeter: x.scaled_perimeter(),
        diameter_ratio: x.diameter() / powf(n as f64, 1.0 / d as f64),
        convex_axes: (0..d).map(|j| x.is_direction_convex(j)).collect(),
        walled_in,
        level_set_matches: level.as_ref() == Some(x),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form_is_isometry_invariant() {
        let cfg = OptimizerConfig::default();
        let ev = Evaluator::new(Objective::Eigen, 3, 3, &cfg).unwrap();
        let a = LatticeSet::from_coords(&[&[0, 0, 0], &[1, 0, 0], &[1, 1, 0]]).unwrap();
        let b = LatticeSet::from_coords(&[&[5, 5, 5], &[5, 5, 4], &[5, 4, 4]]).unwrap();
        assert_eq!(ev.canonical_form(&a), ev.canonical_form(&b));
    }

    #[test]
    fn singleton_is_its_own_minimizer() {
        let cfg = OptimizerConfig::default();
        let st = minimize(3, 1, Objective::Eigen, &cfg).unwrap();
        assert_eq!(st.current.len(), 1);
        assert!((st.current_value - 6.0).abs() < 1e-12);
    }
}
