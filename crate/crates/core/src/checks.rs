//! Randomized property suites for the energy, rearrangement, embedding and
//! solver kernels. Each property reports its trial count, failures and the
//! first failing witness.
//!
//! The diagonal kernel is injectable so a deliberately broken implementation
//! can be run through the suites to confirm they catch it.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embedding::{interpolation_energy, zeta_volume_bounds_check, GradientNorm};
use crate::energy::{decompose_energy, diag_1d, energy_1d, energy_p, interaction_1d, ORDERED_PAIR_FACTOR};
use crate::error::{Error, Result};
use crate::float::abs_pow;
use crate::function::{LatticeFunction, Sequence};
use crate::lattice::{BoundingBox, Direction, LatticePoint, LatticeSet};
use crate::rearrange::{flip, level_set, reflect, symmetrize_1d, symmetrize_direction};
use crate::solver::{relative_capacity, verify_potential, SolverConfig, VerifyMode};

pub type DiagKernel = fn(&Sequence, &Sequence, f64) -> f64;

/// Kernels under test.
#[derive(Clone, Copy)]
pub struct Kernels {
    pub diag_1d: DiagKernel,
}

impl Default for Kernels {
    fn default() -> Self {
        Self { diag_1d }
    }
}

/// A wrong diagonal kernel: pairs `w(t - 1)` with `v(t)` instead of `w(t + 1)`.
pub fn mutated_diag_1d(w: &Sequence, v: &Sequence, p: f64) -> f64 {
    let (lo, hi) = w.joint_range(v);
    let mut s = 0.0;
    for t in lo - 1..hi + 1 {
        s += abs_pow(w.get(t) - v.get(t), p) + abs_pow(w.get(t - 1) - v.get(t), p);
    }
    s
}

#[derive(Clone, Debug, PartialEq)]
pub struct PropertyOutcome {
    pub name: &'static str,
    pub trials: usize,
    pub failures: usize,
    /// Largest observed violation (relative where the property is relative).
    pub worst: f64,
    pub witness: Option<String>,
}

impl PropertyOutcome {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            trials: 0,
            failures: 0,
            worst: 0.0,
            witness: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    /// Records one trial with violation `excess` (a failure when positive).
    fn record(&mut self, excess: f64, witness: impl FnOnce() -> String) {
        self.trials += 1;
        if excess > self.worst {
            self.worst = excess;
        }
        if excess > 0.0 {
            self.failures += 1;
            if self.witness.is_none() {
                self.witness = Some(witness());
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Energy,
    Rearrangement,
    MinMax,
    Embedding,
    Solver,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Energy, Suite::Rearrangement, Suite::MinMax, Suite::Embedding, Suite::Solver];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Energy => "energy",
            Suite::Rearrangement => "rearrangement",
            Suite::MinMax => "minmax",
            Suite::Embedding => "embedding",
            Suite::Solver => "solver",
        }
    }

    pub fn parse(s: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|x| x.name() == s)
    }
}

#[derive(Clone, Copy)]
pub struct CheckConfig {
    pub seed: u64,
    /// Base trial count; individual properties scale it.
    pub trials: usize,
    pub kernels: Kernels,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            trials: 1000,
            kernels: Kernels::default(),
        }
    }
}

pub fn run_suite(suite: Suite, cfg: &CheckConfig) -> Result<Vec<PropertyOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (suite as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let t = cfg.trials.max(1);
    let k = &cfg.kernels;
    Ok(match suite {
        Suite::Energy => vec![
            decomposition_exactness(&mut rng, t.div_ceil(10).max(10), 1e-12)?,
            kernel_cross_check(&mut rng, t)?,
            flip_bookkeeping(&mut rng, t, k)?,
        ],
        Suite::Rearrangement => vec![
            symmetrization_monotonicity(&mut rng, t, 1e-12)?,
            one_d_optimality(&mut rng, t.div_ceil(10).max(10), 8)?,
            neighbouring_lines(&mut rng, t)?,
            diagonal_interaction(&mut rng, t, k)?,
            idempotence(&mut rng, t.div_ceil(10).max(10))?,
            level_set_convexity(&mut rng, t.div_ceil(10).max(10))?,
        ],
        Suite::MinMax => vec![min_max_inequality(&mut rng, t * 100)?],
        Suite::Embedding => vec![
            interpolation_identity(&mut rng, t.div_ceil(10).max(10), 1e-9)?,
            zeta_volume_bounds(&mut rng, t.div_ceil(10).max(10))?,
        ],
        Suite::Solver => vec![relative_potential_residuals(&mut rng, t.div_ceil(100).max(3), 1e-10)?],
    })
}

// Random inputs.

/// A value that is zero, a quarter-step (to create ties) or uniform in `[0, 1]`.
pub fn random_value(rng: &mut impl Rng) -> f64 {
    match rng.random_range(0..10) {
        0..=2 => 0.0,
        3..=5 => rng.random_range(1..=4) as f64 * 0.25,
        _ => rng.random::<f64>(),
    }
}

/// A nonnegative function on a random box with sides in `1..=max_side`.
pub fn random_function(rng: &mut impl Rng, d: usize, max_side: i32) -> Result<LatticeFunction> {
    let lo = LatticePoint::from_fn(d, |_| rng.random_range(-3..=3));
    let hi = LatticePoint::from_fn(d, |k| lo[k] + rng.random_range(0..max_side));
    let mut entries = Vec::new();
    BoundingBox { lo, hi }.for_each(|q| entries.push((q, 0.0)));
    for e in entries.iter_mut() {
        e.1 = random_value(rng);
    }
    LatticeFunction::from_entries(d, entries)
}

pub fn random_sequence(rng: &mut impl Rng, max_len: usize) -> Sequence {
    let len = rng.random_range(1..=max_len);
    let offset = rng.random_range(-4..=4);
    Sequence::new(offset, (0..len).map(|_| random_value(rng)).collect())
}

/// A set grown from the origin by random exterior neighbours.
pub fn random_connected_set(rng: &mut impl Rng, d: usize, n: usize) -> Result<LatticeSet> {
    let mut set = LatticeSet::singleton(LatticePoint::origin(d));
    while set.len() < n {
        let ext = set.exterior_boundary();
        let q = ext[rng.random_range(0..ext.len())];
        let mut pts = set.points().to_vec();
        pts.push(q);
        set = LatticeSet::new(d, pts)?;
    }
    Ok(set)
}

/// Like [`random_connected_set`], growing only inside the open ball `|q| < radius`.
pub fn random_set_in_ball(rng: &mut impl Rng, d: usize, n: usize, radius: f64) -> Result<LatticeSet> {
    let mut set = LatticeSet::singleton(LatticePoint::origin(d));
    let r2 = radius * radius;
    while set.len() < n {
        let ext: Vec<LatticePoint> = set
            .exterior_boundary()
            .into_iter()
            .filter(|q| (q.norm2() as f64) < r2)
            .collect();
        if ext.is_empty() {
            return Err(Error::param("radius", "ball too small for the requested size"));
        }
        let q = ext[rng.random_range(0..ext.len())];
        let mut pts = set.points().to_vec();
        pts.push(q);
        set = LatticeSet::new(d, pts)?;
    }
    Ok(set)
}

fn rel_excess(value: f64, bound: f64, tol: f64) -> f64 {
    let scale = bound.abs().max(1.0);
    let e = (value - bound) / scale;
    if e > tol {
        e
    } else {
        0.0
    }
}

// Energy suite.

/// Per-slice plus cross terms reproduce `E_p` for every direction.
pub fn decomposition_exactness(rng: &mut impl Rng, trials: usize, tol: f64) -> Result<PropertyOutcome> {
    let mut out = PropertyOutcome::new("energy decomposition");
    for _ in 0..trials {
        let d = rng.random_range(2..=3);
        let p = [1.5, 2.0, 3.0][rng.random_range(0..3)];
        let u = random_function(rng, d, 5)?;
        let e = energy_p(&u, p);
        for dir in Direction::all(d) {
            let br = decompose_energy(&u, dir, p)?;
            let sum = ORDERED_PAIR_FACTOR * br.component_sum();
            let err = (sum - e).abs() / e.max(f64::MIN_POSITIVE);
            let excess = if err > tol { err } else { 0.0 };
            out.record(excess, || format!("dir {dir:?}, p {p}, energy {e}, components {sum}"));
        }
    }
    Ok(out)
}

/// `energy_1d(w)` equals `interaction_1d(w, w(. + 1))`.
pub fn kernel_cross_check(rng: &mut impl Rng, trials: usize) -> Result<PropertyOutcome> {
    let mut out = PropertyOutcome::new("1-d kernel cross-check");
    for _ in 0..trials {
        let w = random_sequence(rng, 10);
        let p = rng.random_range(1.1..4.0);
        let a = energy_1d(&w, p);
        let b = interaction_1d(&w, &w.shifted(1), p);
        let err = (a - b).abs() / a.max(1.0);
        out.record(if err > 1e-13 { err } else { 0.0 }, || format!("{w:?}, p {p}: {a} vs {b}"));
    }
    Ok(out)
}

/// The change of the diagonal energy under the flips `u -> u_{l+1,m}`,
/// `v -> v_{l,m}` is the four-term correction.
pub fn flip_bookkeeping(rng: &mut impl Rng, trials: usize, k: &Kernels) -> Result<PropertyOutcome> {
    let mut out = PropertyOutcome::new("flip bookkeeping");
    let diag = k.diag_1d;
    for _ in 0..trials {
        let u = random_sequence(rng, 9);
        let v = random_sequence(rng, 9);
        let p = rng.random_range(1.1..4.0);
        let (lo, hi) = u.joint_range(&v);
        let l = rng.random_range(lo - 2..hi + 1);
        let m = rng.random_range(l + 1..hi + 3);
        // u_{l+1,m} with l + 1 = m is the identity.
        let uf = if l + 1 < m { flip(&u, l + 1, m)? } else { u.clone() };
        let lhs = diag(&uf, &flip(&v, l, m)?, p);
        let rhs = diag(&u, &v, p) + abs_pow(u.get(l) - v.get(m), p) + abs_pow(u.get(m + 1) - v.get(l), p)
            - abs_pow(u.get(l) - v.get(l), p)
            - abs_pow(u.get(m + 1) - v.get(m), p);
        let err = (lhs - rhs).abs() / lhs.abs().max(1.0);
        out.record(if err > 1e-12 { err } else { 0.0 }, || {
            format!("u {u:?}, v {v:?}, l {l}, m {m}, p {p}: {lhs} vs {rhs}")
        });
    }
    Ok(out)
}

// Rearrangement suite.

/// `E_p` does not increase under `symmetrize_direction` and the value
/// multiset is kept exactly.
pub fn symmetrization_monotonicity(rng: &mut impl Rng, trials: usize, tol: f64) -> Result<PropertyOutcome> {
    let mut out = PropertyOutcome::new("symmetrization monotonicity");
    for _ in 0..trials {
        let d = rng.random_range(2..=3);
        let p = [1.5, 2.0, 3.0][rng.random_range(0..3)];
        let u = random_function(rng, d, 5)?;
        let dirs = Direction::all(d);
        let dir = dirs[rng.random_range(0..dirs.len())];
        let s = symmetrize_direction(&u, dir)?;
        let (e0, e1) = (energy_p(&u, p), energy_p(&s, p));
        let mut excess = rel_excess(e1, e0, tol);
        if s.sorted_nonzero_values() != u.sorted_nonzero_values() {
            excess = excess.max(1.0);
        }
        out.record(excess, || format!("dir {dir:?}, p {p}: {e0} -> {e1}"));
    }
    Ok(out)
}

/// Non-decreasing up to the maximum and non-increasing after it.
pub fn is_unimodal(values: &[f64]) -> bool {
    let mut descending = false;
    for w in values.windows(2) {
        if w[1] < w[0] {
            descending = true;
        } else if w[1] > w[0] && descending {
            return false;
        }
    }
    true
}

fn for_each_permutation(v: &mut [f64], k: usize, f: &mut impl FnMut(&[f64])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        for_each_permutation(v, k + 1, f);
        v.swap(k, i);
    }
}

/// On multisets of at most `max_len` values, the symmetric rearrangement
/// attains the minimum of `energy_1d` over all arrangements, and every
/// minimizing arrangement is unimodal.
pub fn one_d_optimality(rng: &mut impl Rng, trials: usize, max_len: usize) -> Result<PropertyOutcome> {
    let mut out = PropertyOutcome::new("1-d optimality");
    for _ in 0..trials {
        let len = rng.random_range(2..=max_len);
        let p = [1.5, 2.0, 3.0][rng.random_range(0..3)];
        let mut vals: Vec<f64> = (0..len).map(|_| random_value(rng)).collect();
        let sym = energy_1d(&symmetrize_1d(&Sequence::new(0, vals.clone()))?, p);
        let mut best = f64::INFINITY;
        for_each_permutation(&mut vals, 0, &mut |perm| {
            best = best.min(energy_1d(&Sequence::new(0, perm.to_vec()), p));
        });
        let mut bad_minimizer: Option<Vec<f64>> = None;
        for_each_permutation(&mut vals, 0, &mut |perm| {
            let e = energy_1d(&Sequence::new(0, perm.to_vec()), p);
            if e <= best + 1e-12 * best.max(1.0) && !is_unimodal(perm) && bad_minimizer.is_none() {
                bad_minimizer = Some(perm.to_vec());
            }
        });
        let mut excess = rel_excess(sym, best, 1e-12);
        if bad_minimizer.is_some() {
            excess = excess.max(1.0);
        }
        out.record(excess, || format!("values {vals:?}, p {p}: symmetric {sym}, best {best}, non-unimodal minimizer {bad_minimizer:?}"));
    }
    Ok(out)
}

/// `interaction_1d(w*, v*) <= interaction_1d(w, v)`.
pub fn neighbouring_lines(rng: &mut impl Rng, trials: usize) -> Result<PropertyOutcome> {
    let mut out = PropertyOutcome::new("neighbouring lines");
    for _ in 0..trials {
        let (w, v) = (random_sequence(rng, 8), random_sequence(rng, 8));
        let p = rng.random_range(1.1..4.0);
        let before = interaction_1d(&w, &v, p);
        let after = interaction_1d(&symmetrize_1d(&w)?, &symmetrize_1d(&v)?, p);
        out.record(rel_excess(after, before, 1e-12), || format!("w {w:?}, v {v:?}, p {p}: {before} -> {after}"));
    }
    Ok(out)
}

/// `diag(w*, R v*) <= diag(w, v)`.
pub fn diagonal_interaction(rng: &mut impl Rng, trials: usize, k: &Kernels) -> Result<PropertyOutcome> {
    let mut out = PropertyOutcome::new("diagonal interaction");
    for _ in 0..trials {
        let (w, v) = (random_sequence(rng, 8), random_sequence(rng, 8));
        let p = rng.random_range(1.1..4.0);
        let before = (k.diag_1d)(&w, &v, p);
        let after = (k.diag_1d)(&symmetrize_1d(&w)?, &reflect(&symmetrize_1d(&v)?), p);
        out.record(rel_excess(after, before, 1e-12), || format!("w {w:?}, v {v:?}, p {p}: {before} -> {after}"));
    }
    Ok(out)
}

/// Symmetrizing twice along the same direction changes nothing.
pub fn idempotence(rng: &mut impl Rng, trials: usize) -> Result<PropertyOutcome> {
    let mut out = PropertyOutcome::new("idempotence");
    for _ in 0..trials {
        let d = rng.random_range(2..=3);
        let u = random_function(rng, d, 5)?;
        for dir in Direction::all(d) {
            let once = symmetrize_direction(&u, dir)?;
            let twice = symmetrize_direction(&once, dir)?;
            let same = once.nonzero().eq(twice.nonzero());
            out.record(if same { 0.0 } else { 1.0 }, || format!("dir {dir:?}"));
        }
    }
    Ok(out)
}

/// After symmetrizing along `e_j`, every superlevel set is convex along `e_j`.
pub fn level_set_convexity(rng: &mut impl Rng, trials: usize) -> Result<PropertyOutcome> {
    let mut out = PropertyOutcome::new("level-set convexity");
    for _ in 0..trials {
        let d = rng.random_range(2..=3);
        let u = random_function(rng, d, 5)?;
        let j = rng.random_range(0..d);
        let s = symmetrize_direction(&u, Direction::Coordinate(j))?;
        let mut levels: Vec<f64> = s.sorted_nonzero_values();
        levels.dedup();
        let mut ok = true;
        for &t in &levels {
            if let Some(set) = level_set(&s, t, false)? {
                ok &= set.is_direction_convex(j);
            }
        }
        out.record(if ok { 0.0 } else { 1.0 }, || format!("axis {j}"));
    }
    Ok(out)
}

// Min-max suite.

/// `|a1^a2 - b1^b2|^p + |a1 v a2 - b1 v b2|^p <= |a1 - b1|^p + |a2 - b2|^p`,
/// with equality only when `(a1 - a2)(b1 - b2) >= 0`. Half the samples are
/// small integers so that equality cases actually occur.
pub fn min_max_inequality(rng: &mut impl Rng, trials: usize) -> Result<PropertyOutcome> {
    let mut out = PropertyOutcome::new("min-max inequality");
    for i in 0..trials {
        let p = [1.2, 2.0, 3.7][i % 3];
        let mut draw = || {
            if rng.random_bool(0.5) {
                rng.random_range(0..4) as f64
            } else {
                rng.random_range(0.0..3.0)
            }
        };
        let (a1, a2, b1, b2) = (draw(), draw(), draw(), draw());
        let lhs = abs_pow(a1.min(a2) - b1.min(b2), p) + abs_pow(a1.max(a2) - b1.max(b2), p);
        let rhs = abs_pow(a1 - b1, p) + abs_pow(a2 - b2, p);
        let scale = rhs.max(1.0);
        let mut excess = rel_excess(lhs, rhs, 1e-14);
        // Exact equality with a strictly anti-ordered pair contradicts the equality case.
        if lhs == rhs && (a1 - a2) * (b1 - b2) < 0.0 {
            excess = excess.max(1.0 / scale);
        }
        out.record(excess, || format!("p {p}, a ({a1}, {a2}), b ({b1}, {b2}): {lhs} vs {rhs}"));
    }
    Ok(out)
}

// Embedding suite.

/// The integral of the piecewise-affine interpolation's gradient energy is
/// `E_p / 2` (coordinate `l^p` norm for any p, Euclidean norm at p = 2).
pub fn interpolation_identity(rng: &mut impl Rng, trials: usize, tol: f64) -> Result<PropertyOutcome> {
    let mut out = PropertyOutcome::new("interpolation identity");
    for _ in 0..trials {
        let d = rng.random_range(2..=3);
        let u = random_function(rng, d, 4)?;
        for (p, norm) in [(2.0, GradientNorm::L2), (1.5, GradientNorm::Lp), (2.5, GradientNorm::Lp)] {
            let lhs = interpolation_energy(&u, p, norm)?;
            let rhs = energy_p(&u, p) / ORDERED_PAIR_FACTOR;
            let err = (lhs - rhs).abs() / rhs.max(f64::MIN_POSITIVE);
            out.record(if err > tol { err } else { 0.0 }, || format!("d {d}, p {p}, {norm:?}: {lhs} vs {rhs}"));
        }
    }
    Ok(out)
}

/// `N - kappa_d N^{(d-1)/d} P_N <= |zeta(X)| <= N`.
pub fn zeta_volume_bounds(rng: &mut impl Rng, trials: usize) -> Result<PropertyOutcome> {
    let mut out = PropertyOutcome::new("embedded volume bounds");
    for _ in 0..trials {
        let d = rng.random_range(2..=3);
        let n = rng.random_range(1..=40);
        let x = random_connected_set(rng, d, n)?;
        let rep = zeta_volume_bounds_check(&x);
        let ok = rep.upper_holds && rep.lower_holds;
        out.record(if ok { 0.0 } else { 1.0 }, || format!("{rep:?}"));
    }
    Ok(out)
}

// Solver suite.

/// Relative-capacity potentials of small random sets are harmonic off the
/// set to within `tol`, and the value is invariant under a random signed
/// permutation of the coordinates.
pub fn relative_potential_residuals(rng: &mut ChaCha8Rng, trials: usize, tol: f64) -> Result<PropertyOutcome> {
    let mut out = PropertyOutcome::new("relative potential residuals");
    let cfg = SolverConfig::default();
    for _ in 0..trials {
        let d = 3;
        let n = rng.random_range(1..=12);
        let r = rng.random_range(2.0..4.0);
        let x = random_connected_set(rng, d, n)?;
        // Centre the set so that it fits the ball.
        let c = x.barycenter();
        let shift = LatticePoint::from_fn(d, |k| -(crate::float::round(c[k]) as i32));
        let x = x.translate(&shift);
        let res = match relative_capacity(&x, r, &cfg) {
            Ok(res) => res,
            Err(Error::ConstraintViolation(_)) => continue,
            Err(e) => return Err(e),
        };
        let rep = verify_potential(&res.potential, &x, 2.0, VerifyMode::Relative { r })?;
        let mut perm: Vec<usize> = (0..d).collect();
        perm.shuffle(rng);
        let signs: Vec<bool> = (0..d).map(|_| rng.random_bool(0.5)).collect();
        let y = x.map_points(|q| LatticePoint::from_fn(d, |k| if signs[k] { -q[perm[k]] } else { q[perm[k]] }))?;
        let other = relative_capacity(&y, r, &cfg)?;
        let iso = (other.value - res.value).abs() / res.value;
        let defect = rep.max();
        let excess = if defect > tol || iso > tol { defect.max(iso) } else { 0.0 };
        out.record(excess, || format!("N {n}, R {r}: defect {defect}, isometry gap {iso}"));
    }
    Ok(out)
}
