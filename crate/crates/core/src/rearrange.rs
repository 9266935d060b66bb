//! Discrete symmetric rearrangements along lattice directions.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::energy::{check_p, energy_p};
use crate::error::{Error, Result};
use crate::function::{slices, LatticeFunction, Sequence};
use crate::lattice::{Direction, LatticePoint, LatticeSet};

/// Position of the `k`-th largest value: `0, 1, -1, 2, -2, ...`.
#[inline]
fn placement(k: usize) -> i64 {
    if k % 2 == 1 {
        (k as i64 + 1) / 2
    } else {
        -(k as i64) / 2
    }
}

fn arrange(w: &Sequence, reflected: bool) -> Result<Sequence> {
    let mut vals: Vec<f64> = Vec::with_capacity(w.values.len());
    for (t, v) in w.iter() {
        if v < 0.0 {
            return Err(Error::param("w", format!("negative value {v} at position {t}")));
        }
        if v != 0.0 {
            vals.push(v);
        }
    }
    // Stable: equal values keep their original order.
    vals.sort_by(|a, b| b.total_cmp(a));
    let n = vals.len();
    if n == 0 {
        return Ok(Sequence::zero());
    }
    let lo = if reflected { -(n as i64 / 2) } else { -((n as i64 - 1) / 2) };
    let mut out = vec![0.0; n];
    for (k, v) in vals.into_iter().enumerate() {
        let pos = if reflected { -placement(k) } else { placement(k) };
        out[(pos - lo) as usize] = v;
    }
    Ok(Sequence::new(lo, out))
}

/// Symmetric decreasing rearrangement of a nonnegative sequence: the values,
/// sorted decreasingly, are placed at positions `0, 1, -1, 2, -2, ...`.
pub fn symmetrize_1d(w: &Sequence) -> Result<Sequence> {
    arrange(w, false)
}

/// `R symmetrize_1d(w)`, i.e. placement at `0, -1, 1, -2, 2, ...`.
pub fn symmetrize_1d_reflected(w: &Sequence) -> Result<Sequence> {
    arrange(w, true)
}

/// `t -> w(-t)`.
pub fn reflect(w: &Sequence) -> Sequence {
    let n = w.values.len() as i64;
    if n == 0 {
        return Sequence::zero();
    }
    let mut values = w.values.clone();
    values.reverse();
    Sequence::new(-(w.offset + n - 1), values)
}

/// Reverses the window `[l, m]`: `w_{l,m}(i) = w(m + l - i)` there, `w(i)` elsewhere.
pub fn flip(w: &Sequence, l: i64, m: i64) -> Result<Sequence> {
    if l >= m {
        return Err(Error::param("l", format!("flip needs l < m, got l = {l}, m = {m}")));
    }
    let (a, b) = w.range();
    let lo = a.min(l);
    let hi = b.max(m + 1);
    let values = (lo..hi)
        .map(|i| if (l..=m).contains(&i) { w.get(m + l - i) } else { w.get(i) })
        .collect();
    Ok(Sequence::new(lo, values).trimmed())
}

pub(crate) fn check_nonnegative(u: &LatticeFunction) -> Result<()> {
    match u.iter().find(|(_, v)| *v < 0.0) {
        Some((point, value)) => Err(Error::NegativeValue { point, value }),
        None => Ok(()),
    }
}

/// Rearranges every slice of `u` along `dir`. Coordinate slices and diagonal
/// slices with `xi . alpha = 0` get the symmetric rearrangement; diagonal
/// slices with `xi . alpha = 1` get its reflection.
pub fn symmetrize_direction(u: &LatticeFunction, dir: Direction) -> Result<LatticeFunction> {
    dir.validate(u.dim())?;
    check_nonnegative(u)?;
    let mut entries = Vec::new();
    for (s, w) in slices(u, dir) {
        let r = arrange(&w, s.class == 1)?;
        entries.extend(r.iter().map(|(t, v)| (s.point(t), v)));
    }
    LatticeFunction::from_entries(u.dim(), entries)
}

/// An ordered list of directions applied left to right.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RearrangementPlan {
    pub directions: Vec<Direction>,
    /// Skip a diagonal when its twin `e_l - e_j` / `e_j - e_l` already occurs earlier.
    pub dedupe: bool,
}

impl RearrangementPlan {
    pub fn new(directions: Vec<Direction>) -> Self {
        Self {
            directions,
            dedupe: false,
        }
    }

    /// Every direction of the set once.
    pub fn full(d: usize, dedupe: bool) -> Self {
        Self {
            directions: Direction::all(d),
            dedupe,
        }
    }

    pub fn effective(&self) -> Vec<Direction> {
        if !self.dedupe {
            return self.directions.clone();
        }
        let mut out: Vec<Direction> = Vec::new();
        for &dir in &self.directions {
            let twin = match dir {
                Direction::Diagonal {
                    first,
                    second,
                    negative: true,
                } => Some(Direction::Diagonal {
                    first: second,
                    second: first,
                    negative: true,
                }),
                _ => None,
            };
            if twin.is_some_and(|t| out.contains(&t)) {
                continue;
            }
            out.push(dir);
        }
        out
    }
}

pub fn iterate_symmetrize(u: &LatticeFunction, plan: &RearrangementPlan) -> Result<LatticeFunction> {
    let mut cur = u.clone();
    for dir in plan.effective() {
        cur = symmetrize_direction(&cur, dir)?;
    }
    Ok(cur)
}

/// Like [`iterate_symmetrize`], also returning `E_p` before and after every step.
pub fn iterate_with_energies(
    u: &LatticeFunction,
    plan: &RearrangementPlan,
    p: f64,
) -> Result<(LatticeFunction, Vec<f64>)> {
    check_p(p)?;
    let mut cur = u.clone();
    let mut log = vec![energy_p(&cur, p)];
    for dir in plan.effective() {
        cur = symmetrize_direction(&cur, dir)?;
        log.push(energy_p(&cur, p));
    }
    Ok((cur, log))
}

/// Options for [`check_pn`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PnOptions {
    /// Largest number of direction sequences tested exhaustively.
    pub cap: u128,
    /// Above the cap, test `cap` seeded random sequences instead of failing.
    pub sample: bool,
    pub seed: u64,
}

impl Default for PnOptions {
    fn default() -> Self {
        Self {
            cap: 100_000,
            sample: true,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PnReport {
    pub n: usize,
    pub preserved: bool,
    pub sampled: bool,
    pub sequences_tested: u128,
    /// The sequence reaching the lowest energy, when it breaks preservation.
    pub worst_sequence: Option<Vec<Direction>>,
    pub energy_before: f64,
    /// Lowest energy reached over all tested sequences.
    pub energy_after: f64,
}

/// Tests whether every length-`n` sequence of symmetrizations keeps `E_p(u)`
/// within `tol` (relative).
pub fn check_pn(u: &LatticeFunction, n: usize, p: f64, tol: f64, opts: PnOptions) -> Result<PnReport> {
    check_p(p)?;
    check_nonnegative(u)?;
    if n == 0 {
        return Err(Error::param("n", "sequence length must be at least 1"));
    }
    let dirs = Direction::all(u.dim());
    let total = (dirs.len() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    let before = energy_p(u, p);
    let mut worst = (before, Vec::new());
    let sampled = total > opts.cap;
    let tested;
    if sampled {
        if !opts.sample {
            return Err(Error::BudgetExceeded {
                required: total,
                cap: opts.cap,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for _ in 0..opts.cap {
            let seq: Vec<Direction> = (0..n).map(|_| dirs[rng.random_range(0..dirs.len())]).collect();
            let out = iterate_symmetrize(u, &RearrangementPlan::new(seq.clone()))?;
            let e = energy_p(&out, p);
            if e < worst.0 {
                worst = (e, seq);
            }
        }
        tested = opts.cap;
    } else {
        let mut path = Vec::with_capacity(n);
        dfs(u, &dirs, n, p, &mut path, &mut worst)?;
        tested = total;
    }
    let preserved = worst.0 >= before - tol * before.max(1.0);
    Ok(PnReport {
        n,
        preserved,
        sampled,
        sequences_tested: tested,
        worst_sequence: (!preserved).then_some(worst.1),
        energy_before: before,
        energy_after: worst.0,
    })
}

fn dfs(
    u: &LatticeFunction,
    dirs: &[Direction],
    depth: usize,
    p: f64,
    path: &mut Vec<Direction>,
    worst: &mut (f64, Vec<Direction>),
) -> Result<()> {
    for &dir in dirs {
        let v = symmetrize_direction(u, dir)?;
        path.push(dir);
        if depth == 1 {
            let e = energy_p(&v, p);
            if e < worst.0 {
                *worst = (e, path.clone());
            }
        } else {
            dfs(&v, dirs, depth - 1, p, path, worst)?;
        }
        path.pop();
    }
    Ok(())
}

/// `{u >= t}` or, with `strict`, `{u > t}`. `None` when the set is empty.
///
/// Thresholds that would produce an infinite set (`t <= 0`, or `t < 0` when
/// strict) are rejected.
pub fn level_set(u: &LatticeFunction, t: f64, strict: bool) -> Result<Option<LatticeSet>> {
    if t < 0.0 || (t == 0.0 && !strict) || t.is_nan() {
        return Err(Error::param("t", "the level set would be infinite"));
    }
    let pts: Vec<LatticePoint> = u
        .nonzero()
        .filter(|&(_, v)| if strict { v > t } else { v >= t })
        .map(|(p, _)| p)
        .collect();
    if pts.is_empty() {
        Ok(None)
    } else {
        LatticeSet::new(u.dim(), pts).map(Some)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WalledIn {
    pub holds: bool,
    /// Base point (coordinate `j` zeroed) of a dominating line, when one exists.
    pub witness: Option<LatticePoint>,
}

/// Within the affine sublattice `x0 + span{e_k : k in axes}`, looks for a line
/// parallel to `e_j` whose `{u >= t}` slice contains the slice of every other
/// parallel line of the sublattice.
pub fn walled_in_check(u: &LatticeFunction, t: f64, j: usize, x0: &LatticePoint, axes: &[usize]) -> Result<WalledIn> {
    let d = u.dim();
    if x0.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: x0.dim(),
        });
    }
    if j >= d || !axes.contains(&j) || axes.iter().any(|&k| k >= d) {
        return Err(Error::param("axes", "axes must be valid and contain j"));
    }
    if !(t > 0.0) {
        return Err(Error::param("t", "threshold must be positive"));
    }
    check_nonnegative(u)?;
    let in_sublattice = |q: &LatticePoint| (0..d).all(|k| axes.contains(&k) || q[k] == x0[k]);
    let mut lines: Vec<(LatticePoint, Vec<i32>)> = Vec::new();
    for (q, v) in u.nonzero() {
        if v < t || !in_sublattice(&q) {
            continue;
        }
        let base = q.with_coord(j, 0);
        match lines.iter_mut().find(|(b, _)| *b == base) {
            Some((_, ts)) => ts.push(q[j]),
            None => lines.push((base, vec![q[j]])),
        }
    }
    // Longest slice; among equals the one closest to x0.
    let home = x0.with_coord(j, 0);
    let Some(best) = lines
        .iter()
        .min_by_key(|(b, ts)| (core::cmp::Reverse(ts.len()), b.dist2(&home), *b))
    else {
        return Ok(WalledIn {
            holds: true,
            witness: Some(x0.with_coord(j, 0)),
        });
    };
    let holds = lines.iter().all(|(_, ts)| ts.iter().all(|s| best.1.contains(s)));
    Ok(WalledIn {
        holds,
        witness: holds.then_some(best.0),
    })
}
