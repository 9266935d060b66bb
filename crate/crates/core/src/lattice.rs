//! Lattice geometry: points, finite sets, rearrangement directions and slices.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, Index, Neg, Sub};

use hashbrown::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::float;

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 6;

/// A point of `Z^d`. Unused trailing coordinates are kept at zero so the
/// derived ordering is lexicographic on the used ones.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePoint {
    dim: u8,
    coords: [i32; MAX_DIM],
}

pub(crate) fn check_dim(d: usize) -> Result<()> {
    if (2..=MAX_DIM).contains(&d) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(d))
    }
}

impl LatticePoint {
    pub fn new(coords: &[i32]) -> Result<Self> {
        check_dim(coords.len())?;
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Self {
            dim: coords.len() as u8,
            coords: c,
        })
    }

    /// Builds a point without validating the dimension. Callers guarantee `2 <= d <= MAX_DIM`.
    pub(crate) fn from_fn(d: usize, mut f: impl FnMut(usize) -> i32) -> Self {
        let mut c = [0; MAX_DIM];
        for (k, slot) in c.iter_mut().enumerate().take(d) {
            *slot = f(k);
        }
        Self {
            dim: d as u8,
            coords: c,
        }
    }

    pub fn origin(d: usize) -> Self {
        Self::from_fn(d, |_| 0)
    }

    pub fn unit(d: usize, j: usize) -> Self {
        Self::from_fn(d, |k| (k == j) as i32)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn coords(&self) -> &[i32] {
        &self.coords[..self.dim as usize]
    }

    pub fn with_coord(mut self, j: usize, value: i32) -> Self {
        self.coords[j] = value;
        self
    }

    pub fn scaled(&self, k: i32) -> Self {
        Self::from_fn(self.dim(), |j| self.coords[j] * k)
    }

    pub fn dot(&self, other: &Self) -> i64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(&a, &b)| a as i64 * b as i64)
            .sum()
    }

    pub fn norm2(&self) -> i64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        float::sqrt(self.norm2() as f64)
    }

    pub fn dist2(&self, other: &Self) -> i64 {
        (*self - *other).norm2()
    }

    /// Squared Euclidean distance to a real point.
    pub fn dist2_real(&self, z: &[f64]) -> f64 {
        self.coords()
            .iter()
            .zip(z)
            .map(|(&a, &b)| (a as f64 - b) * (a as f64 - b))
            .sum()
    }

    /// The `2d` nearest neighbours, ordered `-e_1, +e_1, -e_2, ...`.
    pub fn neighbors(&self) -> impl Iterator<Item = LatticePoint> + '_ {
        (0..2 * self.dim()).map(move |m| {
            let mut q = *self;
            q.coords[m / 2] += if m % 2 == 0 { -1 } else { 1 };
            q
        })
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.coords().iter().map(|&c| c as f64).collect()
    }
}

impl Index<usize> for LatticePoint {
    type Output = i32;
    fn index(&self, j: usize) -> &i32 {
        &self.coords()[j]
    }
}

impl Add for LatticePoint {
    type Output = LatticePoint;
    fn add(self, rhs: Self) -> Self {
        debug_assert_eq!(self.dim, rhs.dim);
        Self::from_fn(self.dim(), |j| self.coords[j] + rhs.coords[j])
    }
}

impl Sub for LatticePoint {
    type Output = LatticePoint;
    fn sub(self, rhs: Self) -> Self {
        debug_assert_eq!(self.dim, rhs.dim);
        Self::from_fn(self.dim(), |j| self.coords[j] - rhs.coords[j])
    }
}

impl Neg for LatticePoint {
    type Output = LatticePoint;
    fn neg(self) -> Self {
        self.scaled(-1)
    }
}

impl fmt::Debug for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (k, c) in self.coords().iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

/// A rearrangement direction: `e_j`, or `e_first + e_second` / `e_first - e_second`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Coordinate(usize),
    Diagonal {
        first: usize,
        second: usize,
        negative: bool,
    },
}

impl Direction {
    pub fn validate(&self, d: usize) -> Result<()> {
        match *self {
            Direction::Coordinate(j) if j < d => Ok(()),
            Direction::Diagonal { first, second, .. } if first < d && second < d && first != second => {
                Ok(())
            }
            other => Err(Error::InvalidDirection(format!("{other:?} in dimension {d}"))),
        }
    }

    /// Every direction of the set, in the order coordinates, sums, differences.
    /// Both `e_i - e_j` and `e_j - e_i` are present.
    pub fn all(d: usize) -> Vec<Direction> {
        let mut out: Vec<Direction> = (0..d).map(Direction::Coordinate).collect();
        for i in 0..d {
            for j in i + 1..d {
                out.push(Direction::Diagonal {
                    first: i,
                    second: j,
                    negative: false,
                });
            }
        }
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    out.push(Direction::Diagonal {
                        first: i,
                        second: j,
                        negative: true,
                    });
                }
            }
        }
        out
    }

    /// Like [`Direction::all`] but with `e_j - e_i` dropped when `e_i - e_j` is kept
    /// (they generate the same family of lines).
    pub fn deduped(d: usize) -> Vec<Direction> {
        Direction::all(d)
            .into_iter()
            .filter(|dir| match *dir {
                Direction::Diagonal { first, second, .. } => first < second,
                Direction::Coordinate(_) => true,
            })
            .collect()
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self, Direction::Diagonal { .. })
    }

    pub fn vector(&self, d: usize) -> LatticePoint {
        match *self {
            Direction::Coordinate(j) => LatticePoint::unit(d, j),
            Direction::Diagonal {
                first,
                second,
                negative,
            } => LatticePoint::from_fn(d, |k| {
                if k == first {
                    1
                } else if k == second {
                    if negative {
                        -1
                    } else {
                        1
                    }
                } else {
                    0
                }
            }),
        }
    }

    /// `xi . i`.
    #[inline]
    pub fn dot(&self, i: &LatticePoint) -> i64 {
        match *self {
            Direction::Coordinate(j) => i.coords[j] as i64,
            Direction::Diagonal {
                first,
                second,
                negative,
            } => {
                let s = i.coords[second] as i64;
                i.coords[first] as i64 + if negative { -s } else { s }
            }
        }
    }

    /// Writes `i = base + t xi` with `xi . base` in `{0, 1}` (always `0` for
    /// coordinate directions). Returns `(base, t, class)` where `class = xi . base`.
    ///
    /// For diagonal directions lattice lines `base + Z xi` partition `Z^d`, and
    /// the class is the residue of `xi . i` modulo 2.
    #[inline]
    pub fn decompose(&self, i: &LatticePoint) -> (LatticePoint, i64, u8) {
        match *self {
            Direction::Coordinate(j) => (i.with_coord(j, 0), i.coords[j] as i64, 0),
            Direction::Diagonal {
                first,
                second,
                negative,
            } => {
                let dot = self.dot(i);
                let class = dot.rem_euclid(2);
                let t = (dot - class) / 2;
                let mut base = *i;
                base.coords[first] -= t as i32;
                base.coords[second] -= if negative { -t as i32 } else { t as i32 };
                (base, t, class as u8)
            }
        }
    }

    /// `base + t xi`.
    #[inline]
    pub fn point(&self, base: &LatticePoint, t: i64) -> LatticePoint {
        let mut q = *base;
        match *self {
            Direction::Coordinate(j) => q.coords[j] += t as i32,
            Direction::Diagonal {
                first,
                second,
                negative,
            } => {
                q.coords[first] += t as i32;
                q.coords[second] += if negative { -t as i32 } else { t as i32 };
            }
        }
        q
    }
}

/// A line `{base + t xi}` of the slice family of a direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SliceIndex {
    pub base: LatticePoint,
    pub direction: Direction,
    pub class: u8,
}

impl SliceIndex {
    pub fn new(base: LatticePoint, direction: Direction) -> Result<Self> {
        direction.validate(base.dim())?;
        let dot = direction.dot(&base);
        let ok = match direction {
            Direction::Coordinate(_) => dot == 0,
            Direction::Diagonal { .. } => dot == 0 || dot == 1,
        };
        if !ok {
            return Err(Error::InvalidDirection(format!(
                "base {base} is not canonical for {direction:?}"
            )));
        }
        Ok(Self {
            base,
            direction,
            class: dot as u8,
        })
    }

    pub fn point(&self, t: i64) -> LatticePoint {
        self.direction.point(&self.base, t)
    }
}

/// Which metric [`LatticeSet::diameter_with`] uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Metric {
    #[default]
    Euclidean,
    Chebyshev,
}

/// Axis-aligned integer box `lo..=hi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundingBox {
    pub lo: LatticePoint,
    pub hi: LatticePoint,
}

impl BoundingBox {
    pub fn of<'a>(points: impl IntoIterator<Item = &'a LatticePoint>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let mut lo = first;
        let mut hi = first;
        for p in it {
            for k in 0..first.dim() {
                lo.coords[k] = lo.coords[k].min(p.coords[k]);
                hi.coords[k] = hi.coords[k].max(p.coords[k]);
            }
        }
        Some(Self { lo, hi })
    }

    pub fn expanded(&self, by: i32) -> Self {
        let d = self.lo.dim();
        Self {
            lo: LatticePoint::from_fn(d, |k| self.lo.coords[k] - by),
            hi: LatticePoint::from_fn(d, |k| self.hi.coords[k] + by),
        }
    }

    pub fn extent(&self, k: usize) -> usize {
        (self.hi.coords[k] - self.lo.coords[k] + 1).max(0) as usize
    }

    pub fn volume(&self) -> usize {
        (0..self.lo.dim()).map(|k| self.extent(k)).product()
    }

    pub fn contains(&self, p: &LatticePoint) -> bool {
        (0..self.lo.dim()).all(|k| self.lo.coords[k] <= p.coords[k] && p.coords[k] <= self.hi.coords[k])
    }

    /// Visits every point of the box in lexicographic order.
    pub fn for_each(&self, mut f: impl FnMut(LatticePoint)) {
        let d = self.lo.dim();
        if (0..d).any(|k| self.extent(k) == 0) {
            return;
        }
        let mut p = self.lo;
        loop {
            f(p);
            let mut k = d;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                if p.coords[k] < self.hi.coords[k] {
                    p.coords[k] += 1;
                    break;
                }
                p.coords[k] = self.lo.coords[k];
            }
        }
    }
}

/// A finite, nonempty subset of `Z^d`, stored sorted with a hash index.
#[derive(Clone)]
pub struct LatticeSet {
    dim: usize,
    points: Vec<LatticePoint>,
    index: HashSet<LatticePoint>,
}

impl PartialEq for LatticeSet {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.points == other.points
    }
}

impl Eq for LatticeSet {}

impl fmt::Debug for LatticeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LatticeSet")
            .field("dim", &self.dim)
            .field("points", &self.points)
            .finish()
    }
}

impl LatticeSet {
    /// Builds a set, rejecting empty input, duplicates and mixed dimensions.
    pub fn new(dim: usize, mut points: Vec<LatticePoint>) -> Result<Self> {
        check_dim(dim)?;
        if points.is_empty() {
            return Err(Error::EmptySet);
        }
        if let Some(p) = points.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.dim(),
            });
        }
        points.sort_unstable();
        if let Some(w) = points.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicatePoint(w[0]));
        }
        let index = points.iter().copied().collect();
        Ok(Self { dim, points, index })
    }

    /// Like [`LatticeSet::new`] but silently merges duplicates.
    pub fn from_points_dedup(dim: usize, mut points: Vec<LatticePoint>) -> Result<Self> {
        points.sort_unstable();
        points.dedup();
        Self::new(dim, points)
    }

    pub fn from_coords(rows: &[&[i32]]) -> Result<Self> {
        let pts = rows
            .iter()
            .map(|r| LatticePoint::new(r))
            .collect::<Result<Vec<_>>>()?;
        let d = pts.first().ok_or(Error::EmptySet)?.dim();
        Self::new(d, pts)
    }

    pub fn singleton(p: LatticePoint) -> Self {
        Self::new(p.dim(), vec![p]).expect("a single valid point")
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Always false; kept for API symmetry with collections.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn contains(&self, p: &LatticePoint) -> bool {
        self.index.contains(p)
    }

    /// Points in lexicographic order.
    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn iter(&self) -> core::slice::Iter<'_, LatticePoint> {
        self.points.iter()
    }

    pub fn translate(&self, z: &LatticePoint) -> Self {
        let pts = self.points.iter().map(|p| *p + *z).collect();
        Self::new(self.dim, pts).expect("translation keeps points distinct")
    }

    /// Applies an injective map to every point.
    pub fn map_points(&self, f: impl FnMut(&LatticePoint) -> LatticePoint) -> Result<Self> {
        Self::new(self.dim, self.points.iter().map(f).collect())
    }

    pub fn bounding_box(&self) -> BoundingBox {
        BoundingBox::of(&self.points).expect("sets are nonempty")
    }

    pub fn barycenter(&self) -> Vec<f64> {
        let n = self.len() as f64;
        (0..self.dim)
            .map(|k| self.points.iter().map(|p| p.coords[k] as f64).sum::<f64>() / n)
            .collect()
    }

    /// Edge perimeter: the number of ordered pairs `(i, j)` with `i` in the set,
    /// `j` outside and `|i - j| = 1`.
    pub fn perimeter(&self) -> usize {
        self.points
            .iter()
            .map(|p| p.neighbors().filter(|q| !self.contains(q)).count())
            .sum()
    }

    /// `N^{(1-d)/d} P(X)`.
    pub fn scaled_perimeter(&self) -> f64 {
        let n = self.len() as f64;
        let d = self.dim as f64;
        float::powf(n, (1.0 - d) / d) * self.perimeter() as f64
    }

    /// Euclidean diameter.
    pub fn diameter(&self) -> f64 {
        self.diameter_with(Metric::Euclidean)
    }

    pub fn diameter_with(&self, metric: Metric) -> f64 {
        let mut best: i64 = 0;
        for (a, p) in self.points.iter().enumerate() {
            for q in &self.points[a + 1..] {
                let v = match metric {
                    Metric::Euclidean => p.dist2(q),
                    Metric::Chebyshev => (0..self.dim)
                        .map(|k| (p.coords[k] - q.coords[k]).unsigned_abs() as i64)
                        .max()
                        .unwrap_or(0),
                };
                best = best.max(v);
            }
        }
        match metric {
            Metric::Euclidean => float::sqrt(best as f64),
            Metric::Chebyshev => best as f64,
        }
    }

    /// True iff every line parallel to `e_j` meets the set in an integer interval.
    pub fn is_direction_convex(&self, j: usize) -> bool {
        let mut lines: HashMap<LatticePoint, (i32, i32, usize)> = HashMap::new();
        for p in &self.points {
            let e = lines.entry(p.with_coord(j, 0)).or_insert((i32::MAX, i32::MIN, 0));
            e.0 = e.0.min(p.coords[j]);
            e.1 = e.1.max(p.coords[j]);
            e.2 += 1;
        }
        lines.values().all(|&(lo, hi, n)| (hi - lo + 1) as usize == n)
    }

    pub fn is_convex_all_axes(&self) -> bool {
        (0..self.dim).all(|j| self.is_direction_convex(j))
    }

    /// Points of the complement adjacent to the set, sorted.
    pub fn exterior_boundary(&self) -> Vec<LatticePoint> {
        let mut out: Vec<LatticePoint> = self
            .points
            .iter()
            .flat_map(|p| p.neighbors())
            .filter(|q| !self.contains(q))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Points of the set with at least one neighbour outside, sorted.
    pub fn inner_boundary(&self) -> Vec<LatticePoint> {
        self.points
            .iter()
            .copied()
            .filter(|p| p.neighbors().any(|q| !self.contains(&q)))
            .collect()
    }

    /// Number of connected components under nearest-neighbour adjacency.
    pub fn components(&self) -> usize {
        let mut seen: HashSet<LatticePoint> = HashSet::new();
        let mut count = 0;
        let mut stack = Vec::new();
        for p in &self.points {
            if !seen.insert(*p) {
                continue;
            }
            count += 1;
            stack.push(*p);
            while let Some(q) = stack.pop() {
                for r in q.neighbors() {
                    if self.contains(&r) && seen.insert(r) {
                        stack.push(r);
                    }
                }
            }
        }
        count
    }
}

impl<'a> IntoIterator for &'a LatticeSet {
    type Item = &'a LatticePoint;
    type IntoIter = core::slice::Iter<'a, LatticePoint>;
    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

/// Tolerance on squared radii so that e.g. `r = sqrt(2)` includes `(1, 1)`.
const BALL_EPS: f64 = 1e-9;

fn ball_offsets(d: usize, r: f64) -> Vec<LatticePoint> {
    let m = float::floor(r + BALL_EPS) as i32;
    let r2 = r * r + BALL_EPS * (1.0 + r * r);
    let mut out = Vec::new();
    let o = LatticePoint::origin(d);
    BoundingBox { lo: o, hi: o }.expanded(m).for_each(|p| {
        if (p.norm2() as f64) <= r2 {
            out.push(p);
        }
    });
    out
}

/// Closed lattice ball `{i : |i - z| <= r}`.
pub fn lattice_ball(r: f64, center: &LatticePoint) -> Result<LatticeSet> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::param("r", "radius must be positive and finite"));
    }
    let d = center.dim();
    let pts = ball_offsets(d, r).into_iter().map(|p| p + *center).collect();
    LatticeSet::new(d, pts)
}

/// `#(X \ Y) + #(Y \ X)`.
pub fn sym_diff_count(x: &LatticeSet, y: &LatticeSet) -> Result<usize> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    let common = x.iter().filter(|p| y.contains(p)).count();
    Ok(x.len() + y.len() - 2 * common)
}

/// Minimizer of `#(X Δ (z + B_r))` over lattice centres `z`.
///
/// Centres whose ball misses `X` entirely give `#X + #B_r`, which is never
/// better than a centre at a point of `X`, so the search runs over every `z`
/// with nonzero overlap. This covers the window of centres within
/// `diam(X) + r` of the barycenter. Ties go to the lexicographically smallest `z`.
pub fn min_sym_diff_to_ball(x: &LatticeSet, r: f64) -> Result<(LatticePoint, usize)> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::param("r", "radius must be positive and finite"));
    }
    let d = x.dim();
    let offsets = ball_offsets(d, r);
    let reach = float::floor(r + BALL_EPS) as i32;
    let bbox = x.bounding_box().expanded(reach);
    let mut strides = [0usize; MAX_DIM];
    let mut acc = 1;
    for k in (0..d).rev() {
        strides[k] = acc;
        acc *= bbox.extent(k);
    }
    let linear = |p: &LatticePoint| -> usize {
        (0..d)
            .map(|k| (p.coords[k] - bbox.lo.coords[k]) as usize * strides[k])
            .sum()
    };
    let mut overlap = vec![0u32; acc];
    for p in x {
        for b in &offsets {
            overlap[linear(&(*p - *b))] += 1;
        }
    }
    // Lexicographic box order makes the first maximum the lexicographically smallest centre.
    let mut best = (0u32, 0usize);
    for (idx, &v) in overlap.iter().enumerate() {
        if v > best.0 {
            best = (v, idx);
        }
    }
    let mut rem = best.1;
    let z = LatticePoint::from_fn(d, |k| {
        let c = rem / strides[k];
        rem %= strides[k];
        bbox.lo.coords[k] + c as i32
    });
    Ok((z, x.len() + offsets.len() - 2 * best.0 as usize))
}

/// The first `n` lattice points ordered by `|i|` then lexicographically.
pub fn quasi_ball(d: usize, n: usize) -> Result<LatticeSet> {
    check_dim(d)?;
    if n == 0 {
        return Err(Error::EmptySet);
    }
    let mut r = float::powf(n as f64, 1.0 / d as f64);
    loop {
        let mut pts = ball_offsets(d, r);
        if pts.len() >= n {
            pts.sort_unstable_by(|a, b| match a.norm2().cmp(&b.norm2()) {
                Ordering::Equal => a.cmp(b),
                o => o,
            });
            pts.truncate(n);
            return LatticeSet::new(d, pts);
        }
        r += 1.0;
    }
}
