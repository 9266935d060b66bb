//! Finitely supported functions on `Z^d` and on `Z`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lattice::{check_dim, BoundingBox, Direction, LatticePoint, LatticeSet, SliceIndex, MAX_DIM};

/// A real function on `Z^d` that vanishes outside a box.
///
/// Values are stored densely over the box in row-major order (last axis
/// fastest); every point outside reads as zero.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeFunction {
    dim: usize,
    bbox: Option<BoundingBox>,
    strides: [usize; MAX_DIM],
    values: Vec<f64>,
}

fn strides_of(b: &BoundingBox) -> ([usize; MAX_DIM], usize) {
    let d = b.lo.dim();
    let mut s = [0usize; MAX_DIM];
    let mut acc = 1;
    for k in (0..d).rev() {
        s[k] = acc;
        acc *= b.extent(k);
    }
    (s, acc)
}

impl LatticeFunction {
    pub fn zero(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            bbox: None,
            strides: [0; MAX_DIM],
            values: Vec::new(),
        })
    }

    /// Zero function whose storage already covers `bbox`.
    pub fn zeros_on(bbox: BoundingBox) -> Self {
        let (strides, len) = strides_of(&bbox);
        Self {
            dim: bbox.lo.dim(),
            bbox: Some(bbox),
            strides,
            values: vec![0.0; len],
        }
    }

    /// Builds a function from `(point, value)` pairs; later pairs overwrite earlier ones.
    pub fn from_entries(dim: usize, entries: impl IntoIterator<Item = (LatticePoint, f64)>) -> Result<Self> {
        check_dim(dim)?;
        let entries: Vec<(LatticePoint, f64)> = entries.into_iter().collect();
        for (p, v) in &entries {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.dim(),
                });
            }
            if !v.is_finite() {
                return Err(Error::NonFinite(*p));
            }
        }
        let Some(bbox) = BoundingBox::of(entries.iter().map(|(p, _)| p)) else {
            return Self::zero(dim);
        };
        let mut f = Self::zeros_on(bbox);
        for (p, v) in entries {
            let i = f.linear(&p);
            f.values[i] = v;
        }
        Ok(f)
    }

    pub fn indicator(set: &LatticeSet) -> Self {
        let mut f = Self::zeros_on(set.bounding_box());
        for p in set {
            let i = f.linear(p);
            f.values[i] = 1.0;
        }
        f
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Storage box, `None` for the zero function without storage.
    pub fn bounding_box(&self) -> Option<BoundingBox> {
        self.bbox
    }

    /// Dense values over [`Self::bounding_box`] in row-major order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    fn linear(&self, p: &LatticePoint) -> usize {
        let b = self.bbox.as_ref().expect("storage present");
        let mut idx = 0;
        for k in 0..self.dim {
            idx += (p[k] - b.lo[k]) as usize * self.strides[k];
        }
        idx
    }

    #[inline]
    pub fn get(&self, p: &LatticePoint) -> f64 {
        match &self.bbox {
            Some(b) if b.contains(p) => self.values[self.linear(p)],
            _ => 0.0,
        }
    }

    /// Sets a value, growing the storage box when needed.
    pub fn set(&mut self, p: LatticePoint, v: f64) -> Result<()> {
        if p.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: p.dim(),
            });
        }
        if !v.is_finite() {
            return Err(Error::NonFinite(p));
        }
        match &self.bbox {
            Some(b) if b.contains(&p) => {}
            _ if v == 0.0 => return Ok(()),
            _ => self.grow_to(&p),
        }
        let i = self.linear(&p);
        self.values[i] = v;
        Ok(())
    }

    fn grow_to(&mut self, p: &LatticePoint) {
        let new_box = match &self.bbox {
            None => BoundingBox { lo: *p, hi: *p },
            Some(b) => BoundingBox::of([&b.lo, &b.hi, p]).expect("nonempty"),
        };
        let mut grown = Self::zeros_on(new_box);
        for (q, v) in self.iter() {
            let i = grown.linear(&q);
            grown.values[i] = v;
        }
        *self = grown;
    }

    /// Every stored `(point, value)` pair, zeros included, in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (LatticePoint, f64)> + '_ {
        let mut pts = Vec::with_capacity(self.values.len());
        if let Some(b) = &self.bbox {
            b.for_each(|q| pts.push(q));
        }
        pts.into_iter().zip(self.values.iter().copied())
    }

    /// Nonzero entries in lexicographic order.
    pub fn nonzero(&self) -> impl Iterator<Item = (LatticePoint, f64)> + '_ {
        self.iter().filter(|(_, v)| *v != 0.0)
    }

    pub fn support(&self) -> Option<LatticeSet> {
        let pts: Vec<LatticePoint> = self.nonzero().map(|(p, _)| p).collect();
        if pts.is_empty() {
            None
        } else {
            Some(LatticeSet::new(self.dim, pts).expect("distinct points"))
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Nonzero values sorted ascending by `total_cmp`.
    pub fn sorted_nonzero_values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.values.iter().copied().filter(|&x| x != 0.0).collect();
        v.sort_unstable_by(f64::total_cmp);
        v
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v = f(*v);
        }
        out
    }

    pub fn scale(&self, lambda: f64) -> Self {
        self.map(|v| lambda * v)
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let boxes = [self.bbox, other.bbox];
        let corners: Vec<&LatticePoint> = boxes.iter().flatten().flat_map(|b| [&b.lo, &b.hi]).collect();
        let Some(bbox) = BoundingBox::of(corners) else {
            return Self::zero(self.dim);
        };
        let mut out = Self::zeros_on(bbox);
        let mut pts = Vec::with_capacity(out.values.len());
        bbox.for_each(|q| pts.push(q));
        for (slot, q) in out.values.iter_mut().zip(pts) {
            *slot = a * self.get(&q) + b * other.get(&q);
        }
        Ok(out)
    }

    /// Applies a lattice isometry or translation to the argument: `(u o tau^{-1})(tau(i)) = u(i)`.
    pub fn transport(&self, tau: impl Fn(&LatticePoint) -> LatticePoint) -> Self {
        Self::from_entries(self.dim, self.nonzero().map(|(p, v)| (tau(&p), v))).expect("valid entries")
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::min)
    }
}

/// A finitely supported sequence `Z -> R`, stored as a dense window starting at `offset`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Sequence {
    pub offset: i64,
    pub values: Vec<f64>,
}

impl Sequence {
    pub fn new(offset: i64, values: Vec<f64>) -> Self {
        Self { offset, values }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// A single nonzero value `h` at position `t`.
    pub fn delta(t: i64, h: f64) -> Self {
        Self::new(t, vec![h])
    }

    #[inline]
    pub fn get(&self, t: i64) -> f64 {
        let i = t - self.offset;
        if i >= 0 && (i as usize) < self.values.len() {
            self.values[i as usize]
        } else {
            0.0
        }
    }

    /// First and one-past-last stored positions.
    pub fn range(&self) -> (i64, i64) {
        (self.offset, self.offset + self.values.len() as i64)
    }

    /// Smallest window covering the positions of both sequences.
    pub fn joint_range(&self, other: &Self) -> (i64, i64) {
        match (self.values.is_empty(), other.values.is_empty()) {
            (true, true) => (0, 0),
            (true, false) => other.range(),
            (false, true) => self.range(),
            (false, false) => {
                let (a0, a1) = self.range();
                let (b0, b1) = other.range();
                (a0.min(b0), a1.max(b1))
            }
        }
    }

    /// The sequence `t -> w(t + k)`.
    pub fn shifted(&self, k: i64) -> Self {
        Self::new(self.offset - k, self.values.clone())
    }

    /// Drops leading and trailing zeros.
    pub fn trimmed(&self) -> Self {
        let Some(first) = self.values.iter().position(|&v| v != 0.0) else {
            return Self::zero();
        };
        let last = self.values.iter().rposition(|&v| v != 0.0).expect("has nonzero");
        Self::new(self.offset + first as i64, self.values[first..=last].to_vec())
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// `(t, w(t))` over the stored window.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.values.iter().enumerate().map(move |(i, &v)| (self.offset + i as i64, v))
    }

    pub fn sorted_nonzero_values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.values.iter().copied().filter(|&x| x != 0.0).collect();
        v.sort_unstable_by(f64::total_cmp);
        v
    }
}

/// The slice `t -> u(base + t xi)`, trimmed to its support.
pub fn slice_function(u: &LatticeFunction, s: &SliceIndex) -> Sequence {
    let Some(b) = u.bounding_box() else {
        return Sequence::zero();
    };
    // The line meets the box in a bounded range of t; walk a safe superset of it.
    let d = u.dim();
    let mut lo = i64::MIN;
    let mut hi = i64::MAX;
    let v = s.direction.vector(d);
    for k in 0..d {
        let c = v[k] as i64;
        if c == 0 {
            continue;
        }
        let a = (b.lo[k] - s.base[k]) as i64 * c;
        let z = (b.hi[k] - s.base[k]) as i64 * c;
        lo = lo.max(a.min(z));
        hi = hi.min(a.max(z));
    }
    if lo > hi {
        return Sequence::zero();
    }
    let values = (lo..=hi).map(|t| u.get(&s.point(t))).collect();
    Sequence::new(lo, values).trimmed()
}

/// Nonzero slices of `u` along `dir`, ordered by base point.
pub fn slices(u: &LatticeFunction, dir: Direction) -> Vec<(SliceIndex, Sequence)> {
    let mut entries: Vec<(LatticePoint, i64, u8, f64)> = u
        .nonzero()
        .map(|(p, v)| {
            let (base, t, class) = dir.decompose(&p);
            (base, t, class, v)
        })
        .collect();
    entries.sort_unstable_by_key(|e| (e.0, e.1));
    let mut out: Vec<(SliceIndex, Sequence)> = Vec::new();
    let mut i = 0;
    while i < entries.len() {
        let (base, t0, class, _) = entries[i];
        let mut j = i;
        while j < entries.len() && entries[j].0 == base {
            j += 1;
        }
        let t1 = entries[j - 1].1;
        let mut values = vec![0.0; (t1 - t0 + 1) as usize];
        for e in &entries[i..j] {
            values[(e.1 - t0) as usize] = e.3;
        }
        out.push((
            SliceIndex {
                base,
                direction: dir,
                class,
            },
            Sequence::new(t0, values),
        ));
        i = j;
    }
    out
}
