//! Discrete p-Dirichlet energies and their slice decomposition.

use alloc::vec::Vec;

use hashbrown::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::float::{abs_pow, powf};
use crate::function::{slices, LatticeFunction, Sequence};
use crate::lattice::{BoundingBox, Direction, LatticePoint, SliceIndex};
use crate::sum::NeumaierSum;

/// Every lattice edge appears twice among ordered neighbour pairs.
pub const ORDERED_PAIR_FACTOR: f64 = 2.0;

pub(crate) fn check_p(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::param("p", "exponent must satisfy p > 1"))
    }
}

/// Single-counted edge energy `sum_{edges} |u(i) - u(j)|^p`.
pub fn edge_energy(u: &LatticeFunction, p: f64) -> f64 {
    let Some(b) = u.bounding_box() else {
        return 0.0;
    };
    let d = u.dim();
    let vals = u.values();
    let mut acc = NeumaierSum::new();
    let mut stride = [0usize; crate::MAX_DIM];
    let mut s = 1;
    for k in (0..d).rev() {
        stride[k] = s;
        s *= b.extent(k);
    }
    for k in 0..d {
        let n = b.extent(k);
        let face = BoundingBox {
            lo: b.lo,
            hi: b.hi.with_coord(k, b.lo[k]),
        };
        face.for_each(|start| {
            let mut idx = 0;
            for m in 0..d {
                idx += (start[m] - b.lo[m]) as usize * stride[m];
            }
            let mut prev = 0.0;
            for t in 0..n {
                let v = vals[idx + t * stride[k]];
                acc.add(abs_pow(v - prev, p));
                prev = v;
            }
            acc.add(abs_pow(prev, p));
        });
    }
    acc.value()
}

/// `E_p(u)`: sum over ordered neighbour pairs.
pub fn energy_p(u: &LatticeFunction, p: f64) -> f64 {
    ORDERED_PAIR_FACTOR * edge_energy(u, p)
}

/// `E_{p,N}(u) = N^{(p-d)/d} E_p(u)`.
pub fn energy_scaled(u: &LatticeFunction, p: f64, n: usize) -> f64 {
    let d = u.dim() as f64;
    powf(n as f64, (p - d) / d) * energy_p(u, p)
}

/// `sum_t |w(t+1) - w(t)|^p`.
pub fn energy_1d(w: &Sequence, p: f64) -> f64 {
    let mut acc = NeumaierSum::new();
    let mut prev = 0.0;
    for &v in &w.values {
        acc.add(abs_pow(v - prev, p));
        prev = v;
    }
    acc.add(abs_pow(prev, p));
    acc.value()
}

/// `sum_t |w(t) - v(t)|^p`.
pub fn interaction_1d(w: &Sequence, v: &Sequence, p: f64) -> f64 {
    let (lo, hi) = w.joint_range(v);
    let mut acc = NeumaierSum::new();
    for t in lo..hi {
        acc.add(abs_pow(w.get(t) - v.get(t), p));
    }
    acc.value()
}

/// `sum_t |w(t) - v(t)|^p + sum_t |w(t+1) - v(t)|^p`.
pub fn diag_1d(w: &Sequence, v: &Sequence, p: f64) -> f64 {
    let (lo, hi) = w.joint_range(v);
    let mut acc = NeumaierSum::new();
    for t in lo - 1..hi {
        acc.add(abs_pow(w.get(t) - v.get(t), p));
        acc.add(abs_pow(w.get(t + 1) - v.get(t), p));
    }
    acc.value()
}

/// The energy of `u` split into slice contributions along one direction.
///
/// Components are single-counted (each edge appears in exactly one of them);
/// `total` is `ORDERED_PAIR_FACTOR` times their sum.
///
/// * Coordinate `e_j`: `per_slice[alpha] = E1d(u^alpha)` and
///   `cross_terms[(alpha, k)] = E1d(u^alpha, u^{alpha + e_k})` for `k != j`.
/// * Diagonal `e_j + s e_l`: for `alpha` with `xi . alpha = 0`,
///   `per_slice[alpha] = Ediag(u^alpha, u^{alpha + e_j}) + Ediag(u^alpha, u^{alpha + s e_l})`,
///   which covers every edge along `e_j` and `e_l`; the cross terms run over
///   both offset classes and `k` outside `{j, l}`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyBreakdown {
    pub direction: Direction,
    pub p: f64,
    pub per_slice: Vec<(SliceIndex, f64)>,
    pub cross_terms: Vec<(SliceIndex, usize, f64)>,
    pub total: f64,
}

impl EnergyBreakdown {
    /// Sum of the single-counted components.
    pub fn component_sum(&self) -> f64 {
        let mut acc = NeumaierSum::new();
        acc.extend(self.per_slice.iter().map(|e| e.1));
        acc.extend(self.cross_terms.iter().map(|e| e.2));
        acc.value()
    }
}

pub fn decompose_energy(u: &LatticeFunction, dir: Direction, p: f64) -> Result<EnergyBreakdown> {
    let d = u.dim();
    dir.validate(d)?;
    check_p(p)?;
    let lines: HashMap<LatticePoint, Sequence> = slices(u, dir).into_iter().map(|(s, w)| (s.base, w)).collect();
    let empty = Sequence::zero();
    let line = |a: &LatticePoint| lines.get(a).unwrap_or(&empty);
    let index = |base: LatticePoint| SliceIndex {
        base,
        direction: dir,
        class: dir.dot(&base) as u8,
    };
    let mut bases: Vec<LatticePoint> = lines.keys().copied().collect();
    bases.sort_unstable();

    let mut per_slice = Vec::new();
    let mut cross_terms = Vec::new();
    let skipped: [usize; 2] = match dir {
        Direction::Coordinate(j) => {
            for a in &bases {
                per_slice.push((index(*a), energy_1d(line(a), p)));
            }
            [j, j]
        }
        Direction::Diagonal {
            first,
            second,
            negative,
        } => {
            let ej = LatticePoint::unit(d, first);
            let el = LatticePoint::unit(d, second).scaled(if negative { -1 } else { 1 });
            let mut zero_class: Vec<LatticePoint> = bases
                .iter()
                .flat_map(|&b| {
                    if dir.dot(&b) == 0 {
                        [Some(b), None]
                    } else {
                        [Some(b - ej), Some(b - el)]
                    }
                })
                .flatten()
                .collect();
            zero_class.sort_unstable();
            zero_class.dedup();
            for a in zero_class {
                let w = line(&a);
                let e = diag_1d(w, line(&(a + ej)), p) + diag_1d(w, line(&(a + el)), p);
                per_slice.push((index(a), e));
            }
            [first, second]
        }
    };
    for k in (0..d).filter(|k| !skipped.contains(k)) {
        let ek = LatticePoint::unit(d, k);
        let mut seen: HashSet<LatticePoint> = HashSet::new();
        let mut lower: Vec<LatticePoint> = bases
            .iter()
            .flat_map(|&b| [b, b - ek])
            .filter(|a| seen.insert(*a))
            .collect();
        lower.sort_unstable();
        for a in lower {
            cross_terms.push((index(a), k, interaction_1d(line(&a), line(&(a + ek)), p)));
        }
    }
    let mut out = EnergyBreakdown {
        direction: dir,
        p,
        per_slice,
        cross_terms,
        total: 0.0,
    };
    out.total = ORDERED_PAIR_FACTOR * out.component_sum();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeSet;
    use alloc::vec;

    fn seq(offset: i64, v: &[f64]) -> Sequence {
        Sequence::new(offset, v.to_vec())
    }

    #[test]
    fn singleton_energy_counts_ordered_pairs() {
        let x = LatticeSet::singleton(LatticePoint::origin(3));
        let u = LatticeFunction::indicator(&x);
        assert_eq!(energy_p(&u, 2.0), 12.0);
        assert_eq!(edge_energy(&u, 2.0), 6.0);
        assert!((energy_scaled(&u, 2.0, 8) - 6.0).abs() < 1e-12);
        assert_eq!(energy_scaled(&u, 3.0, 5), energy_p(&u, 3.0));
    }

    #[test]
    fn one_dimensional_kernels() {
        assert_eq!(energy_1d(&Sequence::delta(0, 1.0), 2.0), 2.0);
        assert_eq!(energy_1d(&Sequence::zero(), 2.0), 0.0);
        assert_eq!(energy_1d(&seq(0, &[1.0, 3.0]), 2.0), 14.0);
        assert_eq!(interaction_1d(&seq(0, &[1.0, 2.0]), &seq(0, &[0.0, 4.0]), 2.0), 5.0);
        assert_eq!(interaction_1d(&Sequence::delta(0, 1.0), &Sequence::zero(), 2.0), 1.0);
        assert_eq!(diag_1d(&Sequence::delta(0, 1.0), &Sequence::zero(), 2.0), 2.0);
        assert_eq!(diag_1d(&Sequence::zero(), &Sequence::delta(0, 1.0), 2.0), 2.0);
        assert_eq!(diag_1d(&Sequence::zero(), &Sequence::zero(), 2.0), 0.0);
    }

    #[test]
    fn zero_function_decomposes_to_nothing() {
        let u = LatticeFunction::zero(3).unwrap();
        for dir in Direction::all(3) {
            let b = decompose_energy(&u, dir, 2.0).unwrap();
            assert_eq!(b.total, 0.0);
            assert!(b.per_slice.is_empty() && b.cross_terms.is_empty());
        }
    }

    #[test]
    fn rejects_bad_exponent_and_direction() {
        let u = LatticeFunction::zero(2).unwrap();
        assert!(decompose_energy(&u, Direction::Coordinate(0), 1.0).is_err());
        assert!(decompose_energy(&u, Direction::Coordinate(2), 2.0).is_err());
        let bad = Direction::Diagonal {
            first: 1,
            second: 1,
            negative: false,
        };
        assert!(decompose_energy(&u, bad, 2.0).is_err());
    }

    #[test]
    fn pair_in_plane() {
        let x = LatticeSet::from_coords(&[&[0, 0], &[1, 0]]).unwrap();
        let u = LatticeFunction::indicator(&x);
        assert_eq!(energy_p(&u, 2.0), 12.0);
        let dirs = vec![
            Direction::Coordinate(0),
            Direction::Diagonal {
                first: 0,
                second: 1,
                negative: true,
            },
        ];
        for dir in dirs {
            assert_eq!(decompose_energy(&u, dir, 2.0).unwrap().total, 12.0);
        }
    }
}
