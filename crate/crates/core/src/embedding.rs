//! Kuhn triangulation of `R^d` and the embedding of lattice sets as unions of simplices.

use alloc::vec;
use alloc::vec::Vec;

use crate::energy::check_p;
use crate::error::{Error, Result};
use crate::float::{ceil, powf, sqrt};
use crate::function::LatticeFunction;
use crate::lattice::{BoundingBox, LatticePoint, LatticeSet, MAX_DIM};
use crate::sum::NeumaierSum;
use crate::continuum::ball_volume;

/// The simplex with vertices `z, z + e_{pi(1)}, z + e_{pi(1)} + e_{pi(2)}, ...`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KuhnSimplex {
    pub anchor: LatticePoint,
    pub permutation: [u8; MAX_DIM],
}

impl KuhnSimplex {
    pub fn dim(&self) -> usize {
        self.anchor.dim()
    }

    /// The `d + 1` vertices along the chain.
    pub fn vertices(&self) -> Vec<LatticePoint> {
        let d = self.dim();
        let mut v = self.anchor;
        let mut out = Vec::with_capacity(d + 1);
        out.push(v);
        for &k in &self.permutation[..d] {
            v = v.with_coord(k as usize, v[k as usize] + 1);
            out.push(v);
        }
        out
    }

    pub fn volume(&self) -> f64 {
        1.0 / factorial(self.dim())
    }
}

pub fn factorial(d: usize) -> f64 {
    (1..=d).map(|k| k as f64).product()
}

/// All permutations of `0..d` in lexicographic order.
pub fn permutations(d: usize) -> Vec<[u8; MAX_DIM]> {
    let mut cur = [0u8; MAX_DIM];
    for (k, c) in cur.iter_mut().enumerate().take(d) {
        *c = k as u8;
    }
    let mut out = vec![cur];
    loop {
        let a = &mut cur[..d];
        let Some(i) = (0..d.saturating_sub(1)).rev().find(|&i| a[i] < a[i + 1]) else {
            return out;
        };
        let j = (i + 1..d).rev().find(|&j| a[j] > a[i]).expect("successor exists");
        a.swap(i, j);
        a[i + 1..].reverse();
        out.push(cur);
    }
}

/// The `d!` simplices tiling the unit cube `z + [0, 1]^d`.
pub fn kuhn_simplices_of_cube(z: &LatticePoint) -> Vec<KuhnSimplex> {
    permutations(z.dim())
        .into_iter()
        .map(|permutation| KuhnSimplex {
            anchor: *z,
            permutation,
        })
        .collect()
}

/// Union of the Kuhn simplices whose vertices all lie in the source set.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedSet {
    pub source: LatticeSet,
    pub simplices: Vec<KuhnSimplex>,
    pub volume: f64,
}

pub fn embed(x: &LatticeSet) -> EmbeddedSet {
    let d = x.dim();
    let perms = permutations(d);
    let mut simplices = Vec::new();
    // A simplex's anchor is one of its vertices, so it ranges over X.
    for z in x {
        for perm in &perms {
            let s = KuhnSimplex {
                anchor: *z,
                permutation: *perm,
            };
            if s.vertices().iter().all(|v| x.contains(v)) {
                simplices.push(s);
            }
        }
    }
    let volume = simplices.len() as f64 / factorial(d);
    EmbeddedSet {
        source: x.clone(),
        simplices,
        volume,
    }
}

/// Does the point lie in the (closed) embedded set? Each point of a unit cube
/// lies in the simplex whose permutation sorts its fractional parts decreasingly.
pub fn embedded_contains(x: &LatticeSet, q: &[f64]) -> bool {
    let d = x.dim();
    let anchor = LatticePoint::from_fn(d, |k| crate::float::floor(q[k]) as i32);
    let mut order: Vec<usize> = (0..d).collect();
    let frac = |k: usize| q[k] - anchor[k] as f64;
    order.sort_by(|&a, &b| frac(b).total_cmp(&frac(a)));
    let mut v = anchor;
    if !x.contains(&v) {
        return false;
    }
    for k in order {
        v = v.with_coord(k, v[k] + 1);
        if !x.contains(&v) {
            return false;
        }
    }
    true
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZetaVolumeReport {
    pub n: usize,
    pub volume: f64,
    pub perimeter: usize,
    /// `(2 ceil(sqrt d) + 1)^d`.
    pub kappa: f64,
    /// `volume <= N`.
    pub upper_holds: bool,
    /// `N - volume <= kappa P(X)`.
    pub lower_holds: bool,
}

pub fn zeta_volume_bounds_check(x: &LatticeSet) -> ZetaVolumeReport {
    let d = x.dim();
    let e = embed(x);
    let kappa = powf(2.0 * ceil(sqrt(d as f64)) + 1.0, d as f64);
    let n = x.len();
    let perimeter = x.perimeter();
    ZetaVolumeReport {
        n,
        volume: e.volume,
        perimeter,
        kappa,
        upper_holds: e.volume <= n as f64,
        lower_holds: n as f64 - e.volume <= kappa * perimeter as f64,
    }
}

/// A volume known to lie in `[lower, upper]`, with a point estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VolumeInterval {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Bisection depth for simplices straddling the sphere.
pub const MAX_SUBDIVISION_DEPTH: u32 = 12;

struct BallClip<'a> {
    z: &'a [f64],
    r: f64,
    inside: NeumaierSum,
    uncertain: NeumaierSum,
    estimate_extra: NeumaierSum,
}

impl BallClip<'_> {
    fn dist2(&self, v: &[f64]) -> f64 {
        v.iter().zip(self.z).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    /// Adds `|T cap B|` bounds for the simplex with vertices `vs` (`d + 1` rows of length `d`).
    fn clip(&mut self, vs: &mut Vec<Vec<f64>>, vol: f64, depth: u32) {
        let d = self.z.len();
        let r2 = self.r * self.r;
        if vs.iter().all(|v| self.dist2(v) <= r2) {
            self.inside.add(vol);
            return;
        }
        let c: Vec<f64> = (0..d).map(|k| vs.iter().map(|v| v[k]).sum::<f64>() / (d + 1) as f64).collect();
        let rho = vs
            .iter()
            .map(|v| sqrt(v.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum()))
            .fold(0.0, f64::max);
        let dc = sqrt(self.dist2(&c));
        if dc >= self.r + rho {
            return;
        }
        if depth >= MAX_SUBDIVISION_DEPTH {
            self.uncertain.add(vol);
            if dc < self.r {
                self.estimate_extra.add(vol);
            }
            return;
        }
        // Bisect the longest edge.
        let (mut ia, mut ib, mut best) = (0, 1, -1.0);
        for a in 0..vs.len() {
            for b in a + 1..vs.len() {
                let l: f64 = vs[a].iter().zip(&vs[b]).map(|(p, q)| (p - q) * (p - q)).sum();
                if l > best {
                    (ia, ib, best) = (a, b, l);
                }
            }
        }
        let mid: Vec<f64> = vs[ia].iter().zip(&vs[ib]).map(|(p, q)| 0.5 * (p + q)).collect();
        let saved = core::mem::replace(&mut vs[ia], mid.clone());
        self.clip(vs, vol / 2.0, depth + 1);
        vs[ia] = saved;
        let saved = core::mem::replace(&mut vs[ib], mid);
        self.clip(vs, vol / 2.0, depth + 1);
        vs[ib] = saved;
    }
}

/// `|zeta(X) Δ (z + B_r)|`. Simplices inside or outside the ball count exactly;
/// straddling ones are bisected up to [`MAX_SUBDIVISION_DEPTH`], and the
/// remaining straddling volume widens the returned interval.
pub fn zeta_ball_sym_diff(x: &LatticeSet, r: f64, z: &[f64]) -> Result<VolumeInterval> {
    let d = x.dim();
    if z.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: z.len(),
        });
    }
    if !(r > 0.0) {
        return Err(Error::param("r", "radius must be positive"));
    }
    let e = embed(x);
    let mut clip = BallClip {
        z,
        r,
        inside: NeumaierSum::new(),
        uncertain: NeumaierSum::new(),
        estimate_extra: NeumaierSum::new(),
    };
    for s in &e.simplices {
        let mut vs: Vec<Vec<f64>> = s.vertices().iter().map(|v| v.as_f64()).collect();
        clip.clip(&mut vs, s.volume(), 0);
    }
    let ball = ball_volume(d) * powf(r, d as f64);
    let inter_lo = clip.inside.value();
    let inter_hi = inter_lo + clip.uncertain.value();
    let inter_est = inter_lo + clip.estimate_extra.value();
    Ok(VolumeInterval {
        estimate: e.volume + ball - 2.0 * inter_est,
        lower: e.volume + ball - 2.0 * inter_hi,
        upper: e.volume + ball - 2.0 * inter_lo,
    })
}

/// Norm of the per-simplex gradient in [`interpolation_energy`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum GradientNorm {
    /// `sum_k |g_k|^p`: matches the lattice energy exactly for every `p`.
    #[default]
    Lp,
    /// `|g|_2^p`: the rotation-invariant integrand.
    L2,
}

/// `int |grad u_hat|^p` for the piecewise-affine interpolant on the Kuhn simplices.
///
/// On the simplex of permutation `pi` the gradient has components
/// `g_{pi(k)} = u(v_k) - u(v_{k-1})`. Every lattice edge is a chain step in
/// exactly `d!` simplices of volume `1/d!`, so in [`GradientNorm::Lp`] mode
/// (and in either mode when `p = 2`) the integral equals the single-counted
/// edge energy, i.e. `E_p(u) / ORDERED_PAIR_FACTOR`.
pub fn interpolation_energy(u: &LatticeFunction, p: f64, norm: GradientNorm) -> Result<f64> {
    check_p(p)?;
    let Some(b) = u.bounding_box() else {
        return Ok(0.0);
    };
    let d = u.dim();
    let perms = permutations(d);
    let anchors = BoundingBox {
        lo: b.lo,
        hi: b.hi,
    }
    .expanded(1);
    let inv = 1.0 / factorial(d);
    let mut acc = NeumaierSum::new();
    let mut g = [0.0f64; MAX_DIM];
    anchors.for_each(|z| {
        for perm in &perms {
            let mut v = z;
            let mut prev = u.get(&v);
            for &k in &perm[..d] {
                v = v.with_coord(k as usize, v[k as usize] + 1);
                let cur = u.get(&v);
                g[k as usize] = cur - prev;
                prev = cur;
            }
            let val = match norm {
                GradientNorm::Lp => g[..d].iter().map(|&c| crate::float::abs_pow(c, p)).sum(),
                GradientNorm::L2 => powf(g[..d].iter().map(|&c| c * c).sum::<f64>(), p / 2.0),
            };
            if val != 0.0 {
                acc.add(val * inv);
            }
        }
    });
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_counts() {
        assert_eq!(permutations(2).len(), 2);
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(4).len(), 24);
        let z = LatticePoint::origin(3);
        let total: f64 = kuhn_simplices_of_cube(&z).iter().map(|s| s.volume()).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unit_cube_embeds_fully() {
        let mut pts = Vec::new();
        BoundingBox {
            lo: LatticePoint::origin(3),
            hi: LatticePoint::new(&[1, 1, 1]).unwrap(),
        }
        .for_each(|q| pts.push(q));
        let x = LatticeSet::new(3, pts).unwrap();
        let e = embed(&x);
        assert_eq!(e.simplices.len(), 6);
        assert!((e.volume - 1.0).abs() < 1e-15);
        assert_eq!(embed(&LatticeSet::singleton(LatticePoint::origin(3))).volume, 0.0);
    }

    #[test]
    fn containment_matches_simplices() {
        let x = LatticeSet::from_coords(&[&[0, 0], &[1, 0], &[1, 1]]).unwrap();
        // Only the triangle (0,0)-(1,0)-(1,1) is present: points below the diagonal.
        assert!(embedded_contains(&x, &[0.7, 0.2]));
        assert!(!embedded_contains(&x, &[0.2, 0.7]));
    }
}
