//! Node-wise nonlinear Gauss-Seidel for the discrete p-Laplacian.

use alloc::vec::Vec;

use super::domain::{Domain, ONE, ZERO};
use crate::float::{abs_pow, powf, signed_pow};
use crate::lattice::MAX_DIM;
use crate::sum::NeumaierSum;

/// Order in which nodes are relaxed within a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SweepSchedule {
    /// Lexicographic, alternating forward and backward passes.
    #[default]
    Alternating,
    /// All nodes with even coordinate sum, then all odd ones. Nodes of one
    /// colour do not interact, so each half-sweep could run in parallel.
    RedBlack,
}

/// `sum_j sign(x - v_j) |x - v_j|^{p-1}`, increasing in `x`.
#[inline]
fn flux(x: f64, vs: &[f64], p: f64) -> f64 {
    vs.iter().map(|&v| signed_pow(x - v, p - 1.0)).sum()
}

/// The root of [`flux`] in `[min v, max v]`: safeguarded Newton with bisection.
pub(crate) fn solve_node(vs: &[f64], p: f64, start: f64) -> f64 {
    let mut lo = vs.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = vs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 0.0 {
        return lo;
    }
    if p == 2.0 {
        return vs.iter().sum::<f64>() / vs.len() as f64;
    }
    let mut x = start.clamp(lo, hi);
    for _ in 0..200 {
        let mut f = 0.0;
        let mut fp = 0.0;
        for &v in vs {
            let s = x - v;
            if s == 0.0 {
                fp = f64::INFINITY;
                continue;
            }
            let a = powf(s.abs(), p - 2.0);
            f += s * a;
            fp += a;
        }
        if f > 0.0 {
            hi = x;
        } else if f < 0.0 {
            lo = x;
        } else {
            return x;
        }
        let newton = x - f / ((p - 1.0) * fp);
        let next = if newton > lo && newton < hi && newton.is_finite() {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 1e-16 * (1.0 + x.abs()) || hi - lo <= 1e-16 * (1.0 + x.abs()) {
            return next;
        }
        x = next;
    }
    x
}

/// Single-counted energy of the potential encoded by `x` on the domain.
pub(crate) fn domain_energy(dom: &Domain, x: &[f64], p: f64) -> f64 {
    let deg = dom.degree();
    let mut acc = NeumaierSum::new();
    for i in 0..dom.len() {
        for &j in &dom.nbrs[i * deg..(i + 1) * deg] {
            let take = match j {
                ONE | ZERO => true,
                j => (j as usize) > i,
            };
            if take {
                acc.add(abs_pow(x[i] - Domain::value(x, j), p));
            }
        }
    }
    acc.value()
}

/// Largest `|sum_j sign(u_i - u_j)|u_i - u_j|^{p-1}|` over free nodes.
pub(crate) fn max_p_defect(dom: &Domain, x: &[f64], p: f64) -> f64 {
    let deg = dom.degree();
    let mut vs = [0.0; 2 * MAX_DIM];
    (0..dom.len())
        .map(|i| {
            for (slot, &j) in vs.iter_mut().zip(&dom.nbrs[i * deg..(i + 1) * deg]) {
                *slot = Domain::value(x, j);
            }
            flux(x[i], &vs[..deg], p).abs()
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct GsParams {
    pub update_tolerance: f64,
    pub energy_tolerance: f64,
    pub max_sweeps: usize,
    pub relaxation: f64,
    pub schedule: SweepSchedule,
}

pub(crate) struct GsOutcome {
    pub sweeps: usize,
    pub converged: bool,
}

pub(crate) fn gauss_seidel(dom: &Domain, p: f64, x: &mut [f64], params: &GsParams) -> GsOutcome {
    let n = dom.len();
    let deg = dom.degree();
    let order: Vec<usize> = match params.schedule {
        SweepSchedule::Alternating => (0..n).collect(),
        SweepSchedule::RedBlack => {
            let parity = |i: &usize| dom.nodes[*i].coords().iter().map(|&c| c as i64).sum::<i64>().rem_euclid(2);
            let mut o: Vec<usize> = (0..n).filter(|i| parity(i) == 0).collect();
            o.extend((0..n).filter(|i| parity(i) == 1));
            o
        }
    };
    let mut energy = domain_energy(dom, x, p);
    let mut vs = [0.0; 2 * MAX_DIM];
    for sweep in 0..params.max_sweeps {
        let mut max_update: f64 = 0.0;
        let backward = params.schedule == SweepSchedule::Alternating && sweep % 2 == 1;
        for k in 0..n {
            let i = if backward { order[n - 1 - k] } else { order[k] };
            for (slot, &j) in vs.iter_mut().zip(&dom.nbrs[i * deg..(i + 1) * deg]) {
                *slot = Domain::value(x, j);
            }
            let old = x[i];
            let target = solve_node(&vs[..deg], p, old);
            max_update = max_update.max((target - old).abs());
            x[i] = (old + params.relaxation * (target - old)).clamp(0.0, 1.0);
        }
        let e = domain_energy(dom, x, p);
        let decrease = energy - e;
        energy = e;
        if max_update < params.update_tolerance || decrease.abs() <= params.energy_tolerance * e.max(f64::MIN_POSITIVE) {
            return GsOutcome {
                sweeps: sweep + 1,
                converged: true,
            };
        }
    }
    GsOutcome {
        sweeps: params.max_sweeps,
        converged: false,
    }
}
