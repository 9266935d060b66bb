//! Damped Newton iteration for the discrete p-Laplacian, with
//! Jacobi-preconditioned conjugate gradients for the linearized systems.
//!
//! Minimizes `J(x) = (1/p) sum_{edges} |x_i - x_j|^p`. The edge weights of the
//! Hessian, `|x_i - x_j|^{p-2}`, are regularized by `eps` so that they stay
//! finite (p < 2) or positive (p > 2) on flat edges.

use alloc::vec;
use alloc::vec::Vec;

use super::domain::Domain;
use super::nonlinear::domain_energy;
use crate::float::{powf, signed_pow, sqrt};

pub(crate) struct NewtonParams {
    /// Stop once the max nodal defect is below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub regularization: f64,
}

pub(crate) struct NewtonOutcome {
    pub iterations: usize,
}

fn gradient(dom: &Domain, x: &[f64], p: f64, g: &mut [f64]) -> f64 {
    let deg = dom.degree();
    let mut worst: f64 = 0.0;
    for (i, gi) in g.iter_mut().enumerate() {
        let s: f64 = dom.nbrs[i * deg..(i + 1) * deg]
            .iter()
            .map(|&j| signed_pow(x[i] - Domain::value(x, j), p - 1.0))
            .sum();
        *gi = s;
        worst = worst.max(s.abs());
    }
    worst
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y = H v` with slot weights `w` (zero weight for fixed neighbours is not
/// needed: their contribution sits in the diagonal).
fn hess_apply(dom: &Domain, w: &[f64], diag: &[f64], v: &[f64], y: &mut [f64]) {
    let deg = dom.degree();
    for (i, yi) in y.iter_mut().enumerate() {
        let mut s = diag[i] * v[i];
        for (k, &j) in dom.nbrs[i * deg..(i + 1) * deg].iter().enumerate() {
            if (j as usize) < v.len() {
                s -= w[i * deg + k] * v[j as usize];
            }
        }
        *yi = s;
    }
}

/// Solves `H dx = -g` approximately, to relative residual `tol`.
fn pcg(dom: &Domain, w: &[f64], diag: &[f64], g: &[f64], dx: &mut [f64], tol: f64, max_iter: usize) {
    let n = g.len();
    dx.iter_mut().for_each(|v| *v = 0.0);
    let mut r: Vec<f64> = g.iter().map(|v| -v).collect();
    let target = tol * sqrt(dot(&r, &r));
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(a, b)| a / b).collect();
    let mut pd = z.clone();
    let mut hp = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for _ in 0..max_iter {
        if sqrt(dot(&r, &r)) <= target {
            break;
        }
        hess_apply(dom, w, diag, &pd, &mut hp);
        let php = dot(&pd, &hp);
        if php <= 0.0 {
            break;
        }
        let alpha = rz / php;
        for i in 0..n {
            dx[i] += alpha * pd[i];
            r[i] -= alpha * hp[i];
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            pd[i] = z[i] + beta * pd[i];
        }
    }
}

pub(crate) fn newton(dom: &Domain, p: f64, x: &mut [f64], params: &NewtonParams) -> NewtonOutcome {
    let n = dom.len();
    let deg = dom.degree();
    let mut g = vec![0.0; n];
    let mut w = vec![0.0; n * deg];
    let mut diag = vec![0.0; n];
    let mut dx = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut g_trial = vec![0.0; n];
    let eps2 = params.regularization * params.regularization;
    let mut residual = gradient(dom, x, p, &mut g);
    let mut energy = domain_energy(dom, x, p) / p;
    for it in 0..params.max_iterations {
        if residual <= params.tolerance {
            return NewtonOutcome {
                iterations: it,
            };
        }
        for i in 0..n {
            let mut s = 0.0;
            for (k, &j) in dom.nbrs[i * deg..(i + 1) * deg].iter().enumerate() {
                let t = x[i] - Domain::value(x, j);
                let wk = (p - 1.0) * powf(t * t + eps2, 0.5 * (p - 2.0));
                w[i * deg + k] = wk;
                s += wk;
            }
            diag[i] = s;
        }
        let gnorm = sqrt(dot(&g, &g));
        let forcing = gnorm.clamp(1e-10, 0.1);
        pcg(dom, &w, &diag, &g, &mut dx, forcing, 4 * n + 100);
        let slope = dot(&g, &dx);
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-12 {
            for i in 0..n {
                trial[i] = x[i] + t * dx[i];
            }
            let e = domain_energy(dom, &trial, p) / p;
            let armijo = e <= energy + 1e-4 * t * slope;
            // Near the minimum the energy change drops below rounding; accept
            // steps that shrink the defect instead.
            let r = if armijo { 0.0 } else { gradient(dom, &trial, p, &mut g_trial) };
            if armijo || (r < residual && e <= energy + 1e-13 * energy.abs()) {
                energy = e;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return NewtonOutcome {
                iterations: it + 1,
            };
        }
        x.copy_from_slice(&trial);
        residual = gradient(dom, x, p, &mut g);
    }
    NewtonOutcome {
        iterations: params.max_iterations,
    }
}
