//! Preconditioned conjugate gradients for the Dirichlet Laplacian `2d I - adjacency`.

use alloc::vec;
use alloc::vec::Vec;

use super::domain::{Domain, ONE};
use crate::float::sqrt;

/// `y = A x` on the free nodes (fixed neighbours contribute to the right-hand side instead).
pub(crate) fn apply(dom: &Domain, x: &[f64], y: &mut [f64]) {
    let deg = dom.degree();
    let diag = deg as f64;
    for (i, yi) in y.iter_mut().enumerate() {
        let mut s = diag * x[i];
        for &j in &dom.nbrs[i * deg..(i + 1) * deg] {
            if (j as usize) < x.len() {
                s -= x[j as usize];
            }
        }
        *yi = s;
    }
}

/// Number of neighbours held at one, per free node.
pub(crate) fn rhs(dom: &Domain) -> Vec<f64> {
    let deg = dom.degree();
    (0..dom.len())
        .map(|i| dom.nbrs[i * deg..(i + 1) * deg].iter().filter(|&&j| j == ONE).count() as f64)
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) struct CgOutcome {
    pub iterations: usize,
    pub converged: bool,
}

/// Solves `A x = b` from the initial `x`, stopping when `||r|| <= tol ||b||`.
/// The preconditioner is the (constant) diagonal.
pub(crate) fn cg(dom: &Domain, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> CgOutcome {
    let n = x.len();
    let inv_diag = 1.0 / dom.degree() as f64;
    let bnorm = sqrt(dot(b, b));
    if n == 0 || bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return CgOutcome {
            iterations: 0,
            converged: true,
        };
    }
    let mut r = vec![0.0; n];
    apply(dom, x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z: Vec<f64> = r.iter().map(|v| v * inv_diag).collect();
    let mut pdir = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let target = tol * bnorm;
    for it in 0..max_iter {
        if sqrt(dot(&r, &r)) <= target {
            return CgOutcome {
                iterations: it,
                converged: true,
            };
        }
        apply(dom, &pdir, &mut ap);
        let alpha = rz / dot(&pdir, &ap);
        for i in 0..n {
            x[i] += alpha * pdir[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag;
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            pdir[i] = z[i] + beta * pdir[i];
        }
    }
    CgOutcome {
        iterations: max_iter,
        converged: sqrt(dot(&r, &r)) <= target,
    }
}

/// Max over free nodes of `|(A x - b)_i|`, the harmonicity defect.
pub(crate) fn max_defect(dom: &Domain, b: &[f64], x: &[f64]) -> f64 {
    let mut ax = vec![0.0; x.len()];
    apply(dom, x, &mut ax);
    ax.iter().zip(b).map(|(a, bb)| (a - bb).abs()).fold(0.0, f64::max)
}
