//! Closed-form continuum references: ball volumes, radial potentials and capacities.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::float::{powf, sqrt, tgamma};
use crate::function::LatticeFunction;
use crate::lattice::{lattice_ball, LatticePoint};

/// `|B_1|` in dimension `d`; exact closed forms up to `d = 10`.
pub fn ball_volume(d: usize) -> f64 {
    let pi2 = PI * PI;
    match d {
        0 => 1.0,
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        4 => pi2 / 2.0,
        5 => 8.0 * pi2 / 15.0,
        6 => pi2 * PI / 6.0,
        7 => 16.0 * pi2 * PI / 105.0,
        8 => pi2 * pi2 / 24.0,
        9 => 32.0 * pi2 * pi2 / 945.0,
        10 => pi2 * pi2 * PI / 120.0,
        _ => ball_volume_gamma(d),
    }
}

/// `pi^{d/2} / Gamma(d/2 + 1)`.
pub fn ball_volume_gamma(d: usize) -> f64 {
    powf(PI, d as f64 / 2.0) / tgamma(d as f64 / 2.0 + 1.0)
}

/// Radius of the ball of volume `alpha`.
pub fn r_alpha(alpha: f64, d: usize) -> Result<f64> {
    if !(alpha >= 0.0) || d == 0 {
        return Err(Error::param("alpha", "volume must be nonnegative"));
    }
    Ok(powf(alpha / ball_volume(d), 1.0 / d as f64))
}

fn check_p_range(p: f64, d: usize) -> Result<()> {
    if p > 1.0 && p < d as f64 {
        Ok(())
    } else {
        Err(Error::param("p", format!("need 1 < p < d = {d}, got {p}")))
    }
}

/// Decay exponent `(p - d)/(p - 1)` of the exterior potential.
pub fn decay_exponent(p: f64, d: usize) -> f64 {
    (p - d as f64) / (p - 1.0)
}

/// Capacitary potential of the unit ball: `1` inside, `x^{(p-d)/(p-1)}` outside.
pub fn radial_potential_p(x: f64, p: f64, d: usize) -> Result<f64> {
    check_p_range(p, d)?;
    if !(x >= 0.0) {
        return Err(Error::param("x", "radius must be nonnegative"));
    }
    Ok(if x <= 1.0 { 1.0 } else { powf(x, decay_exponent(p, d)) })
}

fn check_relative(r: f64, d: usize) -> Result<()> {
    if d < 3 {
        return Err(Error::param("d", "relative potentials need d >= 3"));
    }
    if !(r > 1.0) {
        return Err(Error::param("R", "outer radius must exceed 1"));
    }
    Ok(())
}

/// Relative capacitary potential of `B_1` inside `B_R` (`p = 2`).
pub fn radial_potential_relative(x: f64, r: f64, d: usize) -> Result<f64> {
    check_relative(r, d)?;
    if !(x >= 0.0) {
        return Err(Error::param("x", "radius must be nonnegative"));
    }
    let e = 2.0 - d as f64;
    Ok(if x <= 1.0 {
        1.0
    } else if x >= r {
        0.0
    } else {
        (powf(x, e) - powf(r, e)) / (1.0 - powf(r, e))
    })
}

/// `cap_p(B_1) = ((p-1)/(d-p))^{1-p} d |B_1|`.
pub fn cap_p_ball(p: f64, d: usize) -> Result<f64> {
    check_p_range(p, d)?;
    Ok(powf((p - 1.0) / (d as f64 - p), 1.0 - p) * d as f64 * ball_volume(d))
}

/// `cap(B_1, R) = |B_1| d (d-2) / (1 - R^{2-d})`.
pub fn cap_relative_ball(r: f64, d: usize) -> Result<f64> {
    check_relative(r, d)?;
    let df = d as f64;
    Ok(ball_volume(d) * df * (df - 2.0) / (1.0 - powf(r, 2.0 - df)))
}

/// `|B_1|^{(p-d)/d} cap_p(B_1)`: the limit of scaled capacities of lattice balls.
pub fn scaled_ball_target(p: f64, d: usize) -> Result<f64> {
    let df = d as f64;
    Ok(powf(ball_volume(d), (p - df) / df) * cap_p_ball(p, d)?)
}

/// Closed-form data for the unit ball.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContinuumBallData {
    pub dim: usize,
    pub p: f64,
    pub cap_value: f64,
    pub ball_volume: f64,
    /// `dp/(d-p)`.
    pub sobolev_exponent: f64,
}

impl ContinuumBallData {
    pub fn new(p: f64, d: usize) -> Result<Self> {
        Ok(Self {
            dim: d,
            p,
            cap_value: cap_p_ball(p, d)?,
            ball_volume: ball_volume(d),
            sobolev_exponent: d as f64 * p / (d as f64 - p),
        })
    }
}

/// How the infinite tail of the discretized potential is cut off.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cutoff {
    /// Support radius; the linear taper starts at half of it.
    Radius(f64),
    /// Support radius `2^m k` with the smallest `m >= 1` whose relative tail
    /// excess is below `tail_tolerance`, limited so that the support ball has at
    /// most `max_points` lattice points.
    Dyadic { tail_tolerance: f64, max_points: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction {
    pub u: LatticeFunction,
    pub k: f64,
    /// Dyadic level, when chosen automatically.
    pub m: Option<u32>,
    pub taper_start: f64,
    pub cutoff_radius: f64,
    /// Continuum energy of the taper minus that of the removed tail, relative to
    /// `cap_p(B_1)`. Positive values mean the truncation raises the energy.
    pub tail_excess: f64,
}

/// Relative continuum energy excess of the one-shell taper starting at `s = rho / k`.
pub fn taper_excess(s: f64, p: f64, d: usize) -> Result<f64> {
    check_p_range(p, d)?;
    let g = decay_exponent(p, d);
    let df = d as f64;
    let bracket = (powf(2.0, df) - 1.0) / (df * powf(-g, p - 1.0)) - 1.0;
    Ok(powf(s, g) * bracket)
}

/// `u_k(i) = u_p(|i|/k)` cut off with a linear taper over one dyadic shell.
pub fn discretized_test_function(k: f64, p: f64, d: usize, cutoff: Cutoff) -> Result<TestFunction> {
    check_p_range(p, d)?;
    if !(k > 0.0) {
        return Err(Error::param("k", "scale must be positive"));
    }
    let (m, rho) = match cutoff {
        Cutoff::Radius(r) => {
            if !(r >= 2.0 * k) {
                return Err(Error::param("cutoff", "cutoff radius must be at least 2k"));
            }
            (None, r / 2.0)
        }
        Cutoff::Dyadic {
            tail_tolerance,
            max_points,
        } => {
            let mut m = 1u32;
            loop {
                let rho = powf(2.0, (m - 1) as f64) * k;
                let fits_next = ball_volume(d) * powf(4.0 * rho, d as f64) <= max_points as f64;
                if taper_excess(rho / k, p, d)?.abs() <= tail_tolerance || !fits_next {
                    break (Some(m), rho);
                }
                m += 1;
            }
        }
    };
    let outer = 2.0 * rho;
    let edge = radial_potential_p(rho / k, p, d)?;
    let ball = lattice_ball(outer, &LatticePoint::origin(d))?;
    let entries: Vec<(LatticePoint, f64)> = ball
        .iter()
        .map(|q| {
            let x = q.norm();
            let v = if x <= rho {
                radial_potential_p(x / k, p, d).expect("validated")
            } else {
                (edge * (2.0 - x / rho)).max(0.0)
            };
            (*q, v)
        })
        .filter(|(_, v)| *v > 0.0)
        .collect();
    Ok(TestFunction {
        u: LatticeFunction::from_entries(d, entries)?,
        k,
        m,
        taper_start: rho,
        cutoff_radius: outer,
        tail_excess: taper_excess(rho / k, p, d)?,
    })
}

/// Discretized relative potential for the lattice ball of radius `k` inside the
/// outer ball of radius `outer`: `u(i) = u_{R'}(|i|/k)` with the outer radius
/// inset by `sqrt(d)` lattice units, so `u` vanishes at every point within
/// `sqrt(d)` of the outer sphere.
pub fn discretized_relative_test_function(k: f64, outer: f64, d: usize) -> Result<LatticeFunction> {
    let inset = (outer - sqrt(d as f64)) / k;
    check_relative(inset, d)?;
    let ball = lattice_ball(outer, &LatticePoint::origin(d))?;
    let entries: Vec<(LatticePoint, f64)> = ball
        .iter()
        .map(|q| (*q, radial_potential_relative(q.norm() / k, inset, d).expect("validated")))
        .filter(|(_, v)| *v > 0.0)
        .collect();
    LatticeFunction::from_entries(d, entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn volumes() {
        assert_eq!(ball_volume(1), 2.0);
        assert_eq!(ball_volume(2), PI);
        assert!((ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-15);
        for d in 1..=10 {
            let rel = (ball_volume(d) - ball_volume_gamma(d)).abs() / ball_volume(d);
            assert!(rel < 1e-13, "d = {d}: {rel}");
        }
    }

    #[test]
    fn radii() {
        assert!((r_alpha(ball_volume(3), 3).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(r_alpha(0.0, 3).unwrap(), 0.0);
        assert!((r_alpha(32.0 * PI / 3.0, 3).unwrap() - 2.0).abs() < 1e-14);
        assert!(r_alpha(-1.0, 3).is_err());
    }

    #[test]
    fn potentials() {
        assert_eq!(radial_potential_p(0.5, 2.0, 3).unwrap(), 1.0);
        assert!((radial_potential_p(2.0, 2.0, 3).unwrap() - 0.5).abs() < 1e-15);
        assert!((radial_potential_p(8.0, 1.5, 3).unwrap() - 1.0 / 512.0).abs() < 1e-15);
        assert!(radial_potential_p(1.0, 3.0, 3).is_err());
        assert_eq!(radial_potential_relative(2.0, 2.0, 3).unwrap(), 0.0);
        assert_eq!(radial_potential_relative(1.0, 2.0, 3).unwrap(), 1.0);
        assert!((radial_potential_relative(1.5, 2.0, 3).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(radial_potential_relative(1.5, 0.5, 3).is_err());
        assert!(radial_potential_relative(1.5, 2.0, 2).is_err());
    }

    #[test]
    fn capacities() {
        assert!((cap_p_ball(2.0, 3).unwrap() - 4.0 * PI).abs() < 1e-13);
        assert!((cap_p_ball(1.5, 3).unwrap() - sqrt(3.0) * 4.0 * PI).abs() < 1e-12);
        assert!((cap_relative_ball(2.0, 3).unwrap() - 8.0 * PI).abs() < 1e-13);
        assert!((cap_relative_ball(1e9, 3).unwrap() - 4.0 * PI).abs() < 1e-6);
        assert!(cap_relative_ball(3.0, 3).unwrap() < cap_relative_ball(2.0, 3).unwrap());
        let target = scaled_ball_target(2.0, 3).unwrap();
        assert!((target - powf(4.0 * PI / 3.0, -1.0 / 3.0) * 4.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn taper_excess_matches_hand_value() {
        // d = 3, p = 2: (7/3 - 1)/s.
        let e = taper_excess(4.0, 2.0, 3).unwrap();
        assert!((e - (4.0 / 3.0) / 4.0).abs() < 1e-15);
    }
}
