//! Capacitary potentials, capacities and the Dirichlet ground state.
//!
//! For `p = 2` the potential solves a linear system with the Dirichlet
//! Laplacian, handled by conjugate gradients. Other exponents use nonlinear
//! Gauss-Seidel, each node update solving its own p-harmonicity condition.

mod domain;
mod linear;
mod newton;
mod nonlinear;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::energy::{check_p, energy_p};
use crate::error::{Error, Result};
use crate::float::{powf, sqrt};
use crate::function::LatticeFunction;
use crate::lattice::{BoundingBox, LatticePoint, LatticeSet};
use crate::continuum::r_alpha;

use domain::Domain;
pub use nonlinear::SweepSchedule;

/// Tuning knobs shared by all solves.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    /// Relative residual target of conjugate gradients.
    pub cg_tolerance: f64,
    /// Iteration cap as a multiple of the number of unknowns.
    pub max_iterations_factor: usize,
    /// Target for the max harmonicity defect of linear solves; CG restarts until it is met.
    pub defect_tolerance: f64,
    /// Gauss-Seidel stops once no node moves by more than this.
    pub update_tolerance: f64,
    /// ... or once a sweep lowers the energy by less than this (relative).
    pub energy_tolerance: f64,
    pub max_sweeps: usize,
    /// Over-relaxation factor of the nonlinear sweeps; `1.0` is plain Gauss-Seidel.
    pub relaxation: f64,
    pub schedule: SweepSchedule,
    pub method: NonlinearMethod,
    /// Newton steps allowed before the Gauss-Seidel polish.
    pub newton_max_iterations: usize,
}

/// How potentials for `p != 2` are computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum NonlinearMethod {
    /// Gauss-Seidel sweeps only.
    GaussSeidel,
    /// Damped Newton to near convergence, then Gauss-Seidel sweeps until
    /// their own stopping rule holds.
    #[default]
    NewtonThenGaussSeidel,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cg_tolerance: 1e-12,
            max_iterations_factor: 10,
            defect_tolerance: 1e-10,
            update_tolerance: 1e-10,
            energy_tolerance: 1e-14,
            max_sweeps: 100_000,
            relaxation: 1.0,
            schedule: SweepSchedule::Alternating,
            method: NonlinearMethod::NewtonThenGaussSeidel,
            newton_max_iterations: 200,
        }
    }
}

/// Where the absolute capacity's minimization over `Z^d` is truncated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TruncationPolicy {
    /// Radius `factor * (diam(X) + N^{1/d})` around the rounded barycenter.
    Diameter { factor: f64 },
    /// Radius `factor * r_N` around the rounded barycenter, `|B_{r_N}| = N`.
    VolumeRadius { factor: f64 },
    /// An explicit radius around `center` (the origin when `None`).
    Fixed { radius: f64, center: Option<LatticePoint> },
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy::Diameter { factor: 4.0 }
    }
}

impl TruncationPolicy {
    /// Radius and centre of the truncation ball for `x`.
    pub fn resolve(&self, x: &LatticeSet) -> (f64, LatticePoint) {
        let d = x.dim();
        let n = x.len() as f64;
        let bary = || {
            let b = x.barycenter();
            LatticePoint::from_fn(d, |k| crate::float::round(b[k]) as i32)
        };
        match *self {
            TruncationPolicy::Diameter { factor } => (factor * (x.diameter() + powf(n, 1.0 / d as f64)), bary()),
            TruncationPolicy::VolumeRadius { factor } => {
                (factor * r_alpha(n, d).expect("positive volume"), bary())
            }
            TruncationPolicy::Fixed { radius, center } => (radius, center.unwrap_or_else(|| LatticePoint::origin(d))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CapacityResult {
    /// Scaled capacity `N^{(p-d)/d} E_p(u)`.
    pub value: f64,
    /// Unscaled `E_p(u)`.
    pub raw_value: f64,
    pub potential: LatticeFunction,
    /// Max (p-)harmonicity defect over the free nodes.
    pub residual: f64,
    pub iterations: usize,
    pub truncation_radius: Option<f64>,
    /// Scaled value with the leading truncation bias of a ball removed.
    pub corrected_value: Option<f64>,
}

fn open_ball(center: LatticePoint, radius: f64) -> (BoundingBox, impl Fn(&LatticePoint) -> bool) {
    let m = crate::float::ceil(radius) as i32;
    let bbox = BoundingBox {
        lo: center,
        hi: center,
    }
    .expanded(m);
    let r2 = radius * radius;
    (bbox, move |p: &LatticePoint| (p.dist2(&center) as f64) < r2)
}

fn scale_factor(n: usize, d: usize, p: f64) -> f64 {
    powf(n as f64, (p - d as f64) / d as f64)
}

/// `(1 - R_eff^{(p-d)/(p-1)})^{p-1}`: ratio of the capacity of a ball to its
/// capacity relative to a concentric ball `R_eff` times larger. Reduces to
/// `1 - R_eff^{2-d}` when `p = 2`.
pub fn truncation_factor(r_eff: f64, p: f64, d: usize) -> f64 {
    powf(1.0 - powf(r_eff, (p - d as f64) / (p - 1.0)), p - 1.0)
}

struct RawSolve {
    x: Vec<f64>,
    iterations: usize,
    residual: f64,
}

fn solve_linear(dom: &Domain, warm: Option<&LatticeFunction>, cfg: &SolverConfig) -> Result<RawSolve> {
    let b = linear::rhs(dom);
    let mut x = match warm {
        Some(g) => dom.sample(g),
        None => vec![0.0; dom.len()],
    };
    let budget = cfg.max_iterations_factor.saturating_mul(dom.len()).max(10);
    let mut used = 0;
    let mut residual;
    loop {
        let out = linear::cg(dom, &b, &mut x, cfg.cg_tolerance, budget - used);
        used += out.iterations;
        residual = linear::max_defect(dom, &b, &x);
        if residual <= cfg.defect_tolerance || used >= budget || (out.iterations == 0 && out.converged) {
            break;
        }
    }
    if residual > cfg.defect_tolerance && used >= budget {
        return Err(Error::NotConverged {
            iterations: used,
            residual,
        });
    }
    Ok(RawSolve {
        x,
        iterations: used,
        residual,
    })
}

fn solve_nonlinear(dom: &Domain, p: f64, warm: Option<&LatticeFunction>, cfg: &SolverConfig) -> Result<RawSolve> {
    let mut x = match warm {
        Some(g) => dom.sample(g),
        None => {
            // The p = 2 potential raised to the power matching the exterior decay rates.
            let lin = solve_linear(dom, None, cfg)?;
            let d = dom.dim as f64;
            let gamma = if dom.dim > 2 { (d - p) / ((p - 1.0) * (d - 2.0)) } else { 1.0 };
            lin.x.iter().map(|&v| powf(v.max(0.0), gamma)).collect()
        }
    };
    let mut newton_steps = 0;
    if cfg.method == NonlinearMethod::NewtonThenGaussSeidel {
        let out = newton::newton(
            dom,
            p,
            &mut x,
            &newton::NewtonParams {
                tolerance: cfg.defect_tolerance,
                max_iterations: cfg.newton_max_iterations,
                regularization: 1e-8,
            },
        );
        newton_steps = out.iterations;
    }
    let params = nonlinear::GsParams {
        update_tolerance: cfg.update_tolerance,
        energy_tolerance: cfg.energy_tolerance,
        max_sweeps: cfg.max_sweeps,
        relaxation: cfg.relaxation,
        schedule: cfg.schedule,
    };
    let out = nonlinear::gauss_seidel(dom, p, &mut x, &params);
    let residual = nonlinear::max_p_defect(dom, &x, p);
    if !out.converged {
        return Err(Error::NotConverged {
            iterations: newton_steps + out.sweeps,
            residual,
        });
    }
    Ok(RawSolve {
        x,
        iterations: newton_steps + out.sweeps,
        residual,
    })
}

fn solve_on(dom: &Domain, p: f64, warm: Option<&LatticeFunction>, cfg: &SolverConfig) -> Result<RawSolve> {
    let mut s = if p == 2.0 {
        solve_linear(dom, warm, cfg)?
    } else {
        solve_nonlinear(dom, p, warm, cfg)?
    };
    for v in &mut s.x {
        *v = v.clamp(0.0, 1.0);
    }
    Ok(s)
}

/// A Dirichlet problem on a fixed ball, reusable across sets of the same
/// cardinality (the optimizer's inner loop).
#[derive(Clone, Debug)]
pub struct CapacityProblem {
    pub dim: usize,
    pub p: f64,
    pub center: LatticePoint,
    pub radius: f64,
    pub config: SolverConfig,
}

impl CapacityProblem {
    pub fn new(dim: usize, p: f64, center: LatticePoint, radius: f64, config: SolverConfig) -> Result<Self> {
        crate::lattice::check_dim(dim)?;
        check_p(p)?;
        if !(radius > 0.0) {
            return Err(Error::param("radius", "must be positive"));
        }
        Ok(Self {
            dim,
            p,
            center,
            radius,
            config,
        })
    }

    /// Whether `x` fits strictly inside the ball.
    pub fn admits(&self, x: &LatticeSet) -> bool {
        let r2 = self.radius * self.radius;
        x.iter().all(|q| (q.dist2(&self.center) as f64) < r2)
    }

    /// Minimizes `E_p` over `u = 1` on `x`, `u = 0` outside the open ball.
    pub fn solve(&self, x: &LatticeSet, warm: Option<&LatticeFunction>) -> Result<CapacityResult> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.dim(),
            });
        }
        let (bbox, region) = open_ball(self.center, self.radius);
        let dom = Domain::build(bbox, region, Some(x))?;
        let s = solve_on(&dom, self.p, warm, &self.config)?;
        let potential = dom.to_function(&s.x);
        let raw = energy_p(&potential, self.p);
        Ok(CapacityResult {
            value: scale_factor(x.len(), self.dim, self.p) * raw,
            raw_value: raw,
            potential,
            residual: s.residual,
            iterations: s.iterations,
            truncation_radius: Some(self.radius),
            corrected_value: None,
        })
    }
}

/// `cap_N(X, R)`: `p = 2`, `u = 0` outside the open ball `B_{R N^{1/d}}` centred
/// at the origin, scaled by `N^{(2-d)/d}`.
pub fn relative_capacity(x: &LatticeSet, r: f64, cfg: &SolverConfig) -> Result<CapacityResult> {
    if !(r > 0.0) {
        return Err(Error::param("R", "must be positive"));
    }
    let d = x.dim();
    let radius = r * powf(x.len() as f64, 1.0 / d as f64);
    let prob = CapacityProblem::new(d, 2.0, LatticePoint::origin(d), radius, *cfg)?;
    if !prob.admits(x) {
        return Err(Error::ConstraintViolation(format!(
            "the set does not fit inside the open ball of radius {radius}"
        )));
    }
    prob.solve(x, None)
}

/// `cap_{p,N}(X)` computed on a truncation ball. The corrected value divides out
/// the truncation factor of a ball of radius `r_N`.
pub fn p_capacity(x: &LatticeSet, p: f64, truncation: TruncationPolicy, cfg: &SolverConfig) -> Result<CapacityResult> {
    let d = x.dim();
    check_p(p)?;
    if !(p < d as f64) {
        return Err(Error::param("p", format!("need 1 < p < d = {d}")));
    }
    p_capacity_warm(x, p, truncation, cfg, None)
}

/// [`p_capacity`] started from a guess for the potential.
pub fn p_capacity_warm(
    x: &LatticeSet,
    p: f64,
    truncation: TruncationPolicy,
    cfg: &SolverConfig,
    warm: Option<&LatticeFunction>,
) -> Result<CapacityResult> {
    let d = x.dim();
    let (radius, center) = truncation.resolve(x);
    let prob = CapacityProblem::new(d, p, center, radius, *cfg)?;
    if !prob.admits(x) {
        return Err(Error::ConstraintViolation(format!(
            "the set does not fit inside the truncation ball of radius {radius}"
        )));
    }
    let mut res = prob.solve(x, warm)?;
    if p < d as f64 {
        let r_eff = radius / r_alpha(x.len() as f64, d)?;
        if r_eff > 1.0 {
            res.corrected_value = Some(res.value * truncation_factor(r_eff, p, d));
        }
    }
    Ok(res)
}

/// Which nodes must be harmonic in [`verify_potential`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VerifyMode {
    /// Every point off `X`.
    Absolute,
    /// Points of the open ball `B_{R N^{1/d}}` (origin-centred) off `X`.
    Relative { r: f64 },
    /// Points of an explicit open ball off `X`.
    Truncated { radius: f64, center: LatticePoint },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialReport {
    /// Largest amount by which `u` leaves `[0, 1]`.
    pub bound_violation: f64,
    /// Largest `|u - 1|` on `X`.
    pub constraint_violation: f64,
    /// Largest p-harmonicity defect at the nodes that must be harmonic.
    pub harmonic_defect: f64,
    /// Largest `|u|` outside the ball, in the relative and truncated modes.
    pub boundary_violation: f64,
}

impl PotentialReport {
    pub fn max(&self) -> f64 {
        self.bound_violation
            .max(self.constraint_violation)
            .max(self.harmonic_defect)
            .max(self.boundary_violation)
    }
}

pub fn verify_potential(u: &LatticeFunction, x: &LatticeSet, p: f64, mode: VerifyMode) -> Result<PotentialReport> {
    check_p(p)?;
    let d = x.dim();
    if u.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: u.dim(),
        });
    }
    let ball = match mode {
        VerifyMode::Absolute => None,
        VerifyMode::Relative { r } => Some((LatticePoint::origin(d), r * powf(x.len() as f64, 1.0 / d as f64))),
        VerifyMode::Truncated { radius, center } => Some((center, radius)),
    };
    let inside = |q: &LatticePoint| match ball {
        None => true,
        Some((c, r)) => (q.dist2(&c) as f64) < r * r,
    };
    let mut rep = PotentialReport {
        bound_violation: 0.0,
        constraint_violation: 0.0,
        harmonic_defect: 0.0,
        boundary_violation: 0.0,
    };
    let corners: Vec<LatticePoint> = u
        .bounding_box()
        .map(|b| vec![b.lo, b.hi])
        .unwrap_or_default()
        .into_iter()
        .chain(x.iter().copied())
        .collect();
    let scan = BoundingBox::of(&corners).expect("set is nonempty").expanded(1);
    let mut vs = Vec::with_capacity(2 * d);
    scan.for_each(|q| {
        let v = u.get(&q);
        rep.bound_violation = rep.bound_violation.max((-v).max(v - 1.0).max(0.0));
        if x.contains(&q) {
            rep.constraint_violation = rep.constraint_violation.max((v - 1.0).abs());
        } else if inside(&q) {
            vs.clear();
            vs.extend(q.neighbors().map(|n| u.get(&n)));
            let defect: f64 = vs.iter().map(|&w| crate::float::signed_pow(v - w, p - 1.0)).sum();
            rep.harmonic_defect = rep.harmonic_defect.max(defect.abs());
        } else {
            rep.boundary_violation = rep.boundary_violation.max(v.abs());
        }
    });
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenResult {
    /// Rayleigh quotient `sum_{edges} |u(i)-u(j)|^2 / sum |u|^2`; `2d` for a singleton.
    pub eigenvalue: f64,
    /// Nonnegative ground state with `(1/N) sum u^2 = 1`.
    pub eigenfunction: LatticeFunction,
    /// `||A u - lambda u||_inf`.
    pub residual: f64,
    pub iterations: usize,
}

/// Smallest Dirichlet eigenvalue of the combinatorial Laplacian on `x`, by
/// inverse iteration with inner conjugate-gradient solves.
pub fn eigen_ground_state(x: &LatticeSet, cfg: &SolverConfig) -> Result<EigenResult> {
    let d = x.dim();
    let n = x.len();
    let bbox = x.bounding_box();
    let dom = Domain::from_nodes(d, bbox, x.points().to_vec(), None);
    // Positive start: the power iteration then stays in the positive cone.
    let mut v = vec![1.0 / sqrt(n as f64); n];
    let mut av = vec![0.0; n];
    let mut lambda = 0.0;
    let mut residual = f64::INFINITY;
    let max_outer = 10_000;
    let mut it = 0;
    while it < max_outer {
        it += 1;
        let mut y = v.clone();
        let inner = linear::cg(&dom, &v, &mut y, 1e-15, cfg.max_iterations_factor.saturating_mul(n).max(100));
        let _ = inner;
        let norm = sqrt(y.iter().map(|a| a * a).sum::<f64>());
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = yi / norm;
        }
        linear::apply(&dom, &v, &mut av);
        lambda = v.iter().zip(&av).map(|(a, b)| a * b).sum::<f64>();
        residual = av.iter().zip(&v).map(|(a, b)| (a - lambda * b).abs()).fold(0.0, f64::max);
        if residual <= 1e-13 * lambda.max(1.0) {
            break;
        }
    }
    if residual > 1e-9 * lambda.max(1.0) {
        return Err(Error::NotConverged {
            iterations: it,
            residual,
        });
    }
    let sign = if v.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    let scale = sign * sqrt(n as f64);
    let entries = x.iter().zip(&v).map(|(p, &a)| (*p, (a * scale).max(0.0)));
    Ok(EigenResult {
        eigenvalue: lambda,
        eigenfunction: LatticeFunction::from_entries(d, entries)?,
        residual,
        iterations: it,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationRow {
    pub radius: f64,
    pub raw_value: f64,
    pub value: f64,
    pub corrected_value: Option<f64>,
}

/// Capacities of `x` for a list of increasing truncation radii (centred at the
/// rounded barycenter). Each solve is warm-started from the previous one.
pub fn truncation_study(x: &LatticeSet, p: f64, radii: &[f64], cfg: &SolverConfig) -> Result<Vec<TruncationRow>> {
    if radii.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::param("radii", "must be strictly increasing"));
    }
    let (_, center) = TruncationPolicy::Diameter { factor: 1.0 }.resolve(x);
    let mut out = Vec::with_capacity(radii.len());
    let mut warm: Option<LatticeFunction> = None;
    for &radius in radii {
        let pol = TruncationPolicy::Fixed {
            radius,
            center: Some(center),
        };
        let res = p_capacity_warm(x, p, pol, cfg, warm.as_ref())?;
        out.push(TruncationRow {
            radius,
            raw_value: res.raw_value,
            value: res.value,
            corrected_value: res.corrected_value,
        });
        warm = Some(res.potential);
    }
    Ok(out)
}
