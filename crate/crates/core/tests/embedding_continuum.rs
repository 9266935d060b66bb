use isocap_core::checks::{random_connected_set, random_function};
use isocap_core::continuum::{
    ball_volume, discretized_relative_test_function, discretized_test_function, r_alpha, radial_potential_p,
    radial_potential_relative, scaled_ball_target, taper_excess, Cutoff,
};
use isocap_core::embedding::{
    embed, embedded_contains, factorial, interpolation_energy, kuhn_simplices_of_cube, zeta_ball_sym_diff,
    zeta_volume_bounds_check, GradientNorm,
};
use isocap_core::energy::{energy_p, energy_scaled};
use isocap_core::lattice::{lattice_ball, BoundingBox};
use isocap_core::solver::{p_capacity, SolverConfig, TruncationPolicy};
use isocap_core::{LatticeFunction, LatticePoint, LatticeSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cube(side: i32, d: usize) -> LatticeSet {
    let mut pts = Vec::new();
    BoundingBox {
        lo: LatticePoint::origin(d),
        hi: LatticePoint::new(&vec![side - 1; d]).unwrap(),
    }
    .for_each(|q| pts.push(q));
    LatticeSet::new(d, pts).unwrap()
}

#[test]
fn kuhn_tiling_counts_and_volume() {
    for d in 2..=4 {
        let s = kuhn_simplices_of_cube(&LatticePoint::origin(d));
        assert_eq!(s.len() as f64, factorial(d));
        let vol: f64 = s.iter().map(|t| t.volume()).sum();
        assert!((vol - 1.0).abs() < 1e-14);
    }
}

#[test]
fn embedded_volumes() {
    assert_eq!(embed(&LatticeSet::singleton(LatticePoint::origin(3))).volume, 0.0);
    assert!((embed(&cube(2, 3)).volume - 1.0).abs() < 1e-14);
    // A solid cube of side n embeds as a cube of side n - 1.
    let big = cube(20, 3);
    assert!((embed(&big).volume - 19f64.powi(3)).abs() < 1e-9);
    let bigger = cube(30, 3);
    assert!(embed(&bigger).volume / bigger.len() as f64 >= 0.9);
    let rep = zeta_volume_bounds_check(&LatticeSet::singleton(LatticePoint::origin(3)));
    assert!(rep.upper_holds && rep.lower_holds);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in [5, 20, 60, 150] {
        let rep = zeta_volume_bounds_check(&random_connected_set(&mut rng, 3, n).unwrap());
        assert!(rep.upper_holds && rep.lower_holds, "{rep:?}");
    }
    let ball = lattice_ball(5.0, &LatticePoint::origin(3)).unwrap();
    let rep = zeta_volume_bounds_check(&ball);
    assert!(rep.upper_holds && rep.lower_holds);
}

#[test]
fn symmetric_difference_with_far_and_enclosing_balls() {
    let unit = cube(2, 3);
    let r = 1.5;
    let far = zeta_ball_sym_diff(&unit, r, &[50.0, 0.0, 0.0]).unwrap();
    let want = 1.0 + ball_volume(3) * r.powi(3);
    assert!((far.estimate - want).abs() < 1e-9);
    let r = 10.0;
    let around = zeta_ball_sym_diff(&unit, r, &[0.5, 0.5, 0.5]).unwrap();
    let want = ball_volume(3) * r.powi(3) - 1.0;
    assert!((around.estimate - want).abs() <= 1e-3 * want);
    assert!(around.lower <= want + 1e-9 && want <= around.upper + 1e-9);
}

#[test]
fn symmetric_difference_agrees_with_monte_carlo() {
    let x = lattice_ball(6.0, &LatticePoint::origin(3)).unwrap();
    let n = x.len() as f64;
    let r = r_alpha(n, 3).unwrap();
    let z = [0.1, -0.2, 0.05];
    let exact = zeta_ball_sym_diff(&x, r, &z).unwrap();
    // Sample the box [-8, 8]^3, which holds both sets.
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let samples = 1_000_000;
    let side = 16.0;
    let mut hits = 0u64;
    for _ in 0..samples {
        let q = [rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0)];
        let in_ball = (0..3).map(|k| (q[k] - z[k]).powi(2)).sum::<f64>() < r * r;
        if in_ball != embedded_contains(&x, &q) {
            hits += 1;
        }
    }
    let frac = hits as f64 / samples as f64;
    let vol = side * side * side;
    let mc = frac * vol;
    let se = (frac * (1.0 - frac) / samples as f64).sqrt() * vol;
    let slack = 3.0 * se + (exact.upper - exact.lower);
    assert!((mc - exact.estimate).abs() <= slack, "mc {mc} +- {se}, exact {exact:?}");
    // Boundary-layer scale.
    assert!(exact.estimate <= 10.0 * n.powf(2.0 / 3.0));
}

#[test]
fn interpolation_matches_lattice_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    assert_eq!(interpolation_energy(&LatticeFunction::zero(3).unwrap(), 2.0, GradientNorm::L2).unwrap(), 0.0);
    for trial in 0..100 {
        let d = 2 + trial % 2;
        let u = random_function(&mut rng, d, 3).unwrap();
        let e2 = energy_p(&u, 2.0) / 2.0;
        let i2 = interpolation_energy(&u, 2.0, GradientNorm::L2).unwrap();
        assert!((i2 - e2).abs() <= 1e-9 * e2.max(1e-300));
        for p in [1.5, 2.5] {
            let ep = energy_p(&u, p) / 2.0;
            let ip = interpolation_energy(&u, p, GradientNorm::Lp).unwrap();
            assert!((ip - ep).abs() <= 1e-9 * ep.max(1e-300));
        }
    }
}

#[test]
fn euclidean_gradient_norm_is_below_lp_for_small_p() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let u = random_function(&mut rng, 3, 3).unwrap();
    let l2 = interpolation_energy(&u, 1.5, GradientNorm::L2).unwrap();
    let lp = interpolation_energy(&u, 1.5, GradientNorm::Lp).unwrap();
    assert!(l2 <= lp);
}

#[test]
fn test_function_shape() {
    let k = 4.0;
    let tf = discretized_test_function(k, 2.0, 3, Cutoff::Radius(16.0)).unwrap();
    let mut by_norm: Vec<(i64, f64)> = tf.u.nonzero().map(|(q, v)| (q.norm2(), v)).collect();
    by_norm.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.total_cmp(&a.1)));
    for (q, v) in tf.u.nonzero() {
        if q.norm() <= k {
            assert_eq!(v, 1.0);
        }
    }
    for w in by_norm.windows(2) {
        if w[1].0 > w[0].0 {
            assert!(w[1].1 <= w[0].1);
        }
    }
    assert!(discretized_test_function(k, 2.0, 3, Cutoff::Radius(5.0)).is_err());
    assert!(discretized_test_function(k, 3.5, 3, Cutoff::Radius(16.0)).is_err());
}

#[test]
fn dyadic_cutoff_stops_at_the_point_budget() {
    // For p = 2, d = 3 the excess is 4/(3s), so a 1e-3 tolerance is never met
    // and the level is limited by the budget.
    assert!((taper_excess(2.0, 2.0, 3).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    let tf = discretized_test_function(
        3.0,
        2.0,
        3,
        Cutoff::Dyadic {
            tail_tolerance: 1e-3,
            max_points: 200_000,
        },
    )
    .unwrap();
    assert!(tf.tail_excess > 1e-3);
    assert!(tf.u.nonzero().count() <= 200_000);
    // A small p makes the tail decay fast enough.
    let tf = discretized_test_function(
        2.0,
        1.2,
        3,
        Cutoff::Dyadic {
            tail_tolerance: 1e-3,
            max_points: 2_000_000,
        },
    )
    .unwrap();
    assert!(tf.tail_excess.abs() <= 1e-3);
}

#[test]
fn test_function_energy_tracks_the_continuum_with_rate() {
    let target = scaled_ball_target(2.0, 3).unwrap();
    let mut gaps = Vec::new();
    for k in 4..=12 {
        let k = k as f64;
        let tf = discretized_test_function(k, 2.0, 3, Cutoff::Radius(8.0 * k)).unwrap();
        let n = lattice_ball(k, &LatticePoint::origin(3)).unwrap().len() as f64;
        let e = energy_scaled(&tf.u, 2.0, n as usize) / 2.0;
        // Continuum energy of the same truncated profile.
        let expected = target * (1.0 + tf.tail_excess);
        let gap = (e - expected).abs() / expected;
        assert!(gap * n.powf(1.0 / 3.0) <= 0.3, "k {k}: gap {gap}");
        gaps.push(gap);
    }
    assert!(gaps.last().unwrap() < gaps.first().unwrap());
}

#[test]
fn test_function_energy_bounds_the_truncated_capacity() {
    let k = 3.0;
    let tf = discretized_test_function(k, 2.0, 3, Cutoff::Radius(12.0)).unwrap();
    let ball = lattice_ball(k, &LatticePoint::origin(3)).unwrap();
    let cap = p_capacity(
        &ball,
        2.0,
        TruncationPolicy::Fixed {
            radius: 13.0,
            center: None,
        },
        &SolverConfig::default(),
    )
    .unwrap();
    assert!(energy_p(&tf.u, 2.0) >= cap.raw_value);
}

#[test]
fn relative_profile_tends_to_the_free_profile() {
    for x in [1.0, 1.5, 3.0, 10.0] {
        let a = radial_potential_relative(x, 1e3, 3).unwrap();
        let b = radial_potential_p(x, 2.0, 3).unwrap();
        assert!((a - b).abs() < 1e-2);
    }
    let u = discretized_relative_test_function(3.0, 9.0, 3).unwrap();
    for (q, v) in u.nonzero() {
        assert!(q.norm() < 9.0 - 3f64.sqrt() + 1e-12 && v <= 1.0);
    }
}
