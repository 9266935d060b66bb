use isocap_core::checks::random_connected_set;
use isocap_core::continuum::scaled_ball_target;
use isocap_core::energy::energy_p;
use isocap_core::lattice::{lattice_ball, BoundingBox};
use isocap_core::solver::{
    eigen_ground_state, p_capacity, relative_capacity, truncation_study, verify_potential, NonlinearMethod,
    SolverConfig, TruncationPolicy, VerifyMode,
};
use isocap_core::{LatticeFunction, LatticePoint, LatticeSet};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Dense solve of the discrete Dirichlet problem: `u = 1` on `x`, harmonic at
/// the points of the open ball `|i - c| < radius` outside `x`, zero elsewhere.
fn dense_potential(x: &LatticeSet, center: LatticePoint, radius: f64) -> LatticeFunction {
    let d = x.dim();
    let m = radius.ceil() as i32;
    let bbox = BoundingBox { lo: center, hi: center }.expanded(m);
    let mut free = Vec::new();
    bbox.for_each(|q| {
        if (q.dist2(&center) as f64) < radius * radius && !x.contains(&q) {
            free.push(q);
        }
    });
    let index: std::collections::HashMap<LatticePoint, usize> = free.iter().enumerate().map(|(i, q)| (*q, i)).collect();
    let n = free.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);
    for (i, q) in free.iter().enumerate() {
        a[(i, i)] = 2.0 * d as f64;
        for nb in q.neighbors() {
            if let Some(&j) = index.get(&nb) {
                a[(i, j)] -= 1.0;
            } else if x.contains(&nb) {
                b[i] += 1.0;
            }
        }
    }
    let sol = a.cholesky().expect("positive definite").solve(&b);
    let entries = free
        .iter()
        .enumerate()
        .map(|(i, q)| (*q, sol[i]))
        .chain(x.iter().map(|q| (*q, 1.0)));
    LatticeFunction::from_entries(d, entries).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn relative_capacity_of_singleton_matches_dense_solve() {
    let x = LatticeSet::singleton(LatticePoint::origin(3));
    let res = relative_capacity(&x, 3.0, &SolverConfig::default()).unwrap();
    let u = dense_potential(&x, LatticePoint::origin(3), 3.0);
    let oracle = energy_p(&u, 2.0);
    assert!(rel(res.value, oracle) < 1e-10, "{} vs {}", res.value, oracle);
    assert!(res.residual <= 1e-10);
}

#[test]
fn relative_capacity_of_random_sets_matches_dense_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let x = random_connected_set(&mut rng, 3, 6).unwrap();
        let r = 3.0;
        let res = relative_capacity(&x, r, &SolverConfig::default()).unwrap();
        let radius = r * (x.len() as f64).powf(1.0 / 3.0);
        let u = dense_potential(&x, LatticePoint::origin(3), radius);
        let oracle = (x.len() as f64).powf(-1.0 / 3.0) * energy_p(&u, 2.0);
        assert!(rel(res.value, oracle) < 1e-10, "{} vs {}", res.value, oracle);
        let rep = verify_potential(&u, &x, 2.0, VerifyMode::Relative { r }).unwrap();
        assert!(rep.max() <= 1e-10, "{rep:?}");
    }
}

#[test]
fn relative_capacity_decreases_with_room() {
    let x = LatticeSet::from_coords(&[&[0, 0, 0], &[1, 0, 0]]).unwrap();
    let cfg = SolverConfig::default();
    let small = relative_capacity(&x, 2.0, &cfg).unwrap().value;
    let large = relative_capacity(&x, 4.0, &cfg).unwrap().value;
    assert!(large < small);
}

#[test]
fn relative_capacity_rejects_sets_outside_the_ball() {
    let x = LatticeSet::from_coords(&[&[0, 0, 0], &[9, 0, 0]]).unwrap();
    assert!(relative_capacity(&x, 2.0, &SolverConfig::default()).is_err());
}

#[test]
fn truncated_capacity_agrees_with_relative_solver_on_matching_ball() {
    let x = LatticeSet::singleton(LatticePoint::origin(3));
    let cfg = SolverConfig::default();
    let radius = 8.0;
    let abs = p_capacity(&x, 2.0, TruncationPolicy::Fixed { radius, center: None }, &cfg).unwrap();
    let relres = relative_capacity(&x, radius, &cfg).unwrap();
    assert!(rel(abs.raw_value, relres.raw_value) < 1e-8);
}

#[test]
fn p_one_and_a_half_ball_is_near_the_continuum_value() {
    let x = lattice_ball(5.0, &LatticePoint::origin(3)).unwrap();
    let res = p_capacity(&x, 1.5, TruncationPolicy::VolumeRadius { factor: 3.0 }, &SolverConfig::default()).unwrap();
    let target = scaled_ball_target(1.5, 3).unwrap();
    let value = res.corrected_value.unwrap() / 2.0;
    assert!(rel(value, target) < 0.2, "{value} vs {target}");
    let rep = verify_potential(
        &res.potential,
        &x,
        1.5,
        VerifyMode::Truncated {
            radius: res.truncation_radius.unwrap(),
            center: LatticePoint::origin(3),
        },
    )
    .unwrap();
    assert!(rep.max() < 1e-9, "{rep:?}");
}

#[test]
fn newton_and_plain_sweeps_reach_the_same_potential() {
    let x = LatticeSet::from_coords(&[&[0, 0, 0], &[1, 0, 0], &[0, 1, 0]]).unwrap();
    let policy = TruncationPolicy::Fixed { radius: 4.5, center: None };
    let fast = p_capacity(&x, 2.5, policy, &SolverConfig::default()).unwrap();
    let slow_cfg = SolverConfig {
        method: NonlinearMethod::GaussSeidel,
        ..SolverConfig::default()
    };
    let slow = p_capacity(&x, 2.5, policy, &slow_cfg).unwrap();
    assert!(rel(fast.value, slow.value) < 1e-7, "{} vs {}", fast.value, slow.value);
}

#[test]
fn red_black_schedule_has_the_same_fixed_point() {
    use isocap_core::solver::SweepSchedule;
    let x = LatticeSet::from_coords(&[&[0, 0, 0], &[1, 0, 0]]).unwrap();
    let policy = TruncationPolicy::Fixed { radius: 4.0, center: None };
    let base = SolverConfig {
        method: NonlinearMethod::GaussSeidel,
        ..SolverConfig::default()
    };
    let a = p_capacity(&x, 1.5, policy, &base).unwrap();
    let b = p_capacity(
        &x,
        1.5,
        policy,
        &SolverConfig {
            schedule: SweepSchedule::RedBlack,
            ..base
        },
    )
    .unwrap();
    assert!(rel(a.value, b.value) < 1e-7);
}

#[test]
fn truncation_correction_steadies_the_ball_value() {
    let x = lattice_ball(3.0, &LatticePoint::origin(3)).unwrap();
    let rows = truncation_study(&x, 2.0, &[8.0, 16.0], &SolverConfig::default()).unwrap();
    let raw_spread = (rows[0].value - rows[1].value).abs();
    let corr_spread = (rows[0].corrected_value.unwrap() - rows[1].corrected_value.unwrap()).abs();
    assert!(corr_spread < raw_spread);
    // The raw value at the largest radius sits above the corrected one, within the correction.
    let last = &rows[1];
    let c = last.corrected_value.unwrap();
    assert!(last.value >= c && last.value - c <= last.value * 0.5);
}

fn dense_eigenvalue(x: &LatticeSet) -> f64 {
    let n = x.len();
    let pts = x.points();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = 2.0 * x.dim() as f64;
        for j in 0..n {
            if pts[i].dist2(&pts[j]) == 1 {
                a[(i, j)] = -1.0;
            }
        }
    }
    SymmetricEigen::new(a).eigenvalues.min()
}

#[test]
fn singleton_eigenvalue_is_twice_the_dimension() {
    for d in 2..=4 {
        let x = LatticeSet::singleton(LatticePoint::origin(d));
        let res = eigen_ground_state(&x, &SolverConfig::default()).unwrap();
        assert_eq!(res.eigenvalue, 2.0 * d as f64);
    }
}

#[test]
fn pair_eigenvalue_matches_two_by_two_oracle() {
    let x = LatticeSet::from_coords(&[&[0, 0, 0], &[1, 0, 0]]).unwrap();
    let res = eigen_ground_state(&x, &SolverConfig::default()).unwrap();
    assert!((res.eigenvalue - dense_eigenvalue(&x)).abs() < 1e-10);
    assert!((res.eigenvalue - 5.0).abs() < 1e-10);
}

#[test]
fn eigenvalues_match_dense_oracle_up_to_thirty_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [3, 8, 17, 30] {
        for d in [2, 3] {
            let x = random_connected_set(&mut rng, d, n).unwrap();
            let res = eigen_ground_state(&x, &SolverConfig::default()).unwrap();
            let oracle = dense_eigenvalue(&x);
            assert!((res.eigenvalue - oracle).abs() < 1e-10, "{} vs {}", res.eigenvalue, oracle);
            // Connected sets have a strictly positive ground state.
            assert!(x.iter().all(|q| res.eigenfunction.get(q) > 0.0));
        }
    }
}
