use isocap_core::checks::random_set_in_ball;
use isocap_core::continuum::r_alpha;
use isocap_core::lattice::{lattice_ball, quasi_ball};
use isocap_core::optimizer::{
    exchange_move, minimize, minimize_from, structural_audit, symmetrization_descent_step, Evaluator, ExchangeMode,
    ExchangeOutcome, MoveKind, Objective, OptimizerConfig,
};
use isocap_core::rearrange::level_set;
use isocap_core::solver::{eigen_ground_state, p_capacity, SolverConfig, TruncationPolicy};
use isocap_core::{Direction, LatticePoint, LatticeSet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cfg() -> OptimizerConfig {
    OptimizerConfig::default()
}

#[test]
fn descent_steps_never_increase_the_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let dirs = Direction::all(3);
    for trial in 0..120 {
        let n = 2 + trial % 40;
        let p = if trial % 2 == 0 { 2.0 } else { 1.5 };
        let objective = Objective::Capacity { p };
        let x = random_set_in_ball(&mut rng, 3, n, 1.5 * r_alpha(n as f64, 3).unwrap() + 1.0).unwrap();
        let mut ev = Evaluator::new(objective, 3, n, &cfg()).unwrap();
        let dir = dirs[trial % dirs.len()];
        let before = ev.value(&x).unwrap();
        let next = ev.descent_step(&x, dir).unwrap();
        assert_eq!(next.len(), n);
        let after = ev.value(&next).unwrap();
        assert!(after <= before + 1e-9 * before, "N {n}, {dir:?}: {before} -> {after}");
    }
}

#[test]
fn descent_on_relative_and_eigen_objectives() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for (trial, objective) in [Objective::Relative { r: 2.0 }, Objective::Eigen].into_iter().cycle().take(40).enumerate() {
        let n = 3 + trial % 25;
        let x = random_set_in_ball(&mut rng, 3, n, 1.2 * (n as f64).cbrt() + 0.5).unwrap();
        let mut ev = Evaluator::new(objective, 3, n, &cfg()).unwrap();
        if !ev.admits(&x) {
            continue;
        }
        let before = ev.value(&x).unwrap();
        let next = ev.descent_step(&x, Direction::all(3)[trial % 12]).unwrap();
        assert_eq!(next.len(), n);
        assert!(ev.value(&next).unwrap() <= before + 1e-9 * before);
    }
}

#[test]
fn l_shape_improves_strictly_along_e1() {
    let mut pts = Vec::new();
    for t in 0..7 {
        pts.push(LatticePoint::new(&[t, 0, 0]).unwrap());
    }
    for t in 1..6 {
        pts.push(LatticePoint::new(&[0, t, 0]).unwrap());
    }
    let x = LatticeSet::new(3, pts).unwrap();
    assert_eq!(x.len(), 12);
    let objective = Objective::Capacity { p: 2.0 };
    let mut ev = Evaluator::covering(objective, &x, &cfg()).unwrap();
    let before = ev.value(&x).unwrap();
    let next = symmetrization_descent_step(&x, Direction::Coordinate(0), objective, &cfg()).unwrap();
    assert!(ev.value(&next).unwrap() < before);
}

#[test]
fn symmetric_ball_is_a_fixed_point() {
    let x = lattice_ball(2.0, &LatticePoint::origin(3)).unwrap();
    let objective = Objective::Capacity { p: 2.0 };
    for dir in Direction::deduped(3) {
        assert_eq!(symmetrization_descent_step(&x, dir, objective, &cfg()).unwrap(), x);
    }
}

#[test]
fn moving_a_spike_into_a_dimple_helps() {
    let ball = lattice_ball(2.0, &LatticePoint::origin(3)).unwrap();
    let dimple = LatticePoint::new(&[0, 2, 0]).unwrap();
    let spike = LatticePoint::new(&[3, 0, 0]).unwrap();
    let mut pts: Vec<LatticePoint> = ball.iter().copied().filter(|q| *q != dimple).collect();
    pts.push(spike);
    let spiky = LatticeSet::new(3, pts).unwrap();
    let mut ev = Evaluator::new(Objective::Capacity { p: 2.0 }, 3, ball.len(), &cfg()).unwrap();
    assert!(ev.value(&ball).unwrap() < ev.value(&spiky).unwrap());
}

#[test]
fn exchange_moves_keep_cardinality() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = quasi_ball(3, 20).unwrap();
    let mut ev = Evaluator::new(Objective::Capacity { p: 2.0 }, 3, 20, &cfg()).unwrap();
    let v = ev.value(&x).unwrap();
    for _ in 0..20 {
        match exchange_move(&mut ev, &x, v, &mut rng, ExchangeMode::Greedy, 0.0).unwrap() {
            ExchangeOutcome::Accepted { set, value } => {
                assert_eq!(set.len(), 20);
                assert!(value <= v);
            }
            ExchangeOutcome::Rejected => {}
        }
    }
}

#[test]
fn singleton_minimization_matches_direct_solve() {
    let st = minimize(3, 1, Objective::Capacity { p: 2.0 }, &cfg()).unwrap();
    assert_eq!(st.current.len(), 1);
    let ev = Evaluator::new(Objective::Capacity { p: 2.0 }, 3, 1, &cfg()).unwrap();
    let radius = ev.domain_radius().unwrap();
    let direct = p_capacity(
        &st.current,
        2.0,
        TruncationPolicy::Fixed { radius, center: None },
        &SolverConfig::default(),
    )
    .unwrap();
    assert!((st.current_value - direct.value).abs() < 1e-10 * direct.value);
}

#[test]
fn minimizer_at_33_is_convex_and_improves_on_the_start() {
    let c = OptimizerConfig {
        max_evaluations: 400,
        ..cfg()
    };
    let st = minimize(3, 33, Objective::Capacity { p: 2.0 }, &c).unwrap();
    assert_eq!(st.current.len(), 33);
    assert!(st.current.is_convex_all_axes());
    assert!(st.current_value <= st.history[0].1);
    assert!(st.is_monotone(1e-9));
    assert!(st.best.1 <= st.current_value);
    let audit = structural_audit(&st.current, Objective::Capacity { p: 2.0 }, &c).unwrap();
    assert!(audit.convex() && audit.level_set_matches);
    assert!(audit.diameter_ratio <= 3.0);
}

#[test]
fn eigen_minimizer_is_the_positivity_set_of_its_ground_state() {
    let c = OptimizerConfig {
        max_evaluations: 150,
        ..cfg()
    };
    let st = minimize(3, 14, Objective::Eigen, &c).unwrap();
    let g = eigen_ground_state(&st.current, &SolverConfig::default()).unwrap();
    assert_eq!(level_set(&g.eigenfunction, 0.0, true).unwrap().unwrap(), st.current);
    assert!(st.is_monotone(1e-9));
}

#[test]
fn annealing_is_reproducible_by_seed() {
    let c = OptimizerConfig {
        mode: ExchangeMode::Annealing,
        max_evaluations: 80,
        max_rounds: 3,
        seed: 99,
        ..cfg()
    };
    let a = minimize(2, 12, Objective::Relative { r: 2.0 }, &c).unwrap();
    let b = minimize(2, 12, Objective::Relative { r: 2.0 }, &c).unwrap();
    assert_eq!(a.history, b.history);
    assert_eq!(a.current, b.current);
    assert!(a.best.1 <= a.history.iter().map(|h| h.1).fold(f64::INFINITY, f64::min) + 1e-15);
}

#[test]
fn history_starts_with_the_initial_value() {
    let st = minimize_from(quasi_ball(2, 9).unwrap(), Objective::Relative { r: 2.5 }, &cfg()).unwrap();
    assert_eq!(st.history[0].0, MoveKind::Initial);
}

#[test]
fn audits_of_ball_and_column() {
    let ball = lattice_ball(2.0, &LatticePoint::origin(3)).unwrap();
    let a = structural_audit(&ball, Objective::Capacity { p: 2.0 }, &cfg()).unwrap();
    assert!(a.convex() && a.level_set_matches && a.walled_in.iter().all(|&w| w));
    assert!(a.diameter_ratio <= 3.0);
    let column = LatticeSet::new(3, (-10..10).map(|t| LatticePoint::new(&[0, 0, t]).unwrap()).collect()).unwrap();
    let b = structural_audit(&column, Objective::Capacity { p: 2.0 }, &cfg()).unwrap();
    assert!(b.diameter_ratio > 3.0);
}

#[test]
fn sets_leaving_the_admissible_ball_are_rejected() {
    let far = LatticeSet::from_coords(&[&[0, 0, 0], &[40, 0, 0]]).unwrap();
    assert!(minimize_from(far, Objective::Relative { r: 2.0 }, &cfg()).is_err());
}
