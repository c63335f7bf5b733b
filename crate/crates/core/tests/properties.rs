use std::sync::Arc;

use proptest::prelude::*;

use fracquery::boolean_fn::{zoo, BooleanFunction, Node};
use fracquery::dp_solver::{self, optimal_decision_tree_cost, solve, solve_with, Method, SolveOptions};
use fracquery::jump_process::{estimate, transition, RunConfig};
use fracquery::random_turn::{play_seeded, GameStart};
use fracquery::rng::run_rng;
use fracquery::strategies::{
    max_derivative, s_max, Decision, DecisionContext, DpPolicy, MaxDerivative, MiddleBit,
    RandomUnread, SMax, Strategy as Chooser, TreeHeuristic, TwoSubtrees,
};

fn sign_table(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop::bool::ANY.prop_map(|b| if b { 1.0 } else { -1.0 }), 1 << n)
}

fn dense_fn(max_n: usize) -> impl Strategy<Value = BooleanFunction> {
    (1..=max_n).prop_flat_map(|n| sign_table(n).prop_map(move |t| BooleanFunction::dense(n, t).unwrap()))
}

fn cube_point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..=1.0, n)
}

/// Random read-once formula on `n` contiguous variables.
fn formula(n: usize) -> BoxedStrategy<Node> {
    if n == 1 {
        return prop_oneof![Just(Node::Var(0)), Just(Node::negate(Node::Var(0)))].boxed();
    }
    let splits: Vec<BoxedStrategy<Node>> = (1..n)
        .map(|left| {
            (formula(left), formula(n - left), 0..2u8)
                .prop_map(move |(a, b, g)| {
                    let kids = vec![a, b.shifted(left)];
                    if g == 0 {
                        Node::Or(kids)
                    } else {
                        Node::And(kids)
                    }
                })
                .boxed()
        })
        .collect();
    let mut options = splits;
    if n >= 3 {
        options.push(
            (formula(1), formula(1), formula(n - 2))
                .prop_map(|(a, b, c)| Node::Maj3(vec![a, b.shifted(1), c.shifted(2)]))
                .boxed(),
        );
    }
    proptest::strategy::Union::new(options).boxed()
}

fn decide(s: &dyn Chooser, f: &BooleanFunction, x: &[f64], key: u64) -> Decision {
    let mut rng = run_rng(key, 0);
    let mut ctx = DecisionContext {
        time: 0,
        run_key: key,
        rng: &mut rng,
    };
    s.decide(f, x, &mut ctx).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fourier_round_trip_and_parseval(f in dense_fn(7)) {
        let t = f.fourier().unwrap();
        let table = f.table().unwrap();
        for (a, b) in t.to_values().iter().zip(table.iter()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        prop_assert!((t.total_weight() - 1.0).abs() <= 1e-12);
        let levels: f64 = (0..=f.n()).map(|k| t.level_weight(k)).sum();
        prop_assert!((levels - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn interpolation_preserves_value(f in dense_fn(6), seed in any::<u64>()) {
        let mut rng = run_rng(seed, 0);
        use rand::Rng;
        let x: Vec<f64> = (0..f.n()).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let h = f.interpolate(&x).unwrap();
        prop_assert!((h.coefficient(0) - f.harmonic(&x).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn derivative_is_half_difference(f in dense_fn(5), i in 0usize..5) {
        let i = i % f.n();
        let x = vec![0.0; f.n()];
        prop_assert!((f.derivative(i, &x).unwrap() - f.fourier().unwrap().coefficient(1 << i)).abs() <= 1e-12);
    }

    #[test]
    fn martingale_step_is_exact(j in 1i64..2048, level in 0i32..10) {
        let x = -1.0 + j as f64 / 1024.0;
        let eps = 0.5f64.powi(level);
        let t = transition(x, eps).unwrap();
        prop_assert_eq!(t.p_low * t.low + t.p_high * t.high, x);
        prop_assert_eq!(t.p_low + t.p_high, 1.0);
        prop_assert!(t.low >= -1.0 && t.high <= 1.0);
        prop_assert!(t.p_low >= 0.0 && t.p_high >= 0.0);
    }

    #[test]
    fn composite_matches_dense(node in (1usize..=7).prop_flat_map(formula), seed in any::<u64>()) {
        let f = BooleanFunction::composite(node).unwrap();
        let d = f.to_dense().unwrap();
        let mut rng = run_rng(seed, 0);
        use rand::Rng;
        for _ in 0..20 {
            let x: Vec<f64> = (0..f.n())
                .map(|_| match rng.random_range(0..3) {
                    0 => -1.0,
                    1 => 1.0,
                    _ => rng.random_range(-0.99..0.99),
                })
                .collect();
            prop_assert!((f.harmonic(&x).unwrap() - d.harmonic(&x).unwrap()).abs() <= 1e-12);
            prop_assert_eq!(f.determined(&x), d.determined(&x));
        }
    }

    #[test]
    fn strategies_pick_live_coordinates(x in cube_point(9), key in any::<u64>()) {
        let f = zoo::itmaj(2);
        if f.determined(&x).is_none() {
            let all: [&dyn Chooser; 6] =
                [&SMax, &MaxDerivative, &RandomUnread, &MiddleBit, &TreeHeuristic, &TwoSubtrees];
            for s in all {
                match decide(s, &f, &x, key) {
                    Decision::Query(i) => prop_assert!(x[i].abs() < 1.0, "{} picked {}", s.id(), i),
                    Decision::Idle => prop_assert!(false),
                }
            }
        }
    }

    #[test]
    fn markov_strategies_replay(x in cube_point(3), k1 in any::<u64>(), k2 in any::<u64>()) {
        let f = zoo::maj3();
        if f.determined(&x).is_none() {
            for s in [&SMax as &dyn Chooser, &MaxDerivative] {
                prop_assert_eq!(decide(s, &f, &x, k1), decide(s, &f, &x, k2));
            }
        }
    }

    #[test]
    fn or_derivative_follows_largest_coordinate(x in prop::collection::vec(-0.999f64..0.999, 2..8)) {
        let mut sorted = x.clone();
        sorted.sort_by(f64::total_cmp);
        prop_assume!(sorted.windows(2).all(|w| w[1] - w[0] > 1e-9));
        let f = zoo::or(x.len());
        prop_assert_eq!(max_derivative(&f, &x).unwrap(), s_max(&x).unwrap());
    }

    #[test]
    fn lattice_solution_properties(f in dense_fn(2), level in 0u32..4) {
        let s = solve(&f, level).unwrap();
        let l = s.field.lattice;
        let lip = (f.n() as f64 + 3.0) / 2.0;
        prop_assert!(s.report.max_residual <= 1e-10);
        for idx in 0..l.len() {
            let x = l.point(idx);
            let u = s.field.value(idx);
            prop_assert!(u >= 0.0);
            prop_assert_eq!(u == 0.0 && f.determined(&x).is_some(), f.determined(&x).is_some());
            for (axis, &xa) in x.iter().enumerate() {
                if xa < 1.0 {
                    let v = s.field.value(idx + l.stride(axis));
                    prop_assert!((u - v).abs() <= lip * l.epsilon() + 1e-12);
                }
            }
        }
        if level < 3 {
            let fine = solve(&f, level + 1).unwrap();
            for idx in 0..l.len() {
                let x = l.point(idx);
                prop_assert!(fine.field.value_at(&x).unwrap() <= s.field.value(idx) + 1e-9);
            }
        }
    }

    #[test]
    fn jacobi_sweeps_never_increase(f in dense_fn(2), level in 0u32..4) {
        let opts = SolveOptions { method: Method::ValueIteration, ..SolveOptions::default() };
        let vi = solve_with(&f, level, &opts).unwrap();
        let pi = solve(&f, level).unwrap();
        prop_assert!(vi.report.max_increase <= 1e-12);
        for (a, b) in vi.field.values().iter().zip(pi.field.values()) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn unit_jump_lattice_is_the_decision_tree(f in dense_fn(4)) {
        let s = dp_solver::solve(&f, 0).unwrap();
        let tree = optimal_decision_tree_cost(&f).unwrap();
        let exact = *tree.numer() as f64 / *tree.denom() as f64;
        prop_assert!((s.field.at_origin() - exact).abs() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn simulated_policy_cost_matches_field(f in dense_fn(3), seed in any::<u64>()) {
        prop_assume!(!f.is_constant());
        let s = Arc::new(solve(&f, 2).unwrap());
        let target = s.field.at_origin();
        let stats = estimate(&f, &DpPolicy::new(s), &vec![0.0; f.n()], &RunConfig::new(0.25), 4000, seed).unwrap();
        prop_assert!(stats.cost().z_from(target) <= 4.0, "{} vs {}", stats.mean_cost, target);
        prop_assert!(stats.cost().z_distance(&stats.quadratic_variation()) <= 4.0);
        prop_assert!(stats.zero_error());
    }

    #[test]
    fn zero_error_runs_satisfy_bounds(f in dense_fn(3), seed in any::<u64>()) {
        let stats = estimate(&f, &SMax, &vec![0.0; f.n()], &RunConfig::new(0.25), 2000, seed).unwrap();
        let r = fracquery::bounds::report(&f, &stats).unwrap();
        prop_assert!(r.pass, "{}", r.render());
    }

    #[test]
    fn game_position_is_a_martingale(seed in any::<u64>()) {
        let f = zoo::maj3();
        let start = GameStart::from_f64(&[0.25, -0.5, 0.0], 4).unwrap();
        let turn = 6;
        let mut sums = [Vec::new(), Vec::new(), Vec::new()];
        for r in 0..3000 {
            let g = play_seeded(&f, &start, &MaxDerivative, &MaxDerivative, seed, r).unwrap();
            let x = g.position_after(turn);
            for i in 0..3 {
                sums[i].push(x[i]);
            }
        }
        for (i, xs) in sums.iter().enumerate() {
            let e = fracquery::stats::Estimate::from_samples(xs);
            prop_assert!(e.z_from(start.point()[i]) <= 4.0);
        }
    }
}

#[test]
fn game_values_match_harmonic_extension() {
    let cases: Vec<(BooleanFunction, Vec<Vec<f64>>, u32)> = vec![
        (zoo::or(2), vec![vec![0.0, 0.0], vec![0.5, -0.5], vec![-0.5, -0.25]], 4),
        (zoo::and(2), vec![vec![0.0, 0.0], vec![0.25, 0.75], vec![-0.5, 0.5]], 4),
        (zoo::maj3(), vec![vec![0.0; 3], vec![0.5, 0.0, -0.5], vec![0.25, 0.25, -0.75]], 4),
        (zoo::itmaj(2), vec![vec![0.0; 9], vec![0.5; 9], vec![-0.5, 0.0, 0.5, 0.0, 0.0, 0.0, 0.5, 0.5, 0.5]], 2),
    ];
    for (k, (f, starts, m)) in cases.into_iter().enumerate() {
        for (j, p) in starts.into_iter().enumerate() {
            let start = GameStart::from_f64(&p, m).unwrap();
            let v = fracquery::random_turn::game_value_estimate(&f, &start, 4000, (10 * k + j) as u64).unwrap();
            assert!(v.z <= 4.0, "{} at {p:?}: {} ± {} vs {}", f.id(), v.mean_payoff, v.stderr, v.harmonic_value);
        }
    }
}

#[test]
fn every_strategy_returns_a_live_coordinate() {
    use rand::Rng;
    let or3 = zoo::or(3);
    let dp = DpPolicy::new(Arc::new(solve(&or3, 3).unwrap()));
    let mut rng = run_rng(99, 0);
    for _ in 0..10_000 {
        let x: Vec<f64> = (0..3)
            .map(|_| match rng.random_range(0..4) {
                0 => -1.0,
                1 => 1.0,
                _ => -1.0 + rng.random_range(1..16) as f64 / 8.0,
            })
            .collect();
        if or3.determined(&x).is_some() {
            continue;
        }
        let key = rng.random();
        let all: [&dyn Chooser; 6] = [&SMax, &MaxDerivative, &RandomUnread, &MiddleBit, &TreeHeuristic, &dp];
        for s in all {
            match decide(s, &or3, &x, key) {
                Decision::Query(i) => assert!(x[i].abs() < 1.0, "{} picked {i} at {x:?}", s.id()),
                Decision::Idle => panic!("{} idled", s.id()),
            }
        }
    }
}
