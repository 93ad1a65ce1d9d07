use std::f64::consts::{FRAC_PI_6, PI};

use proptest::prelude::*;

use lgsim::analysis::{estimate_pairs, evaluate_lg, lg_lhs, PairEstimate};
use lgsim::experiment::{
    pair_counts, run_experiment, Geometry, InitialStatePolicy, PairChoice, RunOptions, SlotBinding,
    WorldModel,
};
use lgsim::hv_models::{expectation_exact, lg_lhs_exact, RotorModel, TableModel};
use lgsim::quantum::{
    run_quantum_trial, sequential_correlation_exact, Direction, Outcome, PolarizationState,
};
use lgsim::random::SeededGenerator;

fn binding(dirs: [f64; 3]) -> SlotBinding {
    SlotBinding::new([0.5, 1.0, 1.5], dirs.map(Direction::new)).unwrap()
}

fn run(
    world: &WorldModel,
    dirs: [f64; 3],
    n: u64,
    seed: u64,
) -> Vec<lgsim::experiment::TrialRecord> {
    run_experiment(
        &binding(dirs),
        world,
        n,
        seed,
        &Geometry::default(),
        RunOptions::default(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn quantum_mean_is_state_independent(d1 in 0.0..PI, d2 in 0.0..PI, seed in any::<u64>()) {
        let (first, second) = (Direction::new(d1), Direction::new(d2));
        let mut g = SeededGenerator::new(seed);
        let n = 1_000_000u32;
        let mut sum = 0i64;
        for _ in 0..n {
            let init = PolarizationState::new(PI * lgsim::random::UniformSource::next_unit(&mut g));
            let (a, b) = run_quantum_trial(init, first, second, &mut g);
            sum += a.product(b) as i64;
        }
        let mean = sum as f64 / n as f64;
        let exact = sequential_correlation_exact(first, second);
        let envelope = 5.0 * ((1.0 - exact * exact) / n as f64).sqrt();
        // envelope collapses when |cos 2θ| = 1; those cases are exact anyway
        prop_assert!((mean - exact).abs() <= envelope.max(1e-12), "mean {} exact {}", mean, exact);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn table_estimates_match_exact_expectations(model_seed in any::<u64>(), seed in any::<u64>()) {
        let model = TableModel::random_mixture(&mut SeededGenerator::new(model_seed));
        let trials = run(&WorldModel::Table(model.clone()), [0.0; 3], 60_000, seed);
        let est = estimate_pairs(&trials).unwrap();
        for e in est {
            let (a, b) = e.pair.slots();
            let exact = expectation_exact(&model, a, b).unwrap();
            let envelope = 5.0 * ((1.0 - exact * exact) / e.n as f64).sqrt();
            prop_assert!((e.mean - exact).abs() <= envelope, "{:?} exact {}", e, exact);
        }
        prop_assert!(lg_lhs_exact(&model) <= 1.0 + 1e-12);
        let r = evaluate_lg(&est, 3.0).unwrap();
        prop_assert!(r.lhs <= 1.0 + 5.0 * r.lhs_std_error);
        prop_assert!((r.recomputed_lhs() - r.lhs).abs() <= 1e-12);
    }

    #[test]
    fn rotor_never_violates(dirs in prop::array::uniform3(0.0..PI), seed in any::<u64>()) {
        let trials = run(&WorldModel::Rotor(RotorModel::new(dirs.map(Direction::new))), dirs, 30_000, seed);
        let r = evaluate_lg(&estimate_pairs(&trials).unwrap(), 3.0).unwrap();
        prop_assert!(r.lhs <= 1.0 + 5.0 * r.lhs_std_error, "lhs {} se {}", r.lhs, r.lhs_std_error);
    }

    #[test]
    fn counts_are_conserved(n in 1u64..5000, seed in any::<u64>()) {
        let trials = run(&WorldModel::Quantum(InitialStatePolicy::FreshUniform), [0.0, 0.3, 0.9], n, seed);
        prop_assert_eq!(pair_counts(&trials).iter().sum::<u64>(), n);
        prop_assert!(trials.iter().enumerate().all(|(i, t)| t.index == i as u64));
    }

    #[test]
    fn report_recomputes(means in prop::array::uniform3(-1.0f64..=1.0), n in 2u64..100_000) {
        let est: Vec<PairEstimate> = PairChoice::ALL
            .iter()
            .zip(means)
            .map(|(&p, m)| PairEstimate::from_sum(p, n, (m * n as f64).round() as i64))
            .collect();
        let r = evaluate_lg(&est, 3.0).unwrap();
        prop_assert!((r.recomputed_lhs() - r.lhs).abs() <= 1e-12);
        prop_assert!(r.lhs_std_error >= 0.0);
        prop_assert_eq!(r.violated, r.z_score > 3.0);
        prop_assert!(r.estimates.iter().all(|e| e.mean.abs() <= 1.0));
        let [a, b, c] = r.estimates.map(|e| e.mean);
        prop_assert_eq!(lg_lhs(a, b, c), r.lhs);
    }
}

#[test]
fn quantum_run_at_violating_angles() {
    let dirs = [0.0, FRAC_PI_6, 2.0 * FRAC_PI_6];
    let trials = run(
        &WorldModel::Quantum(InitialStatePolicy::default()),
        dirs,
        1_000_000,
        42,
    );
    let est = estimate_pairs(&trials).unwrap();
    for (e, target) in est.iter().zip([0.5, -0.5, 0.5]) {
        assert!((e.mean - target).abs() < 0.004, "{e:?}");
    }
    let r = evaluate_lg(&est, 3.0).unwrap();
    assert!(r.lhs >= 1.45 && r.z_score > 20.0, "{r:?}");
}

#[test]
fn quantum_first_outcome_marginals() {
    // fixed initial state at 0: first outcome is +1 with probability cos²(θ_first)
    let dirs = [0.4, 1.1, 2.5];
    let trials = run(
        &WorldModel::Quantum(InitialStatePolicy::default()),
        dirs,
        600_000,
        5,
    );
    for pair in PairChoice::ALL {
        let in_pair: Vec<_> = trials.iter().filter(|t| t.pair == pair).collect();
        let n = in_pair.len() as f64;
        let plus = in_pair
            .iter()
            .filter(|t| t.s_first == Outcome::Plus)
            .count() as f64;
        let p = dirs[pair.slots().0.index()].cos().powi(2);
        let se = (p * (1.0 - p) / n).sqrt();
        assert!(
            (plus / n - p).abs() <= 5.0 * se,
            "{pair}: {} vs {p}",
            plus / n
        );
        let minus = in_pair
            .iter()
            .filter(|t| t.s_first == Outcome::Minus)
            .count() as f64;
        assert_eq!(plus + minus, n);
    }
}

#[test]
fn conspiracy_narrative_changes_nothing_statistical() {
    use lgsim::hv_models::{conspiracy_from_quantum, LoopholeNarrative};
    let dirs = [0.0, FRAC_PI_6, 2.0 * FRAC_PI_6];
    let [a, b, c] = dirs.map(Direction::new);
    let m = conspiracy_from_quantum(a, b, c);
    let t1 = run(&WorldModel::Conspiracy(m.clone()), dirs, 50_000, 9);
    let t2 = run(
        &WorldModel::Conspiracy(m.with_narrative(LoopholeNarrative::Supercorrelation)),
        dirs,
        50_000,
        9,
    );
    assert_eq!(t1, t2);
}
