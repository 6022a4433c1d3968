use rand::Rng;
use uqc_core::decision::{HammingProjector, ThresholdPolicy, Verdict};
use uqc_core::noise::global_depolarize;
use uqc_core::qsim::{MixedState, QuantumState};
use uqc_core::rng::DetRng;
use uqc_core::theory::*;

/// A 3-qubit diagonal state whose first qubit reads 0 with probability
/// `(1 + delta)/2`, with the rest of the mass spread unevenly.
fn first_qubit_state(delta: f64, rng: &mut DetRng) -> MixedState {
    let mut diag = vec![0.0; 8];
    for (half, mass) in [(0usize, (1.0 + delta) / 2.0), (4, (1.0 - delta) / 2.0)] {
        let w: Vec<f64> = (0..4).map(|_| rng.random::<f64>() + 0.1).collect();
        let s: f64 = w.iter().sum();
        for i in 0..4 {
            diag[half + i] = mass * w[i] / s;
        }
    }
    MixedState::from_diagonal(3, &diag).unwrap()
}

#[test]
fn noisy_first_qubit_formula_is_exact() {
    let mut rng = DetRng::seed_from_u64(41);
    for delta in [0.0, 0.3, 0.7, 1.0] {
        for eps in [0.0, 0.05, 0.2] {
            let rho = global_depolarize(&first_qubit_state(delta, &mut rng), eps).unwrap();
            let simulated = (1.0 + rho.expval_z(0).unwrap()) / 2.0;
            let formula = p_succ_noisy_first_qubit(delta, eps).unwrap();
            assert!((simulated - formula).abs() <= 1e-10, "delta {delta} eps {eps}");
            assert!((formula - ((1.0 + delta) / 2.0 - delta * eps / 2.0)).abs() < 1e-15);
        }
    }
}

#[test]
fn average_case_slope_matches_first_order_term() {
    let (n, delta, h) = (5, 0.5, 1e-4);
    let rho = average_case_state(n, delta).unwrap();
    let p = |eps: f64| success_probability(&global_depolarize(&rho, eps).unwrap(), 3);
    let slope = (p(h) - p(0.0)) / h;
    let predicted = -10.0 * 3.0 * delta / 32.0;
    assert!(((slope - predicted) / predicted).abs() < 0.05, "{slope} vs {predicted}");
    // noiseless success is (1 + delta)/2
    assert!((p(0.0) - 0.75).abs() < 1e-12);
    // closed form tracks the simulation for small eps
    assert!((p(0.01) - p_succ_avg_noisy(n, delta, 0.01).unwrap()).abs() < 5e-4);
}

#[test]
fn stirling_error_shrinks() {
    assert!(stirling_relative_error(50).unwrap() <= 0.02);
    assert!(stirling_relative_error(200).unwrap() <= 0.01);
    let sweep: Vec<f64> = [1, 2, 5, 10, 20, 50, 100, 200, 500].iter().map(|&k| stirling_relative_error(k).unwrap()).collect();
    assert!(sweep.windows(2).all(|w| w[1] < w[0]), "{sweep:?}");
}

#[test]
fn unambiguous_identities() {
    for n in (3..=15).step_by(2) {
        let k = (n - 1) / 2;
        for l in k + 1..=n {
            for i in 0..=10 {
                let delta = i as f64 / 10.0;
                let (p0, p1) = unambiguous_probs(n, delta, l).unwrap();
                let pu = p_unambiguous(p0, p1).unwrap();
                assert!((pu - (1.0 + delta) / 2.0).abs() < 1e-12, "n {n} l {l} delta {delta}");
            }
        }
        assert_eq!(expected_shots(n, k + 1).unwrap(), 1.0);
    }
    assert!(expected_shots(101, 52).unwrap() <= 2.0);
    assert!((expected_shots(5, 4).unwrap() - 16.0 / 6.0).abs() < 1e-12);
}

#[test]
fn lifted_state_is_second_order_robust() {
    let rho = global_depolarize(&lifted_state(3, 0.5).unwrap(), 0.01).unwrap();
    let measured = success_probability(&rho, 2);
    assert!((measured - p_lifted(0.5, 0.01).unwrap()).abs() <= 1.5e-4, "{measured}");
    assert_eq!(p_lifted(0.5, 0.01).unwrap(), 0.75);
}

#[test]
fn monte_carlo_matches_closed_forms() {
    let rng = DetRng::seed_from_u64(42);
    let est = mc_unambiguous(5, 0.5, 4, 0.0, 100_000, &rng.fork_named("mc", 0)).unwrap();
    assert!((est.p_unambiguous - 0.75).abs() <= 3.0 * est.p_unambiguous_se);
    let e_shots = expected_shots(5, 4).unwrap();
    assert!((est.mean_shots - e_shots).abs() <= 3.0 * est.mean_shots_se, "{est:?}");

    let (mv, se) = mc_majority_vote(0.6, 25, 100_000, &rng.fork_named("mv", 0)).unwrap();
    let theory = p_multishot(0.6, 25).unwrap();
    assert!((mv - theory).abs() <= 3.0 * se, "{mv} vs {theory}");
}

#[test]
fn monte_carlo_is_schedule_independent() {
    let rng = DetRng::seed_from_u64(7);
    let a = mc_unambiguous(3, 0.4, 3, 0.05, 20_000, &rng).unwrap();
    let b = std::thread::spawn(move || mc_unambiguous(3, 0.4, 3, 0.05, 20_000, &rng).unwrap()).join().unwrap();
    assert_eq!(a, b);
}

#[test]
fn projector_partition_holds_for_odd_registers() {
    for n in [3usize, 5, 7] {
        let k = (n - 1) / 2;
        let low = HammingProjector::new(n, k + 1).unwrap();
        let policy = ThresholdPolicy::unanimous(n, 1);
        for b in 0..1usize << n {
            let w = b.count_ones() as usize;
            assert_eq!(low.contains(b), w <= k);
            let v = ThresholdPolicy { acceptance: k + 1, ..policy }.verdict(w, n);
            assert_eq!(v == Verdict::Class0, w <= k);
        }
    }
}
