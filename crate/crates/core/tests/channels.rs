use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use uqc_core::noise::{apply_channel, global_depolarize, Channel};
use uqc_core::qsim::{Mat2, MixedState, QuantumState};
use uqc_core::rng::DetRng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Random density matrix `A A^dagger / tr` from a Gaussian-ish `A`.
fn random_state(n_qubits: usize, rng: &mut DetRng) -> MixedState {
    let d = 1 << n_qubits;
    let a: Vec<Complex64> = (0..d * d)
        .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let mut m = vec![c(0.0, 0.0); d * d];
    for i in 0..d {
        for j in 0..d {
            m[i * d + j] = (0..d).map(|k| a[i * d + k] * a[j * d + k].conj()).sum();
        }
    }
    let tr: f64 = (0..d).map(|i| m[i * d + i].re).sum();
    m.iter_mut().for_each(|v| *v /= tr);
    MixedState::from_matrix(n_qubits, m).unwrap()
}

fn all_channels(p: f64) -> [Channel; 4] {
    [
        Channel::DepolarizingPauli(p),
        Channel::DepolarizingMixing(p),
        Channel::AmplitudeDamping(p),
        Channel::PhaseDamping(p),
    ]
}

fn completeness_defect(kraus: &[Mat2]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let s: Complex64 = kraus.iter().map(|k| (0..2).map(|r| k[r][i].conj() * k[r][j]).sum::<Complex64>()).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((s - target).norm());
        }
    }
    worst
}

#[test]
fn kraus_sets_are_complete_and_trace_preserving() {
    let mut rng = DetRng::seed_from_u64(11);
    for p in [0.0, 0.02, 0.05, 0.3, 0.75, 1.0] {
        for ch in all_channels(p) {
            assert!(completeness_defect(&ch.kraus().unwrap()) < 1e-12, "{ch:?}");
            let rho = random_state(2, &mut rng);
            for q in 0..2 {
                let mut out = rho.clone();
                apply_channel(&mut out, ch, q).unwrap();
                assert!((out.trace() - 1.0).norm() < 1e-12);
                out.validate().unwrap();
            }
        }
    }
}

#[test]
fn depolarizing_parameterizations_agree() {
    let mut rng = DetRng::seed_from_u64(12);
    for _ in 0..100 {
        let rho = random_state(1, &mut rng);
        let p: f64 = rng.random::<f64>() * 0.75;
        let mut a = rho.clone();
        let mut b = rho.clone();
        apply_channel(&mut a, Channel::DepolarizingPauli(p), 0).unwrap();
        apply_channel(&mut b, Channel::DepolarizingMixing(4.0 * p / 3.0), 0).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12);
    }
}

#[test]
fn full_mixing_reaches_maximally_mixed() {
    let mut rng = DetRng::seed_from_u64(13);
    let rho = random_state(3, &mut rng);
    let out = global_depolarize(&rho, 1.0).unwrap();
    assert!(out.max_abs_diff(&MixedState::maximally_mixed(3).unwrap()) < 1e-12);
}

#[test]
fn channel_on_one_qubit_leaves_the_rest_alone() {
    let mut rng = DetRng::seed_from_u64(14);
    let rho = random_state(2, &mut rng);
    let mut out = rho.clone();
    apply_channel(&mut out, Channel::AmplitudeDamping(0.4), 0).unwrap();
    let before = rho.partial_trace_keep(1).unwrap();
    let after = out.partial_trace_keep(1).unwrap();
    assert!(before.max_abs_diff(&after) < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn channels_keep_states_physical(seed in any::<u64>(), p in 0.0f64..=1.0, which in 0usize..4, q in 0usize..3) {
        let mut rng = DetRng::seed_from_u64(seed);
        let mut rho = random_state(3, &mut rng);
        apply_channel(&mut rho, all_channels(p)[which], q).unwrap();
        prop_assert!((rho.trace() - 1.0).norm() < 1e-12);
        prop_assert!(rho.validate().is_ok());
        prop_assert!(rho.eigenvalues().iter().all(|&e| e > -1e-9));
        // Z expectations stay within the Bloch ball
        for qq in 0..3 {
            prop_assert!(rho.expval_z(qq).unwrap().abs() <= 1.0 + 1e-12);
        }
    }
}
