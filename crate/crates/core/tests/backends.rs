use std::f64::consts::PI;

use proptest::prelude::*;
use rand::Rng;
use uqc_core::circuits::{build_vqc, run_vqc, AnsatzWeights, CircuitSpec, VqcState};
use uqc_core::qsim::{Gate, QuantumState};
use uqc_core::rng::DetRng;

fn random_instance(k: usize, rng: &mut DetRng) -> (Vec<f64>, AnsatzWeights, CircuitSpec) {
    let spec = CircuitSpec::new(k, 1, 2).unwrap();
    let x: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
    let w = AnsatzWeights::random(&spec, rng);
    (x, w, spec)
}

fn compare(x: &[f64], w: &AnsatzWeights, spec: &CircuitSpec) -> f64 {
    let circuit = build_vqc(x, w, spec).unwrap();
    let pure = circuit.run_pure().unwrap();
    let mixed = circuit.run_mixed().unwrap();
    let mut worst = pure.to_mixed().max_abs_diff(&mixed);
    for (a, b) in pure.probabilities().iter().zip(mixed.probabilities()) {
        worst = worst.max((a - b).abs());
    }
    for q in 0..spec.n_qubits {
        worst = worst.max((pure.expval_z(q).unwrap() - mixed.expval_z(q).unwrap()).abs());
    }
    worst
}

#[test]
fn pure_and_mixed_backends_agree() {
    let mut rng = DetRng::seed_from_u64(21);
    for k in [2, 3, 5] {
        for _ in 0..50 {
            let (x, w, spec) = random_instance(k, &mut rng);
            assert!(compare(&x, &w, &spec) < 1e-10);
        }
    }
}

#[test]
fn noiseless_run_picks_state_vector() {
    let mut rng = DetRng::seed_from_u64(22);
    let (x, w, spec) = random_instance(3, &mut rng);
    let state = run_vqc(&x, &w, &spec, None).unwrap();
    assert!(matches!(state, VqcState::Pure(_)));
    assert_eq!(state.backend(), "statevector");
}

#[test]
fn identical_inputs_give_identical_amplitudes() {
    let mut rng = DetRng::seed_from_u64(23);
    let (x, w, spec) = random_instance(3, &mut rng);
    let a = build_vqc(&x, &w, &spec).unwrap().run_pure().unwrap();
    let b = build_vqc(&x, &w, &spec).unwrap().run_pure().unwrap();
    assert_eq!(a.amplitudes(), b.amplitudes());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_gate_sequences_agree(ops in proptest::collection::vec((0u8..4, 0usize..4, 0usize..4, -PI..PI), 1..30)) {
        let n = 4;
        let mut circuit = uqc_core::qsim::Circuit::new(n).unwrap();
        for (kind, a, b, angle) in ops {
            let gate = match kind {
                0 => Gate::H(a),
                1 => Gate::ry(a, angle),
                2 => Gate::phase(a, angle),
                _ if a != b => Gate::cnot(a, b),
                _ => Gate::H(b),
            };
            circuit.push(gate).unwrap();
        }
        let pure = circuit.run_pure().unwrap();
        prop_assert!((pure.norm_sqr() - 1.0).abs() < 1e-10);
        let mixed = circuit.run_mixed().unwrap();
        prop_assert!(pure.to_mixed().max_abs_diff(&mixed) < 1e-10);
    }
}
