use uqc_core::circuits::{run_vqc, CircuitSpec};
use uqc_core::decision::{m2_probability, ThresholdPolicy};
use uqc_core::pipeline::*;
use uqc_core::qsim::QuantumState;

fn train_accuracy(data: &Dataset, spec: &CircuitSpec, out: &TrainOutcome) -> f64 {
    let correct = data
        .rows
        .iter()
        .filter(|s| {
            let z = run_vqc(&s.features, &out.weights, spec, None).unwrap().expval_z_all();
            u8::from(m2_probability(&z) >= 0.5) == s.label
        })
        .count();
    correct as f64 / data.len() as f64
}

#[test]
fn adam_separates_the_toy_set() {
    let data = toy_separable(80, 0.3, 7);
    let spec = CircuitSpec::new(2, 1, 2).unwrap();
    let cfg = TrainConfig {
        seed: 7,
        ..Default::default()
    };
    let out = train(&data, &spec, &cfg, ModelVariant::M2).unwrap();
    let acc = train_accuracy(&data, &spec, &out);
    assert!(acc >= 0.95, "train accuracy {acc}");
    assert!(out.history.iter().all(|r| r.cost.is_finite()));
    assert!(dataset_cost(&out.weights, &data, &spec, ModelVariant::M2).unwrap() <= out.history[0].cost);
}

#[test]
fn one_adam_step_lowers_the_batch_cost() {
    let data = toy_separable(8, 0.1, 3);
    let spec = CircuitSpec::new(2, 1, 1).unwrap();
    let mut lr = 0.05;
    let mut improved = false;
    for _ in 0..=5 {
        let cfg = TrainConfig {
            optimizer: OptimizerConfig::Adam(AdamConfig { lr, ..Default::default() }),
            batch_size: 8,
            max_epochs: 1,
            patience: 0,
            ..Default::default()
        };
        let out = train(&data, &spec, &cfg, ModelVariant::M1).unwrap();
        if out.history[1].cost < out.history[0].cost {
            improved = true;
            break;
        }
        lr /= 2.0;
    }
    assert!(improved);
}

#[test]
fn sampled_loss_training_improves_and_respects_budget() {
    let data = toy_separable(40, 0.3, 11);
    let spec = CircuitSpec::new(2, 1, 2).unwrap();
    let cfg = TrainConfig {
        optimizer: OptimizerConfig::Spsa(SpsaConfig::default()),
        max_epochs: 50,
        patience: 0,
        seed: 11,
        ..Default::default()
    };
    let policy = ThresholdPolicy::unanimous(2, 50);
    let out = train_m3_constrained(&data, &spec, &cfg, &policy).unwrap();
    assert_eq!(out.history.len(), 51);
    let best = out.running_min();
    assert!(best.windows(2).all(|w| w[1] <= w[0]));
    assert!(*best.last().unwrap() <= 0.8 * out.history[0].cost, "{best:?}");
    let n_batches = data.len().div_ceil(cfg.batch_size) as u64;
    let bound = n_batches * cfg.batch_size as u64 * u64::from(policy.max_attempts) * 2;
    assert!(out.history[1..].iter().all(|r| r.executions <= bound && r.executions >= 2 * data.len() as u64));
}

#[test]
fn never_rejecting_policy_uses_one_shot_per_evaluation() {
    let mut data = toy_separable(24, 0.1, 5);
    for s in &mut data.rows {
        let third = (s.features[0] + s.features[1]) / 2.0;
        s.features.push(third);
    }
    data.feature_names.push("mean".into());
    let spec = CircuitSpec::new(3, 1, 1).unwrap();
    let cfg = TrainConfig {
        optimizer: OptimizerConfig::Spsa(SpsaConfig::default()),
        max_epochs: 5,
        patience: 0,
        ..Default::default()
    };
    let policy = ThresholdPolicy {
        acceptance: 2,
        max_attempts: 50,
    };
    let out = train_m3_constrained(&data, &spec, &cfg, &policy).unwrap();
    assert_eq!(out.history[0].executions, 24);
    assert!(out.history[1..].iter().all(|r| r.executions == 48));
}
