//! Mini-batch training of the ansatz weights.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Sample};
use super::optim::{Adam, AdamConfig, Spsa, SpsaConfig};
use crate::circuits::{run_vqc, z_jacobian, AnsatzWeights, CircuitSpec, Observable};
use crate::decision::{classify_m3, m1_probability, m2_probability, ThresholdPolicy, Verdict};
use crate::error::{Error, Result};
use crate::qsim::{QuantumState, ShotSampler};
use crate::rng::DetRng;

/// Probabilities are clipped to `[BCE_CLIP, 1 - BCE_CLIP]` before the log.
pub const BCE_CLIP: f64 = 1e-7;

fn clip(p: f64) -> f64 {
    p.clamp(BCE_CLIP, 1.0 - BCE_CLIP)
}

/// Binary cross-entropy of predicted `P(class 1) = p` against label `y`.
pub fn bce_cost(p: f64, y: u8) -> f64 {
    let p = clip(p);
    if y == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Derivative of [`bce_cost`] with respect to `p`.
pub fn bce_grad(p: f64, y: u8) -> f64 {
    let p = clip(p);
    (p - f64::from(y)) / (p * (1.0 - p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelVariant {
    M1,
    M2,
}

impl ModelVariant {
    fn observable(self) -> Observable {
        match self {
            ModelVariant::M1 => Observable::Z(0),
            ModelVariant::M2 => Observable::ZSum,
        }
    }

    fn probability(self, z: &[f64]) -> f64 {
        match self {
            ModelVariant::M1 => m1_probability(z),
            ModelVariant::M2 => m2_probability(z),
        }
    }

    /// `dp/d<obs>` for the affine probability map.
    fn probability_slope(self, n_qubits: usize) -> f64 {
        match self {
            ModelVariant::M1 => -0.5,
            ModelVariant::M2 => -0.5 / n_qubits as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerConfig {
    Adam(AdamConfig),
    Spsa(SpsaConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub optimizer: OptimizerConfig,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub min_delta: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerConfig::Adam(AdamConfig::default()),
            batch_size: 8,
            max_epochs: 300,
            patience: 20,
            min_delta: 1e-5,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter("batch_size must be at least 1".into()));
        }
        if self.min_delta.is_nan() || self.min_delta < 0.0 {
            return Err(Error::InvalidParameter("min_delta must be non-negative".into()));
        }
        Ok(())
    }
}

/// One row of the training history. Epoch 0 is the initial weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub cost: f64,
    /// Circuit executions spent by the optimizer during this epoch.
    pub executions: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub weights: AnsatzWeights,
    pub initial_weights: AnsatzWeights,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainOutcome {
    pub fn total_executions(&self) -> u64 {
        self.history.iter().map(|r| r.executions).sum()
    }

    /// Running minimum of the cost history.
    pub fn running_min(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.history
            .iter()
            .map(|r| {
                best = best.min(r.cost);
                best
            })
            .collect()
    }
}

fn check_inputs(data: &Dataset, spec: &CircuitSpec, cfg: &TrainConfig) -> Result<()> {
    spec.validate()?;
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Dataset("training set is empty".into()));
    }
    if data.n_features() != spec.n_qubits {
        return Err(Error::QubitCountMismatch {
            expected: spec.n_qubits,
            found: data.n_features(),
        });
    }
    Ok(())
}

fn point_probability(s: &Sample, w: &AnsatzWeights, spec: &CircuitSpec, variant: ModelVariant) -> Result<f64> {
    let state = run_vqc(&s.features, w, spec, None)?;
    Ok(variant.probability(&state.expval_z_all()))
}

fn batch_cost(batch: &[&Sample], w: &AnsatzWeights, spec: &CircuitSpec, variant: ModelVariant) -> Result<f64> {
    let costs = batch
        .par_iter()
        .map(|s| Ok(bce_cost(point_probability(s, w, spec, variant)?, s.label)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(costs.iter().sum::<f64>() / batch.len() as f64)
}

/// Mean BCE of the exact (noiseless) class-1 probability over `data`.
pub fn dataset_cost(weights: &AnsatzWeights, data: &Dataset, spec: &CircuitSpec, variant: ModelVariant) -> Result<f64> {
    let rows: Vec<&Sample> = data.rows.iter().collect();
    batch_cost(&rows, weights, spec, variant)
}

fn batch_grad(batch: &[&Sample], w: &AnsatzWeights, spec: &CircuitSpec, variant: ModelVariant) -> Result<Vec<f64>> {
    let observable = variant.observable();
    let slope = variant.probability_slope(spec.n_qubits);
    let grads = batch
        .par_iter()
        .map(|s| {
            let jac = z_jacobian(&s.features, w, spec)?;
            let p = variant.probability(&jac.values);
            let outer = bce_grad(p, s.label) * slope;
            Ok(jac.jacobian.iter().map(|row| outer * observable.evaluate(row)).collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = vec![0.0; w.len()];
    for g in &grads {
        for (t, v) in total.iter_mut().zip(g) {
            *t += v;
        }
    }
    let n = batch.len() as f64;
    total.iter_mut().for_each(|t| *t /= n);
    Ok(total)
}

fn perturbed(params: &[f64], direction: &[f64], scale: f64) -> Vec<f64> {
    params.iter().zip(direction).map(|(p, d)| p + scale * d).collect()
}

fn initial_weights(spec: &CircuitSpec, cfg: &TrainConfig) -> AnsatzWeights {
    let mut rng = DetRng::seed_from_u64(cfg.seed).fork_named("init", 0);
    AnsatzWeights::random(spec, &mut rng)
}

fn shuffled_batches<'a>(data: &'a Dataset, batch_size: usize, rng: &mut DetRng) -> Vec<Vec<&'a Sample>> {
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(rng);
    order
        .chunks(batch_size)
        .map(|c| c.iter().map(|&i| &data.rows[i]).collect())
        .collect()
}

struct EarlyStop {
    best_cost: f64,
    best_epoch: usize,
    best_weights: AnsatzWeights,
    wait: usize,
}

impl EarlyStop {
    fn new(cost: f64, weights: &AnsatzWeights) -> Self {
        Self {
            best_cost: cost,
            best_epoch: 0,
            best_weights: weights.clone(),
            wait: 0,
        }
    }

    /// Returns true when training should stop.
    fn observe(&mut self, epoch: usize, cost: f64, weights: &AnsatzWeights, cfg: &TrainConfig) -> bool {
        if cost < self.best_cost - cfg.min_delta {
            self.best_cost = cost;
            self.best_epoch = epoch;
            self.best_weights = weights.clone();
            self.wait = 0;
        } else {
            self.wait += 1;
        }
        cfg.patience > 0 && self.wait >= cfg.patience
    }
}

fn diverged(epoch: usize, stop: &EarlyStop) -> Error {
    Error::Diverged {
        epoch,
        last_good: Box::new(stop.best_weights.clone()),
    }
}

/// Trains the M1 or M2 model on the noiseless backend. Adam uses
/// parameter-shift gradients; SPSA uses two batch-cost evaluations per step.
/// Returns the weights with the lowest epoch cost.
pub fn train(data: &Dataset, spec: &CircuitSpec, cfg: &TrainConfig, variant: ModelVariant) -> Result<TrainOutcome> {
    check_inputs(data, spec, cfg)?;
    let init = initial_weights(spec, cfg);
    let mut params = init.to_flat();
    let dim = params.len();
    let master = DetRng::seed_from_u64(cfg.seed);

    let cost0 = dataset_cost(&init, data, spec, variant)?;
    if !cost0.is_finite() {
        return Err(Error::Numeric("initial cost is not finite".into()));
    }
    let mut history = vec![EpochRecord {
        epoch: 0,
        cost: cost0,
        executions: 0,
    }];
    let mut stop = EarlyStop::new(cost0, &init);
    let mut stopped_early = false;

    let mut adam = Adam::new(
        match cfg.optimizer {
            OptimizerConfig::Adam(c) => c,
            OptimizerConfig::Spsa(_) => AdamConfig::default(),
        },
        dim,
    );
    let mut spsa = Spsa::new(match cfg.optimizer {
        OptimizerConfig::Spsa(c) => c,
        OptimizerConfig::Adam(_) => SpsaConfig::default(),
    });

    for epoch in 1..=cfg.max_epochs {
        let mut rng = master.fork_named("epoch", epoch as u64);
        let batches = shuffled_batches(data, cfg.batch_size, &mut rng);
        let mut executions = 0u64;
        for batch in &batches {
            let w = init.from_flat(&params);
            match cfg.optimizer {
                OptimizerConfig::Adam(_) => {
                    let g = batch_grad(batch, &w, spec, variant)?;
                    if g.iter().any(|v| !v.is_finite()) {
                        return Err(diverged(epoch, &stop));
                    }
                    adam.step(&mut params, &g);
                    executions += (batch.len() * (1 + 2 * dim)) as u64;
                }
                OptimizerConfig::Spsa(_) => {
                    let d = spsa.direction(dim, &mut rng);
                    let ck = spsa.perturbation_size();
                    let plus = batch_cost(batch, &init.from_flat(&perturbed(&params, &d, ck)), spec, variant)?;
                    let minus = batch_cost(batch, &init.from_flat(&perturbed(&params, &d, -ck)), spec, variant)?;
                    spsa.step(&mut params, &d, plus, minus);
                    executions += 2 * batch.len() as u64;
                }
            }
        }
        let w = init.from_flat(&params);
        let cost = dataset_cost(&w, data, spec, variant)?;
        if !cost.is_finite() || params.iter().any(|p| !p.is_finite()) {
            return Err(diverged(epoch, &stop));
        }
        history.push(EpochRecord {
            epoch,
            cost,
            executions,
        });
        if stop.observe(epoch, cost, &w, cfg) {
            stopped_early = true;
            break;
        }
    }
    Ok(TrainOutcome {
        weights: stop.best_weights,
        initial_weights: init,
        history,
        best_epoch: stop.best_epoch,
        stopped_early,
    })
}

/// Stochastic loss of one point under the unambiguous loop: an accepted
/// label is scored as a near-certain prediction, a rejection as 1/2.
/// Returns (loss, executions).
fn m3_point_loss(
    s: &Sample,
    w: &AnsatzWeights,
    spec: &CircuitSpec,
    policy: &ThresholdPolicy,
    rng: &mut DetRng,
) -> Result<(f64, u64)> {
    let state = run_vqc(&s.features, w, spec, None)?;
    let mut sampler = ShotSampler::from_state(&state)?;
    let outcome = classify_m3(&mut sampler, policy, rng)?;
    let p = match outcome.verdict {
        Verdict::Class1 => 1.0 - BCE_CLIP,
        Verdict::Class0 => BCE_CLIP,
        Verdict::Reject => 0.5,
    };
    Ok((bce_cost(p, s.label), sampler.draws()))
}

fn m3_batch_loss(
    batch: &[&Sample],
    w: &AnsatzWeights,
    spec: &CircuitSpec,
    policy: &ThresholdPolicy,
    rng: &DetRng,
) -> Result<(f64, u64)> {
    let parts = batch
        .par_iter()
        .enumerate()
        .map(|(i, s)| m3_point_loss(s, w, spec, policy, &mut rng.fork(i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let loss = parts.iter().map(|(l, _)| l).sum::<f64>() / batch.len() as f64;
    Ok((loss, parts.iter().map(|(_, e)| e).sum()))
}

/// SPSA training against the sampled unambiguous-loop loss. The epoch cost
/// is the mean of the two perturbed batch losses; epoch 0 is a sampled
/// evaluation of the initial weights over the whole set.
pub fn train_m3_constrained(
    data: &Dataset,
    spec: &CircuitSpec,
    cfg: &TrainConfig,
    policy: &ThresholdPolicy,
) -> Result<TrainOutcome> {
    check_inputs(data, spec, cfg)?;
    policy.validate(spec.n_qubits)?;
    let OptimizerConfig::Spsa(spsa_cfg) = cfg.optimizer else {
        return Err(Error::InvalidParameter(
            "sampled-loss training requires the SPSA optimizer".into(),
        ));
    };
    let init = initial_weights(spec, cfg);
    let mut params = init.to_flat();
    let dim = params.len();
    let master = DetRng::seed_from_u64(cfg.seed).fork_named("m3", 0);
    let mut spsa = Spsa::new(spsa_cfg);

    let rows: Vec<&Sample> = data.rows.iter().collect();
    let (cost0, exec0) = m3_batch_loss(&rows, &init, spec, policy, &master.fork_named("initial", 0))?;
    let mut history = vec![EpochRecord {
        epoch: 0,
        cost: cost0,
        executions: exec0,
    }];
    let mut stop = EarlyStop::new(cost0, &init);
    let mut stopped_early = false;

    for epoch in 1..=cfg.max_epochs {
        let erng = master.fork_named("epoch", epoch as u64);
        let mut rng = erng.fork_named("shuffle", 0);
        let batches = shuffled_batches(data, cfg.batch_size, &mut rng);
        let (mut executions, mut cost_sum) = (0u64, 0.0);
        for (b, batch) in batches.iter().enumerate() {
            let d = spsa.direction(dim, &mut rng);
            let ck = spsa.perturbation_size();
            let brng = erng.fork_named("batch", b as u64);
            let plus_w = init.from_flat(&perturbed(&params, &d, ck));
            let minus_w = init.from_flat(&perturbed(&params, &d, -ck));
            let (plus, e1) = m3_batch_loss(batch, &plus_w, spec, policy, &brng.fork_named("plus", 0))?;
            let (minus, e2) = m3_batch_loss(batch, &minus_w, spec, policy, &brng.fork_named("minus", 0))?;
            spsa.step(&mut params, &d, plus, minus);
            executions += e1 + e2;
            cost_sum += (plus + minus) / 2.0;
        }
        let cost = cost_sum / batches.len() as f64;
        if !cost.is_finite() || params.iter().any(|p| !p.is_finite()) {
            return Err(diverged(epoch, &stop));
        }
        history.push(EpochRecord {
            epoch,
            cost,
            executions,
        });
        let w = init.from_flat(&params);
        if stop.observe(epoch, cost, &w, cfg) {
            stopped_early = true;
            break;
        }
    }
    Ok(TrainOutcome {
        weights: stop.best_weights,
        initial_weights: init,
        history,
        best_epoch: stop.best_epoch,
        stopped_early,
    })
}
