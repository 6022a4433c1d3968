//! Repeated sampled classification of a test set.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::metrics::{roc_auc, Confusion};
use crate::circuits::{run_vqc, AnsatzWeights, CircuitSpec};
use crate::decision::{classify_m1, classify_m2, classify_m3, resolve, RejectFallback, ThresholdPolicy, Verdict};
use crate::error::{Error, Result};
use crate::noise::NoiseSpec;
use crate::qsim::ShotSampler;
use crate::rng::DetRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum EvalModel {
    M1 { shots: u64 },
    M2 { shots: u64 },
    M3 { policy: ThresholdPolicy, fallback: RejectFallback },
}

impl EvalModel {
    pub fn name(&self) -> &'static str {
        match self {
            EvalModel::M1 { .. } => "M1",
            EvalModel::M2 { .. } => "M2",
            EvalModel::M3 { .. } => "M3",
        }
    }
}

/// One classification of one test point in one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub run: usize,
    pub point_id: usize,
    pub model: String,
    pub label: u8,
    pub predicted: u8,
    /// `p(class 1)` estimate for M1/M2; +1, -1 or 0 (reject) for M3.
    pub score: f64,
    pub shots_used: u64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub run: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub roc_auc: f64,
    pub executions: u64,
    pub rejections: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model: String,
    pub n_qubits: usize,
    pub noisy: bool,
    /// "statevector" or "density_matrix".
    pub backend: String,
    pub runs: usize,
    pub test_size: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub roc_auc: f64,
    pub avg_executions: f64,
    pub total_executions: u64,
    /// Fraction of M3 decisions that ended in rejection (0 for M1/M2).
    pub rejection_rate: f64,
    pub per_run: Vec<RunMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub report: MetricsReport,
    pub decisions: Vec<DecisionRecord>,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

fn classify_point(
    sampler: &ShotSampler,
    model: &EvalModel,
    n_qubits: usize,
    rng: &mut DetRng,
) -> Result<(u8, f64, u64, bool)> {
    let mut sampler = sampler.clone();
    let (predicted, score, accepted) = match model {
        EvalModel::M1 { shots } => {
            let p = classify_m1(&mut sampler, *shots, rng)?;
            (p.label.bit(), p.p_class1, true)
        }
        EvalModel::M2 { shots } => {
            let p = classify_m2(&mut sampler, *shots, rng)?;
            (p.label.bit(), p.p_class1, true)
        }
        EvalModel::M3 { policy, fallback } => {
            let out = classify_m3(&mut sampler, policy, rng)?;
            let score = match out.verdict {
                Verdict::Class1 => 1.0,
                Verdict::Class0 => -1.0,
                Verdict::Reject => 0.0,
            };
            (resolve(&out, *fallback, n_qubits)?.bit(), score, out.accepted)
        }
    };
    Ok((predicted, score, sampler.draws(), accepted))
}

/// Classifies every test point `runs` times with independent measurement
/// randomness. Run `r`, point `i` draws from `rng.fork_named("run", r).fork(i)`.
pub fn evaluate(
    weights: &AnsatzWeights,
    spec: &CircuitSpec,
    test: &Dataset,
    model: &EvalModel,
    noise: Option<&NoiseSpec>,
    runs: usize,
    rng: &DetRng,
) -> Result<Evaluation> {
    spec.validate()?;
    weights.check_shape(spec)?;
    if runs == 0 {
        return Err(Error::InvalidParameter("runs must be at least 1".into()));
    }
    if test.is_empty() {
        return Err(Error::Dataset("test set is empty".into()));
    }
    if test.n_features() != spec.n_qubits {
        return Err(Error::QubitCountMismatch {
            expected: spec.n_qubits,
            found: test.n_features(),
        });
    }
    if let EvalModel::M3 { policy, .. } = model {
        policy.validate(spec.n_qubits)?;
    }
    let n = spec.n_qubits;
    let mut backend = "statevector";
    let samplers = test
        .rows
        .par_iter()
        .map(|s| {
            let state = run_vqc(&s.features, weights, spec, noise)?;
            Ok((state.backend(), ShotSampler::from_state(&state)?))
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some((b, _)) = samplers.first() {
        backend = b;
    }

    let mut decisions = Vec::with_capacity(runs * test.len());
    let mut per_run = Vec::with_capacity(runs);
    for run in 0..runs {
        let run_rng = rng.fork_named("run", run as u64);
        let outcomes = samplers
            .par_iter()
            .enumerate()
            .map(|(i, (_, sampler))| classify_point(sampler, model, n, &mut run_rng.fork(i as u64)))
            .collect::<Result<Vec<_>>>()?;
        let conf = Confusion::from_pairs(test.rows.iter().zip(&outcomes).map(|(s, o)| (s.label, o.0)));
        let scores: Vec<f64> = outcomes.iter().map(|o| o.1).collect();
        let labels: Vec<u8> = test.rows.iter().map(|s| s.label).collect();
        per_run.push(RunMetrics {
            run,
            accuracy: conf.accuracy(),
            precision: conf.precision(),
            recall: conf.recall(),
            f1: conf.f1(),
            roc_auc: roc_auc(&scores, &labels),
            executions: outcomes.iter().map(|o| o.2).sum(),
            rejections: outcomes.iter().filter(|o| !o.3).count() as u64,
        });
        for (i, (s, (predicted, score, shots, accepted))) in test.rows.iter().zip(outcomes).enumerate() {
            decisions.push(DecisionRecord {
                run,
                point_id: i,
                model: model.name().to_string(),
                label: s.label,
                predicted,
                score,
                shots_used: shots,
                accepted,
            });
        }
    }

    let total_executions: u64 = per_run.iter().map(|r| r.executions).sum();
    let classifications = (runs * test.len()) as f64;
    let roc = match model {
        EvalModel::M3 { .. } => {
            // signed acceptance frequency per point, aggregated over runs
            let mut score = vec![0.0; test.len()];
            for d in &decisions {
                score[d.point_id] += d.score / runs as f64;
            }
            let labels: Vec<u8> = test.rows.iter().map(|s| s.label).collect();
            roc_auc(&score, &labels)
        }
        _ => mean(per_run.iter().map(|r| r.roc_auc)),
    };
    let report = MetricsReport {
        model: model.name().to_string(),
        n_qubits: n,
        noisy: noise.is_some(),
        backend: backend.to_string(),
        runs,
        test_size: test.len(),
        accuracy: mean(per_run.iter().map(|r| r.accuracy)),
        precision: mean(per_run.iter().map(|r| r.precision)),
        recall: mean(per_run.iter().map(|r| r.recall)),
        f1: mean(per_run.iter().map(|r| r.f1)),
        roc_auc: roc,
        avg_executions: total_executions as f64 / classifications,
        total_executions,
        rejection_rate: per_run.iter().map(|r| r.rejections).sum::<u64>() as f64 / classifications,
        per_run,
    };
    Ok(Evaluation { report, decisions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::toy_separable;

    fn setup() -> (AnsatzWeights, CircuitSpec, Dataset) {
        let spec = CircuitSpec::new(2, 1, 1).unwrap();
        let w = AnsatzWeights::random(&spec, &mut DetRng::seed_from_u64(3));
        (w, spec, toy_separable(12, 0.1, 2))
    }

    #[test]
    fn many_shot_execution_count_is_exact() {
        let (w, spec, data) = setup();
        let ev = evaluate(&w, &spec, &data, &EvalModel::M2 { shots: 1024 }, None, 3, &DetRng::seed_from_u64(1)).unwrap();
        assert_eq!(ev.report.avg_executions, 1024.0);
        assert_eq!(ev.decisions.len(), 36);
        assert_eq!(ev.report.backend, "statevector");
    }

    #[test]
    fn m3_accounting_matches_decisions() {
        let (w, spec, data) = setup();
        let model = EvalModel::M3 {
            policy: ThresholdPolicy::unanimous(2, 50),
            fallback: RejectFallback::MajorityOfAttempts,
        };
        let ev = evaluate(&w, &spec, &data, &model, Some(&NoiseSpec::default()), 4, &DetRng::seed_from_u64(1)).unwrap();
        let drawn: u64 = ev.decisions.iter().map(|d| d.shots_used).sum();
        assert_eq!(drawn, ev.report.total_executions);
        assert_eq!(ev.report.avg_executions, drawn as f64 / 48.0);
        assert!(ev.decisions.iter().all(|d| (1..=50).contains(&d.shots_used)));
        assert_eq!(ev.report.backend, "density_matrix");
        for m in [ev.report.accuracy, ev.report.precision, ev.report.recall, ev.report.f1, ev.report.roc_auc] {
            assert!((0.0..=1.0).contains(&m));
        }
    }

    #[test]
    fn evaluation_is_reproducible() {
        let (w, spec, data) = setup();
        let model = EvalModel::M1 { shots: 64 };
        let a = evaluate(&w, &spec, &data, &model, None, 2, &DetRng::seed_from_u64(9)).unwrap();
        let b = evaluate(&w, &spec, &data, &model, None, 2, &DetRng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (w, spec, data) = setup();
        let model = EvalModel::M1 { shots: 0 };
        assert!(evaluate(&w, &spec, &data, &model, None, 1, &DetRng::seed_from_u64(9)).is_err());
        let model = EvalModel::M1 { shots: 8 };
        assert!(evaluate(&w, &spec, &data, &model, None, 0, &DetRng::seed_from_u64(9)).is_err());
    }
}
