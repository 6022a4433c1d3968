use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use uqc_core::circuits::AnsatzWeights;
use uqc_core::decision::ThresholdPolicy;
use uqc_core::noise::NoiseSpec;
use uqc_core::pipeline::{
    evaluate, fit_preprocess, load_csv, split, train, train_m3_constrained, Dataset, EvalModel, MetricsReport,
    ModelVariant, PreprocessPlan, TrainOutcome,
};
use uqc_core::rng::DetRng;
use uqc_core::theory::{expected_shots, mc_majority_vote, mc_unambiguous, p_multishot, TheoryPoint};
use uqc_core::Error;

use crate::config::{ExperimentConfig, ModelName, OptimizerName};
use crate::store::{ModelBody, ModelFile, RunDir};

#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: Dataset,
    pub test: Dataset,
    pub plan: PreprocessPlan,
}

/// Loads the CSV, splits it, fits the preprocessing on the training part and
/// writes `plan.json`, `train.json` and `test.json`.
pub fn prep(cfg: &ExperimentConfig, run: &mut RunDir) -> anyhow::Result<Prepared> {
    let raw = load_csv(&cfg.dataset.path, &cfg.load_options())
        .with_context(|| format!("loading {}", cfg.dataset.path))?;
    let (train_raw, test_raw) = split(&raw, cfg.dataset.train_ratio, cfg.seed)?;
    let plan = fit_preprocess(&train_raw, cfg.qubits)?;
    let prepared = Prepared {
        train: plan.transform_dataset(&train_raw)?,
        test: plan.transform_dataset(&test_raw)?,
        plan,
    };
    run.write_json("plan.json", &prepared.plan)?;
    run.write_json("train.json", &prepared.train)?;
    run.write_json("test.json", &prepared.test)?;
    Ok(prepared)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistoryRow {
    pub epoch: usize,
    pub cost: f64,
    pub executions: u64,
}

fn history_name(model: ModelName, optimizer: OptimizerName) -> String {
    format!("history_{}_{}.csv", model.as_str(), optimizer.as_str())
}

fn check_finite(what: &str, values: impl IntoIterator<Item = f64>) -> anyhow::Result<()> {
    if values.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        Err(Error::Numeric(format!("non-finite value in {what}")).into())
    }
}

/// Trains one model and writes its weights and history.
pub fn train_model(
    cfg: &ExperimentConfig,
    run: &mut RunDir,
    data: &Prepared,
    model: ModelName,
    optimizer: OptimizerName,
) -> anyhow::Result<(ModelFile, TrainOutcome)> {
    let spec = cfg.circuit_spec()?;
    let tcfg = cfg.train_config(optimizer);
    let result = match model {
        ModelName::M1 => train(&data.train, &spec, &tcfg, ModelVariant::M1),
        ModelName::M2 => train(&data.train, &spec, &tcfg, ModelVariant::M2),
        ModelName::M3 => {
            if optimizer != OptimizerName::Spsa {
                bail!("m3 shares the m2 weights; train m2, or train m3 with --optimizer spsa");
            }
            train_m3_constrained(&data.train, &spec, &tcfg, &cfg.policy()?)
        }
    };
    let outcome = match result {
        Ok(o) => o,
        Err(Error::Diverged { epoch, last_good }) => {
            let name = format!("model_{}_{}.last_good.json", model.as_str(), optimizer.as_str());
            run.write_json(&name, &*last_good)?;
            return Err(Error::Diverged { epoch, last_good }.into());
        }
        Err(e) => return Err(e.into()),
    };
    let history: Vec<HistoryRow> = outcome
        .history
        .iter()
        .map(|r| HistoryRow {
            epoch: r.epoch,
            cost: r.cost,
            executions: r.executions,
        })
        .collect();
    check_finite("training history", history.iter().map(|r| r.cost))?;
    let file = ModelFile::new(ModelBody {
        model,
        optimizer,
        spec,
        seed: cfg.seed,
        config_hash: run.config_hash().to_string(),
        best_epoch: outcome.best_epoch,
        initial_weights: outcome.initial_weights.clone(),
        weights: outcome.weights.clone(),
    });
    run.write_csv(&history_name(model, optimizer), &history)?;
    run.write_json(&ModelFile::file_name(model, optimizer), &file)?;
    Ok((file, outcome))
}

/// Existing weights for `model`, training them first if absent.
pub fn load_or_train(
    cfg: &ExperimentConfig,
    run: &mut RunDir,
    data: &Prepared,
    model: ModelName,
    optimizer: OptimizerName,
) -> anyhow::Result<AnsatzWeights> {
    let name = ModelFile::file_name(model, optimizer);
    if run.exists(&name) {
        let history = history_name(model, optimizer);
        if run.exists(&history) {
            run.record(&history)?;
        }
        return Ok(ModelFile::load(run, &name, &cfg.circuit_spec()?)?.body.weights);
    }
    Ok(train_model(cfg, run, data, model, optimizer)?.0.body.weights)
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    #[serde(rename = "Model")]
    pub model: String,
    #[serde(rename = "Qubits")]
    pub qubits: usize,
    #[serde(rename = "Noise")]
    pub noise: String,
    #[serde(rename = "Avg. executions")]
    pub avg_executions: f64,
    #[serde(rename = "ACC")]
    pub accuracy: f64,
    #[serde(rename = "PRE")]
    pub precision: f64,
    #[serde(rename = "REC")]
    pub recall: f64,
    #[serde(rename = "F1")]
    pub f1: f64,
}

#[derive(Debug, Clone, Serialize)]
struct DecisionRow<'a> {
    noise: &'a str,
    run: usize,
    point_id: usize,
    model: &'a str,
    label: u8,
    predicted: u8,
    score: f64,
    shots_used: u64,
    accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config_hash: String,
    pub seed: u64,
    pub shots: u64,
    pub policy: ThresholdPolicy,
    pub test_size: usize,
    pub cells: Vec<MetricsReport>,
}

fn noise_tag(noise: Option<&NoiseSpec>) -> &'static str {
    if noise.is_some() {
        "yes"
    } else {
        "no"
    }
}

/// Evaluates every configured model on the test split, noiselessly and,
/// when a noise spec is configured, with noise.
pub fn eval(cfg: &ExperimentConfig, run: &mut RunDir) -> anyhow::Result<EvalReport> {
    let data = prep(cfg, run)?;
    let spec = cfg.circuit_spec()?;
    let policy = cfg.policy()?;
    let optimizer = cfg.training.optimizer;
    let m1_weights = if cfg.models.contains(&ModelName::M1) {
        Some(load_or_train(cfg, run, &data, ModelName::M1, optimizer)?)
    } else {
        None
    };
    let m2_weights = if cfg.models.iter().any(|m| *m != ModelName::M1) {
        Some(load_or_train(cfg, run, &data, ModelName::M2, optimizer)?)
    } else {
        None
    };

    let rng = DetRng::seed_from_u64(cfg.seed).fork_named("eval", 0);
    let mut noise_settings = vec![None];
    if let Some(n) = &cfg.noise {
        noise_settings.push(Some(n));
    }
    let mut cells = Vec::new();
    let mut table = Vec::new();
    let mut decisions = Vec::new();
    for noise in noise_settings {
        for &model in &cfg.models {
            let (weights, eval_model) = match model {
                ModelName::M1 => (m1_weights.as_ref(), EvalModel::M1 { shots: cfg.shots }),
                ModelName::M2 => (m2_weights.as_ref(), EvalModel::M2 { shots: cfg.shots }),
                ModelName::M3 => (
                    m2_weights.as_ref(),
                    EvalModel::M3 {
                        policy,
                        fallback: cfg.policy.fallback,
                    },
                ),
            };
            let weights = weights.expect("weights loaded for every selected model");
            let ev = evaluate(weights, &spec, &data.test, &eval_model, noise, cfg.runs, &rng)?;
            let r = &ev.report;
            check_finite(
                "evaluation report",
                [r.accuracy, r.precision, r.recall, r.f1, r.roc_auc, r.avg_executions],
            )?;
            table.push(TableRow {
                model: r.model.clone(),
                qubits: r.n_qubits,
                noise: noise_tag(noise).to_string(),
                avg_executions: r.avg_executions,
                accuracy: r.accuracy,
                precision: r.precision,
                recall: r.recall,
                f1: r.f1,
            });
            decisions.extend(ev.decisions);
            cells.push((noise_tag(noise), ev.report));
        }
    }
    let n_test = data.test.len();
    let per_cell = cfg.runs * n_test;
    let rows: Vec<DecisionRow> = decisions
        .iter()
        .enumerate()
        .map(|(i, d)| DecisionRow {
            noise: cells[i / per_cell].0,
            run: d.run,
            point_id: d.point_id,
            model: &d.model,
            label: d.label,
            predicted: d.predicted,
            score: d.score,
            shots_used: d.shots_used,
            accepted: d.accepted,
        })
        .collect();
    run.write_csv("decisions.csv", &rows)?;
    run.write_csv("table1.csv", &table)?;
    let report = EvalReport {
        config_hash: run.config_hash().to_string(),
        seed: cfg.seed,
        shots: cfg.shots,
        policy,
        test_size: n_test,
        cells: cells.into_iter().map(|(_, r)| r).collect(),
    };
    run.write_json("report.json", &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryCsvRow {
    pub n_qubits: usize,
    pub k: usize,
    pub l: usize,
    pub delta: f64,
    pub eps: f64,
    pub shots: u64,
    pub p_succ: f64,
    pub p_succ_noisy_first_qubit: f64,
    pub p_avg_noisy: f64,
    pub p_multishot: f64,
    pub p_unambiguous: f64,
    pub expected_shots: f64,
    pub avg_coefficient: f64,
    pub stirling_coefficient: f64,
    pub stirling_relative_error: f64,
    pub mc_p_unambiguous: Option<f64>,
    pub mc_p_unambiguous_se: Option<f64>,
    pub mc_mean_shots: Option<f64>,
    pub mc_mean_shots_se: Option<f64>,
}

/// Closed-form sweep over qubit counts, thresholds, separations and noise
/// levels; with `mc`, adds Monte Carlo estimates of the unambiguous loop.
pub fn theory(cfg: &ExperimentConfig, run: &mut RunDir, mc: bool) -> anyhow::Result<Vec<TheoryCsvRow>> {
    let t = &cfg.theory;
    let rng = DetRng::seed_from_u64(cfg.seed).fork_named("theory", 0);
    let mut rows = Vec::new();
    for &n in &t.n_qubits {
        if n % 2 == 0 || n < 3 {
            bail!("theory sweep needs odd qubit counts of at least 3, got {n}");
        }
        let k = (n - 1) / 2;
        for l in k + 1..=n {
            for &delta in &t.deltas {
                for &eps in &t.eps {
                    let row = TheoryPoint {
                        n_qubits: n,
                        l,
                        delta,
                        eps,
                        shots: t.shots,
                    }
                    .evaluate()?;
                    let est = if mc {
                        Some(mc_unambiguous(n, delta, l, eps, t.mc_trials, &rng.fork(rows.len() as u64))?)
                    } else {
                        None
                    };
                    rows.push(TheoryCsvRow {
                        n_qubits: row.n_qubits,
                        k: row.k,
                        l: row.l,
                        delta: row.delta,
                        eps: row.eps,
                        shots: row.shots,
                        p_succ: row.p_succ,
                        p_succ_noisy_first_qubit: row.p_succ_noisy_first_qubit,
                        p_avg_noisy: row.p_avg_noisy,
                        p_multishot: row.p_multishot,
                        p_unambiguous: row.p_unambiguous,
                        expected_shots: row.expected_shots,
                        avg_coefficient: row.avg_coefficient,
                        stirling_coefficient: row.stirling_coefficient,
                        stirling_relative_error: row.stirling_relative_error,
                        mc_p_unambiguous: est.map(|e| e.p_unambiguous),
                        mc_p_unambiguous_se: est.map(|e| e.p_unambiguous_se),
                        mc_mean_shots: est.map(|e| e.mean_shots),
                        mc_mean_shots_se: est.map(|e| e.mean_shots_se),
                    });
                }
            }
        }
    }
    for r in &rows {
        check_finite(
            "theory sweep",
            [r.p_succ, r.p_avg_noisy, r.p_multishot, r.p_unambiguous, r.expected_shots, r.stirling_relative_error]
                .into_iter()
                .chain(r.mc_p_unambiguous)
                .chain(r.mc_mean_shots),
        )?;
    }
    run.write_csv(if mc { "theory_mc.csv" } else { "theory.csv" }, &rows)?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McComparison {
    pub name: String,
    pub theory: f64,
    pub estimate: f64,
    pub standard_error: f64,
    pub z_score: f64,
    pub within_3_sigma: bool,
}

impl McComparison {
    fn new(name: &str, theory: f64, estimate: f64, standard_error: f64) -> Self {
        let z_score = (estimate - theory) / standard_error;
        Self {
            name: name.to_string(),
            theory,
            estimate,
            standard_error,
            z_score,
            within_3_sigma: z_score.abs() <= 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McCheck {
    pub seed: u64,
    pub trials: u64,
    pub comparisons: Vec<McComparison>,
}

impl McCheck {
    pub fn passed(&self) -> bool {
        self.comparisons.iter().all(|c| c.within_3_sigma)
    }
}

/// Simulated unambiguous loop and majority vote against their closed forms.
pub fn mc_check(cfg: &ExperimentConfig, run: &mut RunDir) -> anyhow::Result<McCheck> {
    let trials = 100_000;
    let (n, delta, l) = (5, 0.5, 4);
    let rng = DetRng::seed_from_u64(cfg.seed).fork_named("mc-check", 0);
    let est = mc_unambiguous(n, delta, l, 0.0, trials, &rng.fork(0))?;
    let (vote, vote_se) = mc_majority_vote(0.6, 25, trials, &rng.fork(1))?;
    let check = McCheck {
        seed: cfg.seed,
        trials,
        comparisons: vec![
            McComparison::new(
                "p_unambiguous(N=5, delta=0.5, l=4)",
                (1.0 + delta) / 2.0,
                est.p_unambiguous,
                est.p_unambiguous_se,
            ),
            McComparison::new("expected_shots(N=5, l=4)", expected_shots(n, l)?, est.mean_shots, est.mean_shots_se),
            McComparison::new("p_multishot(p=0.6, T=25)", p_multishot(0.6, 25)?, vote, vote_se),
        ],
    };
    run.write_json("mc_check.json", &check)?;
    Ok(check)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(dir: &std::path::Path) -> ExperimentConfig {
        let toy = uqc_core::pipeline::toy_separable(40, 0.3, 1);
        let mut csv = String::from("x0,x1,label\n");
        for r in &toy.rows {
            csv += &format!("{},{},{}\n", r.features[0], r.features[1], r.label);
        }
        let path = dir.join("toy.csv");
        std::fs::write(&path, csv).unwrap();
        let mut cfg = ExperimentConfig::default();
        cfg.dataset.path = path.to_string_lossy().into_owned();
        cfg.dataset.label_column = "label".into();
        cfg.dataset.positive_label = None;
        cfg.qubits = 2;
        cfg.ansatz_layers = 1;
        cfg.runs = 2;
        cfg.shots = 64;
        cfg.training.max_epochs = 3;
        cfg
    }

    #[test]
    fn eval_trains_missing_models_and_is_rerunnable() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = small_config(tmp.path());
        let mut run = RunDir::open(tmp.path(), &cfg).unwrap();
        let report = eval(&cfg, &mut run).unwrap();
        assert_eq!(report.cells.len(), 6);
        assert!(run.exists("model_m1_adam.json") && run.exists("model_m2_adam.json"));
        assert!(run.exists("history_m2_adam.csv"));
        assert_eq!(report.cells[0].backend, "statevector");
        assert_eq!(report.cells[5].backend, "density_matrix");
        // second run reuses models and reproduces every file
        let mut again = RunDir::open(tmp.path(), &cfg).unwrap();
        assert_eq!(eval(&cfg, &mut again).unwrap(), report);
    }

    #[test]
    fn m3_training_needs_spsa() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = small_config(tmp.path());
        let mut run = RunDir::open(tmp.path(), &cfg).unwrap();
        let data = prep(&cfg, &mut run).unwrap();
        assert!(train_model(&cfg, &mut run, &data, ModelName::M3, OptimizerName::Adam).is_err());
        let (_, out) = train_model(&cfg, &mut run, &data, ModelName::M3, OptimizerName::Spsa).unwrap();
        assert!(out.history[1..].iter().all(|r| r.executions > 0));
    }

    #[test]
    fn theory_sweep_has_one_row_per_point() {
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = small_config(tmp.path());
        cfg.theory.n_qubits = vec![3, 5];
        cfg.theory.deltas = vec![0.5];
        cfg.theory.eps = vec![0.0, 0.1];
        let mut run = RunDir::open(tmp.path(), &cfg).unwrap();
        let rows = theory(&cfg, &mut run, false).unwrap();
        // l in {2, 3} and {3, 4, 5}
        assert_eq!(rows.len(), 5 * 2);
        assert!(rows.iter().all(|r| r.mc_mean_shots.is_none()));
        cfg.theory.n_qubits = vec![4];
        assert!(theory(&cfg, &mut run, false).is_err());
    }
}
