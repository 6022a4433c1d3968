//! Experiment configuration, read from JSON. Every field has a default, so
//! `{}` is a valid config.

use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use uqc_core::circuits::CircuitSpec;
use uqc_core::decision::{RejectFallback, ThresholdPolicy};
use uqc_core::noise::NoiseSpec;
use uqc_core::pipeline::{AdamConfig, LoadOptions, OptimizerConfig, SpsaConfig, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    M1,
    M2,
    M3,
}

impl ModelName {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelName::M1 => "m1",
            ModelName::M2 => "m2",
            ModelName::M3 => "m3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerName {
    Adam,
    Spsa,
}

impl OptimizerName {
    pub fn as_str(self) -> &'static str {
        match self {
            OptimizerName::Adam => "adam",
            OptimizerName::Spsa => "spsa",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: String,
    pub label_column: String,
    pub positive_label: Option<String>,
    pub drop_columns: Vec<String>,
    pub train_ratio: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            path: "data/wdbc.csv".into(),
            label_column: "diagnosis".into(),
            positive_label: Some("M".into()),
            drop_columns: Vec::new(),
            train_ratio: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub optimizer: OptimizerName,
    pub adam: AdamConfig,
    pub spsa: SpsaConfig,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub min_delta: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        let base = TrainConfig::default();
        Self {
            optimizer: OptimizerName::Adam,
            adam: AdamConfig::default(),
            spsa: SpsaConfig::default(),
            batch_size: base.batch_size,
            max_epochs: base.max_epochs,
            patience: base.patience,
            min_delta: base.min_delta,
        }
    }
}

/// Unambiguous-loop settings. `acceptance` defaults to the qubit count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    pub acceptance: Option<usize>,
    pub max_attempts: u32,
    pub fallback: RejectFallback,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            acceptance: None,
            max_attempts: 50,
            fallback: RejectFallback::MajorityOfAttempts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheoryConfig {
    pub n_qubits: Vec<usize>,
    pub deltas: Vec<f64>,
    pub eps: Vec<f64>,
    pub shots: u64,
    pub mc_trials: u64,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        Self {
            n_qubits: vec![3, 5, 7, 9],
            deltas: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            eps: vec![0.0, 0.01, 0.05],
            shots: 1024,
            mc_trials: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub qubits: usize,
    pub feature_layers: usize,
    pub ansatz_layers: usize,
    pub models: Vec<ModelName>,
    pub shots: u64,
    pub policy: PolicyConfig,
    /// Noise for the noisy evaluation cells; `null` evaluates noiselessly only.
    pub noise: Option<NoiseSpec>,
    pub training: TrainingConfig,
    pub runs: usize,
    pub seed: u64,
    pub theory: TheoryConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetConfig::default(),
            qubits: 3,
            feature_layers: 1,
            ansatz_layers: 2,
            models: vec![ModelName::M1, ModelName::M2, ModelName::M3],
            shots: 1024,
            policy: PolicyConfig::default(),
            noise: Some(NoiseSpec::default()),
            training: TrainingConfig::default(),
            runs: 25,
            seed: 42,
            theory: TheoryConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.circuit_spec()?;
        self.policy()?.validate(self.qubits)?;
        if let Some(noise) = &self.noise {
            noise.validate()?;
        }
        self.train_config(self.training.optimizer).validate()?;
        if self.shots == 0 {
            bail!("shots must be at least 1");
        }
        if self.runs == 0 {
            bail!("runs must be at least 1");
        }
        if self.models.is_empty() {
            bail!("no models selected");
        }
        Ok(())
    }

    pub fn circuit_spec(&self) -> anyhow::Result<CircuitSpec> {
        Ok(CircuitSpec::new(self.qubits, self.feature_layers, self.ansatz_layers)?)
    }

    pub fn policy(&self) -> anyhow::Result<ThresholdPolicy> {
        let policy = ThresholdPolicy {
            acceptance: self.policy.acceptance.unwrap_or(self.qubits),
            max_attempts: self.policy.max_attempts,
        };
        policy.validate(self.qubits)?;
        Ok(policy)
    }

    pub fn load_options(&self) -> LoadOptions {
        LoadOptions {
            label_column: self.dataset.label_column.clone(),
            positive_label: self.dataset.positive_label.clone(),
            drop_columns: self.dataset.drop_columns.clone(),
        }
    }

    pub fn train_config(&self, optimizer: OptimizerName) -> TrainConfig {
        TrainConfig {
            optimizer: match optimizer {
                OptimizerName::Adam => OptimizerConfig::Adam(self.training.adam),
                OptimizerName::Spsa => OptimizerConfig::Spsa(self.training.spsa),
            },
            batch_size: self.training.batch_size,
            max_epochs: self.training.max_epochs,
            patience: self.training.patience,
            min_delta: self.training.min_delta,
            seed: self.seed,
        }
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }

    /// Directory name for this config's outputs.
    pub fn run_id(&self) -> String {
        self.hash()[..16].to_string()
    }
}
