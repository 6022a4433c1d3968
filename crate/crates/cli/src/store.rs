//! Run directories with write-once files and checksummed model files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use uqc_core::circuits::{AnsatzWeights, CircuitSpec};

use crate::config::{ExperimentConfig, ModelName, OptimizerName};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Output directory for one config. Files are never silently replaced:
/// rewriting identical bytes is a no-op, different bytes are an error.
#[derive(Debug, Clone)]
pub struct RunDir {
    root: PathBuf,
    config_hash: String,
    written: BTreeMap<String, String>,
}

impl RunDir {
    pub fn open(base: &Path, cfg: &ExperimentConfig) -> anyhow::Result<Self> {
        let root = base.join(cfg.run_id());
        fs::create_dir_all(&root).with_context(|| format!("creating {}", root.display()))?;
        let mut dir = Self {
            root,
            config_hash: cfg.hash(),
            written: BTreeMap::new(),
        };
        dir.write_json("config.json", cfg)?;
        Ok(dir)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn exists(&self, name: &str) -> bool {
        self.path(name).exists()
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> anyhow::Result<()> {
        let path = self.path(name);
        if path.exists() {
            let existing = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
            if existing != bytes {
                bail!(
                    "refusing to overwrite {} with different content; use a fresh output directory",
                    path.display()
                );
            }
        } else {
            let tmp = self.path(&format!(".{name}.tmp"));
            fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
            fs::rename(&tmp, &path).with_context(|| format!("writing {}", path.display()))?;
        }
        self.written.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    pub fn write_csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> anyhow::Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv buffer: {e}"))?;
        self.write_bytes(name, &bytes)
    }

    /// Lists an existing file in the next manifest.
    pub fn record(&mut self, name: &str) -> anyhow::Result<()> {
        let path = self.path(name);
        let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
        self.written.insert(name.to_string(), sha256_hex(&bytes));
        Ok(())
    }

    /// Reads a JSON file and lists it in the next manifest.
    pub fn read_json<T: DeserializeOwned>(&mut self, name: &str) -> anyhow::Result<T> {
        let path = self.path(name);
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        self.written.insert(name.to_string(), sha256_hex(text.as_bytes()));
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Records the files this command read or produced, with their hashes.
    pub fn write_manifest(&mut self, command: &str, seed: u64) -> anyhow::Result<RunManifest> {
        let manifest = RunManifest {
            command: command.to_string(),
            config_hash: self.config_hash.clone(),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            files: std::mem::take(&mut self.written),
        };
        self.write_json(&format!("manifest_{command}.json"), &manifest)?;
        self.written.clear();
        Ok(manifest)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub tool_version: String,
    /// File name to SHA-256.
    pub files: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBody {
    pub model: ModelName,
    pub optimizer: OptimizerName,
    pub spec: CircuitSpec,
    pub seed: u64,
    pub config_hash: String,
    pub best_epoch: usize,
    pub initial_weights: AnsatzWeights,
    pub weights: AnsatzWeights,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    #[serde(flatten)]
    pub body: ModelBody,
    pub checksum: String,
}

impl ModelFile {
    pub fn new(body: ModelBody) -> Self {
        let checksum = Self::checksum_of(&body);
        Self { body, checksum }
    }

    fn checksum_of(body: &ModelBody) -> String {
        sha256_hex(&serde_json::to_vec(body).expect("model serializes"))
    }

    pub fn file_name(model: ModelName, optimizer: OptimizerName) -> String {
        format!("model_{}_{}.json", model.as_str(), optimizer.as_str())
    }

    /// Loads a model and checks its checksum and circuit shape.
    pub fn load(dir: &mut RunDir, name: &str, spec: &CircuitSpec) -> anyhow::Result<Self> {
        let file: ModelFile = dir.read_json(name)?;
        if Self::checksum_of(&file.body) != file.checksum {
            bail!("checksum mismatch in {}", dir.path(name).display());
        }
        if &file.body.spec != spec {
            bail!("{} was trained for a different circuit", dir.path(name).display());
        }
        file.body.weights.check_shape(spec)?;
        Ok(file)
    }
}
