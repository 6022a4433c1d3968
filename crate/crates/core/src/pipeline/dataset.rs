use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::DetRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: u8,
}

/// Labelled rows with a uniform feature arity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub rows: Vec<Sample>,
    pub provenance: String,
}

impl Dataset {
    pub fn new(feature_names: Vec<String>, rows: Vec<Sample>, provenance: impl Into<String>) -> Result<Self> {
        let arity = feature_names.len();
        for (i, r) in rows.iter().enumerate() {
            if r.features.len() != arity {
                return Err(Error::Row {
                    row: i,
                    message: format!("expected {arity} features, found {}", r.features.len()),
                });
            }
            if r.label > 1 {
                return Err(Error::Row {
                    row: i,
                    message: format!("label {} is not binary", r.label),
                });
            }
        }
        Ok(Self {
            feature_names,
            rows,
            provenance: provenance.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn positives(&self) -> usize {
        self.rows.iter().filter(|r| r.label == 1).count()
    }
}

/// How to read a labelled CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadOptions {
    pub label_column: String,
    /// Label value mapped to class 1. When unset, labels must read `0` or `1`.
    #[serde(default)]
    pub positive_label: Option<String>,
    /// Columns ignored entirely (identifiers and the like).
    #[serde(default)]
    pub drop_columns: Vec<String>,
}

impl LoadOptions {
    pub fn new(label_column: impl Into<String>) -> Self {
        Self {
            label_column: label_column.into(),
            positive_label: None,
            drop_columns: Vec::new(),
        }
    }
}

fn parse_label(raw: &str, opts: &LoadOptions, row: usize, seen: &mut BTreeSet<String>) -> Result<u8> {
    let raw = raw.trim();
    match &opts.positive_label {
        None => match raw.parse::<f64>() {
            Ok(0.0) => Ok(0),
            Ok(1.0) => Ok(1),
            _ => Err(Error::Row {
                row,
                message: format!("label {raw:?} is not binary (expected 0 or 1)"),
            }),
        },
        Some(pos) => {
            seen.insert(raw.to_string());
            if seen.len() > 2 {
                return Err(Error::Row {
                    row,
                    message: format!("label column has more than two values: {seen:?}"),
                });
            }
            Ok(u8::from(raw == pos))
        }
    }
}

/// Reads a headered CSV; every non-label, non-dropped column must be numeric.
pub fn load_csv(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.is_empty() {
        return Err(Error::Dataset(format!("{} has no header", path.display())));
    }
    let label_idx = headers
        .iter()
        .position(|h| h.trim() == opts.label_column)
        .ok_or_else(|| Error::Dataset(format!("label column {:?} not found", opts.label_column)))?;
    let feature_idx: Vec<usize> = (0..headers.len())
        .filter(|&i| i != label_idx && !opts.drop_columns.iter().any(|d| d == headers[i].trim()))
        .collect();
    if feature_idx.is_empty() {
        return Err(Error::Dataset("no feature columns".into()));
    }
    let feature_names = feature_idx.iter().map(|&i| headers[i].trim().to_string()).collect();
    let mut seen = BTreeSet::new();
    let mut rows = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Row {
            row,
            message: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(Error::Row {
                row,
                message: format!("expected {} cells, found {}", headers.len(), record.len()),
            });
        }
        let label = parse_label(&record[label_idx], opts, row, &mut seen)?;
        let features = feature_idx
            .iter()
            .map(|&i| {
                let cell = record[i].trim();
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Row {
                        row,
                        message: format!("column {:?}: {cell:?} is not a finite number", &headers[i]),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(Sample { features, label });
    }
    if rows.is_empty() {
        return Err(Error::Dataset(format!("{} contains no rows", path.display())));
    }
    Dataset::new(feature_names, rows, path.display().to_string())
}

/// Seeded shuffle, then `ceil((1 - train_ratio) n)` rows for test and the
/// rest for train. Both parts must be non-empty.
pub fn split(dataset: &Dataset, train_ratio: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_ratio > 0.0 && train_ratio < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train ratio {train_ratio} must lie strictly between 0 and 1"
        )));
    }
    let n = dataset.len();
    let n_test = ((1.0 - train_ratio) * n as f64 - 1e-9).ceil() as usize;
    if n_test == 0 || n_test >= n {
        return Err(Error::InvalidParameter(format!(
            "split of {n} rows at ratio {train_ratio} leaves an empty part"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut DetRng::seed_from_u64(seed).fork_named("split", 0));
    let pick = |idx: &[usize], tag: &str| {
        Dataset::new(
            dataset.feature_names.clone(),
            idx.iter().map(|&i| dataset.rows[i].clone()).collect(),
            format!("{} [{tag}, seed {seed}]", dataset.provenance),
        )
    };
    let (train_idx, test_idx) = order.split_at(n - n_test);
    Ok((pick(train_idx, "train")?, pick(test_idx, "test")?))
}

/// Two well-separated clusters in `[0, 1]^2` split by the anti-diagonal:
/// class 0 below `x0 + x1 = 1 - margin`, class 1 above `x0 + x1 = 1 + margin`.
pub fn toy_separable(n: usize, margin: f64, seed: u64) -> Dataset {
    let mut rng = DetRng::seed_from_u64(seed).fork_named("toy", 0);
    let mut rows = Vec::with_capacity(n);
    while rows.len() < n {
        let x: [f64; 2] = [rng.random(), rng.random()];
        let s = x[0] + x[1];
        let label = if s < 1.0 - margin {
            0
        } else if s > 1.0 + margin {
            1
        } else {
            continue;
        };
        // balance the classes
        let want = (rows.len() % 2) as u8;
        if label == want {
            rows.push(Sample {
                features: x.to_vec(),
                label,
            });
        }
    }
    Dataset::new(vec!["x0".into(), "x1".into()], rows, format!("toy separable (seed {seed})"))
        .expect("well-formed toy data")
}
