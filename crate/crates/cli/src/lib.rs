//! Config-driven experiment runner: data preparation, training,
//! evaluation, theory sweeps and Monte Carlo cross-checks.

pub mod commands;
pub mod config;
pub mod store;

pub use commands::{eval, load_or_train, mc_check, prep, theory, train_model, EvalReport, McCheck, Prepared, TableRow};
pub use config::{ExperimentConfig, ModelName, OptimizerName};
pub use store::{ModelFile, RunDir, RunManifest};

/// Process exit code for an error: 3 for numeric failures, 2 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    let numeric = err
        .chain()
        .any(|e| e.downcast_ref::<uqc_core::Error>().is_some_and(uqc_core::Error::is_numeric));
    if numeric {
        3
    } else {
        2
    }
}
