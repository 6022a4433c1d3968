//! Data preparation, training and evaluation of the classifier models.

mod dataset;
mod evaluate;
mod metrics;
mod optim;
mod preprocess;
mod train;

pub use dataset::{load_csv, split, toy_separable, Dataset, LoadOptions, Sample};
pub use evaluate::{evaluate, DecisionRecord, EvalModel, Evaluation, MetricsReport, RunMetrics};
pub use metrics::{roc_auc, Confusion};
pub use optim::{Adam, AdamConfig, Spsa, SpsaConfig};
pub use preprocess::{fit_preprocess, PreprocessPlan};
pub use train::{
    bce_cost, bce_grad, dataset_cost, train, train_m3_constrained, EpochRecord, ModelVariant, OptimizerConfig,
    TrainConfig, TrainOutcome, BCE_CLIP,
};
