//! LoS/NLoS classification of UWB ranging measurements with a fine-tuned
//! weighted naive Bayes classifier, baselines, a synthetic data generator and
//! experiment runners.

pub mod classifiers;
pub mod data;
pub mod discretize;
pub mod error;
pub mod experiment;
pub mod features;
pub mod metrics;
pub mod random;
pub mod synth;

pub use classifiers::{
    baseline_predict, ftwnb_predict, ftwnb_train, nb_predict, wnb_predict, Baseline, FtWnbConfig,
    FtWnbModel, Prediction, WeightMode,
};
pub use data::{load_dataset, ClassLabel, Dataset, FeatureVector, LabeledSample};
pub use discretize::{fit_bins, fit_cpt, BinnedDataset, CptModel, Discretizer};
pub use error::{Error, Result};
pub use metrics::{confusion, roc_auc, summary_metrics, ConfusionMatrix, MetricsReport, Rates};
pub use synth::{generate_samples, Scenario, ScenarioConfig};
