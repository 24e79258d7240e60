//! Naive Bayes, weighted naive Bayes, FT-WNB and the KNN / decision-tree
//! baselines.

pub mod bayes;
pub mod finetune;
pub mod knn;
pub mod tree;

use serde::{Deserialize, Serialize};

pub use bayes::{nb_predict, wnb_predict, Prediction};
pub use finetune::{
    apply_finetune_step, error_term, finetune_step, ftwnb_predict, ftwnb_train, FeatureStep,
    FtWnbConfig, FtWnbModel, StepTrace, WeightMode, PROBABILITY_FLOOR,
};
pub use knn::knn_predict;
pub use tree::{tree_predict, DecisionTree};

use crate::data::Dataset;
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Baseline {
    Knn { k: usize },
    DecisionTree { max_depth: usize },
}

/// Trains the baseline on `train` and predicts every sample of `test`.
pub fn baseline_predict(kind: Baseline, train: &Dataset, test: &Dataset) -> Result<Vec<Prediction>> {
    match kind {
        Baseline::Knn { k } => knn_predict(train, test, k),
        Baseline::DecisionTree { max_depth } => tree_predict(train, test, max_depth),
    }
}
