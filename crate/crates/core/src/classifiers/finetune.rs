//! Fine-tuned attribute-weighted naive Bayes.
//!
//! Training runs in two phases. Phase 1 fits the discretizer, the smoothed
//! probability tables and the attribute weights. Phase 2 walks the training
//! set in order and, for each instance the current weighted model gets wrong,
//! moves probability mass in the touched bins: the true class's entry is
//! raised by
//!
//! ```text
//! ξ_T = β · (α · max_b P_t(b | l_T) − P_t(x_i | l_T)) · e
//! ```
//!
//! and the predicted class's entry is lowered by
//!
//! ```text
//! ξ_P = β · (α · P_t(x_i | l_P) − min_b P_t(b | l_P)) · e
//! ```
//!
//! with `e = |P(l_T) − P(l_P)|`. Steps are applied as written, including
//! negative ones; each touched vector is then floored and renormalized so the
//! tables stay on the probability simplex.

use serde::{Deserialize, Serialize};

use crate::classifiers::bayes::{weighted_unchecked, Prediction};
use crate::data::{ClassLabel, Dataset, FeatureVector};
use crate::discretize::{fit_bins, fit_cpt, CptModel, Discretizer};
use crate::error::{Error, Result};
use crate::features::{attribute_weights, AttributeWeights, DEFAULT_WEIGHT_FLOOR};
use crate::random::seeded_rng;

/// Entries below this are raised to it before renormalization.
pub const PROBABILITY_FLOOR: f64 = 1e-6;

/// `|P(l_T) − P(l_P)|`.
pub fn error_term(priors: &[f64; 2], truth: ClassLabel, predicted: ClassLabel) -> f64 {
    (priors[truth.index()] - priors[predicted.index()]).abs()
}

fn check_step_sizes(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) || !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Config(format!(
            "alpha ({alpha}) and beta ({beta}) must lie in (0, 1)"
        )));
    }
    Ok(())
}

/// What one fine-tuning step did to a single feature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureStep {
    pub bin: usize,
    pub xi_true: f64,
    pub xi_pred: f64,
    /// `P_t(x_i | l_T) + ξ_T`, before flooring and renormalization.
    pub raw_true: f64,
    /// `P_t(x_i | l_P) − ξ_P`, before flooring and renormalization.
    pub raw_pred: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepTrace {
    pub error: f64,
    pub features: Vec<FeatureStep>,
}

/// Applies one fine-tuning update in place for an instance whose true class
/// is `truth` and which the model predicted as `predicted`.
///
/// Callers normally only invoke this for misclassified instances. With
/// `truth == predicted` the error term is zero and the tables are unchanged.
pub fn apply_finetune_step(
    cpt: &mut CptModel,
    bins: &[usize],
    truth: ClassLabel,
    predicted: ClassLabel,
    alpha: f64,
    beta: f64,
) -> Result<StepTrace> {
    check_step_sizes(alpha, beta)?;
    cpt.check_bins(bins)?;
    let e = error_term(&cpt.priors, truth, predicted);
    let mut features = Vec::with_capacity(bins.len());
    for (f, &b) in bins.iter().enumerate() {
        let t_true = cpt.table(f, truth);
        let max_true = t_true.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let xi_true = beta * (alpha * max_true - t_true[b]) * e;
        let raw_true = t_true[b] + xi_true;

        let t_pred = cpt.table(f, predicted);
        let min_pred = t_pred.iter().copied().fold(f64::INFINITY, f64::min);
        let xi_pred = beta * (alpha * t_pred[b] - min_pred) * e;
        let raw_pred = t_pred[b] - xi_pred;

        features.push(FeatureStep {
            bin: b,
            xi_true,
            xi_pred,
            raw_true,
            raw_pred,
        });

        if e == 0.0 {
            continue;
        }
        cpt.table_mut(f, truth)[b] = raw_true;
        renormalize(cpt.table_mut(f, truth));
        cpt.table_mut(f, predicted)[b] = raw_pred;
        renormalize(cpt.table_mut(f, predicted));
    }
    Ok(StepTrace { error: e, features })
}

/// Non-mutating form of [`apply_finetune_step`].
pub fn finetune_step(
    cpt: &CptModel,
    bins: &[usize],
    truth: ClassLabel,
    predicted: ClassLabel,
    alpha: f64,
    beta: f64,
) -> Result<CptModel> {
    let mut out = cpt.clone();
    apply_finetune_step(&mut out, bins, truth, predicted, alpha, beta)?;
    Ok(out)
}

fn renormalize(v: &mut [f64]) {
    for p in v.iter_mut() {
        if p.is_nan() || *p < PROBABILITY_FLOOR {
            *p = PROBABILITY_FLOOR;
        }
    }
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|p| *p /= s);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    /// Class mutual information rescaled to mean 1.
    Mi,
    /// All weights 1 (plain naive Bayes decision rule).
    Unit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FtWnbConfig {
    pub n_bins: usize,
    pub laplace_alpha: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Total misclassified instances consumed by fine-tuning; 0 disables it.
    pub finetune_cap: usize,
    pub max_epochs: usize,
    pub weights: WeightMode,
    pub weight_floor: f64,
    /// When set, fine-tuning visits training instances in a seeded shuffled
    /// order instead of dataset order.
    pub shuffle_seed: Option<u64>,
}

impl Default for FtWnbConfig {
    fn default() -> Self {
        FtWnbConfig {
            n_bins: 10,
            laplace_alpha: 1.0,
            alpha: 0.5,
            beta: 0.1,
            finetune_cap: 40,
            max_epochs: 50,
            weights: WeightMode::Mi,
            weight_floor: DEFAULT_WEIGHT_FLOOR,
            shuffle_seed: None,
        }
    }
}

impl FtWnbConfig {
    /// Plain naive Bayes: unit weights, no fine-tuning.
    pub fn naive_bayes() -> Self {
        FtWnbConfig {
            weights: WeightMode::Unit,
            finetune_cap: 0,
            ..Self::default()
        }
    }

    /// Weighted naive Bayes without fine-tuning.
    pub fn weighted() -> Self {
        FtWnbConfig {
            finetune_cap: 0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_step_sizes(self.alpha, self.beta)?;
        if self.n_bins == 0 {
            return Err(Error::Config("n_bins must be >= 1".into()));
        }
        if !(self.laplace_alpha > 0.0 && self.laplace_alpha.is_finite()) {
            return Err(Error::Config("laplace_alpha must be positive".into()));
        }
        if !(self.weight_floor > 0.0 && self.weight_floor.is_finite()) {
            return Err(Error::Config("weight_floor must be positive".into()));
        }
        Ok(())
    }
}

/// Format version written into serialized models.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// A trained, frozen FT-WNB model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FtWnbModel {
    pub format_version: u32,
    pub schema: Vec<String>,
    pub discretizer: Discretizer,
    pub cpt: CptModel,
    pub weights: AttributeWeights,
    pub alpha: f64,
    pub beta: f64,
    pub finetune_cap: usize,
    pub epochs_run: usize,
    /// Number of fine-tuning updates actually applied.
    pub finetuned: usize,
    pub config: FtWnbConfig,
}

impl FtWnbModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: FtWnbModel = serde_json::from_str(text)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported model format version {}",
                model.format_version
            )));
        }
        if model.discretizer.bin_counts()
            != (0..model.cpt.feature_count()).map(|f| model.cpt.n_bins(f)).collect::<Vec<_>>()
            || model.schema.len() != model.cpt.feature_count()
            || model.weights.len() != model.cpt.feature_count()
        {
            return Err(Error::Config("model file is internally inconsistent".into()));
        }
        model.cpt.validate(1e-9)?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| e.context(format!("reading model {}", path.display())))
    }

    pub fn predict(&self, fv: &FeatureVector) -> Result<Prediction> {
        ftwnb_predict(self, fv)
    }

    pub fn predict_dataset(&self, d: &Dataset) -> Result<Vec<Prediction>> {
        if d.schema() != self.schema.as_slice() {
            return Err(Error::SchemaMismatch(format!(
                "model schema {:?} does not match data schema {:?}",
                self.schema,
                d.schema()
            )));
        }
        d.samples().iter().map(|s| self.predict(&s.features)).collect()
    }
}

/// Trains FT-WNB: phase 1 builds the weighted model, phase 2 fine-tunes it
/// on misclassified training instances.
pub fn ftwnb_train(train: &Dataset, cfg: &FtWnbConfig) -> Result<FtWnbModel> {
    cfg.validate()?;
    for label in ClassLabel::ALL {
        if train.counts().get(label) == 0 {
            return Err(Error::MissingClass(label.name()));
        }
    }

    let discretizer = fit_bins(train, cfg.n_bins)?;
    let binned = discretizer.transform(train)?;
    let mut cpt = fit_cpt(&binned, cfg.laplace_alpha)?;
    let weights = match cfg.weights {
        WeightMode::Mi => attribute_weights(&binned, cfg.weight_floor)?,
        WeightMode::Unit => AttributeWeights::unit(train.feature_count()),
    };

    let mut order: Vec<usize> = (0..binned.len()).collect();
    if let Some(seed) = cfg.shuffle_seed {
        use rand::seq::SliceRandom;
        order.shuffle(&mut seeded_rng(seed));
    }

    let mut finetuned = 0;
    let mut epochs_run = 0;
    'epochs: for _ in 0..cfg.max_epochs {
        if finetuned >= cfg.finetune_cap {
            break;
        }
        epochs_run += 1;
        let mut misclassified = 0;
        for &k in &order {
            let bins = &binned.rows[k];
            let truth = binned.labels[k];
            let predicted = weighted_unchecked(&cpt, Some(weights.as_slice()), bins).label;
            if predicted == truth {
                continue;
            }
            misclassified += 1;
            apply_finetune_step(&mut cpt, bins, truth, predicted, cfg.alpha, cfg.beta)?;
            finetuned += 1;
            if finetuned >= cfg.finetune_cap {
                break 'epochs;
            }
        }
        if misclassified == 0 {
            break;
        }
    }

    Ok(FtWnbModel {
        format_version: MODEL_FORMAT_VERSION,
        schema: train.schema().to_vec(),
        discretizer,
        cpt,
        weights,
        alpha: cfg.alpha,
        beta: cfg.beta,
        finetune_cap: cfg.finetune_cap,
        epochs_run,
        finetuned,
        config: cfg.clone(),
    })
}

/// Discretizes with the frozen bin edges and applies the weighted decision
/// rule to the tuned tables.
pub fn ftwnb_predict(model: &FtWnbModel, fv: &FeatureVector) -> Result<Prediction> {
    let bins = model.discretizer.discretize_checked(fv)?;
    Ok(weighted_unchecked(&model.cpt, Some(model.weights.as_slice()), &bins))
}
