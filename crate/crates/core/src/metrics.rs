//! Confusion matrices, rates, ROC/AUC and wall-clock timing.
//!
//! Precision and recall treat LoS as the positive class (TP counts LoS
//! samples classified LoS). The ROC curve treats NLoS as positive, since it
//! is built from NLoS posterior scores.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::ClassLabel;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub fp: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn new(tp: usize, fn_: usize, fp: usize, tn: usize) -> Self {
        ConfusionMatrix { tp, fn_, fp, tn }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fn_ + self.fp + self.tn
    }

    pub fn los_count(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn nlos_count(&self) -> usize {
        self.fp + self.tn
    }

    /// The same counts with NLoS as the positive class.
    pub fn flipped(&self) -> Self {
        ConfusionMatrix {
            tp: self.tn,
            fn_: self.fp,
            fp: self.fn_,
            tn: self.tp,
        }
    }
}

impl std::ops::Add for ConfusionMatrix {
    type Output = ConfusionMatrix;

    fn add(self, o: ConfusionMatrix) -> ConfusionMatrix {
        ConfusionMatrix {
            tp: self.tp + o.tp,
            fn_: self.fn_ + o.fn_,
            fp: self.fp + o.fp,
            tn: self.tn + o.tn,
        }
    }
}

pub fn confusion(truth: &[ClassLabel], pred: &[ClassLabel]) -> Result<ConfusionMatrix> {
    if truth.len() != pred.len() {
        return Err(Error::LengthMismatch {
            left: truth.len(),
            right: pred.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut cm = ConfusionMatrix::default();
    for (t, p) in truth.iter().zip(pred) {
        match (t, p) {
            (ClassLabel::Los, ClassLabel::Los) => cm.tp += 1,
            (ClassLabel::Los, ClassLabel::Nlos) => cm.fn_ += 1,
            (ClassLabel::Nlos, ClassLabel::Los) => cm.fp += 1,
            (ClassLabel::Nlos, ClassLabel::Nlos) => cm.tn += 1,
        }
    }
    Ok(cm)
}

/// Rates derived from a confusion matrix. A rate whose denominator is zero
/// is reported as 0 and named in `undefined`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub los_correct_rate: f64,
    pub nlos_correct_rate: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub undefined: Vec<String>,
}

pub fn summary_metrics(cm: &ConfusionMatrix) -> Result<Rates> {
    if cm.total() == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut undefined = Vec::new();
    let mut ratio = |num: usize, den: usize, name: &str| {
        if den == 0 {
            undefined.push(name.to_string());
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let accuracy = ratio(cm.tp + cm.tn, cm.total(), "accuracy");
    let recall = ratio(cm.tp, cm.tp + cm.fn_, "recall");
    let precision = ratio(cm.tp, cm.tp + cm.fp, "precision");
    let nlos_correct_rate = ratio(cm.tn, cm.fp + cm.tn, "nlos_correct_rate");
    Ok(Rates {
        precision,
        recall,
        accuracy,
        los_correct_rate: recall,
        nlos_correct_rate,
        undefined,
    })
}

/// Rates plus threshold-free and timing figures for one evaluated run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(flatten)]
    pub rates: Rates,
    pub auc: f64,
    pub runtime_seconds: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Samples with score >= threshold are called NLoS.
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

impl RocCurve {
    /// Two-column `FPR,TPR` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("FPR,TPR\n");
        for p in &self.points {
            out.push_str(&format!("{},{}\n", p.fpr, p.tpr));
        }
        out
    }
}

/// ROC over all distinct score thresholds (NLoS positive) and its
/// trapezoidal area.
pub fn roc_auc(scores: &[f64], truth: &[ClassLabel]) -> Result<RocCurve> {
    if scores.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: truth.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::Domain(format!("score {i} is NaN")));
    }
    let pos = truth.iter().filter(|&&t| t == ClassLabel::Nlos).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::MissingClass(if pos == 0 { "NLOS" } else { "LOS" }));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            match truth[order[i]] {
                ClassLabel::Nlos => tp += 1,
                ClassLabel::Los => fp += 1,
            }
            i += 1;
        }
        let prev = *points.last().expect("curve starts at the origin");
        let p = RocPoint {
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
            threshold,
        };
        auc += (p.fpr - prev.fpr) * (p.tpr + prev.tpr) / 2.0;
        points.push(p);
    }
    Ok(RocCurve { points, auc })
}

/// Runs `f` and returns its output with the elapsed wall-clock seconds.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}
