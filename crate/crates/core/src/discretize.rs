//! Equal-frequency binning and the per-class conditional probability tables
//! that the Bayes classifiers read and the fine-tuning step edits.

use serde::{Deserialize, Serialize};

use crate::data::{ClassLabel, Dataset, FeatureVector};
use crate::error::{Error, Result};

/// Per-feature cut points. A feature with edges `e_0 < … < e_{m-1}` has
/// `m + 1` bins; bin `j` is `[e_{j-1}, e_j)`, with the outer bins open-ended.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discretizer {
    edges: Vec<Vec<f64>>,
}

impl Discretizer {
    pub fn from_edges(edges: Vec<Vec<f64>>) -> Result<Self> {
        for (i, e) in edges.iter().enumerate() {
            if e.iter().any(|v| !v.is_finite()) || e.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config(format!(
                    "edges for feature {i} must be finite and strictly increasing"
                )));
            }
        }
        Ok(Discretizer { edges })
    }

    pub fn edges(&self) -> &[Vec<f64>] {
        &self.edges
    }

    pub fn feature_count(&self) -> usize {
        self.edges.len()
    }

    pub fn n_bins(&self, feature: usize) -> usize {
        self.edges[feature].len() + 1
    }

    pub fn bin_counts(&self) -> Vec<usize> {
        (0..self.edges.len()).map(|i| self.n_bins(i)).collect()
    }

    /// Bin of a single value: the number of edges `<= value`. A value equal to
    /// an edge lands in the higher bin; out-of-range values clamp to the ends.
    pub fn bin_of(&self, feature: usize, value: f64) -> usize {
        self.edges[feature].partition_point(|&e| e <= value)
    }

    /// Maps a feature vector to bin indices.
    ///
    /// Panics if the vector length differs from the fitted feature count.
    pub fn discretize(&self, values: &[f64]) -> Vec<usize> {
        assert_eq!(
            values.len(),
            self.edges.len(),
            "feature vector length does not match the discretizer"
        );
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| self.bin_of(i, v))
            .collect()
    }

    pub fn discretize_checked(&self, fv: &FeatureVector) -> Result<Vec<usize>> {
        if fv.len() != self.edges.len() {
            return Err(Error::SchemaMismatch(format!(
                "expected {} features, got {}",
                self.edges.len(),
                fv.len()
            )));
        }
        Ok(self.discretize(fv.as_slice()))
    }

    pub fn transform(&self, d: &Dataset) -> Result<BinnedDataset> {
        if d.feature_count() != self.edges.len() {
            return Err(Error::SchemaMismatch(format!(
                "expected {} features, dataset has {}",
                self.edges.len(),
                d.feature_count()
            )));
        }
        let rows = d
            .samples()
            .iter()
            .map(|s| self.discretize(s.features.as_slice()))
            .collect();
        Ok(BinnedDataset {
            n_bins: self.bin_counts(),
            rows,
            labels: d.labels(),
        })
    }
}

/// Fits equal-frequency edges per feature on training data.
///
/// Candidate cut `q` is the order statistic at rank `⌊q·n / n_bins⌋`. Cuts
/// that repeat, or that equal the column minimum (and would leave bin 0
/// empty), are dropped, so low-cardinality features get fewer bins.
pub fn fit_bins(train: &Dataset, n_bins: usize) -> Result<Discretizer> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if n_bins == 0 {
        return Err(Error::Config("n_bins must be >= 1".into()));
    }
    let n = train.len();
    let edges = (0..train.feature_count())
        .map(|f| {
            let mut col = train.column(f);
            col.sort_by(f64::total_cmp);
            let mut edges: Vec<f64> = Vec::with_capacity(n_bins - 1);
            for q in 1..n_bins {
                let cut = col[q * n / n_bins];
                if cut > col[0] && edges.last().is_none_or(|&last| cut > last) {
                    edges.push(cut);
                }
            }
            edges
        })
        .collect();
    Ok(Discretizer { edges })
}

/// A dataset after discretization: one bin-index row per sample.
#[derive(Clone, Debug, PartialEq)]
pub struct BinnedDataset {
    pub n_bins: Vec<usize>,
    pub rows: Vec<Vec<usize>>,
    pub labels: Vec<ClassLabel>,
}

impl BinnedDataset {
    pub fn new(n_bins: Vec<usize>, rows: Vec<Vec<usize>>, labels: Vec<ClassLabel>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: labels.len(),
            });
        }
        for row in &rows {
            if row.len() != n_bins.len() {
                return Err(Error::LengthMismatch {
                    left: row.len(),
                    right: n_bins.len(),
                });
            }
            for (f, (&b, &nb)) in row.iter().zip(&n_bins).enumerate() {
                if b >= nb {
                    return Err(Error::BinOutOfRange {
                        feature: f,
                        bin: b,
                        n_bins: nb,
                    });
                }
            }
        }
        Ok(BinnedDataset {
            n_bins,
            rows,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn feature_count(&self) -> usize {
        self.n_bins.len()
    }

    pub fn column(&self, feature: usize) -> Vec<usize> {
        self.rows.iter().map(|r| r[feature]).collect()
    }

    pub fn class_count(&self, label: ClassLabel) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }
}

/// Class priors plus `P(bin | class)` for every feature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CptModel {
    /// Indexed by `ClassLabel::index()`.
    pub priors: [f64; 2],
    /// `tables[feature][class][bin]`.
    pub tables: Vec<[Vec<f64>; 2]>,
    pub laplace_alpha: f64,
}

impl CptModel {
    pub fn feature_count(&self) -> usize {
        self.tables.len()
    }

    pub fn n_bins(&self, feature: usize) -> usize {
        self.tables[feature][0].len()
    }

    pub fn prior(&self, label: ClassLabel) -> f64 {
        self.priors[label.index()]
    }

    pub fn table(&self, feature: usize, label: ClassLabel) -> &[f64] {
        &self.tables[feature][label.index()]
    }

    pub fn table_mut(&mut self, feature: usize, label: ClassLabel) -> &mut Vec<f64> {
        &mut self.tables[feature][label.index()]
    }

    /// Checks that priors and every conditional vector lie on the simplex
    /// with strictly positive entries.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let psum: f64 = self.priors.iter().sum();
        if (psum - 1.0).abs() > tol || self.priors.iter().any(|p| p.is_nan() || *p < 0.0) {
            return Err(Error::Domain(format!("priors sum to {psum}")));
        }
        for (f, per_class) in self.tables.iter().enumerate() {
            for (c, t) in per_class.iter().enumerate() {
                let s: f64 = t.iter().sum();
                if (s - 1.0).abs() > tol {
                    return Err(Error::Domain(format!(
                        "table for feature {f} class {c} sums to {s}"
                    )));
                }
                if t.iter().any(|p| !(*p > 0.0 && *p <= 1.0)) {
                    return Err(Error::Domain(format!(
                        "table for feature {f} class {c} has an entry outside (0, 1]"
                    )));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn check_bins(&self, bins: &[usize]) -> Result<()> {
        if bins.len() != self.tables.len() {
            return Err(Error::LengthMismatch {
                left: bins.len(),
                right: self.tables.len(),
            });
        }
        for (f, &b) in bins.iter().enumerate() {
            let nb = self.n_bins(f);
            if b >= nb {
                return Err(Error::BinOutOfRange {
                    feature: f,
                    bin: b,
                    n_bins: nb,
                });
            }
        }
        Ok(())
    }
}

/// Laplace-smoothed maximum-likelihood estimate:
/// `P(bin | c) = (count(bin, c) + α) / (count(c) + α·B)`.
pub fn fit_cpt(train: &BinnedDataset, laplace_alpha: f64) -> Result<CptModel> {
    if !(laplace_alpha > 0.0 && laplace_alpha.is_finite()) {
        return Err(Error::Config(format!(
            "laplace alpha {laplace_alpha} must be positive"
        )));
    }
    let class_counts = [
        train.class_count(ClassLabel::Los),
        train.class_count(ClassLabel::Nlos),
    ];
    for label in ClassLabel::ALL {
        if class_counts[label.index()] == 0 {
            return Err(Error::MissingClass(label.name()));
        }
    }
    let total = train.len() as f64;
    let priors = [class_counts[0] as f64 / total, class_counts[1] as f64 / total];

    let tables = train
        .n_bins
        .iter()
        .enumerate()
        .map(|(f, &nb)| {
            let mut counts = [vec![0usize; nb], vec![0usize; nb]];
            for (row, label) in train.rows.iter().zip(&train.labels) {
                counts[label.index()][row[f]] += 1;
            }
            let estimate = |c: usize| -> Vec<f64> {
                let denom = class_counts[c] as f64 + laplace_alpha * nb as f64;
                counts[c]
                    .iter()
                    .map(|&k| (k as f64 + laplace_alpha) / denom)
                    .collect()
            };
            [estimate(0), estimate(1)]
        })
        .collect();

    Ok(CptModel {
        priors,
        tables,
        laplace_alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::LabeledSample;
    use crate::random::seeded_rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn dataset(cols: &[Vec<f64>], labels: &[ClassLabel]) -> Dataset {
        let schema = (0..cols.len()).map(|i| format!("X{i}")).collect();
        let samples = labels
            .iter()
            .enumerate()
            .map(|(k, &label)| LabeledSample {
                features: FeatureVector::new(cols.iter().map(|c| c[k]).collect()).unwrap(),
                label,
            })
            .collect();
        Dataset::new(schema, samples).unwrap()
    }

    #[test]
    fn single_bin() {
        let d = dataset(&[vec![3.0, 1.0, 2.0]], &[ClassLabel::Los; 3]);
        let disc = fit_bins(&d, 1).unwrap();
        assert_eq!(disc.n_bins(0), 1);
        for v in [-100.0, 1.0, 2.5, 1e9] {
            assert_eq!(disc.bin_of(0, v), 0);
        }
    }

    #[test]
    fn uniform_deciles() {
        let mut rng = seeded_rng(42);
        let n = 10_000;
        let col: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let d = dataset(std::slice::from_ref(&col), &vec![ClassLabel::Los; n]);
        let disc = fit_bins(&d, 10).unwrap();
        let edges = &disc.edges()[0];
        assert_eq!(edges.len(), 9);
        for (q, e) in edges.iter().enumerate() {
            let target = (q + 1) as f64 / 10.0;
            assert!((e - target).abs() < 0.02, "edge {q}: {e}");
        }
        // Sample-quantile oracle: fraction of data below each edge.
        for (q, e) in edges.iter().enumerate() {
            let below = col.iter().filter(|&&v| v < *e).count() as f64 / n as f64;
            assert!((below - (q + 1) as f64 / 10.0).abs() < 0.001);
        }
    }

    #[test]
    fn constant_feature_collapses() {
        let d = dataset(&[vec![5.0; 20]], &[ClassLabel::Los; 20]);
        let disc = fit_bins(&d, 10).unwrap();
        assert_eq!(disc.n_bins(0), 1);
        assert_eq!(disc.bin_of(0, 5.0), 0);
    }

    #[test]
    fn empty_dataset_rejected() {
        let d = Dataset::new(vec!["X".into()], vec![]).unwrap();
        assert!(matches!(fit_bins(&d, 4), Err(Error::EmptyDataset)));
    }

    #[test]
    fn interval_lookup() {
        let disc = Discretizer::from_edges(vec![vec![1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(disc.bin_of(0, 2.5), 2);
        assert_eq!(disc.bin_of(0, 2.0), 2);
        assert_eq!(disc.bin_of(0, 1.0), 1);
        assert_eq!(disc.bin_of(0, -7.0), 0);
        assert_eq!(disc.bin_of(0, 3.0), 3);
        assert_eq!(disc.bin_of(0, 99.0), 3);
        assert!(Discretizer::from_edges(vec![vec![1.0, 1.0]]).is_err());
    }

    #[test]
    fn priors_from_imbalanced_counts() {
        let labels: Vec<ClassLabel> = std::iter::repeat_n(ClassLabel::Los, 1000)
            .chain(std::iter::repeat_n(ClassLabel::Nlos, 100))
            .collect();
        let binned = BinnedDataset::new(vec![2], vec![vec![0]; 1100], labels).unwrap();
        let cpt = fit_cpt(&binned, 1.0).unwrap();
        assert!((cpt.priors[0] - 1000.0 / 1100.0).abs() < 1e-15);
        assert!((cpt.priors[1] - 100.0 / 1100.0).abs() < 1e-15);
        assert!((cpt.priors[0] - 0.9091).abs() < 5e-5);
        // Bin 1 never observed: 1 / (N + B).
        assert!((cpt.table(0, ClassLabel::Los)[1] - 1.0 / 1002.0).abs() < 1e-15);
        assert!((cpt.table(0, ClassLabel::Nlos)[1] - 1.0 / 102.0).abs() < 1e-15);
        cpt.validate(1e-9).unwrap();
    }

    #[test]
    fn missing_class_rejected() {
        let binned = BinnedDataset::new(vec![2], vec![vec![0], vec![1]], vec![ClassLabel::Los; 2]).unwrap();
        assert!(matches!(fit_cpt(&binned, 1.0), Err(Error::MissingClass("NLOS"))));
        let binned = BinnedDataset::new(vec![2], vec![vec![0]], vec![ClassLabel::Nlos]).unwrap();
        assert!(fit_cpt(&binned, 0.0).is_err());
    }

    #[test]
    fn small_alpha_recovers_frequencies() {
        let mut rng = seeded_rng(8);
        let n = 500;
        let rows: Vec<Vec<usize>> = (0..n).map(|_| vec![rng.random_range(0..4)]).collect();
        let labels: Vec<ClassLabel> = (0..n)
            .map(|i| if i % 3 == 0 { ClassLabel::Nlos } else { ClassLabel::Los })
            .collect();
        let binned = BinnedDataset::new(vec![4], rows.clone(), labels.clone()).unwrap();
        let cpt = fit_cpt(&binned, 1e-6).unwrap();
        for label in ClassLabel::ALL {
            let members: Vec<usize> = (0..n).filter(|&k| labels[k] == label).collect();
            for b in 0..4 {
                let freq = members.iter().filter(|&&k| rows[k][0] == b).count() as f64
                    / members.len() as f64;
                assert!((cpt.table(0, label)[b] - freq).abs() < 1e-4);
            }
        }
    }

    proptest! {
        #[test]
        fn fitted_cpt_is_valid(
            rows in proptest::collection::vec((0usize..5, 0usize..3, any::<bool>()), 2..200),
            alpha in 0.01f64..5.0,
        ) {
            let mut rows = rows;
            rows[0].2 = false;
            rows[1].2 = true;
            let binned = BinnedDataset::new(
                vec![5, 3],
                rows.iter().map(|r| vec![r.0, r.1]).collect(),
                rows.iter().map(|r| if r.2 { ClassLabel::Nlos } else { ClassLabel::Los }).collect(),
            ).unwrap();
            let cpt = fit_cpt(&binned, alpha).unwrap();
            prop_assert!(cpt.validate(1e-9).is_ok());
            prop_assert_eq!(&cpt, &fit_cpt(&binned, alpha).unwrap());
        }
    }
}
