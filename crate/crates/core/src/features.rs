//! Mutual information, the feature correlation matrix, greedy mRMR selection
//! and the per-attribute weights used by weighted naive Bayes.

use serde::{Deserialize, Serialize};

use crate::data::{ClassLabel, Dataset};
use crate::discretize::BinnedDataset;
use crate::error::{Error, Result};

/// Default lower bound on a raw weight, in nats.
pub const DEFAULT_WEIGHT_FLOOR: f64 = 0.01;

/// Plug-in mutual information (nats) between two discrete columns.
pub fn mutual_information_discrete(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let na = a.iter().max().map_or(0, |m| m + 1);
    let nb = b.iter().max().map_or(0, |m| m + 1);
    let mut joint = vec![0usize; na * nb];
    let mut ma = vec![0usize; na];
    let mut mb = vec![0usize; nb];
    for (&x, &y) in a.iter().zip(b) {
        joint[x * nb + y] += 1;
        ma[x] += 1;
        mb[y] += 1;
    }
    let n = a.len() as f64;
    let mut mi = 0.0;
    for x in 0..na {
        for y in 0..nb {
            let k = joint[x * nb + y];
            if k == 0 {
                continue;
            }
            let pxy = k as f64 / n;
            mi += pxy * (k as f64 * n / (ma[x] as f64 * mb[y] as f64)).ln();
        }
    }
    Ok(mi.max(0.0))
}

/// Mutual information between a binned feature and the class label.
pub fn mutual_information(x_bins: &[usize], labels: &[ClassLabel]) -> Result<f64> {
    let y: Vec<usize> = labels.iter().map(|l| l.index()).collect();
    mutual_information_discrete(x_bins, &y)
}

/// Class relevance of every feature.
pub fn relevance(d: &BinnedDataset) -> Result<Vec<f64>> {
    (0..d.feature_count())
        .map(|f| mutual_information(&d.column(f), &d.labels))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl CorrelationMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Pairwise Pearson correlation. A constant feature correlates 0 with every
/// other feature and 1 with itself.
pub fn correlation_matrix(d: &Dataset) -> CorrelationMatrix {
    let p = d.feature_count();
    let n = d.len() as f64;
    let centered: Vec<Vec<f64>> = (0..p)
        .map(|f| {
            let col = d.column(f);
            let mean = col.iter().sum::<f64>() / n;
            col.into_iter().map(|v| v - mean).collect()
        })
        .collect();
    let norms: Vec<f64> = centered
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();

    let mut values = vec![vec![0.0; p]; p];
    for i in 0..p {
        values[i][i] = 1.0;
        for j in 0..i {
            let r = if norms[i] > 0.0 && norms[j] > 0.0 {
                let dot: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
                (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0)
            } else {
                0.0
            };
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    CorrelationMatrix {
        names: d.schema().to_vec(),
        values,
    }
}

/// Greedy mRMR with the difference criterion: the first pick maximizes class
/// relevance, each later pick maximizes
/// `MI(f; class) − mean_{s ∈ S} MI(f; s)`. Ties go to the lower index.
pub fn mrmr_select(d: &BinnedDataset, k: usize) -> Result<Vec<usize>> {
    let p = d.feature_count();
    if k == 0 || k > p {
        return Err(Error::Config(format!("mRMR k = {k} outside 1..={p}")));
    }
    let columns: Vec<Vec<usize>> = (0..p).map(|f| d.column(f)).collect();
    let rel = relevance(d)?;

    let mut selected: Vec<usize> = Vec::with_capacity(k);
    let mut redundancy = vec![0.0; p];
    while selected.len() < k {
        let mut best: Option<(usize, f64)> = None;
        for f in (0..p).filter(|f| !selected.contains(f)) {
            let score = if selected.is_empty() {
                rel[f]
            } else {
                rel[f] - redundancy[f] / selected.len() as f64
            };
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((f, score));
            }
        }
        let (pick, _) = best.expect("k <= p leaves a candidate");
        selected.push(pick);
        for f in (0..p).filter(|f| !selected.contains(f)) {
            redundancy[f] += mutual_information_discrete(&columns[f], &columns[pick])?;
        }
    }
    Ok(selected)
}

/// Positive per-attribute exponents with mean 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeWeights(Vec<f64>);

impl AttributeWeights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() || w.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Config("attribute weights must be positive".into()));
        }
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        if (mean - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "attribute weights must have mean 1 (got {mean})"
            )));
        }
        Ok(AttributeWeights(w))
    }

    pub fn unit(n: usize) -> Self {
        AttributeWeights(vec![1.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `raw(i) = max(MI(feature i; class), floor)`, rescaled to mean 1.
pub fn attribute_weights(d: &BinnedDataset, floor: f64) -> Result<AttributeWeights> {
    if !(floor > 0.0 && floor.is_finite()) {
        return Err(Error::Config(format!("weight floor {floor} must be positive")));
    }
    for label in ClassLabel::ALL {
        if d.class_count(label) == 0 {
            return Err(Error::MissingClass(label.name()));
        }
    }
    let raw: Vec<f64> = relevance(d)?.into_iter().map(|mi| mi.max(floor)).collect();
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    Ok(AttributeWeights(raw.into_iter().map(|r| r / mean).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{FeatureVector, LabeledSample};
    use crate::random::seeded_rng;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn labels_from(bits: &[usize]) -> Vec<ClassLabel> {
        bits.iter().map(|&b| ClassLabel::from_index(b).unwrap()).collect()
    }

    #[test]
    fn constant_column_has_no_information() {
        let y = labels_from(&[0, 1, 0, 1, 1]);
        assert_eq!(mutual_information(&[3; 5], &y).unwrap(), 0.0);
    }

    #[test]
    fn perfect_dependence_is_ln2() {
        let bits = [0, 1, 0, 1, 1, 0, 1, 0];
        let mi = mutual_information(&bits, &labels_from(&bits)).unwrap();
        assert!((mi - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn two_by_two_table_matches_double_sum() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (xv, yv, k) in [(0, 0, 40), (0, 1, 10), (1, 0, 10), (1, 1, 40)] {
            x.extend(std::iter::repeat_n(xv, k));
            y.extend(std::iter::repeat_n(yv, k));
        }
        // Direct double sum over the joint.
        let joint: [[f64; 2]; 2] = [[0.4, 0.1], [0.1, 0.4]];
        let mut expected = 0.0;
        for p in joint.iter().flatten() {
            expected += p * (p / (0.5 * 0.5)).ln();
        }
        let mi = mutual_information(&x, &labels_from(&y)).unwrap();
        assert!((mi - expected).abs() < 1e-12, "{mi} vs {expected}");
        assert!(mutual_information(&x[..3], &labels_from(&y)).is_err());
    }

    fn dataset(cols: &[Vec<f64>]) -> Dataset {
        let n = cols[0].len();
        let samples = (0..n)
            .map(|k| LabeledSample {
                features: FeatureVector::new(cols.iter().map(|c| c[k]).collect()).unwrap(),
                label: ClassLabel::Los,
            })
            .collect();
        Dataset::new((0..cols.len()).map(|i| format!("X{i}")).collect(), samples).unwrap()
    }

    #[test]
    fn correlation_basics() {
        let mut rng = seeded_rng(1);
        let a: Vec<f64> = (0..200).map(|_| rng.random()).collect();
        let b: Vec<f64> = (0..200).map(|_| rng.random()).collect();
        let m = correlation_matrix(&dataset(&[a.clone(), b, a.clone(), vec![2.0; 200]]));
        for i in 0..4 {
            assert_eq!(m.get(i, i), 1.0);
            for j in 0..4 {
                assert!((m.get(i, j) - m.get(j, i)).abs() < 1e-12);
            }
        }
        assert!((m.get(0, 2) - 1.0).abs() < 1e-12);
        assert_eq!(m.get(3, 0), 0.0);
        assert_eq!(m.get(3, 3), 1.0);
    }

    fn binned(cols: &[Vec<usize>], labels: &[usize]) -> BinnedDataset {
        let n_bins = cols.iter().map(|c| c.iter().max().unwrap() + 1).collect();
        let rows = (0..labels.len())
            .map(|k| cols.iter().map(|c| c[k]).collect())
            .collect();
        BinnedDataset::new(n_bins, rows, labels_from(labels)).unwrap()
    }

    fn random_binned(seed: u64, p: usize, n: usize) -> BinnedDataset {
        let mut rng = seeded_rng(seed);
        let labels: Vec<usize> = (0..n).map(|k| k % 2).collect();
        let cols: Vec<Vec<usize>> = (0..p)
            .map(|f| {
                labels
                    .iter()
                    .map(|&y| {
                        // Feature f copies the label with probability f/(2p).
                        if rng.random::<f64>() < f as f64 / (2.0 * p as f64) {
                            y * 3
                        } else {
                            rng.random_range(0..4)
                        }
                    })
                    .collect()
            })
            .collect();
        binned(&cols, &labels)
    }

    #[test]
    fn first_pick_is_most_relevant() {
        let d = random_binned(3, 6, 400);
        let rel = relevance(&d).unwrap();
        let argmax = (0..6).fold(0, |b, f| if rel[f] > rel[b] { f } else { b });
        assert_eq!(mrmr_select(&d, 1).unwrap(), vec![argmax]);
    }

    #[test]
    fn duplicate_is_not_picked_second() {
        let labels: Vec<usize> = (0..200).map(|k| k % 2).collect();
        let strong: Vec<usize> = labels.iter().enumerate().map(|(k, &y)| if k % 10 == 0 { 1 - y } else { y }).collect();
        let weak: Vec<usize> = labels.iter().enumerate().map(|(k, &y)| if k % 3 == 0 { 1 - y } else { y }).collect();
        let d = binned(&[strong.clone(), weak, strong], &labels);
        let pick = mrmr_select(&d, 2).unwrap();
        assert_eq!(pick[0], 0);
        // Greedy-objective oracle for the second step.
        let rel = relevance(&d).unwrap();
        let score = |f: usize| rel[f] - mutual_information_discrete(&d.column(f), &d.column(0)).unwrap();
        assert!(score(1) > score(2));
        assert_eq!(pick[1], 1);
    }

    #[test]
    fn full_selection_is_permutation() {
        let d = random_binned(4, 5, 300);
        let mut pick = mrmr_select(&d, 5).unwrap();
        pick.sort_unstable();
        assert_eq!(pick, vec![0, 1, 2, 3, 4]);
        assert!(mrmr_select(&d, 0).is_err());
        assert!(mrmr_select(&d, 6).is_err());
    }

    #[test]
    fn identical_features_get_unit_weights() {
        let labels: Vec<usize> = (0..100).map(|k| k % 2).collect();
        let x: Vec<usize> = labels.iter().enumerate().map(|(k, &y)| if k % 7 == 0 { 1 - y } else { y }).collect();
        let d = binned(&[x.clone(), x.clone(), x], &labels);
        let w = attribute_weights(&d, DEFAULT_WEIGHT_FLOOR).unwrap();
        for v in w.as_slice() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn uninformative_feature_gets_floor_weight() {
        let labels: Vec<usize> = (0..100).map(|k| k % 2).collect();
        let a: Vec<usize> = labels.clone();
        let b: Vec<usize> = labels.iter().enumerate().map(|(k, &y)| if k % 5 == 0 { 1 - y } else { y }).collect();
        // Balanced within each class: independent of the label.
        let c: Vec<usize> = (0..100).map(|k| (k / 2) % 2).collect();
        let d = binned(&[a, b, c], &labels);
        let floor = 0.01;
        let rel = relevance(&d).unwrap();
        assert_eq!(rel[2], 0.0);
        let raw = [rel[0], rel[1], floor];
        let mean_raw = raw.iter().sum::<f64>() / 3.0;
        let w = attribute_weights(&d, floor).unwrap();
        assert!((w.as_slice()[2] - floor / mean_raw).abs() < 1e-12);
        assert!(w.as_slice()[2] > 0.0);
    }

    #[test]
    fn shuffled_labels_carry_little_information() {
        let d = random_binned(5, 4, 1000);
        let mut rng = seeded_rng(6);
        let mut total = 0.0;
        let mut labels = d.labels.clone();
        for _ in 0..50 {
            labels.shuffle(&mut rng);
            for f in 0..4 {
                total += mutual_information(&d.column(f), &labels).unwrap();
            }
        }
        assert!(total / 200.0 < 0.05);
    }

    proptest! {
        #[test]
        fn mi_is_symmetric(pairs in proptest::collection::vec((0usize..4, 0usize..5), 1..100)) {
            let a: Vec<usize> = pairs.iter().map(|p| p.0).collect();
            let b: Vec<usize> = pairs.iter().map(|p| p.1).collect();
            let ab = mutual_information_discrete(&a, &b).unwrap();
            let ba = mutual_information_discrete(&b, &a).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!(ab >= 0.0);
        }

        #[test]
        fn weights_have_unit_mean(seed: u64, p in 1usize..8) {
            let d = random_binned(seed, p, 60);
            let w = attribute_weights(&d, DEFAULT_WEIGHT_FLOOR).unwrap();
            let mean = w.as_slice().iter().sum::<f64>() / p as f64;
            prop_assert!((mean - 1.0).abs() < 1e-9);
            prop_assert!(w.as_slice().iter().all(|&v| v > 0.0));
        }

        #[test]
        fn weights_follow_column_permutation(seed: u64) {
            let d = random_binned(seed, 5, 80);
            let perm = [3usize, 0, 4, 1, 2];
            let permuted = BinnedDataset::new(
                perm.iter().map(|&f| d.n_bins[f]).collect(),
                d.rows.iter().map(|r| perm.iter().map(|&f| r[f]).collect()).collect(),
                d.labels.clone(),
            ).unwrap();
            let w = attribute_weights(&d, DEFAULT_WEIGHT_FLOOR).unwrap();
            let wp = attribute_weights(&permuted, DEFAULT_WEIGHT_FLOOR).unwrap();
            for (i, &f) in perm.iter().enumerate() {
                prop_assert!((wp.as_slice()[i] - w.as_slice()[f]).abs() < 1e-12);
            }
        }
    }
}
