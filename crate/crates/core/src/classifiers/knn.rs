use crate::classifiers::bayes::Prediction;
use crate::data::{ClassLabel, Dataset};
use crate::error::{Error, Result};

/// Per-feature mean and standard deviation from training data. Constant
/// features get a unit scale.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(d: &Dataset) -> Self {
        let n = d.len() as f64;
        let (mean, scale) = (0..d.feature_count())
            .map(|f| {
                let col = d.column(f);
                let m = col.iter().sum::<f64>() / n;
                let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
                let sd = var.sqrt();
                (m, if sd > 0.0 { sd } else { 1.0 })
            })
            .unzip();
        Standardizer { mean, scale }
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        values
            .iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

/// k-nearest-neighbour majority vote on z-scored features.
pub fn knn_predict(train: &Dataset, test: &Dataset, k: usize) -> Result<Vec<Prediction>> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if k == 0 || k > train.len() {
        return Err(Error::Config(format!(
            "k = {k} must be between 1 and the training size {}",
            train.len()
        )));
    }
    if train.schema() != test.schema() {
        return Err(Error::SchemaMismatch("train and test schemas differ".into()));
    }
    let scaler = Standardizer::fit(train);
    let points: Vec<(Vec<f64>, ClassLabel)> = train
        .samples()
        .iter()
        .map(|s| (scaler.apply(s.features.as_slice()), s.label))
        .collect();

    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(points.len());
    test.samples()
        .iter()
        .map(|s| {
            let q = scaler.apply(s.features.as_slice());
            dist.clear();
            dist.extend(points.iter().enumerate().map(|(i, (p, _))| {
                let d2: f64 = p.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum();
                (d2, i)
            }));
            // Distance ties resolve to the lower training index.
            dist.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let nlos = dist[..k]
                .iter()
                .filter(|(_, i)| points[*i].1 == ClassLabel::Nlos)
                .count();
            Ok(vote(k - nlos, nlos))
        })
        .collect()
}

/// Turns class counts into a prediction; equal votes go to LoS.
pub(crate) fn vote(los: usize, nlos: usize) -> Prediction {
    let total = (los + nlos) as f64;
    Prediction::from_log_joint([(los as f64 / total).ln(), (nlos as f64 / total).ln()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{FeatureVector, LabeledSample};

    fn points(rows: &[(f64, f64, ClassLabel)]) -> Dataset {
        let samples = rows
            .iter()
            .map(|&(x, y, label)| LabeledSample {
                features: FeatureVector::new(vec![x, y]).unwrap(),
                label,
            })
            .collect();
        Dataset::new(vec!["X".into(), "Y".into()], samples).unwrap()
    }

    #[test]
    fn one_neighbour_recovers_training_label() {
        let train = points(&[
            (0.0, 0.0, ClassLabel::Los),
            (5.0, 5.0, ClassLabel::Nlos),
            (1.0, -2.0, ClassLabel::Los),
        ]);
        let test = points(&[(5.0, 5.0, ClassLabel::Los)]);
        let p = knn_predict(&train, &test, 1).unwrap();
        assert_eq!(p[0].label, ClassLabel::Nlos);
        assert_eq!(p[0].score, 1.0);
    }

    #[test]
    fn three_neighbours_match_exhaustive_sort() {
        let train = points(&[
            (0.0, 0.0, ClassLabel::Los),
            (1.0, 0.0, ClassLabel::Nlos),
            (0.0, 2.0, ClassLabel::Nlos),
            (3.0, 3.0, ClassLabel::Los),
            (-1.0, -1.0, ClassLabel::Los),
        ]);
        let queries = [(0.9, 0.4), (2.5, 2.0), (-0.5, 1.0), (0.0, 0.0)];
        let test = points(&queries.map(|(x, y)| (x, y, ClassLabel::Los)));
        let got = knn_predict(&train, &test, 3).unwrap();

        // Oracle: z-score by hand, sort all five distances.
        let xs = [0.0, 1.0, 0.0, 3.0, -1.0];
        let ys = [0.0, 0.0, 2.0, 3.0, -1.0];
        let zs = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / 5.0;
            let sd = (v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / 5.0).sqrt();
            (m, sd)
        };
        let (mx, sx) = zs(&xs);
        let (my, sy) = zs(&ys);
        let labels = [0, 1, 1, 0, 0];
        for (q, p) in queries.iter().zip(&got) {
            let mut d: Vec<(f64, usize)> = (0..5)
                .map(|i| {
                    let dx = (xs[i] - mx) / sx - (q.0 - mx) / sx;
                    let dy = (ys[i] - my) / sy - (q.1 - my) / sy;
                    (dx * dx + dy * dy, i)
                })
                .collect();
            d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let nlos: usize = d[..3].iter().map(|(_, i)| labels[*i]).sum();
            let expected = if nlos >= 2 { ClassLabel::Nlos } else { ClassLabel::Los };
            assert_eq!(p.label, expected, "query {q:?}");
            assert!((p.score - nlos as f64 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn k_larger_than_train_is_rejected() {
        let train = points(&[(0.0, 0.0, ClassLabel::Los)]);
        assert!(matches!(knn_predict(&train, &train, 2), Err(Error::Config(_))));
        assert!(knn_predict(&train, &train, 0).is_err());
    }

    #[test]
    fn even_split_vote_goes_to_los() {
        assert_eq!(vote(2, 2).label, ClassLabel::Los);
        assert_eq!(vote(1, 3).label, ClassLabel::Nlos);
    }
}
