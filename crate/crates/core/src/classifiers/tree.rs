use crate::classifiers::bayes::Prediction;
use crate::classifiers::knn::vote;
use crate::data::{ClassLabel, Dataset};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Leaf {
        los: usize,
        nlos: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

/// CART-style binary tree grown by Gini impurity. Samples with
/// `x[feature] < threshold` go left.
#[derive(Clone, Debug, PartialEq)]
pub struct DecisionTree {
    root: Node,
    n_features: usize,
}

fn gini(los: usize, nlos: usize) -> f64 {
    let n = (los + nlos) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p = los as f64 / n;
    2.0 * p * (1.0 - p)
}

struct Grower<'a> {
    x: Vec<&'a [f64]>,
    y: Vec<ClassLabel>,
    max_depth: usize,
}

impl Grower<'_> {
    fn counts(&self, idx: &[usize]) -> (usize, usize) {
        let nlos = idx.iter().filter(|&&i| self.y[i] == ClassLabel::Nlos).count();
        (idx.len() - nlos, nlos)
    }

    fn grow(&self, idx: Vec<usize>, depth: usize) -> Node {
        let (los, nlos) = self.counts(&idx);
        if depth >= self.max_depth || los == 0 || nlos == 0 {
            return Node::Leaf { los, nlos };
        }
        let parent = gini(los, nlos);
        let n = idx.len() as f64;
        let n_features = self.x[idx[0]].len();

        let mut best: Option<(f64, usize, f64)> = None;
        let mut order = idx.clone();
        for f in 0..n_features {
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let (mut l_los, mut l_nlos) = (0, 0);
            for w in 0..order.len() - 1 {
                match self.y[order[w]] {
                    ClassLabel::Los => l_los += 1,
                    ClassLabel::Nlos => l_nlos += 1,
                }
                let (lo, hi) = (self.x[order[w]][f], self.x[order[w + 1]][f]);
                if lo == hi {
                    continue;
                }
                let nl = (l_los + l_nlos) as f64;
                let impurity = (nl * gini(l_los, l_nlos)
                    + (n - nl) * gini(los - l_los, nlos - l_nlos))
                    / n;
                if best.is_none_or(|(b, _, _)| impurity < b) {
                    best = Some((impurity, f, lo + (hi - lo) / 2.0));
                }
            }
        }
        match best {
            Some((impurity, feature, threshold)) if impurity < parent - 1e-12 => {
                let (left, right): (Vec<usize>, Vec<usize>) =
                    idx.into_iter().partition(|&i| self.x[i][feature] < threshold);
                Node::Split {
                    feature,
                    threshold,
                    left: Box::new(self.grow(left, depth + 1)),
                    right: Box::new(self.grow(right, depth + 1)),
                }
            }
            _ => Node::Leaf { los, nlos },
        }
    }
}

impl DecisionTree {
    pub fn fit(train: &Dataset, max_depth: usize) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let grower = Grower {
            x: train.samples().iter().map(|s| s.features.as_slice()).collect(),
            y: train.labels(),
            max_depth,
        };
        Ok(DecisionTree {
            root: grower.grow((0..train.len()).collect(), 0),
            n_features: train.feature_count(),
        })
    }

    pub fn predict(&self, values: &[f64]) -> Result<Prediction> {
        if values.len() != self.n_features {
            return Err(Error::SchemaMismatch(format!(
                "expected {} features, got {}",
                self.n_features,
                values.len()
            )));
        }
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { los, nlos } => return Ok(vote(*los, *nlos)),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if values[*feature] < *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn depth(n: &Node) -> usize {
            match n {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + depth(left).max(depth(right)),
            }
        }
        depth(&self.root)
    }
}

pub fn tree_predict(train: &Dataset, test: &Dataset, max_depth: usize) -> Result<Vec<Prediction>> {
    if train.schema() != test.schema() {
        return Err(Error::SchemaMismatch("train and test schemas differ".into()));
    }
    let tree = DecisionTree::fit(train, max_depth)?;
    test.samples()
        .iter()
        .map(|s| tree.predict(s.features.as_slice()))
        .collect()
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
    fn depth_zero_is_majority() {
        let train = points(&[
            (0.0, 0.0, ClassLabel::Nlos),
            (1.0, 0.0, ClassLabel::Los),
            (2.0, 0.0, ClassLabel::Los),
        ]);
        let tree = DecisionTree::fit(&train, 0).unwrap();
        assert_eq!(tree.depth(), 0);
        for x in [-5.0, 0.0, 9.0] {
            let p = tree.predict(&[x, 0.0]).unwrap();
            assert_eq!(p.label, ClassLabel::Los);
            assert!((p.score - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn finds_axis_split() {
        let train = points(&[
            (0.0, 5.0, ClassLabel::Los),
            (1.0, 1.0, ClassLabel::Los),
            (2.0, 4.0, ClassLabel::Los),
            (0.5, 9.0, ClassLabel::Nlos),
            (1.5, 8.0, ClassLabel::Nlos),
        ]);
        let tree = DecisionTree::fit(&train, 3).unwrap();
        assert_eq!(tree.depth(), 1);
        assert_eq!(tree.predict(&[0.0, 6.4]).unwrap().label, ClassLabel::Los);
        assert_eq!(tree.predict(&[0.0, 6.6]).unwrap().label, ClassLabel::Nlos);
        let preds = tree_predict(&train, &train, 3).unwrap();
        assert!(preds.iter().zip(train.samples()).all(|(p, s)| p.label == s.label));
    }

    #[test]
    fn xor_needs_depth_two() {
        let train = points(&[
            (0.0, 0.0, ClassLabel::Los),
            (1.0, 1.0, ClassLabel::Los),
            (0.0, 1.0, ClassLabel::Nlos),
            (1.0, 0.0, ClassLabel::Nlos),
            (0.1, 0.1, ClassLabel::Los),
        ]);
        let deep = DecisionTree::fit(&train, 4).unwrap();
        for s in train.samples() {
            assert_eq!(deep.predict(s.features.as_slice()).unwrap().label, s.label);
        }
        assert!(deep.predict(&[1.0]).is_err());
    }
}
