use serde::{Deserialize, Serialize};

use crate::data::ClassLabel;
use crate::discretize::CptModel;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: ClassLabel,
    /// Unnormalized log joint per class, indexed by `ClassLabel::index()`.
    pub log_joint: [f64; 2],
    /// Posterior probability of NLoS.
    pub score: f64,
}

impl Prediction {
    /// Argmax over the two classes; exact ties go to LoS.
    pub fn from_log_joint(log_joint: [f64; 2]) -> Self {
        let [los, nlos] = log_joint;
        let label = if nlos > los {
            ClassLabel::Nlos
        } else {
            ClassLabel::Los
        };
        let score = if los == f64::NEG_INFINITY && nlos == f64::NEG_INFINITY {
            0.5
        } else {
            let m = los.max(nlos);
            let (a, b) = ((los - m).exp(), (nlos - m).exp());
            b / (a + b)
        };
        Prediction {
            label,
            log_joint,
            score,
        }
    }
}

/// `argmax_l P(l) · Π_i P(x_i | l)`, evaluated in log space.
pub fn nb_predict(cpt: &CptModel, bins: &[usize]) -> Result<Prediction> {
    cpt.check_bins(bins)?;
    Ok(weighted_unchecked(cpt, None, bins))
}

/// `argmax_l P(l) · Π_i P(x_i | l)^{w_i}`, evaluated in log space.
pub fn wnb_predict(cpt: &CptModel, weights: &[f64], bins: &[usize]) -> Result<Prediction> {
    cpt.check_bins(bins)?;
    if weights.len() != bins.len() {
        return Err(Error::LengthMismatch {
            left: weights.len(),
            right: bins.len(),
        });
    }
    Ok(weighted_unchecked(cpt, Some(weights), bins))
}

pub(crate) fn weighted_unchecked(cpt: &CptModel, weights: Option<&[f64]>, bins: &[usize]) -> Prediction {
    let mut log_joint = [0.0; 2];
    for label in ClassLabel::ALL {
        let c = label.index();
        let mut acc = cpt.priors[c].ln();
        for (f, &b) in bins.iter().enumerate() {
            let w = weights.map_or(1.0, |w| w[f]);
            if w != 0.0 {
                acc += w * cpt.tables[f][c][b].ln();
            }
        }
        log_joint[c] = acc;
    }
    Prediction::from_log_joint(log_joint)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::seeded_rng;
    use rand::Rng;

    fn one_feature(p_los: f64, p_nlos: f64) -> CptModel {
        CptModel {
            priors: [0.5, 0.5],
            tables: vec![[vec![p_los, 1.0 - p_los], vec![p_nlos, 1.0 - p_nlos]]],
            laplace_alpha: 1.0,
        }
    }

    #[test]
    fn single_feature_posterior() {
        let cpt = one_feature(0.8, 0.2);
        let p = nb_predict(&cpt, &[0]).unwrap();
        assert_eq!(p.label, ClassLabel::Los);
        // Enumeration: 0.5·0.8 / (0.5·0.8 + 0.5·0.2)
        assert!((1.0 - p.score - 0.8).abs() < 1e-12);
    }

    #[test]
    fn uniform_tables_follow_prior() {
        let mut cpt = one_feature(0.5, 0.5);
        cpt.priors = [0.3, 0.7];
        assert_eq!(nb_predict(&cpt, &[1]).unwrap().label, ClassLabel::Nlos);
        cpt.priors = [0.5, 0.5];
        let p = nb_predict(&cpt, &[1]).unwrap();
        assert_eq!(p.label, ClassLabel::Los, "exact tie breaks to LoS");
        assert_eq!(p.score, 0.5);
    }

    #[test]
    fn out_of_range_bin() {
        let cpt = one_feature(0.5, 0.5);
        assert!(matches!(nb_predict(&cpt, &[2]), Err(Error::BinOutOfRange { .. })));
        assert!(nb_predict(&cpt, &[0, 0]).is_err());
        assert!(wnb_predict(&cpt, &[1.0, 1.0], &[0]).is_err());
    }

    fn random_cpt(rng: &mut impl Rng, features: usize, bins: usize) -> CptModel {
        let vec = |rng: &mut dyn rand::RngCore| -> Vec<f64> {
            let raw: Vec<f64> = (0..bins).map(|_| rng.random::<f64>() + 0.01).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / s).collect()
        };
        let p: f64 = rng.random_range(0.05..0.95);
        CptModel {
            priors: [p, 1.0 - p],
            tables: (0..features).map(|_| [vec(rng), vec(rng)]).collect(),
            laplace_alpha: 1.0,
        }
    }

    #[test]
    fn log_space_agrees_with_products() {
        let mut rng = seeded_rng(11);
        for _ in 0..200 {
            let cpt = random_cpt(&mut rng, 3, 4);
            let bins: Vec<usize> = (0..3).map(|_| rng.random_range(0..4)).collect();
            let direct: Vec<f64> = ClassLabel::ALL
                .iter()
                .map(|&l| cpt.prior(l) * bins.iter().enumerate().map(|(f, &b)| cpt.table(f, l)[b]).product::<f64>())
                .collect();
            let expected = if direct[1] > direct[0] { ClassLabel::Nlos } else { ClassLabel::Los };
            assert_eq!(nb_predict(&cpt, &bins).unwrap().label, expected);
        }
    }

    #[test]
    fn unit_weights_reduce_to_nb() {
        let mut rng = seeded_rng(12);
        for _ in 0..100 {
            let cpt = random_cpt(&mut rng, 3, 4);
            let bins: Vec<usize> = (0..3).map(|_| rng.random_range(0..4)).collect();
            assert_eq!(
                wnb_predict(&cpt, &[1.0; 3], &bins).unwrap(),
                nb_predict(&cpt, &bins).unwrap()
            );
        }
    }

    #[test]
    fn zero_weight_silences_feature() {
        let mut rng = seeded_rng(13);
        let cpt = random_cpt(&mut rng, 3, 4);
        let base = wnb_predict(&cpt, &[1.0, 0.0, 1.0], &[0, 0, 0]).unwrap();
        for b in 1..4 {
            let p = wnb_predict(&cpt, &[1.0, 0.0, 1.0], &[0, b, 0]).unwrap();
            assert_eq!(p.log_joint, base.log_joint);
        }
    }

    #[test]
    fn weighted_product_by_hand() {
        let cpt = CptModel {
            priors: [0.6, 0.4],
            tables: vec![
                [vec![0.7, 0.3], vec![0.2, 0.8]],
                [vec![0.1, 0.9], vec![0.5, 0.5]],
            ],
            laplace_alpha: 1.0,
        };
        let w = [2.0, 0.5];
        let bins = [1, 0];
        let los = 0.6 * 0.3f64.powf(2.0) * 0.1f64.powf(0.5);
        let nlos = 0.4 * 0.8f64.powf(2.0) * 0.5f64.powf(0.5);
        let p = wnb_predict(&cpt, &w, &bins).unwrap();
        assert!((p.log_joint[0] - los.ln()).abs() < 1e-12);
        assert!((p.log_joint[1] - nlos.ln()).abs() < 1e-12);
        assert_eq!(p.label, ClassLabel::Nlos);
        assert!((p.score - nlos / (los + nlos)).abs() < 1e-12);
    }

    #[test]
    fn shifting_log_joint_keeps_label() {
        let mut rng = seeded_rng(14);
        for _ in 0..100 {
            let lj = [rng.random_range(-50.0..0.0), rng.random_range(-50.0..0.0)];
            let shift = rng.random_range(-100.0..100.0);
            let a = Prediction::from_log_joint(lj);
            let b = Prediction::from_log_joint([lj[0] + shift, lj[1] + shift]);
            assert_eq!(a.label, b.label);
            assert!((a.score - b.score).abs() < 1e-9);
        }
    }
}
