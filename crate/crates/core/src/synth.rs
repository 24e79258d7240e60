//! Synthetic UWB measurement generator.
//!
//! Range follows the ToA model `d = c·ToA + ε (+ b under NLoS)`, with the true
//! distance drawn through a Gaussian copula so that it shares the correlation
//! structure of the remaining features. All other features are correlated
//! Gaussians around class-conditional means; the correlation is imposed with a
//! Cholesky factor of the configured matrix.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{default_schema, ClassLabel, Dataset, FeatureVector, LabeledSample};
use crate::error::{Error, Result};
use crate::random::seeded_rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerClass<T> {
    pub los: T,
    pub nlos: T,
}

impl<T> PerClass<T> {
    pub fn get(&self, label: ClassLabel) -> &T {
        match label {
            ClassLabel::Los => &self.los,
            ClassLabel::Nlos => &self.nlos,
        }
    }
}

/// Normal distribution of the NLoS range bias `b`, truncated to `b >= 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasConfig {
    pub mean: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default = "default_schema")]
    pub schema: Vec<String>,
    /// Feature produced by the ranging model instead of the Gaussian draw.
    #[serde(default = "default_range_feature")]
    pub range_feature: String,
    /// (min, max) true tag-anchor distance in meters.
    pub true_distance_range: [f64; 2],
    /// Standard deviation of the ranging noise ε, meters.
    pub noise_sigma: f64,
    pub nlos_bias: BiasConfig,
    pub feature_means: PerClass<Vec<f64>>,
    pub feature_sigmas: PerClass<Vec<f64>>,
    /// Symmetric positive-definite, unit diagonal, schema-sized.
    pub correlation_target: Vec<Vec<f64>>,
    /// Scales the NLoS mean offset: effective NLoS mean is
    /// `los + class_separation · (nlos − los)`.
    pub class_separation: f64,
}

fn default_range_feature() -> String {
    "RANGE".to_string()
}

impl ScenarioConfig {
    /// Parses a TOML scenario file.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("scenario: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| e.context(format!("reading {}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config is always TOML-representable")
    }

    /// Resolves a built-in scenario by name (`studio` or `room`).
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "studio" => Some(studio()),
            "room" => Some(room()),
            _ => None,
        }
    }

    /// Resolves a built-in name, or else reads the argument as a TOML file.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        match Self::builtin(name_or_path) {
            Some(cfg) => Ok(cfg),
            None => Self::load(name_or_path),
        }
    }

    /// Validates the configuration and factors the correlation matrix.
    pub fn build(&self) -> Result<Scenario> {
        let n = self.schema.len();
        let bad = |m: String| Err(Error::Config(format!("scenario {}: {m}", self.name)));
        if n == 0 {
            return bad("empty schema".into());
        }
        let range_index = match self.schema.iter().position(|s| *s == self.range_feature) {
            Some(i) => i,
            None => return bad(format!("range feature {} not in schema", self.range_feature)),
        };
        let [dmin, dmax] = self.true_distance_range;
        if !(dmin > 0.0 && dmax >= dmin && dmax.is_finite()) {
            return bad(format!("true_distance_range [{dmin}, {dmax}] must satisfy 0 < min <= max"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be >= 0".into());
        }
        if !(self.nlos_bias.mean >= 0.0 && self.nlos_bias.sigma >= 0.0)
            || !self.nlos_bias.mean.is_finite()
            || !self.nlos_bias.sigma.is_finite()
        {
            return bad("nlos_bias mean and sigma must be >= 0".into());
        }
        if !(self.class_separation >= 0.0 && self.class_separation.is_finite()) {
            return bad("class_separation must be >= 0".into());
        }
        for label in ClassLabel::ALL {
            let means = self.feature_means.get(label);
            let sigmas = self.feature_sigmas.get(label);
            if means.len() != n || sigmas.len() != n {
                return bad(format!("{label} means/sigmas must have {n} entries"));
            }
            if means.iter().any(|m| !m.is_finite()) {
                return bad(format!("{label} means must be finite"));
            }
            if sigmas.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                return bad(format!("{label} sigmas must be > 0"));
            }
        }
        let r = &self.correlation_target;
        if r.len() != n || r.iter().any(|row| row.len() != n) {
            return bad(format!("correlation_target must be {n}x{n}"));
        }
        for (i, row) in r.iter().enumerate() {
            if (row[i] - 1.0).abs() > 1e-12 {
                return bad(format!("correlation_target diagonal entry {i} is not 1"));
            }
            for (j, v) in row.iter().enumerate().take(i) {
                if (v - r[j][i]).abs() > 1e-12 {
                    return bad(format!("correlation_target not symmetric at ({i}, {j})"));
                }
            }
        }
        let m = DMatrix::from_fn(n, n, |i, j| r[i][j]);
        let chol = match m.cholesky() {
            Some(c) => c.l(),
            None => return bad("correlation_target is not positive definite".into()),
        };

        let los = &self.feature_means.los;
        let nlos = &self.feature_means.nlos;
        let nlos_means = los
            .iter()
            .zip(nlos)
            .map(|(l, n)| l + self.class_separation * (n - l))
            .collect();

        Ok(Scenario {
            config: self.clone(),
            range_index,
            cholesky: chol,
            means: PerClass {
                los: los.clone(),
                nlos: nlos_means,
            },
        })
    }
}

/// A validated scenario, ready to sample from.
#[derive(Clone, Debug)]
pub struct Scenario {
    config: ScenarioConfig,
    range_index: usize,
    cholesky: DMatrix<f64>,
    means: PerClass<Vec<f64>>,
}

impl Scenario {
    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    /// Effective per-class means after applying `class_separation`.
    pub fn effective_means(&self, label: ClassLabel) -> &[f64] {
        self.means.get(label)
    }

    fn sample_features<R: Rng + ?Sized>(&self, label: ClassLabel, rng: &mut R) -> Vec<f64> {
        let n = self.config.schema.len();
        let white = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let z = &self.cholesky * white;
        let means = self.means.get(label);
        let sigmas = self.config.feature_sigmas.get(label);
        let mut values: Vec<f64> = (0..n).map(|j| means[j] + sigmas[j] * z[j]).collect();

        let [dmin, dmax] = self.config.true_distance_range;
        let u = Normal::standard().cdf(z[self.range_index]);
        let distance = dmin + (dmax - dmin) * u;
        values[self.range_index] = draw_range(distance.max(dmin), label, &self.config, rng);
        values
    }
}

fn draw_range<R: Rng + ?Sized>(
    true_distance: f64,
    condition: ClassLabel,
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> f64 {
    let eps = cfg.noise_sigma * rng.sample::<f64, _>(StandardNormal);
    let bias = match condition {
        ClassLabel::Los => 0.0,
        ClassLabel::Nlos => truncated_bias(cfg.nlos_bias, rng),
    };
    true_distance + eps + bias
}

fn truncated_bias<R: Rng + ?Sized>(bias: BiasConfig, rng: &mut R) -> f64 {
    if bias.sigma == 0.0 {
        return bias.mean.max(0.0);
    }
    // mean >= 0, so acceptance probability is at least one half.
    loop {
        let b = bias.mean + bias.sigma * rng.sample::<f64, _>(StandardNormal);
        if b >= 0.0 {
            return b;
        }
    }
}

/// One ranging measurement: `true_distance + ε` under LoS, plus a
/// non-negative bias `b` under NLoS.
pub fn simulate_range<R: Rng + ?Sized>(
    true_distance: f64,
    condition: ClassLabel,
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<f64> {
    if !(true_distance > 0.0 && true_distance.is_finite()) {
        return Err(Error::Domain(format!(
            "true distance {true_distance} must be positive"
        )));
    }
    Ok(draw_range(true_distance, condition, cfg, rng))
}

/// Draws `n_los + n_nlos` labeled samples in a seed-determined interleaved order.
pub fn generate_samples(
    scenario: &Scenario,
    n_los: usize,
    n_nlos: usize,
    seed: u64,
) -> Result<Dataset> {
    let mut rng = seeded_rng(seed);
    let mut labels: Vec<ClassLabel> = std::iter::repeat_n(ClassLabel::Los, n_los)
        .chain(std::iter::repeat_n(ClassLabel::Nlos, n_nlos))
        .collect();
    labels.shuffle(&mut rng);
    let samples = labels
        .into_iter()
        .map(|label| {
            let values = scenario.sample_features(label, &mut rng);
            Ok(LabeledSample {
                features: FeatureVector::new(values)?,
                label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(scenario.config.schema.clone(), samples)
}

// Default feature order:
// RANGE, RSS, FP_INDEX, F1_AMP, F2_AMP, F3_AMP, FPPL, RX_POWER, POWER_RATIO,
// NOISE_STD, MAX_NOISE, PREAMBLE_COUNT
fn default_correlation() -> Vec<Vec<f64>> {
    let mut r = vec![vec![0.0; 12]; 12];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let mut set = |i: usize, j: usize, v: f64| {
        r[i][j] = v;
        r[j][i] = v;
    };
    // The first-path amplitudes and FPPL move together.
    for i in 3..7 {
        for j in i + 1..7 {
            set(i, j, 0.7);
        }
    }
    set(1, 7, 0.7);
    set(0, 1, -0.3);
    set(0, 7, -0.25);
    set(2, 3, -0.15);
    set(6, 8, -0.2);
    r
}

/// Small furnished studio: short ranges, low noise.
pub fn studio() -> ScenarioConfig {
    ScenarioConfig {
        name: "studio".into(),
        schema: default_schema(),
        range_feature: default_range_feature(),
        true_distance_range: [0.5, 5.9],
        noise_sigma: 0.05,
        nlos_bias: BiasConfig {
            mean: 0.4,
            sigma: 0.3,
        },
        feature_means: PerClass {
            los: vec![0.0, -79.0, 745.0, 9000.0, 8000.0, 7000.0, -82.0, -78.5, 3.5, 40.0, 900.0, 1000.0],
            nlos: vec![0.0, -82.6, 747.25, 7200.0, 9620.0, 8440.0, -84.7, -74.9, 4.4, 41.2, 870.0, 1000.0],
        },
        feature_sigmas: PerClass {
            los: vec![1.0, 3.0, 3.0, 2000.0, 1800.0, 1600.0, 3.0, 3.0, 1.5, 8.0, 200.0, 20.0],
            nlos: vec![1.0, 3.0, 3.0, 2000.0, 1800.0, 1600.0, 3.0, 3.0, 1.5, 8.0, 200.0, 20.0],
        },
        correlation_target: default_correlation(),
        class_separation: 1.0,
    }
}

/// Larger room: longer ranges, more noise and a shifted power budget.
pub fn room() -> ScenarioConfig {
    let mut cfg = studio();
    cfg.name = "room".into();
    cfg.true_distance_range = [0.5, 7.2];
    cfg.noise_sigma = 0.08;
    cfg.nlos_bias = BiasConfig {
        mean: 0.48,
        sigma: 0.36,
    };
    for means in [&mut cfg.feature_means.los, &mut cfg.feature_means.nlos] {
        means[1] -= 1.0; // RSS
        means[6] -= 1.0; // FPPL
        means[7] -= 1.0; // RX_POWER
        means[9] += 2.0; // NOISE_STD
    }
    cfg
}
