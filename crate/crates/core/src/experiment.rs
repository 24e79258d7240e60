//! Seeded Monte-Carlo experiment runners and the JSON report they produce.
//!
//! Every run is a pure function of the [`ExperimentConfig`] echoed into its
//! report, so feeding the echo back reproduces every non-timing field.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::classifiers::{
    baseline_predict, ftwnb_train, Baseline, FtWnbConfig, Prediction, WeightMode,
};
use crate::data::{default_schema, load_dataset, ClassLabel, Dataset};
use crate::discretize::fit_bins;
use crate::error::{Error, Result};
use crate::features::mrmr_select;
use crate::metrics::{confusion, roc_auc, summary_metrics, timed, ConfusionMatrix, MetricsReport};
use crate::random::derive_seed;
use crate::synth::{generate_samples, room, studio, ScenarioConfig};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// JSON schema describing `report.json`.
pub const REPORT_JSON_SCHEMA: &str = include_str!("../report.schema.json");

const STREAM_GENERATE: u64 = 1;
const STREAM_SUBSAMPLE: u64 = 2;
const STREAM_SPLIT: u64 = 3;
const STREAM_TEST_SCENARIO: u64 = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seeds: Vec<u64>,
    /// Feature names expected in CSV data sources.
    pub schema: Vec<String>,
    /// Synthetic source for training (and testing, except cross-scenario).
    pub scenario: ScenarioConfig,
    /// Synthetic source for cross-scenario testing.
    pub test_scenario: ScenarioConfig,
    /// CSV replacing `scenario` when set.
    pub data: Option<PathBuf>,
    /// CSV replacing `test_scenario` when set.
    pub test_data: Option<PathBuf>,
    /// LoS samples generated per seed.
    pub n_los: usize,
    /// NLoS pool generated per seed, subsampled down to `ratio`.
    pub n_nlos: usize,
    /// NLoS:LoS ratio for single-ratio experiments.
    pub ratio: f64,
    pub test_fraction: f64,
    pub model: FtWnbConfig,
    pub knn_k: usize,
    pub dt_max_depth: usize,
    pub mrmr_k: usize,
    pub ratios: Vec<f64>,
    pub caps: Vec<usize>,
    pub feature_subsets: Vec<Vec<String>>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seeds: (0..20).collect(),
            schema: default_schema(),
            scenario: studio(),
            test_scenario: room(),
            data: None,
            test_data: None,
            n_los: 1000,
            n_nlos: 1000,
            ratio: 0.1,
            test_fraction: 0.3,
            model: FtWnbConfig::default(),
            knn_k: 5,
            dt_max_depth: 5,
            mrmr_k: 6,
            ratios: vec![0.1, 0.5, 1.0],
            caps: vec![0, 10, 20, 30, 40, 60, 80],
            feature_subsets: vec![vec!["RANGE".into(), "RSS".into()], default_schema()],
        }
    }
}

impl ExperimentConfig {
    /// Parses TOML or JSON. A full report is accepted too; its `config`
    /// field is used.
    pub fn from_str_any(text: &str) -> Result<Self> {
        if let Ok(v) = serde_json::from_str::<Value>(text) {
            let v = match v.get("config") {
                Some(c) if v.get("schema_version").is_some() => c.clone(),
                _ => v,
            };
            return serde_json::from_value(v)
                .map_err(|e| Error::Config(format!("experiment config: {e}")));
        }
        toml::from_str(text).map_err(|e| Error::Config(format!("experiment config: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_str_any(&text).map_err(|e| e.context(format!("reading {}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.seeds.is_empty() {
            return bad("at least one seed is required");
        }
        if !(self.ratio > 0.0 && self.ratio <= 1.0) {
            return bad("ratio must be in (0, 1]");
        }
        if self.ratios.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
            return bad("ratios must lie in (0, 1]");
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad("test_fraction must be in (0, 1)");
        }
        if self.mrmr_k == 0 {
            return bad("mrmr_k must be >= 1");
        }
        self.model.validate()?;
        self.scenario.build()?;
        self.test_scenario.build()?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "FT-WNB")]
    FtWnb,
    #[serde(rename = "WNB")]
    Wnb,
    #[serde(rename = "NB")]
    Nb,
    #[serde(rename = "mRMR-KNN")]
    MrmrKnn,
    #[serde(rename = "mRMR-DT")]
    MrmrDt,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::FtWnb,
        Algorithm::Wnb,
        Algorithm::Nb,
        Algorithm::MrmrKnn,
        Algorithm::MrmrDt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::FtWnb => "FT-WNB",
            Algorithm::Wnb => "WNB",
            Algorithm::Nb => "NB",
            Algorithm::MrmrKnn => "mRMR-KNN",
            Algorithm::MrmrDt => "mRMR-DT",
        }
    }
}

/// One algorithm evaluated on one seed's split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs_run: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finetuned: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_features: Option<Vec<String>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation (0 for a single run).
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Stats {
        if values.is_empty() {
            return Stats::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len().is_multiple_of(2) {
            (sorted[mid - 1] + sorted[mid]) / 2.0
        } else {
            sorted[mid]
        };
        Stats {
            mean,
            median,
            std,
            min: sorted[0],
            max: sorted[sorted.len() - 1],
        }
    }

    /// Standard error of the mean.
    pub fn sem(&self, n: usize) -> f64 {
        self.std / (n as f64).sqrt()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub accuracy: Stats,
    pub precision: Stats,
    pub recall: Stats,
    pub nlos_correct_rate: Stats,
    pub auc: Stats,
    pub runtime_seconds: Stats,
    /// Confusion counts summed over seeds.
    pub confusion_total: ConfusionMatrix,
}

impl Aggregate {
    pub fn of(runs: &[RunResult]) -> Aggregate {
        let pick = |f: fn(&MetricsReport) -> f64| {
            Stats::of(&runs.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>())
        };
        Aggregate {
            accuracy: pick(|m| m.rates.accuracy),
            precision: pick(|m| m.rates.precision),
            recall: pick(|m| m.rates.recall),
            nlos_correct_rate: pick(|m| m.rates.nlos_correct_rate),
            auc: pick(|m| m.auc),
            runtime_seconds: pick(|m| m.runtime_seconds),
            confusion_total: runs
                .iter()
                .fold(ConfusionMatrix::default(), |acc, r| acc + r.confusion),
        }
    }
}

/// All seeds of one algorithm under one setting of the swept axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub algorithm: Algorithm,
    /// Axis value: a number for ratio and cap sweeps, a scenario pair for
    /// cross-scenario runs, a feature list for the tradeoff, null otherwise.
    pub setting: Value,
    pub runs: Vec<RunResult>,
    pub aggregate: Aggregate,
}

impl Condition {
    fn new(name: String, algorithm: Algorithm, setting: Value, runs: Vec<RunResult>) -> Self {
        let aggregate = Aggregate::of(&runs);
        Condition {
            name,
            algorithm,
            setting,
            runs,
            aggregate,
        }
    }

    pub fn values(&self, f: fn(&RunResult) -> f64) -> Vec<f64> {
        self.runs.iter().map(f).collect()
    }
}

/// Published reference figures, kept for side-by-side reading only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub name: String,
    pub note: String,
    pub values: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment: String,
    /// Name of the swept axis, if any.
    pub axis: Option<String>,
    pub config: ExperimentConfig,
    pub conditions: Vec<Condition>,
    pub annotations: Vec<Annotation>,
}

impl ExperimentReport {
    pub fn condition(&self, name: &str, algorithm: Algorithm) -> Option<&Condition> {
        self.conditions
            .iter()
            .find(|c| c.name == name && c.algorithm == algorithm)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per condition with the headline aggregates.
    pub fn summary_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "condition",
            "algorithm",
            "runs",
            "accuracy_mean",
            "accuracy_median",
            "accuracy_std",
            "precision_mean",
            "recall_mean",
            "nlos_correct_rate_mean",
            "auc_mean",
            "runtime_seconds_median",
        ])?;
        for c in &self.conditions {
            let a = &c.aggregate;
            w.write_record([
                c.name.clone(),
                c.algorithm.name().to_string(),
                c.runs.len().to_string(),
                a.accuracy.mean.to_string(),
                a.accuracy.median.to_string(),
                a.accuracy.std.to_string(),
                a.precision.mean.to_string(),
                a.recall.mean.to_string(),
                a.nlos_correct_rate.mean.to_string(),
                a.auc.mean.to_string(),
                a.runtime_seconds.median.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

/// A report plus the plot-ready CSV tables derived from it.
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub report: ExperimentReport,
    /// (file name, CSV text) pairs.
    pub tables: Vec<(String, String)>,
}

/// Removes every `runtime_seconds` entry so two reports can be compared
/// for bit-identical content.
pub fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.remove("runtime_seconds");
            map.values_mut().for_each(strip_timing);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

/// Full-size sample set for one seed, before subsampling.
pub fn base_dataset(
    cfg: &ExperimentConfig,
    scenario: &ScenarioConfig,
    csv: Option<&Path>,
    seed: u64,
) -> Result<Dataset> {
    match csv {
        Some(path) => load_dataset(path, &cfg.schema),
        None => generate_samples(
            &scenario.build()?,
            cfg.n_los,
            cfg.n_nlos,
            derive_seed(seed, STREAM_GENERATE),
        ),
    }
}

/// Subsamples NLoS to `ratio` and splits stratified into (train, test).
pub fn prepare_split(
    cfg: &ExperimentConfig,
    base: &Dataset,
    ratio: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    base.subsample_ratio(ratio, derive_seed(seed, STREAM_SUBSAMPLE))?
        .split_train_test(cfg.test_fraction, derive_seed(seed, STREAM_SPLIT), true)
}

fn primary_split(cfg: &ExperimentConfig, ratio: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let base = base_dataset(cfg, &cfg.scenario, cfg.data.as_deref(), seed)?;
    prepare_split(cfg, &base, ratio, seed)
}

fn model_config(cfg: &ExperimentConfig, algorithm: Algorithm) -> FtWnbConfig {
    match algorithm {
        Algorithm::Wnb => FtWnbConfig {
            finetune_cap: 0,
            ..cfg.model.clone()
        },
        Algorithm::Nb => FtWnbConfig {
            finetune_cap: 0,
            weights: WeightMode::Unit,
            ..cfg.model.clone()
        },
        _ => cfg.model.clone(),
    }
}

struct Outcome {
    predictions: Vec<Prediction>,
    runtime: f64,
    epochs_run: Option<usize>,
    finetuned: Option<usize>,
    selected: Option<Vec<String>>,
}

fn run_bayes(model_cfg: &FtWnbConfig, train: &Dataset, test: &Dataset) -> Result<Outcome> {
    let (result, runtime) = timed(|| -> Result<_> {
        let model = ftwnb_train(train, model_cfg)?;
        let predictions = model.predict_dataset(test)?;
        Ok((model, predictions))
    });
    let (model, predictions) = result?;
    Ok(Outcome {
        predictions,
        runtime,
        epochs_run: Some(model.epochs_run),
        finetuned: Some(model.finetuned),
        selected: None,
    })
}

fn run_mrmr(
    cfg: &ExperimentConfig,
    kind: Baseline,
    train: &Dataset,
    test: &Dataset,
) -> Result<Outcome> {
    let (result, runtime) = timed(|| -> Result<_> {
        let binned = fit_bins(train, cfg.model.n_bins)?.transform(train)?;
        let selected = mrmr_select(&binned, cfg.mrmr_k.min(train.feature_count()))?;
        let predictions =
            baseline_predict(kind, &train.select_features(&selected)?, &test.select_features(&selected)?)?;
        Ok((selected, predictions))
    });
    let (selected, predictions) = result?;
    Ok(Outcome {
        predictions,
        runtime,
        epochs_run: None,
        finetuned: None,
        selected: Some(selected.iter().map(|&i| train.schema()[i].clone()).collect()),
    })
}

/// Trains `algorithm` on `train` and scores it on `test`.
pub fn evaluate(
    cfg: &ExperimentConfig,
    algorithm: Algorithm,
    train: &Dataset,
    test: &Dataset,
    seed: u64,
) -> Result<(RunResult, Vec<Prediction>)> {
    let outcome = match algorithm {
        Algorithm::FtWnb | Algorithm::Wnb | Algorithm::Nb => {
            run_bayes(&model_config(cfg, algorithm), train, test)?
        }
        Algorithm::MrmrKnn => run_mrmr(cfg, Baseline::Knn { k: cfg.knn_k }, train, test)?,
        Algorithm::MrmrDt => run_mrmr(
            cfg,
            Baseline::DecisionTree {
                max_depth: cfg.dt_max_depth,
            },
            train,
            test,
        )?,
    };
    let truth = test.labels();
    let pred: Vec<ClassLabel> = outcome.predictions.iter().map(|p| p.label).collect();
    let scores: Vec<f64> = outcome.predictions.iter().map(|p| p.score).collect();
    let cm = confusion(&truth, &pred)?;
    let run = RunResult {
        seed,
        n_train: train.len(),
        n_test: test.len(),
        confusion: cm,
        metrics: MetricsReport {
            rates: summary_metrics(&cm)?,
            auc: roc_auc(&scores, &truth)?.auc,
            runtime_seconds: outcome.runtime,
        },
        epochs_run: outcome.epochs_run,
        finetuned: outcome.finetuned,
        selected_features: outcome.selected,
    };
    Ok((run, outcome.predictions))
}

fn with_context<T>(r: Result<T>, what: impl FnOnce() -> String) -> Result<T> {
    r.map_err(|e| e.context(what()))
}

fn report(
    experiment: &str,
    axis: Option<&str>,
    cfg: &ExperimentConfig,
    conditions: Vec<Condition>,
    annotations: Vec<Annotation>,
) -> ExperimentReport {
    ExperimentReport {
        schema_version: REPORT_SCHEMA_VERSION,
        experiment: experiment.to_string(),
        axis: axis.map(str::to_string),
        config: cfg.clone(),
        conditions,
        annotations,
    }
}

fn annotation(name: &str, note: &str, values: Value) -> Annotation {
    Annotation {
        name: name.into(),
        note: note.into(),
        values,
    }
}

fn ratio_name(r: f64) -> String {
    format!("ratio={r}")
}

/// FT-WNB, WNB, NB and the two mRMR baselines on the same per-seed split.
pub fn cmd_compare(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let mut runs: Vec<Vec<RunResult>> = vec![Vec::new(); Algorithm::ALL.len()];
    let mut tables = Vec::new();
    for &seed in &cfg.seeds {
        let (train, test) = with_context(primary_split(cfg, cfg.ratio, seed), || {
            format!("compare: preparing data for seed {seed}")
        })?;
        for (slot, &alg) in Algorithm::ALL.iter().enumerate() {
            let (run, preds) = with_context(evaluate(cfg, alg, &train, &test, seed), || {
                format!("compare: {} on seed {seed}", alg.name())
            })?;
            if seed == cfg.seeds[0] {
                let scores: Vec<f64> = preds.iter().map(|p| p.score).collect();
                let roc = roc_auc(&scores, &test.labels())?;
                tables.push((format!("roc_{}.csv", alg.name()), roc.to_csv()));
            }
            runs[slot].push(run);
        }
    }
    let conditions = Algorithm::ALL
        .iter()
        .zip(runs)
        .map(|(&alg, r)| Condition::new(ratio_name(cfg.ratio), alg, Value::Null, r))
        .collect();
    let annotations = vec![
        annotation(
            "reference_confusion",
            "published FT-WNB confusion counts, LoS positive, 1000 LoS / 100 NLoS test samples",
            json!({"tp": 995, "fn": 5, "fp": 2, "tn": 98, "accuracy_percent": 99.4}),
        ),
        annotation(
            "reference_rates",
            "published FT-WNB precision and recall; precision differs from the exact 995/997",
            json!({"precision_percent": 99.7, "recall_percent": 99.5, "accuracy_percent": 99.4, "runtime_seconds": 0.041}),
        ),
    ];
    let report = report("compare", None, cfg, conditions, annotations);
    tables.insert(0, ("summary.csv".into(), report.summary_csv()?));
    Ok(ExperimentOutput { report, tables })
}

/// All algorithms at each NLoS:LoS ratio.
pub fn cmd_sweep_ratio(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let mut conditions = Vec::new();
    for &ratio in &cfg.ratios {
        let mut runs: Vec<Vec<RunResult>> = vec![Vec::new(); Algorithm::ALL.len()];
        for &seed in &cfg.seeds {
            let (train, test) = with_context(primary_split(cfg, ratio, seed), || {
                format!("sweep-ratio: preparing ratio {ratio}, seed {seed}")
            })?;
            for (slot, &alg) in Algorithm::ALL.iter().enumerate() {
                let (run, _) = with_context(evaluate(cfg, alg, &train, &test, seed), || {
                    format!("sweep-ratio: {} at ratio {ratio}, seed {seed}", alg.name())
                })?;
                runs[slot].push(run);
            }
        }
        for (&alg, r) in Algorithm::ALL.iter().zip(runs) {
            conditions.push(Condition::new(ratio_name(ratio), alg, json!(ratio), r));
        }
    }
    let annotations = vec![annotation(
        "reference_trend",
        "published accuracy of all algorithms rises with the ratio, FT-WNB highest at every ratio",
        json!({"ratios": [0.1, 0.5, 1.0]}),
    )];
    let report = report("sweep-ratio", Some("ratio"), cfg, conditions, annotations);
    let tables = vec![("sweep_ratio.csv".into(), report.summary_csv()?)];
    Ok(ExperimentOutput { report, tables })
}

/// FT-WNB at each fine-tuning cap, at the configured ratio.
pub fn cmd_sweep_finetune(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let mut runs: Vec<Vec<RunResult>> = vec![Vec::new(); cfg.caps.len()];
    for &seed in &cfg.seeds {
        let (train, test) = with_context(primary_split(cfg, cfg.ratio, seed), || {
            format!("sweep-finetune: preparing data for seed {seed}")
        })?;
        for (slot, &cap) in cfg.caps.iter().enumerate() {
            let capped = ExperimentConfig {
                model: FtWnbConfig {
                    finetune_cap: cap,
                    ..cfg.model.clone()
                },
                ..cfg.clone()
            };
            let (run, _) = with_context(
                evaluate(&capped, Algorithm::FtWnb, &train, &test, seed),
                || format!("sweep-finetune: cap {cap}, seed {seed}"),
            )?;
            runs[slot].push(run);
        }
    }
    let conditions = cfg
        .caps
        .iter()
        .zip(runs)
        .map(|(&cap, r)| Condition::new(format!("cap={cap}"), Algorithm::FtWnb, json!(cap), r))
        .collect();
    let annotations = vec![annotation(
        "reference_trajectory",
        "published FT-WNB accuracy (percent) by number of fine-tuning samples",
        json!({"0": 98.2, "10": 98.6, "40": 99.5}),
    )];
    let report = report("sweep-finetune", Some("finetune_cap"), cfg, conditions, annotations);
    let tables = vec![("sweep_finetune.csv".into(), report.summary_csv()?)];
    Ok(ExperimentOutput { report, tables })
}

/// FT-WNB trained on one scenario and tested on both.
pub fn cmd_cross_scenario(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let a = &cfg.scenario.name;
    let b = &cfg.test_scenario.name;
    let names = [format!("{a}->{a}"), format!("{a}->{b}"), format!("{b}->{b}")];
    let mut runs: [Vec<RunResult>; 3] = Default::default();
    for &seed in &cfg.seeds {
        let (train_a, test_a) = with_context(primary_split(cfg, cfg.ratio, seed), || {
            format!("cross-scenario: preparing {a} data for seed {seed}")
        })?;
        let seed_b = derive_seed(seed, STREAM_TEST_SCENARIO);
        let (train_b, test_b) = with_context(
            base_dataset(cfg, &cfg.test_scenario, cfg.test_data.as_deref(), seed_b)
                .and_then(|base| prepare_split(cfg, &base, cfg.ratio, seed_b)),
            || format!("cross-scenario: preparing {b} data for seed {seed}"),
        )?;
        let pairs = [(&train_a, &test_a), (&train_a, &test_b), (&train_b, &test_b)];
        for (slot, (train, test)) in pairs.into_iter().enumerate() {
            let (run, _) = with_context(evaluate(cfg, Algorithm::FtWnb, train, test, seed), || {
                format!("cross-scenario: {} on seed {seed}", names[slot])
            })?;
            runs[slot].push(run);
        }
    }
    let conditions = names
        .iter()
        .zip(runs)
        .map(|(name, r)| {
            let (train, test) = name.split_once("->").expect("names contain ->");
            Condition::new(
                name.clone(),
                Algorithm::FtWnb,
                json!({"train": train, "test": test}),
                r,
            )
        })
        .collect();
    let annotations = vec![annotation(
        "reference_cross_scenario",
        "published FT-WNB counts trained in a studio and tested in a room, LoS positive",
        json!({"tp": 990, "fn": 10, "fp": 5, "tn": 95, "accuracy_percent": 98.6, "same_scenario_accuracy_percent": 99.4}),
    )];
    let report = report("cross-scenario", Some("scenario_pair"), cfg, conditions, annotations);
    let tables = vec![("cross_scenario.csv".into(), report.summary_csv()?)];
    Ok(ExperimentOutput { report, tables })
}

/// FT-WNB accuracy and runtime for each feature subset.
pub fn cmd_feature_tradeoff(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let mut runs: Vec<Vec<RunResult>> = vec![Vec::new(); cfg.feature_subsets.len()];
    for &seed in &cfg.seeds {
        let (train, test) = with_context(primary_split(cfg, cfg.ratio, seed), || {
            format!("feature-tradeoff: preparing data for seed {seed}")
        })?;
        for (slot, subset) in cfg.feature_subsets.iter().enumerate() {
            let (run, _) = with_context(
                train
                    .select_named(subset)
                    .and_then(|tr| Ok((tr, test.select_named(subset)?)))
                    .and_then(|(tr, te)| evaluate(cfg, Algorithm::FtWnb, &tr, &te, seed)),
                || format!("feature-tradeoff: subset {subset:?}, seed {seed}"),
            )?;
            runs[slot].push(run);
        }
    }
    let conditions = cfg
        .feature_subsets
        .iter()
        .zip(runs)
        .map(|(subset, r)| {
            Condition::new(
                format!("features={}", subset.len()),
                Algorithm::FtWnb,
                json!(subset),
                r,
            )
        })
        .collect();
    let annotations = vec![annotation(
        "reference_tradeoff",
        "published FT-WNB results with RANGE and RSS only versus all 12 features",
        json!({
            "two_features": {"runtime_seconds": 0.0371, "los_correct_percent": 97.4, "nlos_correct_percent": 91, "accuracy_percent": 96.8},
            "all_features": {"runtime_seconds": 0.041, "los_correct_percent": 99.5, "nlos_correct_percent": 98, "accuracy_percent": 99.4},
            "difference_ms": 3.9
        }),
    )];
    let report = report("feature-tradeoff", Some("features"), cfg, conditions, annotations);
    let tables = vec![("feature_tradeoff.csv".into(), report.summary_csv()?)];
    Ok(ExperimentOutput { report, tables })
}

/// Dispatches on a report's `experiment` name.
pub fn run_named(experiment: &str, cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    match experiment {
        "compare" => cmd_compare(cfg),
        "sweep-ratio" => cmd_sweep_ratio(cfg),
        "sweep-finetune" => cmd_sweep_finetune(cfg),
        "cross-scenario" => cmd_cross_scenario(cfg),
        "feature-tradeoff" => cmd_feature_tradeoff(cfg),
        other => Err(Error::Config(format!("unknown experiment {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            seeds: vec![3, 4],
            n_los: 200,
            n_nlos: 200,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn stats_of_known_values() {
        let s = Stats::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert_eq!(s.median, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!((s.min, s.max), (1.0, 4.0));
        assert_eq!(Stats::of(&[7.0]).std, 0.0);
    }

    #[test]
    fn zero_cap_rows_match_wnb() {
        let cfg = ExperimentConfig {
            model: FtWnbConfig {
                finetune_cap: 0,
                ..FtWnbConfig::default()
            },
            ..small()
        };
        let out = cmd_compare(&cfg).unwrap().report;
        let name = ratio_name(cfg.ratio);
        let ft = out.condition(&name, Algorithm::FtWnb).unwrap();
        let wnb = out.condition(&name, Algorithm::Wnb).unwrap();
        for (a, b) in ft.runs.iter().zip(&wnb.runs) {
            assert_eq!(a.confusion, b.confusion);
            assert_eq!(a.metrics.auc, b.metrics.auc);
        }
    }

    #[test]
    fn split_sizes_follow_ratio() {
        let cfg = small();
        let (train, test) = primary_split(&cfg, 0.1, 0).unwrap();
        assert_eq!(train.counts().los + test.counts().los, 200);
        assert_eq!(train.counts().nlos + test.counts().nlos, 20);
        assert_eq!(test.counts().nlos, 6);
    }

    #[test]
    fn config_round_trips_through_json_toml_and_report() {
        let cfg = small();
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_str_any(&json).unwrap(), cfg);
        let toml = toml::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_str_any(&toml).unwrap(), cfg);
        let rep = report("compare", None, &cfg, vec![], vec![]);
        assert_eq!(
            ExperimentConfig::from_str_any(&rep.to_json().unwrap()).unwrap(),
            cfg
        );
        assert!(ExperimentConfig::from_str_any("seeds = 3").is_err());
    }

    #[test]
    fn strip_timing_removes_nested_runtimes() {
        let mut v = json!({"a": {"runtime_seconds": 1.0, "b": [{"runtime_seconds": 2, "c": 3}]}});
        strip_timing(&mut v);
        assert_eq!(v, json!({"a": {"b": [{"c": 3}]}}));
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = small();
        cfg.ratios = vec![0.0];
        assert!(cmd_sweep_ratio(&cfg).is_err());
        let cfg = ExperimentConfig {
            seeds: vec![],
            ..small()
        };
        assert!(cmd_compare(&cfg).is_err());
        let cfg = ExperimentConfig {
            feature_subsets: vec![vec!["NOPE".into()]],
            ..small()
        };
        let err = cmd_feature_tradeoff(&cfg).unwrap_err().to_string();
        assert!(err.contains("feature-tradeoff"), "{err}");
    }
}
