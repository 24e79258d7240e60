//! Labeled UWB measurements, CSV ingestion, and the seeded resampling
//! operations used by every experiment (imbalance subsampling and
//! train/test splitting).

use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::random::seeded_rng;

/// Feature names used when no schema file is supplied.
pub const DEFAULT_SCHEMA: [&str; 12] = [
    "RANGE",
    "RSS",
    "FP_INDEX",
    "F1_AMP",
    "F2_AMP",
    "F3_AMP",
    "FPPL",
    "RX_POWER",
    "POWER_RATIO",
    "NOISE_STD",
    "MAX_NOISE",
    "PREAMBLE_COUNT",
];

/// Name of the trailing label column; 1 = NLoS.
pub const LABEL_COLUMN: &str = "NLOS";

pub fn default_schema() -> Vec<String> {
    DEFAULT_SCHEMA.iter().map(|s| s.to_string()).collect()
}

/// Reads a schema file: feature names separated by newlines and/or commas.
/// Blank lines and lines starting with `#` are ignored.
pub fn load_schema(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let names: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .flat_map(|l| l.split(','))
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if names.is_empty() {
        return Err(Error::SchemaMismatch(format!(
            "schema file {} lists no features",
            path.display()
        )));
    }
    Ok(names)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ClassLabel {
    Los,
    Nlos,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 2] = [ClassLabel::Los, ClassLabel::Nlos];

    /// Position in per-class arrays; also the CSV encoding.
    pub fn index(self) -> usize {
        match self {
            ClassLabel::Los => 0,
            ClassLabel::Nlos => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(ClassLabel::Los),
            1 => Some(ClassLabel::Nlos),
            _ => None,
        }
    }

    pub fn other(self) -> Self {
        match self {
            ClassLabel::Los => ClassLabel::Nlos,
            ClassLabel::Nlos => ClassLabel::Los,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::Los => "LOS",
            ClassLabel::Nlos => "NLOS",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One measurement's feature values, in schema order. All values are finite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("feature {i} is not finite")));
        }
        Ok(FeatureVector(values))
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

    fn select(&self, indices: &[usize]) -> FeatureVector {
        FeatureVector(indices.iter().map(|&i| self.0[i]).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub features: FeatureVector,
    pub label: ClassLabel,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub los: usize,
    pub nlos: usize,
}

impl ClassCounts {
    pub fn get(&self, label: ClassLabel) -> usize {
        match label {
            ClassLabel::Los => self.los,
            ClassLabel::Nlos => self.nlos,
        }
    }

    pub fn total(&self) -> usize {
        self.los + self.nlos
    }

    fn bump(&mut self, label: ClassLabel) {
        match label {
            ClassLabel::Los => self.los += 1,
            ClassLabel::Nlos => self.nlos += 1,
        }
    }
}

/// An ordered collection of labeled samples sharing one feature schema.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    schema: Vec<String>,
    samples: Vec<LabeledSample>,
    counts: ClassCounts,
}

impl Dataset {
    pub fn new(schema: Vec<String>, samples: Vec<LabeledSample>) -> Result<Self> {
        if schema.is_empty() {
            return Err(Error::SchemaMismatch("schema has no features".into()));
        }
        let mut counts = ClassCounts::default();
        for (row, s) in samples.iter().enumerate() {
            if s.features.len() != schema.len() {
                return Err(Error::SchemaMismatch(format!(
                    "sample {row} has {} features, schema has {}",
                    s.features.len(),
                    schema.len()
                )));
            }
            counts.bump(s.label);
        }
        Ok(Dataset {
            schema,
            samples,
            counts,
        })
    }

    pub fn schema(&self) -> &[String] {
        &self.schema
    }

    pub fn samples(&self) -> &[LabeledSample] {
        &self.samples
    }

    pub fn counts(&self) -> ClassCounts {
        self.counts
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn feature_count(&self) -> usize {
        self.schema.len()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|s| s == name)
    }

    pub fn column(&self, feature: usize) -> Vec<f64> {
        self.samples
            .iter()
            .map(|s| s.features.as_slice()[feature])
            .collect()
    }

    pub fn labels(&self) -> Vec<ClassLabel> {
        self.samples.iter().map(|s| s.label).collect()
    }

    /// Projects onto a subset of features, in the given order.
    pub fn select_features(&self, features: &[usize]) -> Result<Dataset> {
        if features.is_empty() {
            return Err(Error::SchemaMismatch("empty feature selection".into()));
        }
        if let Some(&bad) = features.iter().find(|&&f| f >= self.schema.len()) {
            return Err(Error::SchemaMismatch(format!(
                "feature index {bad} out of range ({} features)",
                self.schema.len()
            )));
        }
        let schema = features.iter().map(|&i| self.schema[i].clone()).collect();
        let samples = self
            .samples
            .iter()
            .map(|s| LabeledSample {
                features: s.features.select(features),
                label: s.label,
            })
            .collect();
        Ok(Dataset {
            schema,
            samples,
            counts: self.counts,
        })
    }

    /// Projects onto features by name.
    pub fn select_named(&self, names: &[String]) -> Result<Dataset> {
        let idx = names
            .iter()
            .map(|n| {
                self.feature_index(n)
                    .ok_or_else(|| Error::SchemaMismatch(format!("unknown feature {n}")))
            })
            .collect::<Result<Vec<_>>>()?;
        self.select_features(&idx)
    }

    /// Keeps the samples at `indices` (which must be ascending to preserve order).
    fn subset(&self, indices: &[usize]) -> Dataset {
        let samples: Vec<LabeledSample> =
            indices.iter().map(|&i| self.samples[i].clone()).collect();
        let mut counts = ClassCounts::default();
        samples.iter().for_each(|s| counts.bump(s.label));
        Dataset {
            schema: self.schema.clone(),
            samples,
            counts,
        }
    }

    fn indices_of(&self, label: ClassLabel) -> Vec<usize> {
        self.samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.label == label)
            .map(|(i, _)| i)
            .collect()
    }

    /// Parses CSV with a header row. Feature columns are matched by name
    /// against `schema`; the label column must be named `NLOS`.
    pub fn read_csv<R: Read>(reader: R, schema: &[String]) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr.headers()?.clone();
        let header: Vec<&str> = header.iter().collect();

        let mut column_of = Vec::with_capacity(schema.len());
        for name in schema {
            match header.iter().position(|h| h == name) {
                Some(c) => column_of.push(c),
                None => {
                    return Err(Error::SchemaMismatch(format!("missing column {name}")));
                }
            }
        }
        let label_col = header
            .iter()
            .position(|h| *h == LABEL_COLUMN)
            .ok_or_else(|| Error::SchemaMismatch(format!("missing column {LABEL_COLUMN}")))?;
        if let Some(extra) = header
            .iter()
            .find(|h| **h != LABEL_COLUMN && !schema.iter().any(|s| s == *h))
        {
            return Err(Error::SchemaMismatch(format!("unexpected column {extra}")));
        }

        let mut samples = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let row = i + 1;
            let record = record.map_err(|e| Error::Parse {
                row,
                message: e.to_string(),
            })?;
            let mut values = Vec::with_capacity(schema.len());
            for (name, &c) in schema.iter().zip(&column_of) {
                let cell = record.get(c).unwrap_or("");
                let v: f64 = cell.parse().map_err(|_| Error::Parse {
                    row,
                    message: format!("column {name}: {cell:?} is not a number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        row,
                        message: format!("column {name}: value is not finite"),
                    });
                }
                values.push(v);
            }
            let label = match record.get(label_col).unwrap_or("") {
                "0" => ClassLabel::Los,
                "1" => ClassLabel::Nlos,
                other => {
                    return Err(Error::Parse {
                        row,
                        message: format!("label {other:?} is not 0 or 1"),
                    })
                }
            };
            samples.push(LabeledSample {
                features: FeatureVector(values),
                label,
            });
        }
        Dataset::new(schema.to_vec(), samples)
    }

    /// Writes the canonical CSV. Values use the shortest representation
    /// that parses back to the identical `f64`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.schema.iter().map(String::as_str).collect();
        header.push(LABEL_COLUMN);
        wtr.write_record(&header)?;
        for s in &self.samples {
            let mut rec: Vec<String> = s.features.0.iter().map(|v| v.to_string()).collect();
            rec.push(s.label.index().to_string());
            wtr.write_record(&rec)?;
        }
        wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Uniformly subsamples NLoS (without replacement) so that
    /// NLoS:LoS = `ratio`. LoS samples are untouched and order is preserved.
    pub fn subsample_ratio(&self, ratio: f64, seed: u64) -> Result<Dataset> {
        if !(ratio > 0.0 && ratio <= 1.0) {
            return Err(Error::Config(format!("ratio {ratio} outside (0, 1]")));
        }
        let wanted = (ratio * self.counts.los as f64).round() as usize;
        let nlos = self.indices_of(ClassLabel::Nlos);
        if wanted > nlos.len() {
            return Err(Error::InsufficientSamples {
                class: "NLOS",
                requested: wanted,
                available: nlos.len(),
            });
        }
        let mut rng = seeded_rng(seed);
        let mut keep = vec![false; self.samples.len()];
        for i in self.indices_of(ClassLabel::Los) {
            keep[i] = true;
        }
        for j in index::sample(&mut rng, nlos.len(), wanted) {
            keep[nlos[j]] = true;
        }
        let idx: Vec<usize> = (0..keep.len()).filter(|&i| keep[i]).collect();
        Ok(self.subset(&idx))
    }

    /// Splits into (train, test). Both sides keep the input's relative order.
    pub fn split_train_test(
        &self,
        test_fraction: f64,
        seed: u64,
        stratified: bool,
    ) -> Result<(Dataset, Dataset)> {
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(Error::EmptySplit(format!(
                "test fraction {test_fraction} outside (0, 1)"
            )));
        }
        let mut rng = seeded_rng(seed);
        let mut in_test = vec![false; self.samples.len()];

        let groups: Vec<(Vec<usize>, Option<ClassLabel>)> = if stratified {
            ClassLabel::ALL
                .iter()
                .map(|&c| (self.indices_of(c), Some(c)))
                .collect()
        } else {
            vec![((0..self.samples.len()).collect(), None)]
        };

        for (members, class) in groups {
            if let Some(c) = class {
                if members.len() < 2 {
                    return Err(Error::InsufficientSamples {
                        class: c.name(),
                        requested: 2,
                        available: members.len(),
                    });
                }
            }
            let name = class.map_or("dataset", ClassLabel::name);
            let n_test = (test_fraction * members.len() as f64).round() as usize;
            if n_test == 0 || n_test == members.len() {
                return Err(Error::EmptySplit(format!(
                    "fraction {test_fraction} of {} {name} samples leaves one side empty",
                    members.len()
                )));
            }
            for j in index::sample(&mut rng, members.len(), n_test) {
                in_test[members[j]] = true;
            }
        }

        let (test_idx, train_idx): (Vec<usize>, Vec<usize>) =
            (0..self.samples.len()).partition(|&i| in_test[i]);
        Ok((self.subset(&train_idx), self.subset(&test_idx)))
    }
}

/// Loads a CSV dataset from disk.
pub fn load_dataset(path: impl AsRef<Path>, schema: &[String]) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Dataset::read_csv(std::io::BufReader::new(file), schema)
        .map_err(|e| e.context(format!("loading {}", path.display())))
}
