//! Turning a filtered dataset into numeric training data.
//!
//! Nominal features are one-hot encoded, numeric features are min-max scaled
//! into `[0, 1]` (or passed through unscaled), and rare nominal values can be
//! folded into a single bucket. The fitted [`EncoderSpec`] travels inside the
//! model file so prediction-time encoding is self-contained.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::arff::{AttributeKind, Dataset, Instance, Value};
use crate::text::{quote, words};

#[derive(Debug, Error, PartialEq)]
pub enum PrepError {
    #[error("class attribute {0:?} is not nominal")]
    NotNominalClass(String),
    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),
    #[error("dataset has no instances")]
    EmptyDataset,
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("unseen value {value:?} for attribute {attribute:?}")]
    UnseenNominal { attribute: String, value: String },
    #[error("instance {row} has a missing class value")]
    MissingClass { row: usize },
    #[error("train percentage {0} is outside (0, 100)")]
    InvalidPercent(f64),
    #[error("split of {n} rows leaves train={train}, test={test}")]
    DegenerateSplit { n: usize, train: usize, test: usize },
    #[error("bad encoder description: {0}")]
    CorruptEncoder(String),
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RareBucket {
    /// Values seen fewer than this many times are folded into the bucket.
    pub min_support: usize,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum FeatureRule {
    OneHot { values: Vec<String> },
    MinMax { min: f64, max: f64 },
    Passthrough,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FeatureEncoding {
    pub attribute: String,
    pub rule: FeatureRule,
}

impl FeatureEncoding {
    pub fn width(&self) -> usize {
        match &self.rule {
            FeatureRule::OneHot { values } => values.len(),
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EncoderSpec {
    pub class_attribute: String,
    pub class_labels: Vec<String>,
    pub features: Vec<FeatureEncoding>,
    pub rare_bucket: Option<RareBucket>,
}

#[derive(Debug, Clone, Default)]
pub struct FitOptions {
    /// Min-max scale numeric features; otherwise pass them through.
    pub scale: bool,
    pub rare_bucket: Option<RareBucket>,
}

impl FitOptions {
    pub fn scaled() -> Self {
        Self {
            scale: true,
            rare_bucket: None,
        }
    }
}

fn fold_rare(values: &[String], counts: &[usize], bucket: Option<&RareBucket>) -> Vec<String> {
    let min_support = bucket.map_or(0, |b| b.min_support);
    let mut kept: Vec<String> = values
        .iter()
        .zip(counts)
        .filter(|&(_, &c)| c > 0 && c >= min_support)
        .map(|(v, _)| v.clone())
        .collect();
    if let Some(b) = bucket {
        let folded = values
            .iter()
            .zip(counts)
            .any(|(_, &c)| c > 0 && c < min_support);
        if folded && !kept.contains(&b.label) {
            kept.push(b.label.clone());
        }
    }
    kept
}

/// Derive an encoder from the observed data.
///
/// Every attribute other than the class becomes a feature, except string
/// attributes, which carry no encodable signal and are skipped.
pub fn fit_encoder(d: &Dataset, class_attribute: &str, options: &FitOptions) -> Result<EncoderSpec, PrepError> {
    let class_pos = d
        .attribute_index(class_attribute)
        .ok_or_else(|| PrepError::UnknownAttribute(class_attribute.to_string()))?;
    if d.attributes[class_pos].nominal_values().is_none() {
        return Err(PrepError::NotNominalClass(class_attribute.to_string()));
    }
    if d.instances.is_empty() {
        return Err(PrepError::EmptyDataset);
    }
    let bucket = options.rare_bucket.as_ref().filter(|b| b.min_support > 0);

    let mut class_labels = Vec::new();
    let mut features = Vec::new();
    for (pos, attr) in d.attributes.iter().enumerate() {
        match &attr.kind {
            AttributeKind::Nominal(values) => {
                let mut counts = vec![0usize; values.len()];
                for inst in &d.instances {
                    if let Value::Nominal(i) = inst.values[pos] {
                        counts[i] += 1;
                    }
                }
                let kept = fold_rare(values, &counts, bucket);
                if pos == class_pos {
                    class_labels = kept;
                } else {
                    features.push(FeatureEncoding {
                        attribute: attr.name.clone(),
                        rule: FeatureRule::OneHot { values: kept },
                    });
                }
            }
            AttributeKind::Numeric => {
                let rule = if options.scale {
                    let (min, max) = d
                        .instances
                        .iter()
                        .filter_map(|inst| match inst.values[pos] {
                            Value::Number(x) => Some(x),
                            _ => None,
                        })
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
                    if min.is_finite() {
                        FeatureRule::MinMax { min, max }
                    } else {
                        FeatureRule::MinMax { min: 0.0, max: 0.0 }
                    }
                } else {
                    FeatureRule::Passthrough
                };
                features.push(FeatureEncoding {
                    attribute: attr.name.clone(),
                    rule,
                });
            }
            AttributeKind::String => {}
        }
    }
    let spec = EncoderSpec {
        class_attribute: class_attribute.to_string(),
        class_labels,
        features,
        rare_bucket: bucket.cloned(),
    };
    for name in spec.degenerate_features() {
        log::warn!("numeric attribute {name:?} is constant; it encodes to 0");
    }
    Ok(spec)
}

impl EncoderSpec {
    pub fn dimension(&self) -> usize {
        self.features.iter().map(FeatureEncoding::width).sum()
    }

    /// Min-max features whose observed range is a single point.
    pub fn degenerate_features(&self) -> Vec<&str> {
        self.features
            .iter()
            .filter(|f| matches!(f.rule, FeatureRule::MinMax { min, max } if min >= max))
            .map(|f| f.attribute.as_str())
            .collect()
    }

    /// Resolve attribute positions and nominal value mappings against a schema.
    pub fn bind<'a>(&'a self, attributes: &[crate::arff::Attribute]) -> Result<BoundEncoder<'a>, PrepError> {
        let find = |name: &str| {
            attributes
                .iter()
                .position(|a| a.name == name)
                .ok_or_else(|| PrepError::SchemaMismatch(format!("attribute {name:?} not found")))
        };
        let bucket_slot = |values: &[String]| {
            self.rare_bucket
                .as_ref()
                .map(|b| values.iter().position(|v| *v == b.label).map_or(Slot::Zero, Slot::Index))
        };
        let nominal_map = |data_values: &[String], values: &[String]| -> Vec<Slot> {
            let index: HashMap<&str, usize> = values.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
            data_values
                .iter()
                .map(|v| match index.get(v.as_str()) {
                    Some(&i) => Slot::Index(i),
                    None => bucket_slot(values).unwrap_or(Slot::Unseen),
                })
                .collect()
        };

        let mut columns = Vec::with_capacity(self.features.len());
        let mut offset = 0;
        for f in &self.features {
            let pos = find(&f.attribute)?;
            let attr = &attributes[pos];
            let column = match (&f.rule, &attr.kind) {
                (FeatureRule::OneHot { values }, AttributeKind::Nominal(data_values)) => Column::OneHot {
                    slots: nominal_map(data_values, values),
                },
                (FeatureRule::MinMax { min, max }, AttributeKind::Numeric) => Column::MinMax { min: *min, max: *max },
                (FeatureRule::Passthrough, AttributeKind::Numeric) => Column::Passthrough,
                _ => {
                    return Err(PrepError::SchemaMismatch(format!(
                        "attribute {:?} has a different type than at training time",
                        f.attribute
                    )))
                }
            };
            columns.push(BoundColumn {
                position: pos,
                offset,
                column,
            });
            offset += f.width();
        }

        let class = match find(&self.class_attribute) {
            Ok(pos) => match attributes[pos].nominal_values() {
                Some(data_values) => Some((pos, nominal_map(data_values, &self.class_labels))),
                None => return Err(PrepError::NotNominalClass(self.class_attribute.clone())),
            },
            Err(_) => None,
        };
        Ok(BoundEncoder {
            spec: self,
            attributes: attributes.to_vec(),
            columns,
            class,
            dimension: offset,
        })
    }

    /// Render as the line-oriented text block embedded in model files.
    pub fn to_text(&self) -> String {
        let list = |vals: &[String]| {
            vals.iter()
                .map(|v| quote(v).into_owned())
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut out = String::new();
        out.push_str(&format!("encoder {}\n", quote(&self.class_attribute)));
        out.push_str(&format!("class_labels {} {}\n", self.class_labels.len(), list(&self.class_labels)));
        match &self.rare_bucket {
            Some(b) => out.push_str(&format!("rare_bucket {} {}\n", b.min_support, quote(&b.label))),
            None => out.push_str("rare_bucket none\n"),
        }
        out.push_str(&format!("features {}\n", self.features.len()));
        for f in &self.features {
            let name = quote(&f.attribute);
            match &f.rule {
                FeatureRule::OneHot { values } => {
                    out.push_str(&format!("feature {name} one_hot {} {}\n", values.len(), list(values)))
                }
                FeatureRule::MinMax { min, max } => out.push_str(&format!("feature {name} min_max {min:?} {max:?}\n")),
                FeatureRule::Passthrough => out.push_str(&format!("feature {name} passthrough\n")),
            }
        }
        out
    }

    /// Parse the block written by [`EncoderSpec::to_text`]. Consumes lines
    /// from `lines` and reports problems with their line numbers.
    pub fn from_lines<'a, I>(lines: &mut I) -> Result<Self, (usize, PrepError)>
    where
        I: Iterator<Item = (usize, &'a str)>,
    {
        let mut next = |what: &str| -> Result<(usize, Vec<String>, Vec<bool>), (usize, PrepError)> {
            let (no, line) = lines
                .next()
                .ok_or((0, PrepError::CorruptEncoder(format!("missing {what} line"))))?;
            let toks = words(line).map_err(|e| (no, PrepError::CorruptEncoder(e.to_string())))?;
            if toks.first().map(|t| t.text.as_str()) != Some(what) {
                return Err((no, PrepError::CorruptEncoder(format!("expected {what}"))));
            }
            let quoted = toks.iter().map(|t| t.quoted).collect();
            Ok((no, toks.into_iter().map(|t| t.text).collect(), quoted))
        };
        let corrupt = |no: usize, msg: &str| (no, PrepError::CorruptEncoder(msg.to_string()));
        let count = |no: usize, s: &str| s.parse::<usize>().map_err(|_| corrupt(no, "bad count"));
        let real = |no: usize, s: &str| s.parse::<f64>().map_err(|_| corrupt(no, "bad number"));
        let counted_list = |no: usize, toks: &[String]| -> Result<Vec<String>, (usize, PrepError)> {
            let n = count(no, toks.first().ok_or_else(|| corrupt(no, "missing count"))?)?;
            if toks.len() != n + 1 {
                return Err(corrupt(no, "value count does not match"));
            }
            Ok(toks[1..].to_vec())
        };

        let (no, toks, _) = next("encoder")?;
        if toks.len() != 2 {
            return Err(corrupt(no, "encoder line needs a class attribute"));
        }
        let class_attribute = toks[1].clone();
        let (no, toks, _) = next("class_labels")?;
        let class_labels = counted_list(no, &toks[1..])?;
        let (no, toks, quoted) = next("rare_bucket")?;
        let rare_bucket = match toks.len() {
            2 if toks[1] == "none" && !quoted[1] => None,
            3 => Some(RareBucket {
                min_support: count(no, &toks[1])?,
                label: toks[2].clone(),
            }),
            _ => return Err(corrupt(no, "bad rare_bucket line")),
        };
        let (no, toks, _) = next("features")?;
        if toks.len() != 2 {
            return Err(corrupt(no, "bad features line"));
        }
        let n = count(no, &toks[1])?;
        let mut features = Vec::with_capacity(n);
        for _ in 0..n {
            let (no, toks, _) = next("feature")?;
            if toks.len() < 3 {
                return Err(corrupt(no, "short feature line"));
            }
            let rule = match toks[2].as_str() {
                "one_hot" => FeatureRule::OneHot {
                    values: counted_list(no, &toks[3..])?,
                },
                "min_max" if toks.len() == 5 => FeatureRule::MinMax {
                    min: real(no, &toks[3])?,
                    max: real(no, &toks[4])?,
                },
                "passthrough" if toks.len() == 3 => FeatureRule::Passthrough,
                _ => return Err(corrupt(no, "unknown feature rule")),
            };
            features.push(FeatureEncoding {
                attribute: toks[1].clone(),
                rule,
            });
        }
        Ok(Self {
            class_attribute,
            class_labels,
            features,
            rare_bucket,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot {
    Index(usize),
    /// Unknown value folded into an absent bucket: all-zero block.
    Zero,
    Unseen,
}

#[derive(Debug, Clone)]
enum Column {
    OneHot { slots: Vec<Slot> },
    MinMax { min: f64, max: f64 },
    Passthrough,
}

#[derive(Debug, Clone)]
struct BoundColumn {
    position: usize,
    offset: usize,
    column: Column,
}

/// An [`EncoderSpec`] resolved against a concrete attribute list.
#[derive(Debug, Clone)]
pub struct BoundEncoder<'a> {
    spec: &'a EncoderSpec,
    attributes: Vec<crate::arff::Attribute>,
    columns: Vec<BoundColumn>,
    class: Option<(usize, Vec<Slot>)>,
    dimension: usize,
}

impl BoundEncoder<'_> {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    fn unseen(&self, pos: usize, idx: usize) -> PrepError {
        let attr = &self.attributes[pos];
        PrepError::UnseenNominal {
            attribute: attr.name.clone(),
            value: attr.nominal_values().map(|v| v[idx].clone()).unwrap_or_default(),
        }
    }

    /// Encode the feature part of one instance into `out` (cleared first).
    /// Returns how many numeric values were clamped into `[0, 1]`.
    pub fn encode_row(&self, inst: &Instance, out: &mut Vec<f64>) -> Result<usize, PrepError> {
        out.clear();
        out.resize(self.dimension, 0.0);
        let mut clamped = 0;
        for col in &self.columns {
            let value = inst
                .values
                .get(col.position)
                .ok_or_else(|| PrepError::SchemaMismatch("instance is shorter than the schema".into()))?;
            match (&col.column, value) {
                (_, Value::Missing) => {}
                (Column::OneHot { slots }, Value::Nominal(i)) => match slots.get(*i) {
                    Some(Slot::Index(s)) => out[col.offset + s] = 1.0,
                    Some(Slot::Zero) => {}
                    _ => return Err(self.unseen(col.position, *i)),
                },
                (Column::MinMax { min, max }, Value::Number(x)) => {
                    if max > min {
                        let scaled = (x - min) / (max - min);
                        if !(0.0..=1.0).contains(&scaled) {
                            clamped += 1;
                        }
                        out[col.offset] = scaled.clamp(0.0, 1.0);
                    }
                }
                (Column::Passthrough, Value::Number(x)) => out[col.offset] = *x,
                _ => return Err(PrepError::SchemaMismatch("cell type does not match its attribute".into())),
            }
        }
        Ok(clamped)
    }

    /// Class label index of an instance.
    pub fn encode_class(&self, inst: &Instance, row: usize) -> Result<usize, PrepError> {
        let (pos, slots) = self
            .class
            .as_ref()
            .ok_or_else(|| PrepError::SchemaMismatch(format!("class attribute {:?} not found", self.spec.class_attribute)))?;
        match inst.values.get(*pos) {
            Some(Value::Nominal(i)) => match slots.get(*i) {
                Some(Slot::Index(s)) => Ok(*s),
                _ => Err(self.unseen(*pos, *i)),
            },
            Some(Value::Missing) => Err(PrepError::MissingClass { row }),
            _ => Err(PrepError::SchemaMismatch("class cell is not nominal".into())),
        }
    }
}

/// Numeric feature matrix (row-major) with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDataset {
    features: Vec<f64>,
    dim: usize,
    pub labels: Vec<usize>,
    pub label_names: Vec<String>,
    pub encoder: EncoderSpec,
    /// Numeric values that fell outside the fitted range and were clamped.
    pub clamped: usize,
}

impl EncodedDataset {
    pub fn from_parts(
        features: Vec<f64>,
        dim: usize,
        labels: Vec<usize>,
        label_names: Vec<String>,
        encoder: EncoderSpec,
    ) -> Self {
        assert_eq!(features.len(), dim * labels.len(), "feature matrix shape");
        Self {
            features,
            dim,
            labels,
            label_names,
            encoder,
            clamped: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.len()).map(move |i| self.row(i))
    }

    pub fn num_classes(&self) -> usize {
        self.label_names.len()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Self {
            features,
            dim: self.dim,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            label_names: self.label_names.clone(),
            encoder: self.encoder.clone(),
            clamped: 0,
        }
    }

    /// Per-class relative frequencies.
    pub fn class_priors(&self) -> Vec<f64> {
        let mut counts = vec![0usize; self.num_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        let n = self.len().max(1) as f64;
        counts.into_iter().map(|c| c as f64 / n).collect()
    }
}

/// Encode every instance of `d`.
pub fn encode(d: &Dataset, spec: &EncoderSpec) -> Result<EncodedDataset, PrepError> {
    let bound = spec.bind(&d.attributes)?;
    let dim = bound.dimension();
    let mut features = Vec::with_capacity(d.num_instances() * dim);
    let mut labels = Vec::with_capacity(d.num_instances());
    let mut row = Vec::with_capacity(dim);
    let mut clamped = 0;
    for (i, inst) in d.instances.iter().enumerate() {
        clamped += bound.encode_row(inst, &mut row)?;
        features.extend_from_slice(&row);
        labels.push(bound.encode_class(inst, i)?);
    }
    if clamped > 0 {
        log::warn!("{clamped} numeric value(s) clamped into [0, 1]");
    }
    Ok(EncodedDataset {
        features,
        dim,
        labels,
        label_names: spec.class_labels.clone(),
        encoder: spec.clone(),
        clamped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SplitSpec {
    pub train_percent: f64,
    pub shuffle: bool,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_percent: 70.0,
            shuffle: false,
            seed: 1,
        }
    }
}

/// Number of training rows: `N × p / 100` rounded half-up.
pub fn train_size(n: usize, train_percent: f64) -> usize {
    (n as f64 * train_percent / 100.0 + 0.5).floor() as usize
}

/// Row indices of the train and test sides.
pub fn split_indices(n: usize, s: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>), PrepError> {
    if !(s.train_percent > 0.0 && s.train_percent < 100.0) {
        return Err(PrepError::InvalidPercent(s.train_percent));
    }
    let train = train_size(n, s.train_percent);
    if train == 0 || train >= n {
        return Err(PrepError::DegenerateSplit {
            n,
            train,
            test: n.saturating_sub(train),
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    if s.shuffle {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(s.seed));
    }
    let test = order.split_off(train);
    Ok((order, test))
}

/// WEKA-style holdout split: first `train_percent`% for training, the rest for testing.
pub fn percentage_split(e: &EncodedDataset, s: &SplitSpec) -> Result<(EncodedDataset, EncodedDataset), PrepError> {
    let (train, test) = split_indices(e.len(), s)?;
    Ok((e.subset(&train), e.subset(&test)))
}
