use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::kernel::KernelSpec;
use super::smo::{self, SolverParams};
use super::{SvmError, TrainConfig, FORMAT_VERSION};
use crate::arff::{Attribute, Instance};
use crate::prep::{EncodedDataset, EncoderSpec, SplitSpec};

/// Read-only view of labelled feature rows.
pub trait RowAccess {
    fn len(&self) -> usize;
    fn dim(&self) -> usize;
    fn row(&self, i: usize) -> &[f64];
    fn label(&self, i: usize) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl RowAccess for EncodedDataset {
    fn len(&self) -> usize {
        EncodedDataset::len(self)
    }

    fn dim(&self) -> usize {
        EncodedDataset::dim(self)
    }

    fn row(&self, i: usize) -> &[f64] {
        EncodedDataset::row(self, i)
    }

    fn label(&self, i: usize) -> usize {
        self.labels[i]
    }
}

/// One pairwise classifier. `class_pair.1` is the positive side: a positive
/// decision value votes for it, anything else for `class_pair.0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmBinaryModel {
    pub class_pair: (usize, usize),
    pub support_vectors: Vec<Vec<f64>>,
    /// `α_i · y_i` per support vector.
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub kernel: KernelSpec,
    pub iterations: usize,
    pub converged: bool,
}

impl SvmBinaryModel {
    pub fn decision_value(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, c)| c * self.kernel.apply(sv, x))
            .sum::<f64>()
            + self.bias
    }

    /// Label this model votes for.
    pub fn vote(&self, x: &[f64]) -> usize {
        if self.decision_value(x) > 0.0 {
            self.class_pair.1
        } else {
            self.class_pair.0
        }
    }

    /// `Σ|coef| − ½ ΣΣ coef_i coef_j K(sv_i, sv_j)`.
    pub fn dual_objective(&self) -> f64 {
        let mut quad = 0.0;
        for (a, ca) in self.support_vectors.iter().zip(&self.coefficients) {
            for (b, cb) in self.support_vectors.iter().zip(&self.coefficients) {
                quad += ca * cb * self.kernel.apply(a, b);
            }
        }
        self.coefficients.iter().map(|c| c.abs()).sum::<f64>() - 0.5 * quad
    }
}

#[derive(Debug, Clone)]
pub struct BinaryTraining {
    pub model: SvmBinaryModel,
    /// Dual variables for every training row, positives first.
    pub alpha: Vec<f64>,
    pub objective: f64,
    pub gap: f64,
}

/// Train one C-SVC separating `pos` (label +1) from `neg` (label −1).
///
/// The returned model uses `class_pair = (0, 1)`; `train_ovo` relabels it.
pub fn train_binary(pos: &[&[f64]], neg: &[&[f64]], config: &TrainConfig) -> Result<BinaryTraining, SvmError> {
    config.validate()?;
    if pos.is_empty() {
        return Err(SvmError::EmptyClass("positive"));
    }
    if neg.is_empty() {
        return Err(SvmError::EmptyClass("negative"));
    }
    let dim = pos[0].len();
    if let Some(bad) = pos.iter().chain(neg).find(|r| r.len() != dim) {
        return Err(SvmError::DimensionMismatch {
            expected: dim,
            found: bad.len(),
        });
    }
    let kernel = config.kernel.resolved(dim);
    let rows: Vec<&[f64]> = pos.iter().chain(neg).copied().collect();
    let y: Vec<f64> = std::iter::repeat(1.0)
        .take(pos.len())
        .chain(std::iter::repeat(-1.0).take(neg.len()))
        .collect();
    let params = SolverParams {
        kernel,
        c: config.c,
        tolerance: config.tolerance,
        max_iterations: config.max_iterations,
        cache_budget: config.cache_budget,
        selection: config.selection,
        seed: config.seed,
    };
    let out = smo::solve(rows.clone(), &y, &params);
    let mut support_vectors = Vec::new();
    let mut coefficients = Vec::new();
    for ((row, &a), &yi) in rows.iter().zip(&out.alpha).zip(&y) {
        if a > 0.0 {
            support_vectors.push(row.to_vec());
            coefficients.push(a * yi);
        }
    }
    Ok(BinaryTraining {
        model: SvmBinaryModel {
            class_pair: (0, 1),
            support_vectors,
            coefficients,
            bias: -out.rho,
            kernel,
            iterations: out.iterations,
            converged: out.converged,
        },
        alpha: out.alpha,
        objective: out.objective,
        gap: out.gap,
    })
}

/// Indices of the rows labelled `a` or `b`.
pub fn rows_for_pair<R: RowAccess + ?Sized>(data: &R, a: usize, b: usize) -> (Vec<usize>, Vec<usize>) {
    let mut rows_a = Vec::new();
    let mut rows_b = Vec::new();
    for i in 0..data.len() {
        match data.label(i) {
            l if l == a => rows_a.push(i),
            l if l == b => rows_b.push(i),
            _ => {}
        }
    }
    (rows_a, rows_b)
}

#[derive(Debug, Clone, Serialize)]
pub struct PairStats {
    pub pair: (usize, usize),
    pub rows: usize,
    pub support_vectors: usize,
    pub iterations: usize,
    pub converged: bool,
    pub seconds: f64,
}

/// Train every pairwise model among the classes present in `data`.
///
/// Pairs are ordered `(i, j)` with `i < j`; results are independent of
/// whether they were trained in parallel.
pub fn train_pairs<R: RowAccess + Sync + ?Sized>(
    data: &R,
    num_classes: usize,
    config: &TrainConfig,
) -> Result<(Vec<SvmBinaryModel>, Vec<PairStats>), SvmError> {
    config.validate()?;
    let mut counts = vec![0usize; num_classes];
    for i in 0..data.len() {
        let l = data.label(i);
        if l >= num_classes {
            return Err(SvmError::InvalidConfig(format!("label {l} out of range")));
        }
        counts[l] += 1;
    }
    let present: Vec<usize> = (0..num_classes).filter(|&k| counts[k] > 0).collect();
    if present.len() < 2 {
        return Err(SvmError::SingleClass);
    }
    let pairs: Vec<(usize, usize)> = present
        .iter()
        .enumerate()
        .flat_map(|(n, &a)| present[n + 1..].iter().map(move |&b| (a, b)))
        .collect();

    let train_one = |&(a, b): &(usize, usize)| -> Result<(SvmBinaryModel, PairStats), SvmError> {
        let start = Instant::now();
        let (rows_a, rows_b) = rows_for_pair(data, a, b);
        let pos: Vec<&[f64]> = rows_b.iter().map(|&i| data.row(i)).collect();
        let neg: Vec<&[f64]> = rows_a.iter().map(|&i| data.row(i)).collect();
        let pair_config = TrainConfig {
            seed: config.seed.wrapping_add((a * num_classes + b) as u64),
            ..config.clone()
        };
        let mut fit = train_binary(&pos, &neg, &pair_config)?;
        fit.model.class_pair = (a, b);
        if !fit.model.converged {
            log::warn!("pair ({a}, {b}) hit the iteration limit");
        }
        let stats = PairStats {
            pair: (a, b),
            rows: pos.len() + neg.len(),
            support_vectors: fit.model.support_vectors.len(),
            iterations: fit.model.iterations,
            converged: fit.model.converged,
            seconds: start.elapsed().as_secs_f64(),
        };
        Ok((fit.model, stats))
    };

    let results: Vec<Result<_, _>> = if config.parallel {
        pairs.par_iter().map(train_one).collect()
    } else {
        pairs.iter().map(train_one).collect()
    };
    let mut models = Vec::with_capacity(results.len());
    let mut stats = Vec::with_capacity(results.len());
    for r in results {
        let (m, s) = r?;
        models.push(m);
        stats.push(s);
    }
    Ok((models, stats))
}

/// One-vs-one multi-class SVM.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmOvoModel {
    pub format_version: u32,
    pub label_names: Vec<String>,
    pub dimension: usize,
    pub binaries: Vec<SvmBinaryModel>,
    pub encoder: EncoderSpec,
    pub config: TrainConfig,
    /// Holdout split used when the model was trained, if any.
    pub split: Option<SplitSpec>,
}

#[derive(Debug, Clone)]
pub struct OvoTraining {
    pub model: SvmOvoModel,
    pub pairs: Vec<PairStats>,
    pub seconds: f64,
}

impl OvoTraining {
    pub fn all_converged(&self) -> bool {
        self.pairs.iter().all(|p| p.converged)
    }
}

pub fn train_ovo(train: &EncodedDataset, config: &TrainConfig) -> Result<OvoTraining, SvmError> {
    let start = Instant::now();
    let (binaries, pairs) = train_pairs(train, train.num_classes(), config)?;
    Ok(OvoTraining {
        model: SvmOvoModel {
            format_version: FORMAT_VERSION,
            label_names: train.label_names.clone(),
            dimension: train.dim(),
            binaries,
            encoder: train.encoder.clone(),
            config: TrainConfig {
                kernel: config.kernel.resolved(train.dim()),
                ..config.clone()
            },
            split: None,
        },
        pairs,
        seconds: start.elapsed().as_secs_f64(),
    })
}

impl SvmOvoModel {
    pub fn num_classes(&self) -> usize {
        self.label_names.len()
    }

    /// Vote counts per label for an encoded row.
    pub fn votes(&self, x: &[f64]) -> Vec<usize> {
        let mut votes = vec![0usize; self.num_classes()];
        for b in &self.binaries {
            votes[b.vote(x)] += 1;
        }
        votes
    }

    /// Majority vote over the pairwise models; ties go to the lowest label index.
    pub fn predict(&self, x: &[f64]) -> Result<usize, SvmError> {
        if x.len() != self.dimension {
            return Err(SvmError::DimensionMismatch {
                expected: self.dimension,
                found: x.len(),
            });
        }
        let votes = self.votes(x);
        let mut best = 0;
        for (k, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = k;
            }
        }
        Ok(best)
    }

    /// Encode a raw instance with the embedded encoder, then predict.
    pub fn predict_instance(&self, attributes: &[Attribute], inst: &Instance) -> Result<usize, SvmError> {
        let bound = self.encoder.bind(attributes)?;
        let mut row = Vec::with_capacity(bound.dimension());
        bound.encode_row(inst, &mut row)?;
        self.predict(&row)
    }

    pub fn predict_all(&self, data: &EncodedDataset) -> Result<Vec<usize>, SvmError> {
        data.rows().map(|r| self.predict(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svm::Selection;

    fn config() -> TrainConfig {
        TrainConfig {
            kernel: KernelSpec::linear(),
            c: 10.0,
            tolerance: 1e-8,
            parallel: false,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn two_point_linear_model() {
        let fit = train_binary(&[&[1.0]], &[&[-1.0]], &config()).unwrap();
        let m = &fit.model;
        assert!((fit.alpha[0] - 0.5).abs() < 1e-12 && (fit.alpha[1] - 0.5).abs() < 1e-12);
        assert!(m.bias.abs() < 1e-12);
        for x in [-3.0, -0.5, 0.25, 2.0] {
            assert!((m.decision_value(&[x]) - x).abs() < 1e-12);
        }
    }

    #[test]
    fn separable_data_respects_margin() {
        let pos: Vec<Vec<f64>> = (0..10).map(|i| vec![2.0 + i as f64 * 0.1, (i as f64).sin()]).collect();
        let neg: Vec<Vec<f64>> = (0..10).map(|i| vec![-2.0 - i as f64 * 0.1, (i as f64).cos()]).collect();
        let p: Vec<&[f64]> = pos.iter().map(Vec::as_slice).collect();
        let n: Vec<&[f64]> = neg.iter().map(Vec::as_slice).collect();
        let cfg = TrainConfig {
            c: 1e6,
            tolerance: 1e-3,
            ..config()
        };
        let m = train_binary(&p, &n, &cfg).unwrap().model;
        for x in &p {
            assert!(m.decision_value(x) >= 1.0 - 1e-3);
        }
        for x in &n {
            assert!(-m.decision_value(x) >= 1.0 - 1e-3);
        }
        assert!(m.coefficients.iter().sum::<f64>().abs() < 1e-8);
    }

    #[test]
    fn empty_side_and_bad_config() {
        assert!(matches!(train_binary(&[], &[&[1.0]], &config()), Err(SvmError::EmptyClass(_))));
        let bad = TrainConfig { c: 0.0, ..config() };
        assert!(matches!(train_binary(&[&[1.0]], &[&[0.0]], &bad), Err(SvmError::InvalidConfig(_))));
        assert!(matches!(
            train_binary(&[&[1.0]], &[&[0.0, 1.0]], &config()),
            Err(SvmError::DimensionMismatch { .. })
        ));
    }

    fn fixed(pair: (usize, usize), bias: f64) -> SvmBinaryModel {
        SvmBinaryModel {
            class_pair: pair,
            support_vectors: vec![],
            coefficients: vec![],
            bias,
            kernel: KernelSpec::linear(),
            iterations: 0,
            converged: true,
        }
    }

    fn ovo(binaries: Vec<SvmBinaryModel>, k: usize) -> SvmOvoModel {
        SvmOvoModel {
            format_version: FORMAT_VERSION,
            label_names: (0..k).map(|i| i.to_string()).collect(),
            dimension: 1,
            binaries,
            encoder: EncoderSpec {
                class_attribute: "c".into(),
                class_labels: vec![],
                features: vec![],
                rare_bucket: None,
            },
            config: config(),
            split: None,
        }
    }

    #[test]
    fn positive_decision_votes_for_higher_label() {
        assert_eq!(ovo(vec![fixed((0, 1), 0.5)], 2).predict(&[0.0]).unwrap(), 1);
        assert_eq!(ovo(vec![fixed((0, 1), -0.5)], 2).predict(&[0.0]).unwrap(), 0);
    }

    #[test]
    fn vote_cycle_goes_to_lowest_label() {
        // (0,1) -> 0, (0,2) -> 2, (1,2) -> 1: one vote each.
        let m = ovo(vec![fixed((0, 1), -1.0), fixed((0, 2), 1.0), fixed((1, 2), -1.0)], 3);
        assert_eq!(m.votes(&[0.0]), [1, 1, 1]);
        assert_eq!(m.predict(&[0.0]).unwrap(), 0);
    }

    #[test]
    fn unanimous_votes_win() {
        let m = ovo(vec![fixed((0, 1), 1.0), fixed((0, 2), -5.0), fixed((1, 2), -0.1)], 3);
        assert_eq!(m.predict(&[0.0]).unwrap(), 1);
    }

    #[test]
    fn pair_rows_only_cover_the_pair() {
        let e = EncodedDataset::from_parts(
            vec![0.0, 1.0, 2.0, 3.0, 4.0],
            1,
            vec![0, 1, 2, 1, 0],
            vec!["a".into(), "b".into(), "c".into()],
            ovo(vec![], 3).encoder,
        );
        assert_eq!(rows_for_pair(&e, 0, 1), (vec![0, 4], vec![1, 3]));
        assert_eq!(rows_for_pair(&e, 1, 2), (vec![1, 3], vec![2]));
    }

    #[test]
    fn absent_classes_are_skipped() {
        let e = EncodedDataset::from_parts(
            vec![0.0, 0.1, 1.0, 1.1],
            1,
            vec![0, 0, 2, 2],
            vec!["a".into(), "b".into(), "c".into()],
            ovo(vec![], 3).encoder,
        );
        let t = train_ovo(&e, &config()).unwrap();
        assert_eq!(t.model.binaries.len(), 1);
        assert_eq!(t.model.binaries[0].class_pair, (0, 2));
        assert_eq!(t.model.predict(&[1.2]).unwrap(), 2);

        let single = e.subset(&[0, 1]);
        assert!(matches!(train_ovo(&single, &config()), Err(SvmError::SingleClass)));
    }

    #[test]
    fn random_selection_is_seeded() {
        let e = EncodedDataset::from_parts(
            (0..60).map(|i| ((i * 7) % 13) as f64 / 13.0).collect(),
            2,
            (0..30).map(|i| i % 3).collect(),
            vec!["a".into(), "b".into(), "c".into()],
            ovo(vec![], 3).encoder,
        );
        let cfg = TrainConfig {
            kernel: KernelSpec::rbf(0.0),
            selection: Selection::RandomSecond,
            tolerance: 1e-3,
            c: 1.0,
            ..config()
        };
        let a = train_ovo(&e, &cfg).unwrap().model;
        let b = train_ovo(&e, &cfg).unwrap().model;
        assert_eq!(a, b);
    }
}
