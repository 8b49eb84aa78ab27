//! WEKA-compatible evaluation: confusion matrix, summary statistics and
//! the text/JSON renderings of both.
//!
//! Error measures follow WEKA's definitions over class-probability vectors.
//! A hard classifier emits the indicator vector of its predicted class, the
//! target is the indicator of the actual class, and the ZeroR baseline emits
//! the training-split class priors for every instance.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("actual and predicted lists differ in length ({actual} vs {predicted})")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("label index {0} is outside the label list")]
    UnknownLabel(usize),
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("class vectors have {found} entries, expected {expected}")]
    ClassCountMismatch { expected: usize, found: usize },
    #[error("test class counts sum to {counts}, matrix holds {matrix}")]
    TotalMismatch { counts: u64, matrix: u64 },
    #[error("train priors sum to {0}, expected 1")]
    PriorsNotNormalised(f64),
}

/// Rows are actual classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_counts(labels: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self, EvalError> {
        let k = labels.len();
        if counts.len() != k {
            return Err(EvalError::ClassCountMismatch { expected: k, found: counts.len() });
        }
        if let Some(row) = counts.iter().find(|r| r.len() != k) {
            return Err(EvalError::ClassCountMismatch { expected: k, found: row.len() });
        }
        Ok(Self { labels, counts })
    }

    pub fn num_classes(&self) -> usize {
        self.labels.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.num_classes()).map(|k| self.counts[k][k]).sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.num_classes())
            .map(|j| self.counts.iter().map(|r| r[j]).sum())
            .collect()
    }
}

pub fn confusion(actual: &[usize], predicted: &[usize], labels: &[String]) -> Result<ConfusionMatrix, EvalError> {
    if actual.len() != predicted.len() {
        return Err(EvalError::LengthMismatch {
            actual: actual.len(),
            predicted: predicted.len(),
        });
    }
    let k = labels.len();
    let mut counts = vec![vec![0u64; k]; k];
    for (&a, &p) in actual.iter().zip(predicted) {
        if a >= k {
            return Err(EvalError::UnknownLabel(a));
        }
        if p >= k {
            return Err(EvalError::UnknownLabel(p));
        }
        counts[a][p] += 1;
    }
    Ok(ConfusionMatrix {
        labels: labels.to_vec(),
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassStats {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalSummary {
    pub n: u64,
    pub correct: u64,
    pub incorrect: u64,
    pub accuracy: f64,
    pub kappa: f64,
    /// Set when chance agreement is 1 and kappa is defined by convention.
    pub kappa_degenerate: bool,
    pub mae: f64,
    pub rmse: f64,
    pub rae: f64,
    pub rrse: f64,
    pub train_priors: Vec<f64>,
    pub per_class: Vec<ClassStats>,
}

/// Slot-wise error sums over a stream of probability vectors.
#[derive(Debug, Clone, Default)]
pub struct ErrorSums {
    pub abs: f64,
    pub sq: f64,
    pub baseline_abs: f64,
    pub baseline_sq: f64,
    pub instances: u64,
    pub slots: u64,
}

impl ErrorSums {
    /// Add one instance: predicted distribution, actual class, baseline distribution.
    pub fn add(&mut self, predicted: &[f64], actual: usize, baseline: &[f64]) {
        for (j, (&p, &b)) in predicted.iter().zip(baseline).enumerate() {
            let y = if j == actual { 1.0 } else { 0.0 };
            self.abs += (p - y).abs();
            self.sq += (p - y) * (p - y);
            self.baseline_abs += (b - y).abs();
            self.baseline_sq += (b - y) * (b - y);
        }
        self.instances += 1;
        self.slots += predicted.len() as u64;
    }

    pub fn mae(&self) -> f64 {
        self.abs / self.slots as f64
    }

    pub fn rmse(&self) -> f64 {
        (self.sq / self.slots as f64).sqrt()
    }

    pub fn rae(&self) -> f64 {
        self.abs / self.baseline_abs
    }

    pub fn rrse(&self) -> f64 {
        (self.sq / self.baseline_sq).sqrt()
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Summary statistics for hard predictions tallied in `m`.
pub fn summarize(m: &ConfusionMatrix, train_priors: &[f64], test_class_counts: &[u64]) -> Result<EvalSummary, EvalError> {
    let k = m.num_classes();
    let n = m.total();
    if n == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    for len in [train_priors.len(), test_class_counts.len()] {
        if len != k {
            return Err(EvalError::ClassCountMismatch { expected: k, found: len });
        }
    }
    let counted: u64 = test_class_counts.iter().sum();
    if counted != n {
        return Err(EvalError::TotalMismatch { counts: counted, matrix: n });
    }
    let prior_sum: f64 = train_priors.iter().sum();
    if (prior_sum - 1.0).abs() > 1e-9 {
        return Err(EvalError::PriorsNotNormalised(prior_sum));
    }

    let nf = n as f64;
    let correct = m.correct();
    let incorrect = n - correct;
    let accuracy = correct as f64 / nf;
    let rows = m.row_sums();
    let cols = m.col_sums();
    let chance: f64 = rows
        .iter()
        .zip(&cols)
        .map(|(&r, &c)| r as f64 * c as f64)
        .sum::<f64>()
        / (nf * nf);
    let (kappa, kappa_degenerate) = if (1.0 - chance).abs() < f64::EPSILON {
        (if correct == n { 1.0 } else { 0.0 }, true)
    } else {
        ((accuracy - chance) / (1.0 - chance), false)
    };

    // Per instance of actual class a predicted as p (a != p): |e| sums to 2, e² sums to 2.
    // Baseline for actual a: Σ_j |π_j − y_j| = 2(1 − π_a); Σ_j (π_j − y_j)² = 1 − 2π_a + Σπ².
    let slots = nf * k as f64;
    let err_abs = 2.0 * incorrect as f64;
    let err_sq = 2.0 * incorrect as f64;
    let pi_sq: f64 = train_priors.iter().map(|p| p * p).sum();
    let (mut base_abs, mut base_sq) = (0.0, 0.0);
    for (a, &count) in rows.iter().enumerate() {
        let pa = train_priors[a];
        base_abs += count as f64 * 2.0 * (1.0 - pa);
        base_sq += count as f64 * (1.0 - 2.0 * pa + pi_sq);
    }

    let per_class = (0..k)
        .map(|c| {
            let tp = m.counts[c][c] as f64;
            let precision = ratio(tp, cols[c] as f64);
            let recall = ratio(tp, rows[c] as f64);
            ClassStats {
                label: m.labels[c].clone(),
                precision,
                recall,
                f1: ratio(2.0 * precision * recall, precision + recall),
            }
        })
        .collect();

    Ok(EvalSummary {
        n,
        correct,
        incorrect,
        accuracy,
        kappa,
        kappa_degenerate,
        mae: err_abs / slots,
        rmse: (err_sq / slots).sqrt(),
        rae: err_abs / base_abs,
        rrse: (err_sq / base_sq).sqrt(),
        train_priors: train_priors.to_vec(),
        per_class,
    })
}

/// Column letters: a..z, then aa, ab, ...
pub fn column_id(mut index: usize) -> String {
    let mut out = Vec::new();
    loop {
        out.push(b'a' + (index % 26) as u8);
        if index < 26 {
            break;
        }
        index = index / 26 - 1;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii")
}

const LABEL_WIDTH: usize = 35;

fn stat_line(out: &mut String, label: &str, value: &str) {
    out.push_str(&format!("{label:<LABEL_WIDTH$}{value}\n"));
}

fn count_line(out: &mut String, label: &str, count: u64, percent: f64) {
    out.push_str(&format!("{label:<LABEL_WIDTH$}{:<16}{percent:.4} %\n", count));
}

/// WEKA's `=== Summary ===` block.
pub fn format_summary(s: &EvalSummary) -> String {
    let mut out = String::from("=== Summary ===\n\n");
    count_line(&mut out, "Correctly Classified Instances", s.correct, 100.0 * s.accuracy);
    count_line(
        &mut out,
        "Incorrectly Classified Instances",
        s.incorrect,
        100.0 * s.incorrect as f64 / s.n as f64,
    );
    stat_line(&mut out, "Kappa statistic", &format!("{:.4}", s.kappa));
    stat_line(&mut out, "Mean absolute error", &format!("{:.4}", s.mae));
    stat_line(&mut out, "Root mean squared error", &format!("{:.4}", s.rmse));
    stat_line(&mut out, "Relative absolute error", &format!("{:.4} %", 100.0 * s.rae));
    stat_line(&mut out, "Root relative squared error", &format!("{:.4} %", 100.0 * s.rrse));
    stat_line(&mut out, "Total Number of Instances", &s.n.to_string());
    out
}

/// WEKA's `=== Confusion Matrix ===` block.
pub fn format_confusion(m: &ConfusionMatrix) -> String {
    let k = m.num_classes();
    let ids: Vec<String> = (0..k).map(column_id).collect();
    let widest_count = m.counts.iter().flatten().max().copied().unwrap_or(0).to_string().len();
    let widest_id = ids.iter().map(String::len).max().unwrap_or(1);
    let width = widest_count.max(widest_id) + 1;
    let mut out = String::from("=== Confusion Matrix ===\n\n");
    for id in &ids {
        out.push_str(&format!("{id:>width$}"));
    }
    out.push_str("   <-- classified as\n");
    for ((row, id), label) in m.counts.iter().zip(&ids).zip(&m.labels) {
        for c in row {
            out.push_str(&format!("{c:>width$}"));
        }
        out.push_str(&format!(" | {id} = {label}\n"));
    }
    out
}

/// Header fields for the `=== Run information ===` block.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunInfo {
    pub scheme: String,
    pub relation: String,
    pub instances: usize,
    pub attributes: Vec<String>,
    pub test_mode: String,
}

pub fn format_run_info(info: &RunInfo) -> String {
    let mut out = String::from("=== Run information ===\n\n");
    out.push_str(&format!("Scheme:       {}\n", info.scheme));
    out.push_str(&format!("Relation:     {}\n", info.relation));
    out.push_str(&format!("Instances:    {}\n", info.instances));
    out.push_str(&format!("Attributes:   {}\n", info.attributes.len()));
    for a in &info.attributes {
        out.push_str(&format!("              {a}\n"));
    }
    out.push_str(&format!("Test mode:    {}\n", info.test_mode));
    out
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Timings {
    pub build_seconds: Option<f64>,
    pub test_seconds: Option<f64>,
}

/// Full WEKA-style evaluation report.
pub fn format_report(info: Option<&RunInfo>, s: &EvalSummary, m: &ConfusionMatrix, timings: Timings) -> String {
    let mut out = String::new();
    if let Some(info) = info {
        out.push_str(&format_run_info(info));
        out.push('\n');
    }
    if let Some(t) = timings.build_seconds {
        out.push_str(&format!("Time taken to build model: {t:.2} seconds\n\n"));
    }
    out.push_str("=== Evaluation on test split ===\n\n");
    if let Some(t) = timings.test_seconds {
        out.push_str(&format!("Time taken to test model on test split: {t:.2} seconds\n\n"));
    }
    out.push_str(&format_summary(s));
    out.push('\n');
    out.push_str(&format_confusion(m));
    out
}

/// Machine-readable evaluation record.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_label: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub task: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_percent: Option<f64>,
    pub summary: &'a EvalSummary,
    pub confusion_matrix: &'a ConfusionMatrix,
}

pub fn to_json(report: &EvalReport<'_>) -> String {
    serde_json::to_string_pretty(report).expect("evaluation report serialises")
}
