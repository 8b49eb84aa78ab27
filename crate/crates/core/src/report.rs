//! Weekly traffic summaries: top destinations, top protocols and Length statistics.
//!
//! Counts are packet counts. Frequency tables are sorted by descending count
//! with ties broken lexicographically, so rendered output is byte-stable.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::arff::{AttributeKind, Dataset, Value};

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),
    #[error("attribute {0:?} is not nominal")]
    NotNominal(String),
    #[error("attribute {0:?} is not numeric")]
    NotNumeric(String),
    #[error("attribute {0:?} has no non-missing values")]
    AllMissing(String),
    #[error("no batches to report on")]
    NoBatches,
}

/// Ordered `(value, count)` table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Default)]
pub struct FrequencyTable {
    pub entries: Vec<(String, u64)>,
    /// Sum over values cut by `top_k`.
    pub other: u64,
    pub missing: u64,
}

impl FrequencyTable {
    pub fn total(&self) -> u64 {
        self.entries.iter().map(|(_, c)| c).sum::<u64>() + self.other + self.missing
    }

    /// Entries plus the `other` and `?` rows when they are non-zero.
    pub fn rows(&self) -> Vec<(String, u64)> {
        let mut rows = self.entries.clone();
        if self.other > 0 {
            rows.push(("other".into(), self.other));
        }
        if self.missing > 0 {
            rows.push(("?".into(), self.missing));
        }
        rows
    }
}

pub fn tabulate(d: &Dataset, attribute: &str, top_k: Option<usize>) -> Result<FrequencyTable, ReportError> {
    let index = d
        .attribute_index(attribute)
        .ok_or_else(|| ReportError::UnknownAttribute(attribute.into()))?;
    let values = match &d.attributes[index].kind {
        AttributeKind::Nominal(values) => values,
        _ => return Err(ReportError::NotNominal(attribute.into())),
    };
    let mut counts = vec![0u64; values.len()];
    let mut missing = 0;
    for inst in &d.instances {
        match inst.values[index] {
            Value::Nominal(k) => counts[k] += 1,
            _ => missing += 1,
        }
    }
    let mut entries: Vec<(String, u64)> = values
        .iter()
        .zip(counts)
        .filter(|(_, c)| *c > 0)
        .map(|(v, c)| (v.clone(), c))
        .collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut other = 0;
    if let Some(k) = top_k {
        if entries.len() > k {
            other = entries[k..].iter().map(|(_, c)| c).sum();
            entries.truncate(k);
        }
    }
    Ok(FrequencyTable { entries, other, missing })
}

/// Summary of a numeric attribute, as in WEKA's attribute panel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthStats {
    pub count: u64,
    pub minimum: f64,
    pub maximum: f64,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub stddev: f64,
    pub distinct: u64,
    /// Values occurring exactly once.
    pub unique: u64,
    pub missing: u64,
    /// Fewer than two values, so `stddev` is 0 by convention.
    pub degenerate: bool,
}

pub fn length_stats(d: &Dataset, attribute: &str) -> Result<LengthStats, ReportError> {
    let index = d
        .attribute_index(attribute)
        .ok_or_else(|| ReportError::UnknownAttribute(attribute.into()))?;
    if !d.attributes[index].is_numeric() {
        return Err(ReportError::NotNumeric(attribute.into()));
    }
    let mut count = 0u64;
    let mut missing = 0u64;
    let (mut mean, mut m2) = (0.0, 0.0);
    let (mut minimum, mut maximum) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut seen: BTreeMap<u64, u64> = BTreeMap::new();
    for inst in &d.instances {
        let Value::Number(x) = inst.values[index] else {
            missing += 1;
            continue;
        };
        count += 1;
        let delta = x - mean;
        mean += delta / count as f64;
        m2 += delta * (x - mean);
        minimum = minimum.min(x);
        maximum = maximum.max(x);
        // +0.0 folds -0.0 so both zeros count as one value
        *seen.entry((x + 0.0).to_bits()).or_default() += 1;
    }
    if count == 0 {
        return Err(ReportError::AllMissing(attribute.into()));
    }
    let degenerate = count < 2;
    let stddev = if degenerate { 0.0 } else { (m2 / (count - 1) as f64).sqrt() };
    Ok(LengthStats {
        count,
        minimum,
        maximum,
        mean: mean.clamp(minimum, maximum),
        stddev,
        distinct: seen.len() as u64,
        unique: seen.values().filter(|&&c| c == 1).count() as u64,
        missing,
        degenerate,
    })
}

/// Up to three decimals, trailing zeros dropped: `42`, `620.145`, `0.5`.
pub fn format_stat(x: f64) -> String {
    let s = format!("{x:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn percent_of(part: u64, whole: u64) -> u64 {
    if whole == 0 {
        0
    } else {
        (100.0 * part as f64 / whole as f64).round() as u64
    }
}

/// WEKA "Selected attribute" panel for a numeric attribute.
pub fn format_attribute_panel(name: &str, s: &LengthStats) -> String {
    let total = s.count + s.missing;
    let mut out = String::new();
    let _ = writeln!(out, "Name: {name}\t\tType: Numeric");
    let _ = writeln!(
        out,
        "Missing: {} ({}%)\tDistinct: {}\tUnique: {} ({}%)",
        s.missing,
        percent_of(s.missing, total),
        s.distinct,
        s.unique,
        percent_of(s.unique, total)
    );
    out.push_str("Statistic\tValue\n");
    for (label, v) in [
        ("Minimum", s.minimum),
        ("Maximum", s.maximum),
        ("Mean", s.mean),
        ("StdDev", s.stddev),
    ] {
        let _ = writeln!(out, "{label}\t{}", format_stat(v));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrafficReport {
    pub batch_label: String,
    pub packet_count: u64,
    pub destination_counts: FrequencyTable,
    pub protocol_counts: FrequencyTable,
    /// `None` when the batch has no Length values.
    pub length_stats: Option<LengthStats>,
}

impl TrafficReport {
    /// Report for a batch with no packets.
    pub fn empty(label: &str) -> Self {
        Self {
            batch_label: label.into(),
            packet_count: 0,
            destination_counts: FrequencyTable::default(),
            protocol_counts: FrequencyTable::default(),
            length_stats: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReportOptions {
    pub top_k: Option<usize>,
    pub destination: String,
    pub protocol: String,
    pub length: String,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            top_k: Some(3),
            destination: "Destination".into(),
            protocol: "Protocol".into(),
            length: "Length".into(),
        }
    }
}

pub fn batch_report(label: &str, d: &Dataset, options: &ReportOptions) -> Result<TrafficReport, ReportError> {
    let length_stats = match length_stats(d, &options.length) {
        Ok(s) => Some(s),
        Err(ReportError::AllMissing(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(TrafficReport {
        batch_label: label.into(),
        packet_count: d.num_instances() as u64,
        destination_counts: tabulate(d, &options.destination, options.top_k)?,
        protocol_counts: tabulate(d, &options.protocol, options.top_k)?,
        length_stats,
    })
}

/// One report per batch, in input order.
pub fn weekly_report(batches: &[(String, &Dataset)], options: &ReportOptions) -> Result<Vec<TrafficReport>, ReportError> {
    if batches.is_empty() {
        return Err(ReportError::NoBatches);
    }
    batches
        .par_iter()
        .map(|(label, d)| batch_report(label, d, options))
        .collect()
}

/// Accuracy of one classification task on one batch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyEntry {
    pub batch_label: String,
    /// Class attribute of the task, e.g. `Destination` or `Protocol`.
    pub task: String,
    /// Fraction in `[0, 1]`.
    pub accuracy: f64,
    pub train_percent: Option<f64>,
}

/// Batch-by-task accuracy grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyTable {
    pub tasks: Vec<String>,
    pub rows: Vec<AccuracyRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyRow {
    pub batch_label: String,
    pub accuracies: Vec<Option<f64>>,
    pub train_percent: Option<f64>,
}

/// Join evaluation entries onto the reports by batch label.
///
/// Rows follow report order, tasks their first appearance. Entries for
/// unknown batches are ignored; a later entry for the same cell wins.
pub fn accuracy_table(reports: &[TrafficReport], entries: &[AccuracyEntry]) -> AccuracyTable {
    let mut tasks: Vec<String> = Vec::new();
    for e in entries {
        if !tasks.contains(&e.task) {
            tasks.push(e.task.clone());
        }
    }
    let rows = reports
        .iter()
        .map(|r| {
            let mut accuracies = vec![None; tasks.len()];
            let mut train_percent = None;
            for e in entries.iter().filter(|e| e.batch_label == r.batch_label) {
                let t = tasks.iter().position(|t| *t == e.task).expect("task collected above");
                accuracies[t] = Some(e.accuracy);
                train_percent = e.train_percent.or(train_percent);
            }
            AccuracyRow {
                batch_label: r.batch_label.clone(),
                accuracies,
                train_percent,
            }
        })
        .collect();
    AccuracyTable { tasks, rows }
}

fn pad_table(out: &mut String, header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut line = |cells: Vec<&str>| {
        let text: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        out.push_str(text.join("  ").trim_end());
        out.push('\n');
    };
    line(header.to_vec());
    for row in rows {
        line(row.iter().map(String::as_str).collect());
    }
}

fn percent4(x: f64) -> String {
    format!("{:.4}%", 100.0 * x)
}

fn combined_rows(reports: &[TrafficReport], pick: impl Fn(&TrafficReport) -> &FrequencyTable) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for r in reports {
        for (value, count) in pick(r).rows() {
            rows.push(vec![(rows.len() + 1).to_string(), r.batch_label.clone(), value, count.to_string()]);
        }
    }
    rows
}

/// Aligned plain-text rendering.
pub fn render_text(reports: &[TrafficReport], accuracy: Option<&AccuracyTable>, options: &ReportOptions) -> String {
    let mut out = String::new();
    out.push_str("=== Packet totals ===\n\n");
    let totals: Vec<Vec<String>> = reports
        .iter()
        .map(|r| vec![r.batch_label.clone(), r.packet_count.to_string()])
        .collect();
    pad_table(&mut out, &["Batch", "Packets"], &totals);

    if let Some(table) = accuracy {
        out.push_str("\n=== Accuracy ===\n\n");
        let mut header = vec!["No", "Batch"];
        header.extend(table.tasks.iter().map(String::as_str));
        header.push("Percentage");
        let rows: Vec<Vec<String>> = table
            .rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut cells = vec![(i + 1).to_string(), row.batch_label.clone()];
                cells.extend(row.accuracies.iter().map(|a| a.map(percent4).unwrap_or_else(|| "-".into())));
                cells.push(row.train_percent.map(|p| format!("{}%", format_stat(p))).unwrap_or_else(|| "-".into()));
                cells
            })
            .collect();
        pad_table(&mut out, &header, &rows);
    }

    out.push_str("\n=== Top destinations ===\n\n");
    pad_table(
        &mut out,
        &["No", "Batch", &options.destination, "Count"],
        &combined_rows(reports, |r| &r.destination_counts),
    );
    out.push_str("\n=== Top protocols ===\n\n");
    pad_table(
        &mut out,
        &["No", "Batch", &options.protocol, "Count"],
        &combined_rows(reports, |r| &r.protocol_counts),
    );

    for r in reports {
        let _ = write!(out, "\n=== {}: {} ===\n\n", r.batch_label, options.length);
        match &r.length_stats {
            Some(s) => out.push_str(&format_attribute_panel(&options.length, s)),
            None => out.push_str("no values\n"),
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Long-format CSV: `batch,table,key,value`.
pub fn render_csv(reports: &[TrafficReport], accuracy: Option<&AccuracyTable>) -> String {
    let mut out = String::from("batch,table,key,value\n");
    let mut row = |batch: &str, table: &str, key: &str, value: String| {
        let _ = writeln!(out, "{},{},{},{}", csv_field(batch), table, csv_field(key), value);
    };
    for r in reports {
        row(&r.batch_label, "packets", "count", r.packet_count.to_string());
        for (v, c) in r.destination_counts.rows() {
            row(&r.batch_label, "destination", &v, c.to_string());
        }
        for (v, c) in r.protocol_counts.rows() {
            row(&r.batch_label, "protocol", &v, c.to_string());
        }
        if let Some(s) = &r.length_stats {
            for (k, v) in [
                ("minimum", s.minimum),
                ("maximum", s.maximum),
                ("mean", s.mean),
                ("stddev", s.stddev),
            ] {
                row(&r.batch_label, "length", k, format!("{v:?}"));
            }
            row(&r.batch_label, "length", "distinct", s.distinct.to_string());
            row(&r.batch_label, "length", "missing", s.missing.to_string());
        }
    }
    if let Some(table) = accuracy {
        for r in &table.rows {
            for (task, a) in table.tasks.iter().zip(&r.accuracies) {
                if let Some(a) = a {
                    row(&r.batch_label, "accuracy", task, format!("{a:?}"));
                }
            }
        }
    }
    out
}

#[derive(Serialize)]
struct JsonDocument<'a> {
    reports: &'a [TrafficReport],
    #[serde(skip_serializing_if = "Option::is_none")]
    accuracy: Option<&'a AccuracyTable>,
}

pub fn render_json(reports: &[TrafficReport], accuracy: Option<&AccuracyTable>) -> String {
    let doc = JsonDocument { reports, accuracy };
    let mut s = serde_json::to_string_pretty(&doc).expect("report serialises");
    s.push('\n');
    s
}
