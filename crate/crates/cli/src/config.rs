//! TOML pipeline configuration. Every key mirrors a command-line flag; flags win.
//!
//! ```toml
//! seed = 7
//!
//! [convert]
//! label = "week1"
//! remove = "1,2,3,7"
//!
//! [train]
//! class = "Protocol"
//! split = 70.0
//! kernel = "rbf"
//! gamma = 0.0
//! c = 1.0
//!
//! [evaluate]
//! on = "test"
//!
//! [report]
//! top_k = 3
//! format = "text"
//! ```

use std::path::Path;

use anyhow::Context;
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub convert: ConvertSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub evaluate: EvaluateSection,
    #[serde(default)]
    pub report: ReportSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvertSection {
    pub label: Option<String>,
    pub remove: Option<String>,
    pub skip_malformed: Option<bool>,
    pub info_nominal: Option<bool>,
    pub delimiter: Option<char>,
    pub header: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub class: Option<String>,
    pub remove: Option<String>,
    pub split: Option<f64>,
    pub shuffle: Option<bool>,
    pub kernel: Option<String>,
    pub gamma: Option<f64>,
    pub degree: Option<u32>,
    pub coef0: Option<f64>,
    pub c: Option<f64>,
    pub tolerance: Option<f64>,
    pub max_iterations: Option<usize>,
    pub cache_budget: Option<usize>,
    pub selection: Option<String>,
    pub scale: Option<bool>,
    pub rare_min_support: Option<usize>,
    pub rare_label: Option<String>,
    pub parallel: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateSection {
    pub on: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSection {
    pub top_k: Option<usize>,
    pub format: Option<String>,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}
