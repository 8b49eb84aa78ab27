//! Soft-margin kernel SVMs.
//!
//! Binary C-SVC problems are solved in the dual with SMO ([`smo`]); a
//! one-vs-one ensemble of them forms the multi-class classifier
//! ([`SvmOvoModel`]), which is persisted in a versioned text format ([`io`]).

pub mod io;
mod kernel;
mod model;
pub mod smo;

use serde::Serialize;
use thiserror::Error;

pub use kernel::{kernel_eval, KernelKind, KernelSpec};
pub use model::{
    rows_for_pair, train_binary, train_ovo, train_pairs, BinaryTraining, OvoTraining, PairStats, RowAccess,
    SvmBinaryModel, SvmOvoModel,
};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("vectors differ in dimension: {expected} vs {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("class {0} has no training rows")]
    EmptyClass(&'static str),
    #[error("training data contains fewer than two classes")]
    SingleClass,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("unsupported model format version {found} (expected {expected})")]
    VersionMismatch { found: String, expected: u32 },
    #[error("corrupt model file at line {line}: {reason}")]
    CorruptModel { line: usize, reason: String },
    #[error(transparent)]
    Encoding(#[from] crate::prep::PrepError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How SMO picks the second index of each working pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Maximal violating first index, second index by largest second-order gain.
    SecondOrder,
    /// Maximal violating first index, second index drawn at random among violators.
    RandomSecond,
}

impl Selection {
    pub fn name(self) -> &'static str {
        match self {
            Self::SecondOrder => "second_order",
            Self::RandomSecond => "random_second",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "second_order" => Some(Self::SecondOrder),
            "random_second" => Some(Self::RandomSecond),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainConfig {
    pub kernel: KernelSpec,
    /// Box constraint on the dual variables.
    pub c: f64,
    /// Stop once the maximal KKT violation drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Kernel cache size, in `f64` entries.
    pub cache_budget: usize,
    pub seed: u64,
    pub selection: Selection,
    /// Train the pairwise problems on the rayon pool.
    pub parallel: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            kernel: KernelSpec::default(),
            c: 1.0,
            tolerance: 1e-3,
            max_iterations: 10_000_000,
            cache_budget: 1 << 24,
            seed: 1,
            selection: Selection::SecondOrder,
            parallel: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), SvmError> {
        self.kernel.validate()?;
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(SvmError::InvalidConfig("C must be positive".into()));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(SvmError::InvalidConfig("tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(SvmError::InvalidConfig("max_iterations must be positive".into()));
        }
        Ok(())
    }

    /// WEKA/LibSVM-style option string, e.g. `-S 0 -K 2 -D 3 -G 0.25 -R 0.0 -C 1.0 -E 0.001`.
    pub fn scheme_options(&self, dim: usize) -> String {
        let k = self.kernel.resolved(dim);
        format!(
            "-S 0 -K {} -D {} -G {:?} -R {:?} -C {:?} -E {:?}",
            k.kind.code(),
            k.degree,
            k.gamma,
            k.coef0,
            self.c,
            self.tolerance
        )
    }
}
