use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use serde::Serialize;

use super::SvmError;

/// Kernel families, numbered as LibSVM's `-t`/WEKA's `-K` codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear = 0,
    Polynomial = 1,
    Rbf = 2,
    Sigmoid = 3,
}

impl KernelKind {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => Self::Linear,
            1 => Self::Polynomial,
            2 => Self::Rbf,
            3 => Self::Sigmoid,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Linear => "linear",
            Self::Polynomial => "polynomial",
            Self::Rbf => "rbf",
            Self::Sigmoid => "sigmoid",
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for KernelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "linear" | "0" => Ok(Self::Linear),
            "polynomial" | "poly" | "1" => Ok(Self::Polynomial),
            "rbf" | "2" => Ok(Self::Rbf),
            "sigmoid" | "3" => Ok(Self::Sigmoid),
            other => Err(format!("unknown kernel {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub degree: u32,
    /// `0` means "auto": `1 / dimension`.
    pub gamma: f64,
    pub coef0: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self {
            kind: KernelKind::Rbf,
            degree: 3,
            gamma: 0.0,
            coef0: 0.0,
        }
    }
}

impl KernelSpec {
    pub fn rbf(gamma: f64) -> Self {
        Self {
            gamma,
            ..Self::default()
        }
    }

    pub fn linear() -> Self {
        Self {
            kind: KernelKind::Linear,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SvmError> {
        if self.degree < 1 {
            return Err(SvmError::InvalidConfig("kernel degree must be at least 1".into()));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(SvmError::InvalidConfig("gamma must be a non-negative number".into()));
        }
        if !self.coef0.is_finite() {
            return Err(SvmError::InvalidConfig("coef0 must be finite".into()));
        }
        Ok(())
    }

    /// Replace an automatic gamma with `1 / dim`.
    pub fn resolved(&self, dim: usize) -> Self {
        let mut out = *self;
        if out.gamma == 0.0 {
            out.gamma = 1.0 / dim.max(1) as f64;
        }
        out
    }

    /// Kernel value for two equally sized vectors. Gamma must already be resolved.
    #[inline]
    pub fn apply(&self, x: &[f64], z: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Linear => dot(x, z),
            KernelKind::Polynomial => (self.gamma * dot(x, z) + self.coef0).powi(self.degree as i32),
            KernelKind::Rbf => (-self.gamma * squared_distance(x, z)).exp(),
            KernelKind::Sigmoid => (self.gamma * dot(x, z) + self.coef0).tanh(),
        }
    }
}

#[inline]
fn dot(x: &[f64], z: &[f64]) -> f64 {
    x.iter().zip(z).map(|(a, b)| a * b).sum()
}

#[inline]
fn squared_distance(x: &[f64], z: &[f64]) -> f64 {
    x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Evaluate `spec` on `x` and `z`, resolving an automatic gamma from their dimension.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], z: &[f64]) -> Result<f64, SvmError> {
    if x.len() != z.len() {
        return Err(SvmError::DimensionMismatch {
            expected: x.len(),
            found: z.len(),
        });
    }
    Ok(spec.resolved(x.len()).apply(x, z))
}

/// Bounded LRU cache of rows of the signed kernel matrix `Q[i][j] = y_i y_j K(x_i, x_j)`.
///
/// The budget counts `f64` entries; a budget smaller than one row disables
/// caching and every row is recomputed on demand.
pub(crate) struct QMatrix<'a> {
    rows: Vec<&'a [f64]>,
    y: &'a [f64],
    kernel: KernelSpec,
    cache: HashMap<usize, (Rc<[f64]>, u64)>,
    capacity_rows: usize,
    clock: u64,
    pub(crate) diag: Vec<f64>,
}

impl<'a> QMatrix<'a> {
    pub(crate) fn new(rows: Vec<&'a [f64]>, y: &'a [f64], kernel: KernelSpec, budget_entries: usize) -> Self {
        let n = rows.len().max(1);
        let diag = rows.iter().map(|r| kernel.apply(r, r)).collect();
        Self {
            capacity_rows: budget_entries / n,
            rows,
            y,
            kernel,
            cache: HashMap::new(),
            clock: 0,
            diag,
        }
    }

    fn compute(&self, i: usize) -> Rc<[f64]> {
        let xi = self.rows[i];
        let yi = self.y[i];
        self.rows
            .iter()
            .zip(self.y)
            .map(|(xj, yj)| yi * yj * self.kernel.apply(xi, xj))
            .collect()
    }

    pub(crate) fn row(&mut self, i: usize) -> Rc<[f64]> {
        self.clock += 1;
        if let Some((row, stamp)) = self.cache.get_mut(&i) {
            *stamp = self.clock;
            return Rc::clone(row);
        }
        let row = self.compute(i);
        if self.capacity_rows == 0 {
            return row;
        }
        if self.cache.len() >= self.capacity_rows {
            if let Some(&oldest) = self.cache.iter().min_by_key(|(_, (_, s))| *s).map(|(k, _)| k) {
                self.cache.remove(&oldest);
            }
        }
        self.cache.insert(i, (Rc::clone(&row), self.clock));
        row
    }

    #[cfg(test)]
    pub(crate) fn cached_rows(&self) -> usize {
        self.cache.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rbf_of_identical_points_is_one() {
        for gamma in [0.0, 0.01, 0.5, 7.0] {
            let v = kernel_eval(&KernelSpec::rbf(gamma), &[0.3, -2.0, 5.0], &[0.3, -2.0, 5.0]).unwrap();
            assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn rbf_hand_value() {
        let v = kernel_eval(&KernelSpec::rbf(0.5), &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        assert!((v - 0.367879).abs() < 1e-6);
    }

    #[test]
    fn auto_gamma_uses_dimension() {
        // gamma = 1/2, ||x - z||^2 = 2
        let v = kernel_eval(&KernelSpec::rbf(0.0), &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(KernelSpec::rbf(0.0).resolved(4).gamma, 0.25);
        assert_eq!(KernelSpec::rbf(2.0).resolved(4).gamma, 2.0);
    }

    #[test]
    fn linear_polynomial_sigmoid() {
        assert_eq!(kernel_eval(&KernelSpec::linear(), &[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        let poly = KernelSpec {
            kind: KernelKind::Polynomial,
            degree: 2,
            gamma: 1.0,
            coef0: 1.0,
        };
        assert_eq!(kernel_eval(&poly, &[1.0, 2.0], &[3.0, 4.0]).unwrap(), 144.0);
        let sig = KernelSpec {
            kind: KernelKind::Sigmoid,
            gamma: 0.5,
            coef0: -1.0,
            ..KernelSpec::default()
        };
        assert_eq!(kernel_eval(&sig, &[1.0], &[4.0]).unwrap(), 1.0f64.tanh());
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            kernel_eval(&KernelSpec::linear(), &[1.0], &[1.0, 2.0]),
            Err(SvmError::DimensionMismatch { expected: 1, found: 2 })
        ));
    }

    #[test]
    fn kernel_codes_round_trip() {
        for code in 0..4 {
            assert_eq!(KernelKind::from_code(code).unwrap().code(), code);
        }
        assert_eq!(KernelKind::from_code(4), None);
        assert_eq!("RBF".parse::<KernelKind>().unwrap(), KernelKind::Rbf);
    }

    #[test]
    fn cache_evicts_least_recently_used() {
        let data = [[0.0], [1.0], [2.0]];
        let rows: Vec<&[f64]> = data.iter().map(|r| r.as_slice()).collect();
        let y = [1.0, -1.0, 1.0];
        let mut q = QMatrix::new(rows, &y, KernelSpec::linear(), 6);
        let r0 = q.row(0);
        q.row(1);
        q.row(0);
        q.row(2);
        assert_eq!(q.cached_rows(), 2);
        assert_eq!(&*q.row(0), &*r0);
        assert_eq!(&*q.row(2), &[0.0, -2.0, 4.0]);

        let mut none = QMatrix::new(data.iter().map(|r| r.as_slice()).collect(), &y, KernelSpec::linear(), 0);
        none.row(1);
        assert_eq!(none.cached_rows(), 0);
    }
}
