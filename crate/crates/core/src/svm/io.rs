//! Text model files.
//!
//! ```text
//! trafsvm-model
//! format_version 1
//! kernel rbf degree 3 gamma 0.25 coef0 0.0
//! train c 1.0 tolerance 0.001 max_iterations 10000000 cache_budget 16777216 seed 1 selection second_order
//! split 70.0 shuffle false seed 1          (or: split none)
//! dimension 4
//! labels 3 TCP HTTP DNS
//! encoder Protocol                         (encoder block, see prep::EncoderSpec::to_text)
//! ...
//! binaries 3
//! binary 0 1 bias -0.12 support_vectors 2 iterations 17 converged true
//! sv 0.5 0.0 1.0 0.0 0.25                  (coefficient, then the vector)
//! sv -0.5 1.0 0.0 0.0 0.75
//! ...
//! end
//! ```
//!
//! Reals are written in Rust's shortest round-trip notation, so loading a
//! saved model reproduces every coefficient bit for bit. The `parallel`
//! training flag is not stored: it never changes the trained model.

use std::io::{Read, Write};

use super::kernel::{KernelKind, KernelSpec};
use super::model::{SvmBinaryModel, SvmOvoModel};
use super::{Selection, SvmError, TrainConfig, FORMAT_VERSION};
use crate::prep::{EncoderSpec, SplitSpec};
use crate::text::{quote, words};

const MAGIC: &str = "trafsvm-model";

pub fn save_model<W: Write>(model: &SvmOvoModel, sink: W) -> Result<(), SvmError> {
    let mut w = std::io::BufWriter::new(sink);
    let k = &model.config.kernel;
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "format_version {}", model.format_version)?;
    writeln!(
        w,
        "kernel {} degree {} gamma {:?} coef0 {:?}",
        k.kind, k.degree, k.gamma, k.coef0
    )?;
    let c = &model.config;
    writeln!(
        w,
        "train c {:?} tolerance {:?} max_iterations {} cache_budget {} seed {} selection {}",
        c.c,
        c.tolerance,
        c.max_iterations,
        c.cache_budget,
        c.seed,
        c.selection.name()
    )?;
    match &model.split {
        Some(s) => writeln!(w, "split {:?} shuffle {} seed {}", s.train_percent, s.shuffle, s.seed)?,
        None => writeln!(w, "split none")?,
    }
    writeln!(w, "dimension {}", model.dimension)?;
    let labels: Vec<_> = model.label_names.iter().map(|l| quote(l).into_owned()).collect();
    writeln!(w, "labels {} {}", labels.len(), labels.join(" "))?;
    w.write_all(model.encoder.to_text().as_bytes())?;
    writeln!(w, "binaries {}", model.binaries.len())?;
    for b in &model.binaries {
        writeln!(
            w,
            "binary {} {} bias {:?} support_vectors {} iterations {} converged {}",
            b.class_pair.0,
            b.class_pair.1,
            b.bias,
            b.support_vectors.len(),
            b.iterations,
            b.converged
        )?;
        for (sv, coef) in b.support_vectors.iter().zip(&b.coefficients) {
            write!(w, "sv {coef:?}")?;
            for x in sv {
                write!(w, " {x:?}")?;
            }
            writeln!(w)?;
        }
    }
    writeln!(w, "end")?;
    w.flush()?;
    Ok(())
}

struct Lines<'a> {
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
    last: usize,
}

fn corrupt(line: usize, reason: impl Into<String>) -> SvmError {
    SvmError::CorruptModel {
        line,
        reason: reason.into(),
    }
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)> + 'a> =
            Box::new(text.lines().enumerate().map(|(i, l)| (i + 1, l)));
        Self {
            inner: it.peekable(),
            last: 0,
        }
    }

    /// Next line, split into tokens, which must start with `keyword`.
    fn expect(&mut self, keyword: &str) -> Result<(usize, Vec<String>), SvmError> {
        let (no, line) = self
            .inner
            .next()
            .ok_or_else(|| corrupt(self.last + 1, format!("file ends before {keyword:?}")))?;
        self.last = no;
        let toks = words(line).map_err(|e| corrupt(no, e.to_string()))?;
        if toks.first().map(|t| t.text.as_str()) != Some(keyword) || toks[0].quoted {
            return Err(corrupt(no, format!("expected {keyword:?}")));
        }
        Ok((no, toks.into_iter().map(|t| t.text).collect()))
    }
}

/// `key value key value ...` pairs after the leading keyword.
fn fields<'t>(no: usize, toks: &'t [String], keys: &[&str]) -> Result<Vec<&'t str>, SvmError> {
    if toks.len() != 1 + 2 * keys.len() {
        return Err(corrupt(no, "wrong number of fields"));
    }
    keys.iter()
        .enumerate()
        .map(|(i, k)| {
            if toks[1 + 2 * i] != *k {
                Err(corrupt(no, format!("expected field {k:?}")))
            } else {
                Ok(toks[2 + 2 * i].as_str())
            }
        })
        .collect()
}

fn num<T: std::str::FromStr>(no: usize, s: &str) -> Result<T, SvmError> {
    s.parse().map_err(|_| corrupt(no, format!("bad number {s:?}")))
}

fn real(no: usize, s: &str) -> Result<f64, SvmError> {
    let x: f64 = num(no, s)?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(corrupt(no, format!("non-finite value {s:?}")))
    }
}

fn boolean(no: usize, s: &str) -> Result<bool, SvmError> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(corrupt(no, format!("bad boolean {s:?}"))),
    }
}

pub fn load_model<R: Read>(mut source: R) -> Result<SvmOvoModel, SvmError> {
    let mut text = String::new();
    source
        .read_to_string(&mut text)
        .map_err(|e| match e.kind() {
            std::io::ErrorKind::InvalidData => corrupt(0, "not UTF-8 text"),
            _ => SvmError::Io(e),
        })?;
    let mut lines = Lines::new(&text);

    lines.expect(MAGIC)?;
    let (no, toks) = lines.expect("format_version")?;
    if toks.len() != 2 {
        return Err(corrupt(no, "bad format_version line"));
    }
    if toks[1] != FORMAT_VERSION.to_string() {
        return Err(SvmError::VersionMismatch {
            found: toks[1].clone(),
            expected: FORMAT_VERSION,
        });
    }

    let (no, toks) = lines.expect("kernel")?;
    if toks.len() != 8 {
        return Err(corrupt(no, "bad kernel line"));
    }
    let kind: KernelKind = toks[1].parse().map_err(|e: String| corrupt(no, e))?;
    let rest: Vec<String> = std::iter::once(toks[0].clone()).chain(toks[2..].iter().cloned()).collect();
    let f = fields(no, &rest, &["degree", "gamma", "coef0"])?;
    let kernel = KernelSpec {
        kind,
        degree: num(no, f[0])?,
        gamma: real(no, f[1])?,
        coef0: real(no, f[2])?,
    };

    let (no, toks) = lines.expect("train")?;
    let f = fields(
        no,
        &toks,
        &["c", "tolerance", "max_iterations", "cache_budget", "seed", "selection"],
    )?;
    let config = TrainConfig {
        kernel,
        c: real(no, f[0])?,
        tolerance: real(no, f[1])?,
        max_iterations: num(no, f[2])?,
        cache_budget: num(no, f[3])?,
        seed: num(no, f[4])?,
        selection: Selection::from_name(f[5]).ok_or_else(|| corrupt(no, "unknown selection"))?,
        parallel: true,
    };
    config.validate().map_err(|e| corrupt(no, e.to_string()))?;

    let (no, toks) = lines.expect("split")?;
    let split = if toks.len() == 2 && toks[1] == "none" {
        None
    } else {
        if toks.len() != 6 || toks[2] != "shuffle" || toks[4] != "seed" {
            return Err(corrupt(no, "bad split line"));
        }
        Some(SplitSpec {
            train_percent: real(no, &toks[1])?,
            shuffle: boolean(no, &toks[3])?,
            seed: num(no, &toks[5])?,
        })
    };

    let (no, toks) = lines.expect("dimension")?;
    if toks.len() != 2 {
        return Err(corrupt(no, "bad dimension line"));
    }
    let dimension: usize = num(no, &toks[1])?;

    let (no, toks) = lines.expect("labels")?;
    if toks.len() < 2 || num::<usize>(no, &toks[1])? != toks.len() - 2 {
        return Err(corrupt(no, "label count does not match"));
    }
    let label_names = toks[2..].to_vec();

    let last = lines.last;
    let mut enc_lines = std::iter::from_fn(|| {
        let item = lines.inner.next();
        if let Some((n, _)) = item {
            lines.last = n;
        }
        item
    });
    let encoder = EncoderSpec::from_lines(&mut enc_lines).map_err(|(line, e)| corrupt(line.max(last + 1), e.to_string()))?;
    if encoder.class_labels != label_names {
        return Err(corrupt(lines.last, "encoder class labels differ from model labels"));
    }

    let (no, toks) = lines.expect("binaries")?;
    if toks.len() != 2 {
        return Err(corrupt(no, "bad binaries line"));
    }
    let count: usize = num(no, &toks[1])?;
    let mut binaries = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let (no, toks) = lines.expect("binary")?;
        if toks.len() != 11 {
            return Err(corrupt(no, "bad binary header"));
        }
        let a: usize = num(no, &toks[1])?;
        let b: usize = num(no, &toks[2])?;
        if !(a < b && b < label_names.len()) {
            return Err(corrupt(no, "class pair out of range"));
        }
        let rest: Vec<String> = std::iter::once(toks[0].clone()).chain(toks[3..].iter().cloned()).collect();
        let f = fields(no, &rest, &["bias", "support_vectors", "iterations", "converged"])?;
        let bias = real(no, f[0])?;
        let n_sv: usize = num(no, f[1])?;
        let iterations = num(no, f[2])?;
        let converged = boolean(no, f[3])?;
        let mut support_vectors = Vec::with_capacity(n_sv.min(1 << 20));
        let mut coefficients = Vec::with_capacity(n_sv.min(1 << 20));
        for _ in 0..n_sv {
            let (no, toks) = lines.expect("sv")?;
            if toks.len() != dimension + 2 {
                return Err(corrupt(no, "support vector has the wrong dimension"));
            }
            coefficients.push(real(no, &toks[1])?);
            support_vectors.push(toks[2..].iter().map(|t| real(no, t)).collect::<Result<Vec<_>, _>>()?);
        }
        binaries.push(SvmBinaryModel {
            class_pair: (a, b),
            support_vectors,
            coefficients,
            bias,
            kernel,
            iterations,
            converged,
        });
    }
    lines.expect("end")?;
    if let Some((no, _)) = lines.inner.find(|(_, l)| !l.trim().is_empty()) {
        return Err(corrupt(no, "trailing content after end"));
    }
    Ok(SvmOvoModel {
        format_version: FORMAT_VERSION,
        label_names,
        dimension,
        binaries,
        encoder,
        config,
        split,
    })
}
