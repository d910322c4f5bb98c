//! Per-candidate scores for the neuron campaign.
//!
//! Both criteria are traces, so they split exactly into one term per neuron
//! (column of the activation matrix):
//!
//! * input information maintenance (IIM): `tr(Cov(Z))`, per neuron the
//!   population variance of its column;
//! * target-related information enhancement (TIE): between-class spread of
//!   the class means minus `1/N` times the within-class scatter.
//!
//! [`combine_scores`] z-scores both criteria across candidates, mixes them
//! with the layer's alpha and maps the result onto `[0, 1]`.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::data::ClassPartition;
use crate::error::{Error, Result};

/// Representation of `m` samples over `c` neurons (`m x c`).
#[derive(Debug, Clone, PartialEq)]
pub struct Activations(Array2<f64>);

impl Activations {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if values.ncols() == 0 {
            return Err(Error::arg("activations need at least one column"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("activations contain non-finite values".into()));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn n_samples(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_neurons(&self) -> usize {
        self.0.ncols()
    }
}

/// One score per candidate neuron.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector(Array1<f64>);

impl ScoreVector {
    pub fn new(scores: Array1<f64>) -> Result<Self> {
        if scores.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("scores contain non-finite values".into()));
        }
        Ok(Self(scores))
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.sum()
    }

    /// Index of the largest score, lowest index on ties.
    pub fn argmax(&self) -> Option<usize> {
        argmax(self.0.view())
    }
}

impl From<Vec<f64>> for ScoreVector {
    /// Panics on non-finite input; use [`ScoreVector::new`] for fallible construction.
    fn from(v: Vec<f64>) -> Self {
        ScoreVector::new(Array1::from(v)).expect("finite scores")
    }
}

pub(crate) fn argmax(v: ArrayView1<f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &x) in v.iter().enumerate() {
        match best {
            Some((_, b)) if x <= b => {}
            _ => best = Some((i, x)),
        }
    }
    best.map(|(i, _)| i)
}

/// Per-layer IIM/TIE mixing weights, one alpha in `[0, 1]` per layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AlphaSchedule(Vec<f64>);

impl AlphaSchedule {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if let Some(a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::arg(format!("alpha {a} is outside [0, 1]")));
        }
        Ok(Self(alphas))
    }

    /// Same alpha for every layer.
    pub fn constant(alpha: f64, layers: usize) -> Result<Self> {
        Self::new(vec![alpha; layers])
    }

    /// Linear ramp from 0.9 at the first layer to 0.1 at the last; a single
    /// layer gets 0.5.
    pub fn linear_default(layers: usize) -> Self {
        Self::linear(0.9, 0.1, layers)
    }

    pub fn linear(first: f64, last: f64, layers: usize) -> Self {
        let alphas = match layers {
            0 => Vec::new(),
            1 => vec![0.5 * (first + last)],
            n => (0..n)
                .map(|i| {
                    let t = i as f64 / (n - 1) as f64;
                    first * (1.0 - t) + last * t
                })
                .collect(),
        };
        Self(alphas)
    }

    pub fn alphas(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, layer: usize) -> f64 {
        self.0[layer]
    }
}

/// How the within-class term of TIE centres each sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    /// Around the sample's class mean (intra-class variance).
    #[default]
    PerClass,
    /// Around the global column mean.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TieOptions {
    pub centering: Centering,
    /// Divide each class's within-class scatter by its size `m_j`.
    pub normalize_class_size: bool,
}

fn check_samples(z: &Activations) -> Result<()> {
    if z.n_samples() < 2 {
        return Err(Error::arg(format!(
            "variance-based scoring needs at least 2 samples, got {}",
            z.n_samples()
        )));
    }
    Ok(())
}

/// Population variance of every column. The scores sum to the trace of the
/// covariance matrix of `z`.
pub fn iim_scores(z: &Activations) -> Result<ScoreVector> {
    check_samples(z)?;
    let values = z.values();
    let m = values.nrows() as f64;
    let mean = values.mean_axis(Axis(0)).expect("non-empty");
    let mut var = Array1::<f64>::zeros(values.ncols());
    for row in values.rows() {
        for ((v, &x), &mu) in var.iter_mut().zip(row).zip(&mean) {
            let d = x - mu;
            *v += d * d;
        }
    }
    var /= m;
    ScoreVector::new(var)
}

/// Between-class minus `1/N`-scaled within-class scatter, per column.
pub fn tie_scores(z: &Activations, part: &ClassPartition, opts: TieOptions) -> Result<ScoreVector> {
    check_samples(z)?;
    if part.n_samples() != z.n_samples() {
        return Err(Error::arg(format!(
            "partition covers {} rows but activations have {}",
            part.n_samples(),
            z.n_samples()
        )));
    }
    if let Some(j) = part.members().iter().position(Vec::is_empty) {
        return Err(Error::arg(format!("class {j} has no samples")));
    }
    let values = z.values();
    let c = values.ncols();
    let n_classes = part.n_classes() as f64;
    let global = values.mean_axis(Axis(0)).expect("non-empty");

    let mut between = Array1::<f64>::zeros(c);
    let mut within = Array1::<f64>::zeros(c);
    let mut class_mean = Array1::<f64>::zeros(c);
    let mut class_within = Array1::<f64>::zeros(c);
    for rows in part.members() {
        class_mean.fill(0.0);
        for &r in rows {
            class_mean += &values.row(r);
        }
        class_mean /= rows.len() as f64;

        let center = match opts.centering {
            Centering::PerClass => &class_mean,
            Centering::Global => &global,
        };
        class_within.fill(0.0);
        for &r in rows {
            for ((w, &x), &mu) in class_within.iter_mut().zip(values.row(r)).zip(center) {
                let d = x - mu;
                *w += d * d;
            }
        }
        if opts.normalize_class_size {
            class_within /= rows.len() as f64;
        }
        within += &class_within;

        for ((b, &mu_j), &mu) in between.iter_mut().zip(&class_mean).zip(&global) {
            let d = mu_j - mu;
            *b += d * d;
        }
    }
    ScoreVector::new(between - within / n_classes)
}

fn standardize(v: &Array1<f64>) -> Array1<f64> {
    let n = v.len() as f64;
    let mean = v.sum() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    if sd < 1e-12 {
        Array1::zeros(v.len())
    } else {
        v.mapv(|x| (x - mean) / sd)
    }
}

/// Mixes the two criteria with weight `alpha` on IIM and maps the result
/// into `[0, 1]`.
///
/// Each criterion is z-scored across candidates first (a criterion with
/// zero spread contributes nothing). A constant mix maps to all ones.
pub fn combine_scores(iim: &ScoreVector, tie: &ScoreVector, alpha: f64) -> Result<ScoreVector> {
    if iim.len() != tie.len() {
        return Err(Error::arg(format!(
            "score length mismatch: {} vs {}",
            iim.len(),
            tie.len()
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::arg(format!("alpha {alpha} is outside [0, 1]")));
    }
    if iim.is_empty() {
        return Ok(ScoreVector(Array1::zeros(0)));
    }
    let mixed = standardize(iim.values()) * alpha + standardize(tie.values()) * (1.0 - alpha);
    let lo = mixed.fold(f64::INFINITY, |a, &b| a.min(b));
    let hi = mixed.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let range = hi - lo;
    let out = if range > 0.0 {
        mixed.mapv(|x| (x - lo) / range)
    } else {
        Array1::ones(mixed.len())
    };
    ScoreVector::new(out)
}
