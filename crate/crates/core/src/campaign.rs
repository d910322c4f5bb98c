//! Neuron campaign: draw an overcomplete bank of candidate neurons and pick
//! `d_out` of them greedily.
//!
//! Each step scales every remaining candidate's score by the fraction of its
//! weight vector that lies outside the span of the neurons already chosen
//! (`|p_i| / |w_i|`, with `p_i` the residual after projecting out the current
//! orthonormal basis), takes the best one and extends the basis with its
//! normalized residual. Residuals are re-projected in place each step
//! (`P <- P - a a^T P`), which is the same recurrence as projecting the
//! original bank against the basis but without accumulating drift.

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::error::{Error, Result};
use crate::init::BaseInit;
use crate::scoring::ScoreVector;
use crate::seed;

pub const DEFAULT_TAU: f64 = 1e-6;

/// Candidate neurons as the columns of a `fan_in x K` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    weights: Array2<f64>,
    common_norm: f64,
}

impl CandidateSet {
    /// Wraps an arbitrary bank. Columns must be finite; zero columns are
    /// accepted but can never win a campaign. `common_norm` is the mean
    /// column norm.
    pub fn from_weights(weights: Array2<f64>) -> Result<Self> {
        if weights.nrows() == 0 || weights.ncols() == 0 {
            return Err(Error::arg("candidate bank must be non-empty"));
        }
        if weights.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("candidate bank has non-finite entries".into()));
        }
        let norms = column_norms(&weights);
        let common_norm = norms.iter().sum::<f64>() / norms.len() as f64;
        Ok(Self { weights, common_norm })
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn column(&self, i: usize) -> ArrayView1<'_, f64> {
        self.weights.column(i)
    }

    pub fn common_norm(&self) -> f64 {
        self.common_norm
    }

    pub fn fan_in(&self) -> usize {
        self.weights.nrows()
    }

    pub fn len(&self) -> usize {
        self.weights.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.ncols() == 0
    }
}

pub fn column_norms(w: &Array2<f64>) -> Vec<f64> {
    w.columns().into_iter().map(|c| c.dot(&c).sqrt()).collect()
}

/// Draws `k * d_out` candidates from `base`'s distribution for a
/// `fan_in -> d_out` layer. With `equalize_norms`, every column is rescaled
/// to the mean sampled column norm.
pub fn generate_candidates(
    base: BaseInit,
    fan_in: usize,
    d_out: usize,
    k: usize,
    seed: u64,
    equalize_norms: bool,
) -> Result<CandidateSet> {
    if k < 1 {
        return Err(Error::arg("candidate multiplier k must be >= 1"));
    }
    if fan_in == 0 || d_out == 0 {
        return Err(Error::arg(format!("layer dims must be >= 1, got {fan_in}x{d_out}")));
    }
    let mut rng = seed::rng(seed);
    let mut weights = base.sample(fan_in, d_out, k * d_out, &mut rng)?;
    let norms = column_norms(&weights);
    if norms.iter().any(|&n| n == 0.0) {
        return Err(Error::Degenerate { layer: 0, msg: "sampled a zero candidate".into() });
    }
    let common_norm = norms.iter().sum::<f64>() / norms.len() as f64;
    if equalize_norms {
        for (mut col, &n) in weights.axis_iter_mut(Axis(1)).zip(&norms) {
            col *= common_norm / n;
        }
    }
    Ok(CandidateSet { weights, common_norm })
}

/// Greedy selection state: orthonormal basis of the chosen neurons'
/// residual directions and the residual of every candidate against it.
#[derive(Debug, Clone)]
pub struct CampaignState<'a> {
    cands: &'a CandidateSet,
    basis: Vec<Array1<f64>>,
    // One row per candidate, so each residual is contiguous.
    residuals: Array2<f64>,
    residual_norms: Vec<f64>,
    norms: Vec<f64>,
    selected: Vec<usize>,
    taken: Vec<bool>,
    block_resets: usize,
}

impl<'a> CampaignState<'a> {
    pub fn new(cands: &'a CandidateSet) -> Self {
        let norms = column_norms(&cands.weights);
        Self {
            cands,
            basis: Vec::new(),
            residuals: cands.weights.t().as_standard_layout().into_owned(),
            residual_norms: norms.clone(),
            norms,
            selected: Vec::new(),
            taken: vec![false; cands.len()],
            block_resets: 0,
        }
    }

    pub fn basis(&self) -> &[Array1<f64>] {
        &self.basis
    }

    /// Residual `p_i` of candidate `i`.
    pub fn residual(&self, i: usize) -> ArrayView1<'_, f64> {
        self.residuals.row(i)
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn block_resets(&self) -> usize {
        self.block_resets
    }

    /// `|p_i| / |w_i|` per candidate; zero for zero columns.
    pub fn ratios(&self) -> Vec<f64> {
        self.residual_norms
            .iter()
            .zip(&self.norms)
            .map(|(&r, &n)| if n > 0.0 { r / n } else { 0.0 })
            .collect()
    }

    fn best_eligible(&self, scores: &Array1<f64>, tau: f64) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, ratio) in self.ratios().into_iter().enumerate() {
            if self.taken[i] || self.norms[i] == 0.0 || ratio < tau {
                continue;
            }
            let value = scores[i] * ratio;
            match best {
                Some((_, b)) if value <= b => {}
                _ => best = Some((i, value)),
            }
        }
        best.map(|(i, _)| i)
    }

    fn reset_block(&mut self) {
        self.basis.clear();
        for i in 0..self.cands.len() {
            if !self.taken[i] {
                self.residuals.row_mut(i).assign(&self.cands.weights.column(i));
                self.residual_norms[i] = self.norms[i];
            }
        }
        self.block_resets += 1;
    }

    /// Runs one campaign round and returns the winning index.
    pub fn step(&mut self, scores: &ScoreVector, tau: f64) -> Result<usize> {
        let scores = scores.values();
        let winner = match self.best_eligible(scores, tau) {
            Some(i) => i,
            None => {
                if self.basis.is_empty() {
                    return Err(Error::Selection(
                        "no remaining candidate has a nonzero weight vector".into(),
                    ));
                }
                self.reset_block();
                self.best_eligible(scores, tau).ok_or_else(|| {
                    Error::Selection("no remaining candidate has a nonzero weight vector".into())
                })?
            }
        };

        let mut a = self.residuals.row(winner).to_owned();
        // Second Gram-Schmidt pass keeps the basis orthonormal when the
        // winner is close to the current span.
        for b in &self.basis {
            let c = b.dot(&a);
            a.scaled_add(-c, b);
        }
        let norm = a.dot(&a).sqrt();
        a /= norm;

        self.taken[winner] = true;
        self.selected.push(winner);
        for i in 0..self.cands.len() {
            if self.taken[i] {
                continue;
            }
            let mut p = self.residuals.row_mut(i);
            let c = a.dot(&p);
            p.scaled_add(-c, &a);
            self.residual_norms[i] = p.dot(&p).sqrt();
        }
        self.basis.push(a);
        Ok(winner)
    }
}

/// Outcome of a full campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// `fan_in x d_out`, columns of the bank in selection order.
    pub weights: Array2<f64>,
    pub indices: Vec<usize>,
    pub block_resets: usize,
}

/// Selects `d_out` neurons from `cands` by greedy orthogonality-scaled score.
///
/// Scores must be nonnegative (the output of
/// [`combine_scores`](crate::scoring::combine_scores)); `tau` in `(0, 1)` is
/// the smallest residual ratio a candidate may have to be eligible. When no
/// candidate is eligible the basis is dropped and selection continues against
/// the unprojected bank.
pub fn campaign_select(cands: &CandidateSet, scores: &ScoreVector, d_out: usize, tau: f64) -> Result<Selection> {
    if scores.len() != cands.len() {
        return Err(Error::arg(format!(
            "{} scores for {} candidates",
            scores.len(),
            cands.len()
        )));
    }
    if d_out == 0 || d_out > cands.len() {
        return Err(Error::arg(format!(
            "cannot select {d_out} neurons from {} candidates",
            cands.len()
        )));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::arg(format!("tau must lie in (0, 1), got {tau}")));
    }
    if let Some(s) = scores.values().iter().find(|&&s| s < 0.0) {
        return Err(Error::arg(format!("campaign scores must be nonnegative, got {s}")));
    }

    let mut state = CampaignState::new(cands);
    for _ in 0..d_out {
        state.step(scores, tau)?;
    }
    let indices = state.selected.clone();
    Ok(Selection {
        weights: cands.weights.select(Axis(1), &indices),
        indices,
        block_resets: state.block_resets,
    })
}
