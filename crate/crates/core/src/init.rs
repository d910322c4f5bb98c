//! Weight initializers: Xavier, He, LSUV on top of either, and the
//! layer-sequential neuron-campaign initializer with its two single-criterion
//! ablations.

use std::fmt;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::campaign::{campaign_select, generate_candidates, DEFAULT_TAU};
use crate::data::{partition, subsample, Dataset};
use crate::error::{Error, Result};
use crate::scoring::{combine_scores, iim_scores, tie_scores, Activations, AlphaSchedule, TieOptions};
use crate::seed::{self, derive_seed, layer_seed, stream};

/// Distribution the weights (or candidate neurons) are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseInit {
    /// Uniform on `+-sqrt(6 / (fan_in + fan_out))`.
    Xavier,
    /// Gaussian with variance `2 / fan_in`.
    He,
}

impl BaseInit {
    pub fn name(self) -> &'static str {
        match self {
            BaseInit::Xavier => "xavier",
            BaseInit::He => "he",
        }
    }

    /// Analytic per-entry variance for a `fan_in -> fan_out` layer.
    pub fn variance(self, fan_in: usize, fan_out: usize) -> f64 {
        match self {
            BaseInit::Xavier => 2.0 / (fan_in + fan_out) as f64,
            BaseInit::He => 2.0 / fan_in as f64,
        }
    }

    /// `fan_in x cols` matrix drawn with the scale of a `fan_in -> fan_out`
    /// layer. Entries are filled row-major.
    pub fn sample<R: Rng + ?Sized>(self, fan_in: usize, fan_out: usize, cols: usize, rng: &mut R) -> Result<Array2<f64>> {
        if fan_in == 0 || fan_out == 0 || cols == 0 {
            return Err(Error::arg(format!("layer dims must be >= 1, got {fan_in}x{fan_out}")));
        }
        let values: Vec<f64> = match self {
            BaseInit::Xavier => {
                let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let dist = Uniform::new_inclusive(-bound, bound).map_err(|e| Error::arg(e.to_string()))?;
                dist.sample_iter(rng).take(fan_in * cols).collect()
            }
            BaseInit::He => {
                let dist = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).map_err(|e| Error::arg(e.to_string()))?;
                dist.sample_iter(rng).take(fan_in * cols).collect()
            }
        };
        Ok(Array2::from_shape_vec((fan_in, cols), values).expect("shape matches"))
    }

    pub fn init(self, fan_in: usize, fan_out: usize, seed: u64) -> Result<Array2<f64>> {
        self.sample(fan_in, fan_out, fan_out, &mut seed::rng(seed))
    }
}

impl fmt::Display for BaseInit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn xavier_init(fan_in: usize, fan_out: usize, seed: u64) -> Result<Array2<f64>> {
    BaseInit::Xavier.init(fan_in, fan_out, seed)
}

pub fn he_init(fan_in: usize, fan_out: usize, seed: u64) -> Result<Array2<f64>> {
    BaseInit::He.init(fan_in, fan_out, seed)
}

/// Layer widths `[d_0, d_1, .., d_D]`; ReLU on hidden layers, logits out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    widths: Vec<usize>,
}

impl NetworkSpec {
    pub fn new(widths: Vec<usize>) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::arg("a network needs an input and at least one layer"));
        }
        if widths.contains(&0) {
            return Err(Error::arg(format!("zero width in {widths:?}")));
        }
        Ok(Self { widths })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn n_layers(&self) -> usize {
        self.widths.len() - 1
    }

    /// `(fan_in, fan_out)` of layer `i` (0-based).
    pub fn layer_shape(&self, i: usize) -> (usize, usize) {
        (self.widths[i], self.widths[i + 1])
    }

    pub fn is_hidden(&self, i: usize) -> bool {
        i + 1 < self.n_layers()
    }

    /// `784x256x100x10` style identifier.
    pub fn id(&self) -> String {
        self.widths.iter().map(usize::to_string).collect::<Vec<_>>().join("x")
    }
}

/// Which representation the campaign scores candidates on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreOn {
    /// The layer's real output: ReLU for hidden layers, logits at the top.
    #[default]
    Activation,
    PreActivation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub k: usize,
    /// Rows used for scoring; `None` means the whole dataset.
    pub scoring_subset: Option<usize>,
    pub tie: TieOptions,
    pub score_on: ScoreOn,
    pub equalize_norms: bool,
    pub tau: f64,
    /// Run the campaign on the output (logit) layer too; otherwise that
    /// layer takes the base initializer's weights.
    pub campaign_output: bool,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            k: 3,
            scoring_subset: Some(10_000),
            tie: TieOptions::default(),
            score_on: ScoreOn::Activation,
            equalize_norms: true,
            tau: DEFAULT_TAU,
            campaign_output: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsuvConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub batch: Option<usize>,
}

impl Default for LsuvConfig {
    fn default() -> Self {
        Self { tol: 0.01, max_iter: 10, batch: Some(10_000) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitStrategy {
    Vanilla { base: BaseInit },
    Lsuv { base: BaseInit, lsuv: LsuvConfig },
    Ibci { base: BaseInit, campaign: CampaignConfig, alphas: AlphaSchedule },
    TieOnly { base: BaseInit, campaign: CampaignConfig },
    IimOnly { base: BaseInit, campaign: CampaignConfig },
}

impl InitStrategy {
    pub fn base(&self) -> BaseInit {
        match self {
            InitStrategy::Vanilla { base }
            | InitStrategy::Lsuv { base, .. }
            | InitStrategy::Ibci { base, .. }
            | InitStrategy::TieOnly { base, .. }
            | InitStrategy::IimOnly { base, .. } => *base,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InitStrategy::Vanilla { .. } => "vanilla",
            InitStrategy::Lsuv { .. } => "lsuv",
            InitStrategy::Ibci { .. } => "ibci",
            InitStrategy::TieOnly { .. } => "tie_only",
            InitStrategy::IimOnly { .. } => "iim_only",
        }
    }

    /// Campaign settings plus the alpha schedule the campaign runs with, for
    /// the campaign-based strategies.
    pub fn campaign(&self, layers: usize) -> Option<(&CampaignConfig, AlphaSchedule)> {
        match self {
            InitStrategy::Ibci { campaign, alphas, .. } => Some((campaign, alphas.clone())),
            InitStrategy::TieOnly { campaign, .. } => Some((campaign, AlphaSchedule::linear(0.0, 0.0, layers))),
            InitStrategy::IimOnly { campaign, .. } => Some((campaign, AlphaSchedule::linear(1.0, 1.0, layers))),
            _ => None,
        }
    }

    /// Compact description, e.g. `ibci-xavier-k3-a0.9;0.5;0.1`.
    pub fn descriptor(&self) -> String {
        let mut s = format!("{}-{}", self.name(), self.base());
        match self {
            InitStrategy::Ibci { campaign, alphas, .. } => {
                let a: Vec<String> = alphas.alphas().iter().map(|a| format!("{a}")).collect();
                s.push_str(&format!("-k{}-a{}", campaign.k, a.join(";")));
            }
            InitStrategy::TieOnly { campaign, .. } | InitStrategy::IimOnly { campaign, .. } => {
                s.push_str(&format!("-k{}", campaign.k));
            }
            _ => {}
        }
        if let Some((c, _)) = self.campaign(0) {
            if !c.campaign_output {
                s.push_str("-noout");
            }
        }
        s
    }
}

/// Per-layer weights (`d_{i-1} x d_i`) and biases.
#[derive(Debug, Clone, PartialEq)]
pub struct InitWeights {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl InitWeights {
    pub fn with_zero_biases(weights: Vec<Array2<f64>>) -> Self {
        let biases = weights.iter().map(|w| Array1::zeros(w.ncols())).collect();
        Self { weights, biases }
    }
}

/// Diagnostics of one campaign layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerReport {
    pub selected: Vec<usize>,
    pub block_resets: usize,
    pub alpha: f64,
}

fn relu_inplace(z: &mut Array2<f64>) {
    z.mapv_inplace(|v| v.max(0.0));
}

fn check_shape(spec: &NetworkSpec, ds: &Dataset) -> Result<()> {
    if ds.dim() != spec.widths()[0] {
        return Err(Error::arg(format!(
            "network input width {} does not match feature dimension {}",
            spec.widths()[0],
            ds.dim()
        )));
    }
    Ok(())
}

fn scoring_rows(ds: &Dataset, subset: Option<usize>, seed: u64) -> Result<Dataset> {
    match subset {
        Some(n) => subsample(ds, n, derive_seed(seed, stream::SCORING)),
        None => Ok(ds.clone()),
    }
}

/// Initializes every layer of `spec` according to `strategy`. All biases are
/// zero. `seed` is the init seed; layer `i` draws from `layer_seed(seed, i)`.
pub fn initialize(spec: &NetworkSpec, ds: &Dataset, strategy: &InitStrategy, seed: u64) -> Result<InitWeights> {
    match strategy {
        InitStrategy::Vanilla { base } => base_layers(spec, *base, seed),
        InitStrategy::Lsuv { base, lsuv } => {
            check_shape(spec, ds)?;
            let w = base_layers(spec, *base, seed)?;
            let batch = scoring_rows(ds, lsuv.batch, seed)?;
            let w = lsuv_rescale(&w.weights, &batch, lsuv.tol, lsuv.max_iter)?;
            Ok(InitWeights::with_zero_biases(w))
        }
        _ => ibci_init(spec, ds, strategy, seed).map(|(w, _)| w),
    }
}

fn base_layers(spec: &NetworkSpec, base: BaseInit, seed: u64) -> Result<InitWeights> {
    let weights = (0..spec.n_layers())
        .map(|i| {
            let (fan_in, fan_out) = spec.layer_shape(i);
            base.init(fan_in, fan_out, layer_seed(seed, i))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InitWeights::with_zero_biases(weights))
}

fn population_variance(z: &Array2<f64>) -> f64 {
    let n = z.len() as f64;
    let mean = z.sum() / n;
    z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// Variance of each layer's pre-activation output over `x`, propagating
/// through ReLU hidden layers with zero biases.
pub fn preactivation_variances(weights: &[Array2<f64>], x: &Array2<f64>) -> Vec<f64> {
    let mut z = x.clone();
    let mut out = Vec::with_capacity(weights.len());
    for (i, w) in weights.iter().enumerate() {
        let mut pre = z.dot(w);
        out.push(population_variance(&pre));
        if i + 1 < weights.len() {
            relu_inplace(&mut pre);
        }
        z = pre;
    }
    out
}

/// Layer-sequential unit-variance rescaling over the rows of `ds`.
///
/// Each layer is scaled by `1/sqrt(var)` of its pre-activation output until
/// the variance is within `tol` of 1 or `max_iter` rescalings were applied.
pub fn lsuv_rescale(weights: &[Array2<f64>], ds: &Dataset, tol: f64, max_iter: usize) -> Result<Vec<Array2<f64>>> {
    if !(tol > 0.0) {
        return Err(Error::arg(format!("LSUV tolerance must be positive, got {tol}")));
    }
    let mut z = ds.features().clone();
    let mut out = Vec::with_capacity(weights.len());
    for (i, w) in weights.iter().enumerate() {
        if w.nrows() != z.ncols() {
            return Err(Error::arg(format!(
                "layer {i} expects {} inputs, got {}",
                w.nrows(),
                z.ncols()
            )));
        }
        let mut w = w.clone();
        let mut pre = z.dot(&w);
        let mut var = population_variance(&pre);
        let mut iter = 0;
        while (var - 1.0).abs() > tol && iter < max_iter {
            if !(var > 0.0) || !var.is_finite() {
                return Err(Error::Degenerate { layer: i, msg: format!("output variance is {var}") });
            }
            w /= var.sqrt();
            pre = z.dot(&w);
            var = population_variance(&pre);
            iter += 1;
        }
        if i + 1 < weights.len() {
            relu_inplace(&mut pre);
        }
        z = pre;
        out.push(w);
    }
    Ok(out)
}

fn to_f32(a: &Array2<f64>) -> Array2<f32> {
    a.mapv(|v| v as f32)
}

/// Layer-sequential neuron campaign over real data.
///
/// For each layer a `k`-times overcomplete bank is drawn, every candidate is
/// scored on the representation produced by the layers chosen so far, and
/// the campaign picks the layer's neurons. Candidate activations are computed
/// in `f32`, the precision the network trains in; scoring and selection run
/// in `f64`.
pub fn ibci_init(
    spec: &NetworkSpec,
    ds: &Dataset,
    strategy: &InitStrategy,
    seed: u64,
) -> Result<(InitWeights, Vec<LayerReport>)> {
    let layers = spec.n_layers();
    let (campaign, alphas) = strategy
        .campaign(layers)
        .ok_or_else(|| Error::arg(format!("{} is not a campaign strategy", strategy.name())))?;
    if alphas.len() != layers {
        return Err(Error::arg(format!(
            "alpha schedule has {} entries for {layers} layers",
            alphas.len()
        )));
    }
    check_shape(spec, ds)?;
    if ds.is_empty() {
        return Err(Error::arg("empty dataset"));
    }
    let base = strategy.base();
    let batch = scoring_rows(ds, campaign.scoring_subset, seed)?;
    let part = partition(&batch)?;

    let mut z = to_f32(batch.features());
    let mut weights = Vec::with_capacity(layers);
    let mut reports = Vec::with_capacity(layers);
    for i in 0..layers {
        let (fan_in, d_out) = spec.layer_shape(i);
        let hidden = spec.is_hidden(i);
        let alpha = alphas.get(i);
        if !hidden && !campaign.campaign_output {
            weights.push(base.init(fan_in, d_out, layer_seed(seed, i))?);
            reports.push(LayerReport { selected: Vec::new(), block_resets: 0, alpha });
            break;
        }
        let bank = generate_candidates(base, fan_in, d_out, campaign.k, layer_seed(seed, i), campaign.equalize_norms)
            .map_err(|e| match e {
                Error::Degenerate { msg, .. } => Error::Degenerate { layer: i, msg },
                e => e,
            })?;

        let mut cand = z.dot(&to_f32(bank.weights())).mapv(f64::from);
        if hidden && campaign.score_on == ScoreOn::Activation {
            relu_inplace(&mut cand);
        }
        let cand = Activations::new(cand)?;
        let scores = combine_scores(&iim_scores(&cand)?, &tie_scores(&cand, &part, campaign.tie)?, alpha)?;
        let sel = campaign_select(&bank, &scores, d_out, campaign.tau)?;

        let mut next = z.dot(&to_f32(&sel.weights));
        if hidden {
            next.mapv_inplace(|v| v.max(0.0));
            if next.iter().all(|&v| v == 0.0) {
                return Err(Error::Degenerate { layer: i, msg: "every ReLU unit is dead on the scoring data".into() });
            }
        }
        z = next;
        reports.push(LayerReport { selected: sel.indices, block_resets: sel.block_resets, alpha });
        weights.push(sel.weights);
    }
    Ok((InitWeights::with_zero_biases(weights), reports))
}
