//! Experiment configuration: a flat TOML table whose keys are the fields of
//! [`ExperimentConfig`]. Every field has a default (the desk-scale MNIST
//! profile), and any key can be overridden with `key=value` strings where
//! `value` is TOML (`epochs=5`, `alpha=[0.8,0.2]`, `base="he"`; bare words
//! are taken as strings).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{load_mnist_dir, sparse_class_means, subsample, synth_gaussians, Dataset, PixelScaling};
use crate::error::{Error, Result};
use crate::init::{BaseInit, CampaignConfig, InitStrategy, LsuvConfig, NetworkSpec, ScoreOn};
use crate::network::TrainConfig;
use crate::scoring::{AlphaSchedule, Centering, TieOptions};
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Mnist,
    Synthetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Vanilla,
    Lsuv,
    Ibci,
    TieOnly,
    IimOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub data: DataSource,
    /// Directory holding the four MNIST IDX files.
    pub mnist_dir: PathBuf,
    pub pixel_scaling: PixelScaling,
    /// Training rows kept (seeded by `data_seed`); 0 keeps all.
    pub train_subset: usize,
    /// Test rows kept; 0 keeps all.
    pub test_subset: usize,
    pub data_seed: u64,

    pub synth_classes: usize,
    pub synth_dim: usize,
    /// Coordinates carrying class signal; the rest is noise.
    pub synth_informative: usize,
    pub synth_separation: f64,
    pub synth_stddev: f64,
    pub synth_train_per_class: usize,
    pub synth_test_per_class: usize,

    /// Full layer widths, input dimension first, class count last.
    pub arch: Vec<usize>,
    pub base: BaseInit,
    pub strategy: StrategyKind,
    pub k: usize,
    /// Per-layer alphas; defaults to a 0.9 -> 0.1 ramp.
    pub alpha: Option<Vec<f64>>,
    /// Rows used to score candidates (and for LSUV); 0 uses the whole
    /// training set.
    pub scoring_subset: usize,
    pub tie_centering: Centering,
    pub tie_class_size_norm: bool,
    pub score_on: ScoreOn,
    pub equalize_norms: bool,
    pub tau: f64,
    /// Whether the output layer is chosen by campaign too.
    pub campaign_output: bool,
    pub lsuv_tol: f64,
    pub lsuv_max_iter: usize,

    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seeds: Vec<u64>,

    pub search_trials: usize,
    pub search_seed: u64,
    /// Epochs per alpha-search trial; defaults to `epochs`.
    pub search_epochs: Option<usize>,
    /// Seeds per alpha-search trial; defaults to `seeds`.
    pub search_seeds: Option<Vec<u64>>,

    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: DataSource::Mnist,
            mnist_dir: PathBuf::from("data/mnist"),
            pixel_scaling: PixelScaling::Unit,
            train_subset: 10_000,
            test_subset: 0,
            data_seed: 0,
            synth_classes: 4,
            synth_dim: 20,
            synth_informative: 3,
            synth_separation: 2.0,
            synth_stddev: 1.0,
            synth_train_per_class: 50,
            synth_test_per_class: 50,
            arch: vec![784, 256, 100, 10],
            base: BaseInit::Xavier,
            strategy: StrategyKind::Ibci,
            k: 3,
            alpha: None,
            scoring_subset: 10_000,
            tie_centering: Centering::PerClass,
            tie_class_size_norm: false,
            score_on: ScoreOn::Activation,
            equalize_norms: true,
            tau: crate::campaign::DEFAULT_TAU,
            campaign_output: true,
            lsuv_tol: 0.01,
            lsuv_max_iter: 10,
            lr: 0.1,
            batch_size: 100,
            epochs: 30,
            seeds: vec![0, 1, 2],
            search_trials: 10,
            search_seed: 0,
            search_epochs: None,
            search_seeds: None,
            output_dir: PathBuf::from("results"),
        }
    }
}

fn parse_override(s: &str) -> Result<(String, toml::Value)> {
    let (key, raw) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{s}` is not of the form key=value")))?;
    let key = key.trim().to_string();
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((key, value))
}

impl ExperimentConfig {
    /// Parses TOML text and applies `key=value` overrides on top.
    pub fn from_toml_str<S: AsRef<str>>(text: &str, overrides: &[S]) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            let (k, v) = parse_override(o.as_ref())?;
            table.insert(k, v);
        }
        let cfg: Self = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load<S: AsRef<str>>(path: &Path, overrides: &[S]) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config file {}: {e}", path.display())))?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.seeds.is_empty() {
            return fail("at least one seed is required".into());
        }
        if self.search_seeds.as_ref().is_some_and(Vec::is_empty) {
            return fail("search_seeds must not be empty".into());
        }
        if let Err(e) = NetworkSpec::new(self.arch.clone()) {
            return fail(e.to_string());
        }
        if self.k == 0 {
            return fail("k must be >= 1".into());
        }
        if let Some(a) = &self.alpha {
            if a.len() != self.arch.len() - 1 {
                return fail(format!("alpha has {} entries for {} layers", a.len(), self.arch.len() - 1));
            }
            AlphaSchedule::new(a.clone()).map_err(|e| Error::Config(e.to_string()))?;
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) || self.batch_size == 0 || self.epochs == 0 {
            return fail("lr must be >= 0, batch_size and epochs >= 1".into());
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return fail(format!("tau must lie in (0, 1), got {}", self.tau));
        }
        if !(self.lsuv_tol > 0.0) {
            return fail("lsuv_tol must be positive".into());
        }
        if self.data == DataSource::Synthetic
            && (self.synth_classes < 2 || self.synth_dim == 0 || self.synth_train_per_class == 0 || self.synth_test_per_class == 0)
        {
            return fail("synthetic data needs >= 2 classes, dim >= 1 and >= 1 sample per class".into());
        }
        Ok(())
    }

    pub fn network(&self) -> Result<NetworkSpec> {
        NetworkSpec::new(self.arch.clone())
    }

    pub fn alphas(&self) -> Result<AlphaSchedule> {
        match &self.alpha {
            Some(a) => AlphaSchedule::new(a.clone()),
            None => Ok(AlphaSchedule::linear_default(self.arch.len() - 1)),
        }
    }

    pub fn campaign_config(&self) -> CampaignConfig {
        CampaignConfig {
            k: self.k,
            scoring_subset: (self.scoring_subset > 0).then_some(self.scoring_subset),
            tie: TieOptions { centering: self.tie_centering, normalize_class_size: self.tie_class_size_norm },
            score_on: self.score_on,
            equalize_norms: self.equalize_norms,
            tau: self.tau,
            campaign_output: self.campaign_output,
        }
    }

    pub fn strategy_for(&self, kind: StrategyKind) -> Result<InitStrategy> {
        let base = self.base;
        Ok(match kind {
            StrategyKind::Vanilla => InitStrategy::Vanilla { base },
            StrategyKind::Lsuv => InitStrategy::Lsuv {
                base,
                lsuv: LsuvConfig {
                    tol: self.lsuv_tol,
                    max_iter: self.lsuv_max_iter,
                    batch: (self.scoring_subset > 0).then_some(self.scoring_subset),
                },
            },
            StrategyKind::Ibci => InitStrategy::Ibci { base, campaign: self.campaign_config(), alphas: self.alphas()? },
            StrategyKind::TieOnly => InitStrategy::TieOnly { base, campaign: self.campaign_config() },
            StrategyKind::IimOnly => InitStrategy::IimOnly { base, campaign: self.campaign_config() },
        })
    }

    pub fn strategy(&self) -> Result<InitStrategy> {
        self.strategy_for(self.strategy)
    }

    pub fn train_config(&self, shuffle_seed: u64) -> TrainConfig {
        TrainConfig { learning_rate: self.lr, batch_size: self.batch_size, epochs: self.epochs, shuffle_seed }
    }

    /// Train and test sets, subsetted and checked against `arch`.
    pub fn load_data(&self) -> Result<(Dataset, Dataset)> {
        let (train, test) = match self.data {
            DataSource::Mnist => load_mnist_dir(&self.mnist_dir, self.pixel_scaling)?,
            DataSource::Synthetic => {
                let means = sparse_class_means(self.synth_classes, self.synth_dim, self.synth_informative, self.synth_separation);
                (
                    synth_gaussians(&means, self.synth_stddev, self.synth_train_per_class, self.data_seed)?,
                    synth_gaussians(&means, self.synth_stddev, self.synth_test_per_class, derive_seed(self.data_seed, 1))?,
                )
            }
        };
        let keep = |ds: Dataset, n: usize, seed: u64| {
            if n == 0 || n >= ds.len() {
                Ok(ds)
            } else {
                subsample(&ds, n, seed)
            }
        };
        let train = keep(train, self.train_subset, self.data_seed)?;
        let test = keep(test, self.test_subset, derive_seed(self.data_seed, 2))?;
        let (d_in, d_out) = (self.arch[0], self.arch[self.arch.len() - 1]);
        if train.dim() != d_in || d_out != train.n_classes() {
            return Err(Error::Config(format!(
                "arch {:?} does not fit data with {} features and {} classes",
                self.arch,
                train.dim(),
                train.n_classes()
            )));
        }
        Ok((train, test))
    }
}
