//! Experiment runner: initialize, train and aggregate over seeds, and write
//! the CSV outputs.
//!
//! Files written to `output_dir`:
//!
//! * `epochs.csv`: `run_id,seed,epoch,train_loss,test_error`, one row per
//!   epoch, sorted by run then seed;
//! * `summary.csv`: one [`SummaryRow`] per strategy;
//! * `table2.csv` (ablation only): `base,layers,ibci,tie_only,iim_only`;
//! * `alpha_search.csv` (search only): one row per trial;
//! * `timings.csv`: wall-clock seconds per run. This is the only output that
//!   differs between identical re-runs.

use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;

use crate::config::{ExperimentConfig, StrategyKind};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::init::{initialize, InitStrategy, InitWeights, NetworkSpec};
use crate::network::{train, Metrics, Mlp};
use crate::scoring::AlphaSchedule;
use crate::seed::{self, derive_seed, stream};

/// Seed the initializer of run `seed` draws from.
pub fn init_seed(seed: u64) -> u64 {
    derive_seed(seed, stream::INIT)
}

/// Seed of run `seed`'s per-epoch shuffles.
pub fn shuffle_seed(seed: u64) -> u64 {
    derive_seed(seed, stream::SHUFFLE)
}

/// Identifier of a strategy on an architecture, e.g. `vanilla-xavier-784x100x10`.
pub fn run_id(strategy_descriptor: &str, arch: &str) -> String {
    format!("{strategy_descriptor}-{arch}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub seed: u64,
    pub metrics: Metrics,
    pub init_seconds: f64,
    pub train_seconds: f64,
}

/// Aggregate over seeds: mean and population standard deviation of the
/// minimum test error, mean argmin epoch, and the raw per-seed values.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub strategy: String,
    pub arch: String,
    pub mean_min_error: f64,
    pub std_min_error: f64,
    pub mean_argmin_epoch: f64,
    pub seeds: Vec<u64>,
    pub min_errors: Vec<f64>,
    pub argmin_epochs: Vec<usize>,
}

pub const SUMMARY_HEADER: [&str; 8] = [
    "strategy",
    "arch",
    "mean_min_error",
    "std_min_error",
    "mean_argmin_epoch",
    "seeds",
    "min_errors",
    "argmin_epochs",
];

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(";")
}

impl SummaryRow {
    pub fn from_runs(strategy: &str, arch: &str, runs: &[RunOutput]) -> Self {
        let min_errors: Vec<f64> = runs.iter().map(|r| r.metrics.min_error).collect();
        let argmin_epochs: Vec<usize> = runs.iter().map(|r| r.metrics.argmin_epoch).collect();
        let mu = mean(&min_errors);
        let var = min_errors.iter().map(|e| (e - mu) * (e - mu)).sum::<f64>() / min_errors.len() as f64;
        Self {
            strategy: strategy.to_string(),
            arch: arch.to_string(),
            mean_min_error: mu,
            std_min_error: var.sqrt(),
            mean_argmin_epoch: argmin_epochs.iter().sum::<usize>() as f64 / argmin_epochs.len() as f64,
            seeds: runs.iter().map(|r| r.seed).collect(),
            min_errors,
            argmin_epochs,
        }
    }

    pub fn record(&self) -> [String; 8] {
        [
            self.strategy.clone(),
            self.arch.clone(),
            self.mean_min_error.to_string(),
            self.std_min_error.to_string(),
            self.mean_argmin_epoch.to_string(),
            join(&self.seeds),
            join(&self.min_errors),
            join(&self.argmin_epochs),
        ]
    }

    /// `mean +- std (epoch)` with two decimals, as in published tables.
    pub fn table_cell(&self) -> String {
        format!("{:.2} +- {:.2} ({:.0})", self.mean_min_error, self.std_min_error, self.mean_argmin_epoch)
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format { path: path.to_path_buf(), msg: format!("{other:?}") },
    }
}

struct CsvOut {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl CsvOut {
    fn create(path: PathBuf, header: &[&str]) -> Result<Self> {
        let mut writer = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
        writer.write_record(header).map_err(|e| csv_err(&path, e))?;
        let mut out = Self { path, writer };
        out.flush()?;
        Ok(out)
    }

    fn row<I, T>(&mut self, record: I) -> Result<()>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u8]>,
    {
        self.writer.write_record(record).map_err(|e| csv_err(&self.path, e))
    }

    fn flush(&mut self) -> Result<()> {
        self.writer.flush().map_err(|e| Error::io(&self.path, e))
    }
}

pub const EPOCHS_HEADER: [&str; 5] = ["run_id", "seed", "epoch", "train_loss", "test_error"];

fn write_epoch_rows(out: &mut CsvOut, run_id: &str, seed: u64, metrics: &Metrics) -> Result<()> {
    for r in &metrics.epochs {
        out.row([
            run_id.to_string(),
            seed.to_string(),
            r.epoch.to_string(),
            r.train_loss.to_string(),
            r.test_error.to_string(),
        ])?;
    }
    out.flush()
}

/// Writes per-epoch rows of a set of runs to a fresh CSV.
pub fn write_epochs_csv(path: &Path, run_id: &str, runs: &[RunOutput]) -> Result<()> {
    let mut out = CsvOut::create(path.to_path_buf(), &EPOCHS_HEADER)?;
    for r in runs {
        write_epoch_rows(&mut out, run_id, r.seed, &r.metrics)?;
    }
    Ok(())
}

fn sorted_seeds(seeds: &[u64]) -> Vec<u64> {
    let mut s = seeds.to_vec();
    s.sort_unstable();
    s.dedup();
    s
}

/// Loaded data plus the config it came from; runs any strategy on it.
pub struct Experiment {
    pub cfg: ExperimentConfig,
    pub spec: NetworkSpec,
    pub train: Dataset,
    pub test: Dataset,
}

impl Experiment {
    pub fn load(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let (train, test) = cfg.load_data()?;
        Self::with_data(cfg, train, test)
    }

    pub fn with_data(cfg: ExperimentConfig, train: Dataset, test: Dataset) -> Result<Self> {
        let spec = cfg.network()?;
        Ok(Self { cfg, spec, train, test })
    }

    pub fn run_id(&self, strategy: &InitStrategy) -> String {
        run_id(&strategy.descriptor(), &self.spec.id())
    }

    /// Initial weights of run `seed`.
    pub fn init_weights(&self, strategy: &InitStrategy, seed: u64) -> Result<InitWeights> {
        initialize(&self.spec, &self.train, strategy, init_seed(seed))
    }

    /// Trains from given initial weights with run `seed`'s shuffle stream.
    pub fn train_from(&self, weights: &InitWeights, seed: u64) -> Result<Metrics> {
        let mut mlp = Mlp::<f32>::from_init(weights)?;
        train(&mut mlp, &self.train, &self.test, &self.cfg.train_config(shuffle_seed(seed)))
    }

    pub fn run_seed(&self, strategy: &InitStrategy, seed: u64) -> Result<RunOutput> {
        let wrap = |phase| move |e| Error::Experiment { seed, phase, source: Box::new(e) };
        let t0 = Instant::now();
        let weights = self.init_weights(strategy, seed).map_err(wrap("init"))?;
        let init_seconds = t0.elapsed().as_secs_f64();
        let t1 = Instant::now();
        let metrics = self.train_from(&weights, seed).map_err(wrap("train"))?;
        Ok(RunOutput { seed, metrics, init_seconds, train_seconds: t1.elapsed().as_secs_f64() })
    }

    /// Runs every seed (ascending) without touching the filesystem.
    pub fn run_strategy(&self, strategy: &InitStrategy, seeds: &[u64]) -> Result<(SummaryRow, Vec<RunOutput>)> {
        let runs = sorted_seeds(seeds)
            .into_iter()
            .map(|s| self.run_seed(strategy, s))
            .collect::<Result<Vec<_>>>()?;
        Ok((SummaryRow::from_runs(&strategy.descriptor(), &self.spec.id(), &runs), runs))
    }

    /// Runs each strategy over the configured seeds, streaming per-epoch rows
    /// to disk as seeds finish, then writes the summary.
    pub fn run_and_write(&self, strategies: &[InitStrategy]) -> Result<Vec<SummaryRow>> {
        let dir = &self.cfg.output_dir;
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut epochs = CsvOut::create(dir.join("epochs.csv"), &EPOCHS_HEADER)?;
        let mut timings = CsvOut::create(dir.join("timings.csv"), &["run_id", "seed", "init_seconds", "train_seconds"])?;
        let mut rows = Vec::new();
        for strategy in strategies {
            let id = self.run_id(strategy);
            let mut runs = Vec::new();
            for seed in sorted_seeds(&self.cfg.seeds) {
                let run = self.run_seed(strategy, seed)?;
                write_epoch_rows(&mut epochs, &id, seed, &run.metrics)?;
                timings.row([id.clone(), seed.to_string(), run.init_seconds.to_string(), run.train_seconds.to_string()])?;
                timings.flush()?;
                runs.push(run);
            }
            rows.push(SummaryRow::from_runs(&strategy.descriptor(), &self.spec.id(), &runs));
        }
        let mut summary = CsvOut::create(dir.join("summary.csv"), &SUMMARY_HEADER)?;
        for r in &rows {
            summary.row(r.record())?;
        }
        summary.flush()?;
        Ok(rows)
    }

    pub fn ablation_strategies(&self) -> Result<Vec<InitStrategy>> {
        [StrategyKind::Ibci, StrategyKind::TieOnly, StrategyKind::IimOnly]
            .into_iter()
            .map(|k| self.cfg.strategy_for(k))
            .collect()
    }
}

/// Runs the configured strategy over all seeds and writes `epochs.csv`,
/// `summary.csv` and `timings.csv`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<SummaryRow> {
    let exp = Experiment::load(cfg.clone())?;
    let strategy = exp.cfg.strategy()?;
    Ok(exp.run_and_write(&[strategy])?.remove(0))
}

/// Campaign initializer against its two single-criterion variants, all on
/// the same seeds and therefore the same candidate banks. Also writes
/// `table2.csv`.
pub fn run_ablation(cfg: &ExperimentConfig) -> Result<Vec<SummaryRow>> {
    let exp = Experiment::load(cfg.clone())?;
    let strategies = exp.ablation_strategies()?;
    let rows = exp.run_and_write(&strategies)?;
    let path = exp.cfg.output_dir.join("table2.csv");
    let mut table = CsvOut::create(path, &["base", "layers", "ibci", "tie_only", "iim_only"])?;
    table.row([
        exp.cfg.base.to_string(),
        exp.spec.n_layers().to_string(),
        rows[0].table_cell(),
        rows[1].table_cell(),
        rows[2].table_cell(),
    ])?;
    table.flush()?;
    Ok(rows)
}

/// Result of [`alpha_search`].
#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best: AlphaSchedule,
    pub best_row: SummaryRow,
    pub trials: Vec<(AlphaSchedule, SummaryRow)>,
}

/// Schedule of trial `trial`: every layer's alpha uniform on `[0, 1]`.
pub fn sample_schedule(search_seed: u64, trial: usize, layers: usize) -> AlphaSchedule {
    let mut rng = seed::rng(derive_seed(search_seed, trial as u64));
    AlphaSchedule::new((0..layers).map(|_| rng.random::<f64>()).collect()).expect("unit interval")
}

/// Uniform random search over per-layer alphas on the reduced protocol
/// (`search_epochs`, `search_seeds`); the schedule with the lowest mean
/// minimum error wins, earliest trial on ties. Writes `alpha_search.csv`.
pub fn alpha_search(cfg: &ExperimentConfig, n_trials: usize, search_seed: u64) -> Result<SearchResult> {
    if n_trials == 0 {
        return Err(Error::Config("alpha search needs at least one trial".into()));
    }
    let mut reduced = cfg.clone();
    reduced.epochs = cfg.search_epochs.unwrap_or(cfg.epochs);
    if let Some(seeds) = &cfg.search_seeds {
        reduced.seeds = seeds.clone();
    }
    let exp = Experiment::load(reduced)?;
    search_on(&exp, n_trials, search_seed)
}

/// [`alpha_search`] on already-loaded data.
pub fn search_on(exp: &Experiment, n_trials: usize, search_seed: u64) -> Result<SearchResult> {
    let dir = &exp.cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut log = CsvOut::create(
        dir.join("alpha_search.csv"),
        &["trial", "alphas", "mean_min_error", "std_min_error", "mean_argmin_epoch"],
    )?;
    let layers = exp.spec.n_layers();
    let mut trials = Vec::with_capacity(n_trials);
    for t in 0..n_trials {
        let schedule = sample_schedule(search_seed, t, layers);
        let mut cfg = exp.cfg.clone();
        cfg.alpha = Some(schedule.alphas().to_vec());
        let strategy = cfg.strategy_for(StrategyKind::Ibci)?;
        let (row, _) = exp.run_strategy(&strategy, &exp.cfg.seeds)?;
        log.row([
            t.to_string(),
            join(schedule.alphas()),
            row.mean_min_error.to_string(),
            row.std_min_error.to_string(),
            row.mean_argmin_epoch.to_string(),
        ])?;
        log.flush()?;
        trials.push((schedule, row));
    }
    let best = trials
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.1.mean_min_error.total_cmp(&b.1.mean_min_error).then(i.cmp(j)))
        .map(|(i, _)| i)
        .expect("at least one trial");
    let (best, best_row) = trials[best].clone();
    Ok(SearchResult { best, best_row, trials })
}
