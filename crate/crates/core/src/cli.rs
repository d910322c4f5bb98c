//! `ibci` command line: `init`, `train`, `bench`, `ablate`, `alpha-search`.
//!
//! Exit status is 0 on success, 2 for usage and config errors, 1 for runtime
//! failures.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::bench::{self, run_id, shuffle_seed, Experiment};
use crate::config::ExperimentConfig;
use crate::dump;
use crate::error::{Error, Result};
use crate::init::NetworkSpec;
use crate::network::{train, Mlp};

#[derive(Debug, Parser)]
#[command(name = "ibci", version, about = "Neuron-campaign MLP initialization and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML config file; defaults apply to every key it omits.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set epochs=5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Initialize one network per seed and write weight dumps.
    Init {
        #[command(flatten)]
        common: Common,
    },
    /// Train from a weight dump (or initialize per the config) and write per-epoch metrics.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Run the configured strategy over all seeds.
    Bench {
        #[command(flatten)]
        common: Common,
    },
    /// Run the campaign initializer and both single-criterion variants.
    Ablate {
        #[command(flatten)]
        common: Common,
    },
    /// Random search over per-layer alphas.
    AlphaSearch {
        #[command(flatten)]
        common: Common,
        /// Overrides `search_trials`.
        #[arg(long)]
        trials: Option<usize>,
        /// Overrides `search_seed`.
        #[arg(long)]
        search_seed: Option<u64>,
    },
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    match &common.config {
        Some(path) => ExperimentConfig::load(path, &common.overrides),
        None => ExperimentConfig::from_toml_str("", &common.overrides),
    }
}

fn ensure_dir(cfg: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))
}

fn print_row(row: &bench::SummaryRow) {
    println!("{:<40} {:<18} {}", row.strategy, row.arch, row.table_cell());
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Init { common } => {
            let exp = Experiment::load(load_config(&common)?)?;
            ensure_dir(&exp.cfg)?;
            let strategy = exp.cfg.strategy()?;
            for &seed in &exp.cfg.seeds {
                let weights = exp.init_weights(&strategy, seed)?;
                let path = exp.cfg.output_dir.join(format!("weights_seed{seed}.bin"));
                dump::write(&path, &weights, &strategy.descriptor(), seed)?;
                println!("{}", path.display());
            }
        }
        Command::Train { common, weights } => {
            let cfg = load_config(&common)?;
            let exp = Experiment::load(cfg)?;
            ensure_dir(&exp.cfg)?;
            let out = exp.cfg.output_dir.join("train_epochs.csv");
            let runs = match weights {
                Some(path) => {
                    let (header, init) = dump::read(&path)?;
                    let mut widths = vec![header.shapes[0].0];
                    widths.extend(header.shapes.iter().map(|s| s.1));
                    let arch = NetworkSpec::new(widths)?.id();
                    let mut mlp = Mlp::<f32>::from_init(&init)?;
                    let metrics = train(&mut mlp, &exp.train, &exp.test, &exp.cfg.train_config(shuffle_seed(header.seed)))?;
                    let run = bench::RunOutput { seed: header.seed, metrics, init_seconds: 0.0, train_seconds: 0.0 };
                    bench::write_epochs_csv(&out, &run_id(&header.strategy, &arch), std::slice::from_ref(&run))?;
                    vec![run]
                }
                None => {
                    let strategy = exp.cfg.strategy()?;
                    let (_, runs) = exp.run_strategy(&strategy, &exp.cfg.seeds)?;
                    bench::write_epochs_csv(&out, &exp.run_id(&strategy), &runs)?;
                    runs
                }
            };
            for r in &runs {
                println!("seed {}: min error {:.2}% at epoch {}", r.seed, r.metrics.min_error, r.metrics.argmin_epoch);
            }
        }
        Command::Bench { common } => print_row(&bench::run_experiment(&load_config(&common)?)?),
        Command::Ablate { common } => {
            for row in bench::run_ablation(&load_config(&common)?)? {
                print_row(&row);
            }
        }
        Command::AlphaSearch { common, trials, search_seed } => {
            let cfg = load_config(&common)?;
            let result = bench::alpha_search(
                &cfg,
                trials.unwrap_or(cfg.search_trials),
                search_seed.unwrap_or(cfg.search_seed),
            )?;
            println!("best alphas {:?}", result.best.alphas());
            print_row(&result.best_row);
        }
    }
    Ok(())
}

/// Runs the CLI on `argv` (program name first) and returns the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
