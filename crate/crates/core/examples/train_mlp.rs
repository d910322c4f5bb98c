//! Trains MLP-3 on an MNIST subset from a vanilla and a campaign init and
//! prints the test error per epoch.
//!
//! `cargo run --release --example train_mlp -- [data/mnist] [epochs]`

use ibci::bench::Experiment;
use ibci::config::{ExperimentConfig, StrategyKind};

fn main() -> ibci::Result<()> {
    let mut args = std::env::args().skip(1);
    let cfg = ExperimentConfig {
        mnist_dir: args.next().unwrap_or_else(|| "data/mnist".into()).into(),
        train_subset: 5000,
        scoring_subset: 5000,
        epochs: args.next().map_or(5, |e| e.parse().expect("epochs")),
        ..ExperimentConfig::default()
    };
    let exp = Experiment::load(cfg)?;
    for kind in [StrategyKind::Vanilla, StrategyKind::Ibci] {
        let strategy = exp.cfg.strategy_for(kind)?;
        let run = exp.run_seed(&strategy, 0)?;
        println!("{} (init {:.2}s, train {:.1}s)", strategy.descriptor(), run.init_seconds, run.train_seconds);
        for r in &run.metrics.epochs {
            println!("  epoch {:>3}  loss {:.4}  test error {:.2}%", r.epoch, r.train_loss, r.test_error);
        }
        println!("  min {:.2}% at epoch {}", run.metrics.min_error, run.metrics.argmin_epoch);
    }
    Ok(())
}
