//! Scores a bank of random ReLU neurons on synthetic data where only the
//! first coordinates separate the classes.
//!
//! `cargo run --example scoring`

use ibci::campaign::generate_candidates;
use ibci::data::{partition, sparse_class_means, synth_gaussians};
use ibci::init::BaseInit;
use ibci::scoring::{combine_scores, iim_scores, tie_scores, Activations, TieOptions};

fn main() -> ibci::Result<()> {
    let means = sparse_class_means(3, 10, 2, 3.0);
    let ds = synth_gaussians(&means, 1.0, 100, 0)?;
    let bank = generate_candidates(BaseInit::He, 10, 4, 2, 1, true)?;
    let z = Activations::new(ds.features().dot(bank.weights()).mapv(|v| v.max(0.0)))?;

    let iim = iim_scores(&z)?;
    let tie = tie_scores(&z, &partition(&ds)?, TieOptions::default())?;
    println!("{:>4} {:>10} {:>10} {:>8} {:>8} {:>8}", "cand", "iim", "tie", "a=1", "a=0.5", "a=0");
    let mixed: Vec<_> = [1.0, 0.5, 0.0].iter().map(|&a| combine_scores(&iim, &tie, a)).collect::<Result<_, _>>()?;
    for q in 0..bank.len() {
        println!(
            "{q:>4} {:>10.4} {:>10.4} {:>8.3} {:>8.3} {:>8.3}",
            iim.values()[q],
            tie.values()[q],
            mixed[0].values()[q],
            mixed[1].values()[q],
            mixed[2].values()[q]
        );
    }
    println!("sum of iim scores (trace of covariance): {:.4}", iim.sum());
    Ok(())
}
