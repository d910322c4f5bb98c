//! Step-by-step neuron campaign on a small bank: scores, residual ratios
//! and the winner of every round.
//!
//! `cargo run --example campaign`

use ibci::campaign::{campaign_select, generate_candidates, CampaignState, DEFAULT_TAU};
use ibci::init::BaseInit;
use ibci::scoring::ScoreVector;

fn main() -> ibci::Result<()> {
    let (fan_in, d_out, k) = (4, 6, 2);
    let bank = generate_candidates(BaseInit::Xavier, fan_in, d_out, k, 7, true)?;
    let scores = ScoreVector::from((0..bank.len()).map(|i| 1.0 - 0.05 * i as f64).collect::<Vec<_>>());

    let mut state = CampaignState::new(&bank);
    for round in 0..d_out {
        let ratios: Vec<String> = state.ratios().iter().map(|r| format!("{r:.2}")).collect();
        let pick = state.step(&scores, DEFAULT_TAU)?;
        println!("round {round}: ratios [{}] -> pick {pick} (resets {})", ratios.join(" "), state.block_resets());
    }

    let sel = campaign_select(&bank, &scores, d_out, DEFAULT_TAU)?;
    println!("selected {:?}, {} block reset(s)", sel.indices, sel.block_resets);
    Ok(())
}
