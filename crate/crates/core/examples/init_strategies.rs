//! Initializes one network with every strategy and prints per-layer
//! pre-activation variances and the campaign's choices.
//!
//! `cargo run --release --example init_strategies`

use ibci::data::{sparse_class_means, synth_gaussians};
use ibci::init::{ibci_init, initialize, preactivation_variances, BaseInit, CampaignConfig, InitStrategy, LsuvConfig, NetworkSpec};
use ibci::scoring::AlphaSchedule;

fn main() -> ibci::Result<()> {
    let ds = synth_gaussians(&sparse_class_means(4, 32, 4, 2.0), 1.0, 200, 0)?;
    let spec = NetworkSpec::new(vec![32, 24, 16, 4])?;
    let campaign = CampaignConfig { scoring_subset: Some(400), ..CampaignConfig::default() };
    let base = BaseInit::Xavier;
    let strategies = [
        InitStrategy::Vanilla { base },
        InitStrategy::Lsuv { base, lsuv: LsuvConfig { batch: None, ..LsuvConfig::default() } },
        InitStrategy::Ibci { base, campaign: campaign.clone(), alphas: AlphaSchedule::linear_default(spec.n_layers()) },
        InitStrategy::TieOnly { base, campaign: campaign.clone() },
        InitStrategy::IimOnly { base, campaign },
    ];
    for s in &strategies {
        let w = initialize(&spec, &ds, s, 1)?;
        let var: Vec<String> = preactivation_variances(&w.weights, ds.features()).iter().map(|v| format!("{v:.3}")).collect();
        println!("{:<28} pre-activation variance [{}]", s.descriptor(), var.join(", "));
    }

    let (_, reports) = ibci_init(&spec, &ds, &strategies[2], 1)?;
    for (i, r) in reports.iter().enumerate() {
        println!("layer {i}: alpha {:.2}, first picks {:?}, resets {}", r.alpha, &r.selected[..r.selected.len().min(5)], r.block_resets);
    }
    Ok(())
}
