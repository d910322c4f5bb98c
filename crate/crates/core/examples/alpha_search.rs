//! Random search over per-layer alphas on synthetic data.
//!
//! `cargo run --release --example alpha_search`

use ibci::bench::alpha_search;
use ibci::config::ExperimentConfig;

fn main() -> ibci::Result<()> {
    let out = std::env::temp_dir().join("ibci-alpha-search");
    let cfg = ExperimentConfig::from_toml_str(
        include_str!("../../../configs/smoke.toml"),
        &[format!("output_dir={:?}", out.display().to_string()), "search_epochs=5".into()],
    )?;
    let res = alpha_search(&cfg, 6, 0)?;
    for (s, row) in &res.trials {
        let a: Vec<String> = s.alphas().iter().map(|a| format!("{a:.2}")).collect();
        println!("[{}] {}", a.join(", "), row.table_cell());
    }
    println!("best {:?} -> {}", res.best.alphas(), res.best_row.table_cell());
    Ok(())
}
