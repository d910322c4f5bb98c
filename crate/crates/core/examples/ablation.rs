//! Campaign initializer against its single-criterion variants on synthetic
//! data; writes the CSVs to a temporary directory and prints the table.
//!
//! `cargo run --release --example ablation`

use ibci::bench::run_ablation;
use ibci::config::ExperimentConfig;

fn main() -> ibci::Result<()> {
    let out = std::env::temp_dir().join("ibci-ablation");
    let cfg = ExperimentConfig::from_toml_str(
        include_str!("../../../configs/smoke.toml"),
        &[format!("output_dir={:?}", out.display().to_string())],
    )?;
    for row in run_ablation(&cfg)? {
        println!("{:<32} {}", row.strategy, row.table_cell());
    }
    println!("csv written to {}", out.display());
    Ok(())
}
