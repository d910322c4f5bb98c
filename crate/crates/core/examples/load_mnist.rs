//! Loads the MNIST IDX files and prints shapes and class counts.
//!
//! `cargo run --release --example load_mnist -- [data/mnist]`

use ibci::data::{load_mnist_dir, partition, PixelScaling};

fn main() -> ibci::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "data/mnist".into());
    let (train, test) = load_mnist_dir(&dir, PixelScaling::Unit)?;
    for (name, ds) in [("train", &train), ("test", &test)] {
        let counts = partition(ds)?.counts();
        println!("{name}: {} x {}, {} classes, counts {counts:?}", ds.len(), ds.dim(), ds.n_classes());
    }
    let mean = train.features().mean().unwrap_or(0.0);
    println!("mean pixel {mean:.4}");
    Ok(())
}
