mod common;

use std::fs;

use ibci::data::{load_mnist_idx, load_mnist_idx_scaled, partition, subsample, synth_gaussians, write_mnist_idx, Dataset, PixelScaling};
use ibci::Error;
use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn idx_images(n: u32, rows: u32, cols: u32, pixels: &[u8]) -> Vec<u8> {
    let mut b = Vec::new();
    for v in [0x803u32, n, rows, cols] {
        b.extend_from_slice(&v.to_be_bytes());
    }
    b.extend_from_slice(pixels);
    b
}

fn idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut b = Vec::new();
    for v in [0x801u32, labels.len() as u32] {
        b.extend_from_slice(&v.to_be_bytes());
    }
    b.extend_from_slice(labels);
    b
}

#[test]
fn tiny_fixture_scales_pixels() {
    let dir = tempfile::tempdir().unwrap();
    let (img, lab) = (dir.path().join("img"), dir.path().join("lab"));
    fs::write(&img, idx_images(2, 2, 2, &[0, 128, 255, 0, 255, 255, 128, 0])).unwrap();
    fs::write(&lab, idx_labels(&[3, 1])).unwrap();
    let ds = load_mnist_idx(&img, &lab).unwrap();
    assert_eq!((ds.len(), ds.dim(), ds.n_classes()), (2, 4, 4));
    assert_eq!(ds.labels(), &[3, 1]);
    assert_eq!(ds.features()[[0, 0]], 0.0);
    assert_eq!(ds.features()[[0, 1]], 128.0 / 255.0);
    assert_eq!(ds.features()[[0, 2]], 1.0);
    let sym = load_mnist_idx_scaled(&img, &lab, PixelScaling::Symmetric).unwrap();
    assert_eq!(sym.features()[[0, 0]], -1.0);
    assert_eq!(sym.features()[[0, 2]], 1.0);
}

#[test]
fn malformed_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (img, lab) = (dir.path().join("img"), dir.path().join("lab"));
    let mut bad = idx_images(1, 2, 2, &[0; 4]);
    bad[3] = 0x04;
    fs::write(&img, &bad).unwrap();
    fs::write(&lab, idx_labels(&[0])).unwrap();
    assert!(matches!(load_mnist_idx(&img, &lab), Err(Error::Format { .. })));

    fs::write(&img, idx_images(2, 2, 2, &[0; 5])).unwrap();
    fs::write(&lab, idx_labels(&[0, 1])).unwrap();
    assert!(matches!(load_mnist_idx(&img, &lab), Err(Error::Io { .. })));

    fs::write(&img, idx_images(2, 2, 2, &[0; 8])).unwrap();
    fs::write(&lab, idx_labels(&[0, 1, 1])).unwrap();
    assert!(matches!(load_mnist_idx(&img, &lab), Err(Error::Consistency(_))));

    assert!(matches!(load_mnist_idx(dir.path().join("missing"), &lab), Err(Error::Io { .. })));
}

#[test]
fn dataset_validation() {
    assert!(Dataset::new(Array2::zeros((2, 3)), vec![0], 2).is_err());
    assert!(Dataset::new(Array2::zeros((2, 3)), vec![0, 2], 2).is_err());
    assert!(Dataset::new(Array2::from_elem((1, 1), f64::NAN), vec![0], 1).is_err());
}

#[test]
fn synthetic_clusters_and_partition() {
    let ds = synth_gaussians(&[vec![0.0, 0.0], vec![5.0, 5.0], vec![-5.0, 5.0]], 0.0, 4, 1).unwrap();
    let part = partition(&ds).unwrap();
    assert_eq!(part.counts(), vec![4, 4, 4]);
    assert_eq!(ds.features()[[4, 0]], 5.0);
    assert!(synth_gaussians(&[vec![0.0]], 1.0, 3, 0).is_err());
    let a = synth_gaussians(&[vec![0.0], vec![1.0]], 1.0, 10, 9).unwrap();
    let b = synth_gaussians(&[vec![0.0], vec![1.0]], 1.0, 10, 9).unwrap();
    assert_eq!(a, b);
}

#[test]
fn subsample_contract() {
    let ds = synth_gaussians(&[vec![0.0], vec![1.0]], 1.0, 10, 0).unwrap();
    let s = subsample(&ds, 7, 3).unwrap();
    assert_eq!(s.len(), 7);
    assert_eq!(s, subsample(&ds, 7, 3).unwrap());
    assert_eq!(subsample(&ds, 20, 3).unwrap(), ds);
    assert!(subsample(&ds, 0, 3).is_err());
    assert!(subsample(&ds, 21, 3).is_err());
}

#[test]
fn full_mnist_shapes() {
    if !common::mnist_available() {
        eprintln!("MNIST not found under {}; skipping", common::mnist_dir().display());
        return;
    }
    let (train, test) = common::load_mnist();
    assert_eq!((train.len(), train.dim(), train.n_classes()), (60_000, 784, 10));
    assert_eq!((test.len(), test.dim(), test.n_classes()), (10_000, 784, 10));
    assert!(train.features().iter().all(|&v| (0.0..=1.0).contains(&v)));
}

proptest! {
    #[test]
    fn idx_round_trip(n in 1usize..6, rows in 1usize..5, cols in 1usize..5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pixels: Vec<f64> = (0..n * rows * cols).map(|_| f64::from(rng.random::<u8>()) / 255.0).collect();
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..10)).collect();
        let k = labels.iter().max().unwrap() + 1;
        let ds = Dataset::new(Array2::from_shape_vec((n, rows * cols), pixels).unwrap(), labels, k).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (img, lab) = (dir.path().join("i"), dir.path().join("l"));
        write_mnist_idx(&ds, rows, cols, &img, &lab).unwrap();
        prop_assert_eq!(load_mnist_idx(&img, &lab).unwrap(), ds);
    }
}
