//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use ibci::data::{load_mnist_dir, Dataset, PixelScaling};
use ibci::network::Mlp;
use ndarray::{Array1, Array2};

/// Directory holding the MNIST IDX files: `$IBCI_MNIST_DIR` or `<workspace>/data/mnist`.
pub fn mnist_dir() -> PathBuf {
    std::env::var_os("IBCI_MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"))
}

pub fn mnist_available() -> bool {
    mnist_dir().join("train-images-idx3-ubyte").exists()
}

pub fn load_mnist() -> (Dataset, Dataset) {
    load_mnist_dir(mnist_dir(), PixelScaling::Unit).expect("MNIST files (run scripts/fetch_mnist.sh)")
}

/// Column variances by two explicit passes.
pub fn naive_iim(z: &Array2<f64>) -> Vec<f64> {
    let (m, c) = z.dim();
    (0..c)
        .map(|q| {
            let mut mean = 0.0;
            for i in 0..m {
                mean += z[[i, q]];
            }
            mean /= m as f64;
            let mut var = 0.0;
            for i in 0..m {
                var += (z[[i, q]] - mean) * (z[[i, q]] - mean);
            }
            var / m as f64
        })
        .collect()
}

/// Trace of the full `c x c` covariance matrix, built entry by entry.
pub fn naive_cov_trace(z: &Array2<f64>) -> f64 {
    let (m, c) = z.dim();
    let mean: Vec<f64> = (0..c).map(|q| (0..m).map(|i| z[[i, q]]).sum::<f64>() / m as f64).collect();
    let mut cov = vec![vec![0.0; c]; c];
    for a in 0..c {
        for b in 0..c {
            for i in 0..m {
                cov[a][b] += (z[[i, a]] - mean[a]) * (z[[i, b]] - mean[b]);
            }
            cov[a][b] /= m as f64;
        }
    }
    (0..c).map(|q| cov[q][q]).sum()
}

/// Between-class spread minus 1/N within-class scatter, per column, from
/// the labels directly. Returns the score and the magnitude of the two terms.
pub fn naive_tie(z: &Array2<f64>, labels: &[usize], n_classes: usize, global_center: bool, per_class_size: bool) -> Vec<(f64, f64)> {
    let (m, c) = z.dim();
    (0..c)
        .map(|q| {
            let mut mu = 0.0;
            for i in 0..m {
                mu += z[[i, q]];
            }
            mu /= m as f64;
            let mut between = 0.0;
            let mut within = 0.0;
            for j in 0..n_classes {
                let mut s = 0.0;
                let mut n = 0usize;
                for i in 0..m {
                    if labels[i] == j {
                        s += z[[i, q]];
                        n += 1;
                    }
                }
                let mu_j = s / n as f64;
                between += (mu_j - mu) * (mu_j - mu);
                let center = if global_center { mu } else { mu_j };
                let mut w = 0.0;
                for i in 0..m {
                    if labels[i] == j {
                        w += (z[[i, q]] - center) * (z[[i, q]] - center);
                    }
                }
                within += if per_class_size { w / n as f64 } else { w };
            }
            let within = within / n_classes as f64;
            (between - within, between + within)
        })
        .collect()
}

fn residual(basis: &[Array1<f64>], w: &Array1<f64>) -> Array1<f64> {
    let mut r = w.clone();
    for _ in 0..2 {
        for q in basis {
            let c = q.dot(&r);
            r.scaled_add(-c, q);
        }
    }
    r
}

/// Campaign selection recomputed from scratch at every step: the basis is
/// rebuilt by Gram-Schmidt over the current block's selected columns and
/// every residual is recomputed against it.
pub fn campaign_oracle(w: &Array2<f64>, scores: &[f64], d_out: usize, tau: f64) -> Vec<usize> {
    let k = w.ncols();
    let cols: Vec<Array1<f64>> = (0..k).map(|i| w.column(i).to_owned()).collect();
    let mut selected: Vec<usize> = Vec::new();
    let mut block: Vec<usize> = Vec::new();
    while selected.len() < d_out {
        let mut basis: Vec<Array1<f64>> = Vec::new();
        for &b in &block {
            let r = residual(&basis, &cols[b]);
            let n = r.dot(&r).sqrt();
            basis.push(r / n);
        }
        let mut best: Option<(usize, f64)> = None;
        for i in 0..k {
            if selected.contains(&i) {
                continue;
            }
            let norm = cols[i].dot(&cols[i]).sqrt();
            if norm == 0.0 {
                continue;
            }
            let r = residual(&basis, &cols[i]);
            let ratio = r.dot(&r).sqrt() / norm;
            if ratio < tau {
                continue;
            }
            let v = scores[i] * ratio;
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        match best {
            Some((i, _)) => {
                selected.push(i);
                block.push(i);
            }
            None => {
                assert!(!block.is_empty(), "oracle: nothing selectable");
                block.clear();
            }
        }
    }
    selected
}

/// Central finite difference of the batch loss in parameter `index`.
pub fn finite_difference(mlp: &Mlp<f64>, x: &Array2<f64>, labels: &[usize], index: usize, h: f64) -> f64 {
    let mut probe = mlp.clone();
    let theta = mlp.param(index);
    probe.set_param(index, theta + h);
    let up = probe.loss_and_grads(x.view(), labels).unwrap().0;
    probe.set_param(index, theta - h);
    let down = probe.loss_and_grads(x.view(), labels).unwrap().0;
    (up - down) / (2.0 * h)
}

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Smallest singular value via the eigenvalues of the Gram matrix.
pub fn min_singular_value(w: &Array2<f64>) -> f64 {
    let g = w.t().dot(w);
    let n = g.nrows();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| g[[i, j]]);
    m.symmetric_eigenvalues().min().max(0.0).sqrt()
}

/// Numerical rank from the singular values of `w`.
pub fn rank(w: &Array2<f64>, rel_tol: f64) -> usize {
    let m = nalgebra::DMatrix::from_fn(w.nrows(), w.ncols(), |i, j| w[[i, j]]);
    let sv = m.singular_values();
    let max = sv.max();
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}
