//! Datasets: MNIST IDX loading, synthetic class-Gaussian generation, class
//! partitions and seeded subsampling.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use ndarray::{Array2, Axis};
use rand::seq::index;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Labelled feature matrix, one sample per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Vec<usize>,
    n_classes: usize,
}

impl Dataset {
    pub fn new(features: Array2<f64>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::Validation(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if let Some((i, &y)) = labels.iter().enumerate().find(|(_, &y)| y >= n_classes) {
            return Err(Error::Validation(format!(
                "label {y} at row {i} is out of range for {n_classes} classes"
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("features contain non-finite values".into()));
        }
        Ok(Self { features, labels, n_classes })
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Rows `rows` in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), rows),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            n_classes: self.n_classes,
        }
    }

    /// Widens the class count, e.g. so a small split agrees with its sibling.
    pub fn with_n_classes(mut self, n_classes: usize) -> Result<Self> {
        if n_classes < self.n_classes {
            return Err(Error::arg(format!(
                "cannot shrink class count from {} to {n_classes}",
                self.n_classes
            )));
        }
        self.n_classes = n_classes;
        Ok(self)
    }
}

/// Row indices of each class. Equivalent to the diagonal 0/1 class-membership
/// matrices, without the `m x m` storage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassPartition {
    members: Vec<Vec<usize>>,
}

impl ClassPartition {
    pub fn members(&self) -> &[Vec<usize>] {
        &self.members
    }

    pub fn class(&self, j: usize) -> &[usize] {
        &self.members[j]
    }

    pub fn n_classes(&self) -> usize {
        self.members.len()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }

    pub fn n_samples(&self) -> usize {
        self.members.iter().map(Vec::len).sum()
    }
}

pub fn partition(ds: &Dataset) -> Result<ClassPartition> {
    partition_labels(ds.labels(), ds.n_classes())
}

pub fn partition_labels(labels: &[usize], n_classes: usize) -> Result<ClassPartition> {
    let mut members = vec![Vec::new(); n_classes];
    for (i, &y) in labels.iter().enumerate() {
        match members.get_mut(y) {
            Some(list) => list.push(i),
            None => {
                return Err(Error::Validation(format!(
                    "label {y} at row {i} is out of range for {n_classes} classes"
                )))
            }
        }
    }
    Ok(ClassPartition { members })
}

/// Uniform sample of `n` rows without replacement. Rows keep their original
/// relative order, so `n == len` returns the dataset unchanged.
pub fn subsample(ds: &Dataset, n: usize, seed: u64) -> Result<Dataset> {
    let m = ds.len();
    if n == 0 || n > m {
        return Err(Error::arg(format!("cannot subsample {n} rows from {m}")));
    }
    if n == m {
        return Ok(ds.clone());
    }
    let mut rng = seed::rng(seed);
    let mut rows = index::sample(&mut rng, m, n).into_vec();
    rows.sort_unstable();
    Ok(ds.select_rows(&rows))
}

/// How raw pixel bytes map to features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PixelScaling {
    /// `byte / 255`, features in `[0, 1]`.
    #[default]
    Unit,
    /// `byte / 127.5 - 1`, features in `[-1, 1]`.
    Symmetric,
}

impl PixelScaling {
    fn apply(self, byte: u8) -> f64 {
        match self {
            PixelScaling::Unit => f64::from(byte) / 255.0,
            PixelScaling::Symmetric => f64::from(byte) / 127.5 - 1.0,
        }
    }
}

fn read_u32_be(bytes: &[u8], offset: usize) -> u32 {
    u32::from_be_bytes(bytes[offset..offset + 4].try_into().unwrap())
}

fn truncated(path: &Path, need: usize, have: usize) -> Error {
    Error::io(
        path,
        io::Error::new(
            io::ErrorKind::UnexpectedEof,
            format!("expected {need} bytes, file has {have}"),
        ),
    )
}

fn read_idx(path: &Path, magic: u32, header_len: usize) -> Result<Vec<u8>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 4 {
        return Err(truncated(path, header_len, bytes.len()));
    }
    let found = read_u32_be(&bytes, 0);
    if found != magic {
        return Err(Error::Format {
            path: path.to_path_buf(),
            msg: format!("magic number {found:#010x}, expected {magic:#010x}"),
        });
    }
    if bytes.len() < header_len {
        return Err(truncated(path, header_len, bytes.len()));
    }
    Ok(bytes)
}

/// Loads an IDX image/label file pair with pixels scaled to `[0, 1]`.
pub fn load_mnist_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    load_mnist_idx_scaled(images_path, labels_path, PixelScaling::Unit)
}

pub fn load_mnist_idx_scaled(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
    scaling: PixelScaling,
) -> Result<Dataset> {
    let images_path = images_path.as_ref();
    let labels_path = labels_path.as_ref();

    let images = read_idx(images_path, IDX_IMAGES_MAGIC, 16)?;
    let count = read_u32_be(&images, 4) as usize;
    let rows = read_u32_be(&images, 8) as usize;
    let cols = read_u32_be(&images, 12) as usize;
    let dim = rows * cols;
    let need = 16 + count * dim;
    if images.len() < need {
        return Err(truncated(images_path, need, images.len()));
    }

    let labels = read_idx(labels_path, IDX_LABELS_MAGIC, 8)?;
    let label_count = read_u32_be(&labels, 4) as usize;
    if label_count != count {
        return Err(Error::Consistency(format!(
            "{} holds {count} images but {} holds {label_count} labels",
            images_path.display(),
            labels_path.display()
        )));
    }
    if labels.len() < 8 + count {
        return Err(truncated(labels_path, 8 + count, labels.len()));
    }

    let features = Array2::from_shape_vec(
        (count, dim),
        images[16..need].iter().map(|&b| scaling.apply(b)).collect(),
    )
    .expect("shape matches buffer length");
    let labels: Vec<usize> = labels[8..8 + count].iter().map(|&b| b as usize).collect();
    let n_classes = labels.iter().max().map_or(0, |&y| y + 1);
    Dataset::new(features, labels, n_classes)
}

/// Loads `train-*` and `t10k-*` IDX files from a directory, both with the
/// same class count.
pub fn load_mnist_dir(dir: impl AsRef<Path>, scaling: PixelScaling) -> Result<(Dataset, Dataset)> {
    let dir = dir.as_ref();
    let train = load_mnist_idx_scaled(
        dir.join("train-images-idx3-ubyte"),
        dir.join("train-labels-idx1-ubyte"),
        scaling,
    )?;
    let test = load_mnist_idx_scaled(
        dir.join("t10k-images-idx3-ubyte"),
        dir.join("t10k-labels-idx1-ubyte"),
        scaling,
    )?;
    let n = train.n_classes().max(test.n_classes());
    Ok((train.with_n_classes(n)?, test.with_n_classes(n)?))
}

/// Writes `ds` as an IDX pair. Features must be multiples of `1/255` in
/// `[0, 1]` (the inverse of [`PixelScaling::Unit`]).
pub fn write_mnist_idx(
    ds: &Dataset,
    rows: usize,
    cols: usize,
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<()> {
    if rows * cols != ds.dim() {
        return Err(Error::arg(format!(
            "{rows}x{cols} images do not match feature dimension {}",
            ds.dim()
        )));
    }
    let m = ds.len() as u32;
    let mut img = Vec::with_capacity(16 + ds.len() * ds.dim());
    for v in [IDX_IMAGES_MAGIC, m, rows as u32, cols as u32] {
        img.extend_from_slice(&v.to_be_bytes());
    }
    for &x in ds.features() {
        let b = (x * 255.0).round();
        if !(0.0..=255.0).contains(&b) {
            return Err(Error::arg(format!("feature {x} is not a unit-scaled pixel")));
        }
        img.push(b as u8);
    }
    let mut lab = Vec::with_capacity(8 + ds.len());
    lab.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    lab.extend_from_slice(&m.to_be_bytes());
    for &y in ds.labels() {
        let b = u8::try_from(y).map_err(|_| Error::arg(format!("label {y} does not fit a byte")))?;
        lab.push(b);
    }
    write_file(images_path.as_ref(), &img)?;
    write_file(labels_path.as_ref(), &lab)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::File::create(path)
        .and_then(|mut f| f.write_all(bytes))
        .map_err(|e| Error::io(path, e))
}

/// Isotropic Gaussian clusters, `n_per_class` samples around each mean,
/// rows grouped by class.
pub fn synth_gaussians(
    class_means: &[Vec<f64>],
    stddev: f64,
    n_per_class: usize,
    seed: u64,
) -> Result<Dataset> {
    if class_means.len() < 2 {
        return Err(Error::arg("need at least two class means"));
    }
    let d = class_means[0].len();
    if d == 0 || class_means.iter().any(|mu| mu.len() != d) {
        return Err(Error::arg("class means must share a nonzero dimension"));
    }
    if !(stddev >= 0.0 && stddev.is_finite()) {
        return Err(Error::arg(format!("stddev must be finite and >= 0, got {stddev}")));
    }
    if n_per_class == 0 {
        return Err(Error::arg("n_per_class must be >= 1"));
    }
    let n_classes = class_means.len();
    let m = n_classes * n_per_class;
    let mut rng = seed::rng(seed);
    let mut features = Array2::zeros((m, d));
    let mut labels = Vec::with_capacity(m);
    for (j, mu) in class_means.iter().enumerate() {
        for r in 0..n_per_class {
            let mut row = features.row_mut(j * n_per_class + r);
            for (x, &c) in row.iter_mut().zip(mu) {
                let z: f64 = StandardNormal.sample(&mut rng);
                *x = c + stddev * z;
            }
            labels.push(j);
        }
    }
    Dataset::new(features, labels, n_classes)
}

/// Class means for a synthetic problem whose class signal lives in the first
/// `informative` coordinates: class `j` sits at `separation` along axis
/// `j % informative`, signed by `j / informative` parity.
pub fn sparse_class_means(n_classes: usize, dim: usize, informative: usize, separation: f64) -> Vec<Vec<f64>> {
    let informative = informative.clamp(1, dim);
    (0..n_classes)
        .map(|j| {
            let mut mu = vec![0.0; dim];
            let sign = if (j / informative) % 2 == 0 { 1.0 } else { -1.0 };
            mu[j % informative] = sign * separation * (1 + j / (2 * informative)) as f64;
            mu
        })
        .collect()
}
