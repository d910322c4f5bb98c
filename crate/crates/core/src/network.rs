//! Minimal MLP: ReLU hidden layers, softmax cross-entropy, mini-batch SGD.
//!
//! Generic over the parameter type. Training uses `f32`; gradient checks run
//! in `f64`. Losses are always accumulated in `f64`.

use std::fmt::Debug;

use ndarray::{Array1, Array2, ArrayView2, Axis, ScalarOperand, Zip};
use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::seq::SliceRandom;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::init::InitWeights;
use crate::seed::{self, derive_seed, stream};

pub trait Real:
    ndarray::LinalgScalar + Float + FromPrimitive + ToPrimitive + ScalarOperand + Debug + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

fn cast<F: Real>(v: f64) -> F {
    F::from_f64(v).expect("representable")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<F> {
    weights: Vec<Array2<F>>,
    biases: Vec<Array1<F>>,
}

/// Output of [`Mlp::forward`]: post-ReLU hidden activations and the logits.
#[derive(Debug, Clone)]
pub struct Forward<F> {
    pub hidden: Vec<Array2<F>>,
    pub logits: Array2<F>,
}

/// Gradients, shaped like the network's parameters.
#[derive(Debug, Clone)]
pub struct Grads<F> {
    pub weights: Vec<Array2<F>>,
    pub biases: Vec<Array1<F>>,
}

impl<F: Real> Grads<F> {
    /// Entry `index` in [`Mlp::param`] order.
    pub fn get(&self, index: usize) -> F {
        flat_get(&self.weights, &self.biases, index)
    }
}

fn flat_locate<F>(weights: &[Array2<F>], biases: &[Array1<F>], mut index: usize) -> (usize, bool, usize) {
    for (l, (w, b)) in weights.iter().zip(biases).enumerate() {
        if index < w.len() {
            return (l, true, index);
        }
        index -= w.len();
        if index < b.len() {
            return (l, false, index);
        }
        index -= b.len();
    }
    panic!("parameter index out of range");
}

fn flat_get<F: Copy>(weights: &[Array2<F>], biases: &[Array1<F>], index: usize) -> F {
    let (l, is_w, i) = flat_locate(weights, biases, index);
    if is_w {
        let c = weights[l].ncols();
        weights[l][[i / c, i % c]]
    } else {
        biases[l][i]
    }
}

fn relu<F: Real>(z: &mut Array2<F>) {
    z.mapv_inplace(|v| if v > F::zero() { v } else { F::zero() });
}

/// Index of the largest entry, lowest index on ties.
fn argmax_row<F: Real>(row: ndarray::ArrayView1<F>) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = j;
        }
    }
    best
}

impl<F: Real> Mlp<F> {
    pub fn new(weights: Vec<Array2<F>>, biases: Vec<Array1<F>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(Error::arg("need one bias vector per weight matrix and at least one layer"));
        }
        for (i, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if w.ncols() != b.len() {
                return Err(Error::arg(format!("layer {i}: {} outputs but {} biases", w.ncols(), b.len())));
            }
            if i > 0 && weights[i - 1].ncols() != w.nrows() {
                return Err(Error::arg(format!(
                    "layer {i} takes {} inputs but layer {} emits {}",
                    w.nrows(),
                    i - 1,
                    weights[i - 1].ncols()
                )));
            }
        }
        let mlp = Self { weights, biases };
        if !mlp.is_finite() {
            return Err(Error::Numeric("network parameters".into()));
        }
        Ok(mlp)
    }

    pub fn from_init(init: &InitWeights) -> Result<Self> {
        Self::new(
            init.weights.iter().map(|w| w.mapv(cast)).collect(),
            init.biases.iter().map(|b| b.mapv(cast)).collect(),
        )
    }

    pub fn weights(&self) -> &[Array2<F>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Array1<F>] {
        &self.biases
    }

    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn input_dim(&self) -> usize {
        self.weights[0].nrows()
    }

    pub fn n_outputs(&self) -> usize {
        self.weights[self.weights.len() - 1].ncols()
    }

    pub fn n_params(&self) -> usize {
        self.weights.iter().map(Array2::len).sum::<usize>() + self.biases.iter().map(Array1::len).sum::<usize>()
    }

    /// Parameter `index` in flat order: layer by layer, weights row-major,
    /// then that layer's biases.
    pub fn param(&self, index: usize) -> F {
        flat_get(&self.weights, &self.biases, index)
    }

    pub fn set_param(&mut self, index: usize, value: F) {
        let (l, is_w, i) = flat_locate(&self.weights, &self.biases, index);
        if is_w {
            let c = self.weights[l].ncols();
            self.weights[l][[i / c, i % c]] = value;
        } else {
            self.biases[l][i] = value;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    pub fn forward(&self, x: ArrayView2<F>) -> Result<Forward<F>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::arg(format!(
                "input has {} features, network expects {}",
                x.ncols(),
                self.input_dim()
            )));
        }
        let last = self.n_layers() - 1;
        let mut hidden = Vec::with_capacity(last);
        let mut z = x.to_owned();
        for (i, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut out = z.dot(w) + b;
            if i < last {
                relu(&mut out);
                hidden.push(out.clone());
            }
            z = out;
        }
        Ok(Forward { hidden, logits: z })
    }

    /// Mean softmax cross-entropy over the batch and its gradients.
    pub fn loss_and_grads(&self, x: ArrayView2<F>, labels: &[usize]) -> Result<(f64, Grads<F>)> {
        let batch = x.nrows();
        if batch == 0 || batch != labels.len() {
            return Err(Error::arg(format!("batch of {batch} rows with {} labels", labels.len())));
        }
        let n_out = self.n_outputs();
        if let Some(&y) = labels.iter().find(|&&y| y >= n_out) {
            return Err(Error::arg(format!("label {y} out of range for {n_out} outputs")));
        }
        let fwd = self.forward(x)?;

        let mut loss = 0.0f64;
        let inv_batch = 1.0 / batch as f64;
        let mut delta = Array2::<F>::zeros(fwd.logits.raw_dim());
        for ((row, mut d), &y) in fwd.logits.rows().into_iter().zip(delta.rows_mut()).zip(labels) {
            let max = row.iter().map(|v| v.to_f64().unwrap()).fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = row.iter().map(|v| (v.to_f64().unwrap() - max).exp()).collect();
            let sum: f64 = exps.iter().sum();
            loss -= (exps[y] / sum).ln();
            for (j, (dj, e)) in d.iter_mut().zip(&exps).enumerate() {
                let target = if j == y { 1.0 } else { 0.0 };
                *dj = cast((e / sum - target) * inv_batch);
            }
        }
        loss *= inv_batch;
        if !loss.is_finite() {
            return Err(Error::Numeric(format!("loss is {loss}")));
        }

        let layers = self.n_layers();
        let mut gw = Vec::with_capacity(layers);
        let mut gb = Vec::with_capacity(layers);
        for l in (0..layers).rev() {
            let gradient = if l == 0 { x.t().dot(&delta) } else { fwd.hidden[l - 1].t().dot(&delta) };
            gw.push(gradient);
            gb.push(delta.sum_axis(Axis(0)));
            if l > 0 {
                let mut back = delta.dot(&self.weights[l].t());
                Zip::from(&mut back).and(&fwd.hidden[l - 1]).for_each(|g, &a| {
                    if a <= F::zero() {
                        *g = F::zero();
                    }
                });
                delta = back;
            }
        }
        gw.reverse();
        gb.reverse();
        Ok((loss, Grads { weights: gw, biases: gb }))
    }

    /// `theta <- theta - lr * grad`.
    pub fn sgd_step(&mut self, grads: &Grads<F>, lr: F) {
        for (w, g) in self.weights.iter_mut().zip(&grads.weights) {
            w.scaled_add(-lr, g);
        }
        for (b, g) in self.biases.iter_mut().zip(&grads.biases) {
            b.scaled_add(-lr, g);
        }
    }

    /// Predicted class per row.
    pub fn predict(&self, x: ArrayView2<F>) -> Result<Vec<usize>> {
        let fwd = self.forward(x)?;
        Ok(fwd.logits.rows().into_iter().map(argmax_row).collect())
    }
}

/// Test-error percentage; argmax ties go to the lowest class index.
pub fn evaluate<F: Real>(mlp: &Mlp<F>, ds: &Dataset) -> Result<f64> {
    let x = ds.features().mapv(cast::<F>);
    evaluate_features(mlp, x.view(), ds.labels())
}

const EVAL_CHUNK: usize = 2000;

fn evaluate_features<F: Real>(mlp: &Mlp<F>, x: ArrayView2<F>, labels: &[usize]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::arg("cannot evaluate on an empty dataset"));
    }
    let mut wrong = 0usize;
    for (start, chunk) in (0..x.nrows()).step_by(EVAL_CHUNK).zip(x.axis_chunks_iter(Axis(0), EVAL_CHUNK)) {
        let pred = mlp.predict(chunk)?;
        wrong += pred.iter().zip(&labels[start..]).filter(|(p, y)| p != y).count();
    }
    Ok(100.0 * wrong as f64 / labels.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 0.1, batch_size: 100, epochs: 200, shuffle_seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub test_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub epochs: Vec<EpochRecord>,
    pub min_error: f64,
    /// Earliest epoch attaining `min_error`.
    pub argmin_epoch: usize,
}

impl Metrics {
    pub fn from_epochs(epochs: Vec<EpochRecord>) -> Self {
        let mut min_error = f64::INFINITY;
        let mut argmin_epoch = 0;
        for r in &epochs {
            if r.test_error < min_error {
                min_error = r.test_error;
                argmin_epoch = r.epoch;
            }
        }
        Self { epochs, min_error, argmin_epoch }
    }
}

/// Order in which epoch `epoch` (1-based) visits the `m` training rows.
pub fn epoch_order(m: usize, shuffle_seed: u64, epoch: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..m).collect();
    let mut rng = seed::rng(derive_seed(shuffle_seed, stream::EPOCH.wrapping_add(epoch as u64)));
    order.shuffle(&mut rng);
    order
}

/// Trains with plain SGD and records test error after every epoch.
pub fn train<F: Real>(mlp: &mut Mlp<F>, train_ds: &Dataset, test_ds: &Dataset, cfg: &TrainConfig) -> Result<Metrics> {
    if !(cfg.learning_rate >= 0.0 && cfg.learning_rate.is_finite()) || cfg.batch_size == 0 || cfg.epochs == 0 {
        return Err(Error::arg(format!("invalid training config {cfg:?}")));
    }
    if train_ds.dim() != mlp.input_dim() || test_ds.dim() != mlp.input_dim() {
        return Err(Error::arg("train/test feature dimension does not match the network input"));
    }
    if train_ds.n_classes() != test_ds.n_classes() || train_ds.n_classes() > mlp.n_outputs() {
        return Err(Error::arg(format!(
            "class counts differ: train {}, test {}, network outputs {}",
            train_ds.n_classes(),
            test_ds.n_classes(),
            mlp.n_outputs()
        )));
    }
    if train_ds.is_empty() {
        return Err(Error::arg("empty training set"));
    }

    let x = train_ds.features().mapv(cast::<F>);
    let x_test = test_ds.features().mapv(cast::<F>);
    let labels = train_ds.labels();
    let lr: F = cast(cfg.learning_rate);
    let m = train_ds.len();

    let mut records = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let order = epoch_order(m, cfg.shuffle_seed, epoch);
        let mut loss_sum = 0.0;
        for (batch, rows) in order.chunks(cfg.batch_size).enumerate() {
            let xb = x.select(Axis(0), rows);
            let yb: Vec<usize> = rows.iter().map(|&r| labels[r]).collect();
            let (loss, grads) = mlp.loss_and_grads(xb.view(), &yb).map_err(|e| match e {
                Error::Numeric(msg) => Error::Training { epoch, batch, msg },
                e => e,
            })?;
            loss_sum += loss * rows.len() as f64;
            mlp.sgd_step(&grads, lr);
        }
        if !mlp.is_finite() {
            return Err(Error::Training {
                epoch,
                batch: m.div_ceil(cfg.batch_size) - 1,
                msg: "parameters became non-finite".into(),
            });
        }
        let test_error = evaluate_features(mlp, x_test.view(), test_ds.labels())?;
        records.push(EpochRecord { epoch, train_loss: loss_sum / m as f64, test_error });
    }
    Ok(Metrics::from_epochs(records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn tiny_net() -> Mlp<f64> {
        Mlp::new(
            vec![array![[0.5, -0.2, 0.1], [0.3, 0.8, -0.5]], array![[1.0, 0.0], [-0.4, 0.6], [0.2, 0.9]]],
            vec![array![0.1, 0.0, -0.1], array![0.05, -0.05]],
        )
        .unwrap()
    }

    #[test]
    fn zero_network_outputs_zero() {
        let mlp = Mlp::<f64>::new(vec![Array2::zeros((3, 4)), Array2::zeros((4, 2))], vec![Array1::zeros(4), Array1::zeros(2)])
            .unwrap();
        let f = mlp.forward(array![[1.0, -2.0, 3.0]].view()).unwrap();
        assert!(f.hidden[0].iter().all(|&v| v == 0.0));
        assert!(f.logits.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_layer_passes_nonnegative_input() {
        let mlp = Mlp::<f64>::new(vec![Array2::eye(3), Array2::eye(3)], vec![Array1::zeros(3), Array1::zeros(3)]).unwrap();
        let x = array![[0.0, 1.5, 2.0], [3.0, 0.25, 0.0]];
        assert_eq!(mlp.forward(x.view()).unwrap().logits, x);
    }

    #[test]
    fn shape_mismatches_rejected() {
        assert!(Mlp::<f64>::new(vec![Array2::zeros((3, 4)), Array2::zeros((3, 2))], vec![Array1::zeros(4), Array1::zeros(2)]).is_err());
        assert!(tiny_net().forward(array![[1.0, 2.0, 3.0]].view()).is_err());
    }

    #[test]
    fn uniform_logits_give_log_n() {
        let mlp = Mlp::<f64>::new(vec![Array2::zeros((4, 10))], vec![Array1::zeros(10)]).unwrap();
        let (loss, _) = mlp.loss_and_grads(array![[1.0, 2.0, 3.0, 4.0]].view(), &[3]).unwrap();
        assert!((loss - 10f64.ln()).abs() < 1e-12);
        assert!((loss - 2.302585).abs() < 1e-6);
    }

    #[test]
    fn loss_falls_with_margin() {
        let loss_at = |margin: f64| {
            let mlp = Mlp::<f64>::new(vec![array![[margin, 0.0]]], vec![Array1::zeros(2)]).unwrap();
            mlp.loss_and_grads(array![[1.0]].view(), &[0]).unwrap().0
        };
        let (l0, l1, l10) = (loss_at(0.0), loss_at(1.0), loss_at(10.0));
        assert!(l0 > l1 && l1 > l10 && l10 > 0.0 && l10 < 1e-4);
    }

    #[test]
    fn non_finite_loss_is_reported() {
        let mlp = Mlp::<f64>::new(vec![array![[1e308, -1e308]]], vec![Array1::zeros(2)]).unwrap();
        let err = mlp.loss_and_grads(array![[10.0]].view(), &[1]).unwrap_err();
        assert!(matches!(err, Error::Numeric(_)), "{err}");
    }

    #[test]
    fn flat_param_indexing_round_trips() {
        let mut mlp = tiny_net();
        let n = mlp.n_params();
        assert_eq!(n, 6 + 3 + 6 + 2);
        assert_eq!(mlp.param(0), 0.5);
        assert_eq!(mlp.param(6), 0.1);
        assert_eq!(mlp.param(n - 1), -0.05);
        mlp.set_param(7, 9.0);
        assert_eq!(mlp.biases()[0][1], 9.0);
    }

    #[test]
    fn evaluate_ties_go_to_class_zero() {
        let mlp = Mlp::<f64>::new(vec![Array2::zeros((1, 3))], vec![Array1::zeros(3)]).unwrap();
        let ds = Dataset::new(array![[0.0], [1.0], [2.0], [3.0]], vec![0, 1, 0, 2], 3).unwrap();
        assert_eq!(evaluate(&mlp, &ds).unwrap(), 50.0);
        let ds = Dataset::new(array![[0.0], [1.0]], vec![0, 0], 3).unwrap();
        assert_eq!(evaluate(&mlp, &ds).unwrap(), 0.0);
    }

    #[test]
    fn metrics_take_earliest_minimum() {
        let rec = |epoch, test_error| EpochRecord { epoch, train_loss: 0.0, test_error };
        let m = Metrics::from_epochs(vec![rec(1, 5.0), rec(2, 3.0), rec(3, 4.0), rec(4, 3.0)]);
        assert_eq!(m.min_error, 3.0);
        assert_eq!(m.argmin_epoch, 2);
    }

    #[test]
    fn epoch_order_is_a_permutation() {
        let mut o = epoch_order(50, 3, 2);
        assert_eq!(o, epoch_order(50, 3, 2));
        assert_ne!(o, epoch_order(50, 3, 3));
        o.sort_unstable();
        assert_eq!(o, (0..50).collect::<Vec<_>>());
    }
}
