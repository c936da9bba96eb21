use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Classifier;
use crate::error::{Error, Result};
use crate::flow_model::{LabeledDataset, N_CLASSES};
use crate::rng::seeded;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden: vec![256, 128, 64],
            epochs: 100,
            batch_size: 64,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            patience: 5,
            seed: 0,
        }
    }
}

/// Fully connected layer; `weights` is `fan_in × fan_out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense<T> {
    pub weights: Array2<T>,
    pub bias: Array1<T>,
}

/// ReLU hidden layers and a softmax output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel<T> {
    pub layer_sizes: Vec<usize>,
    pub layers: Vec<Dense<T>>,
    pub params: MlpParams,
    /// Loss per completed epoch (validation loss when a validation set was given).
    pub history: Vec<T>,
}

pub type Gradients<T> = Vec<Dense<T>>;

impl<T: Scalar> MlpModel<T> {
    /// He-initialized network with zero biases.
    pub fn new(layer_sizes: &[usize], seed: u64) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(Error::BadHyperparameter(format!("bad layer sizes {layer_sizes:?}")));
        }
        let mut rng = seeded(seed, 0);
        let layers = layer_sizes
            .windows(2)
            .map(|w| {
                let normal = Normal::new(0.0, (2.0 / w[0] as f64).sqrt()).expect("positive std");
                Dense {
                    weights: Array2::from_shape_simple_fn((w[0], w[1]), || T::of(normal.sample(&mut rng))),
                    bias: Array1::zeros(w[1]),
                }
            })
            .collect();
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            layers,
            params: MlpParams {
                seed,
                ..MlpParams::default()
            },
            history: Vec::new(),
        })
    }

    pub fn n_inputs(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn n_outputs(&self) -> usize {
        *self.layer_sizes.last().expect("at least two layers")
    }

    /// Activations of every layer, input first; the last entry holds softmax probabilities.
    pub fn forward(&self, x: ArrayView2<'_, T>) -> Vec<Array2<T>> {
        let mut acts = vec![x.to_owned()];
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = acts[l].dot(&layer.weights) + &layer.bias;
            if l < last {
                z.mapv_inplace(|v| v.max(T::zero()));
            } else {
                for mut row in z.rows_mut() {
                    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
                    row.mapv_inplace(|v| (v - max).exp());
                    let s = row.sum();
                    row.mapv_inplace(|v| v / s);
                }
            }
            acts.push(z);
        }
        acts
    }

    /// Mean cross-entropy of `probs` against integer targets.
    pub fn cross_entropy(probs: &Array2<T>, y: &[usize]) -> T {
        let tiny = T::min_positive_value();
        let total: T = y
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let p = probs[[i, c]];
                // NaN must surface as a non-finite loss, not be clamped away.
                -(if p.is_nan() { p } else { p.max(tiny) }).ln()
            })
            .sum();
        total / T::of_usize(y.len())
    }

    pub fn loss(&self, x: ArrayView2<'_, T>, y: &[usize]) -> T {
        let acts = self.forward(x);
        Self::cross_entropy(acts.last().expect("output layer"), y)
    }

    /// Mean cross-entropy and its gradient with respect to every weight and bias.
    pub fn loss_and_gradients(&self, x: ArrayView2<'_, T>, y: &[usize]) -> (T, Gradients<T>) {
        let acts = self.forward(x);
        let probs = acts.last().expect("output layer");
        let loss = Self::cross_entropy(probs, y);
        let inv_b = T::one() / T::of_usize(y.len());
        let mut delta = probs.clone();
        for (i, &c) in y.iter().enumerate() {
            delta[[i, c]] -= T::one();
        }
        delta.mapv_inplace(|v| v * inv_b);

        let mut grads = Vec::with_capacity(self.layers.len());
        for l in (0..self.layers.len()).rev() {
            let input = &acts[l];
            grads.push(Dense {
                weights: input.t().dot(&delta),
                bias: delta.sum_axis(Axis(0)),
            });
            if l > 0 {
                let mut back = delta.dot(&self.layers[l].weights.t());
                back.zip_mut_with(input, |d, a| {
                    if *a <= T::zero() {
                        *d = T::zero();
                    }
                });
                delta = back;
            }
        }
        grads.reverse();
        (loss, grads)
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    fn locate(&self, mut idx: usize) -> (usize, Option<(usize, usize)>, usize) {
        for (l, layer) in self.layers.iter().enumerate() {
            let nw = layer.weights.len();
            if idx < nw {
                let cols = layer.weights.ncols();
                return (l, Some((idx / cols, idx % cols)), 0);
            }
            idx -= nw;
            if idx < layer.bias.len() {
                return (l, None, idx);
            }
            idx -= layer.bias.len();
        }
        panic!("parameter index out of range");
    }

    /// Flat parameter view: layer by layer, weights row-major then bias.
    pub fn param(&self, idx: usize) -> T {
        match self.locate(idx) {
            (l, Some(rc), _) => self.layers[l].weights[rc],
            (l, None, j) => self.layers[l].bias[j],
        }
    }

    pub fn set_param(&mut self, idx: usize, v: T) {
        match self.locate(idx) {
            (l, Some(rc), _) => self.layers[l].weights[rc] = v,
            (l, None, j) => self.layers[l].bias[j] = v,
        }
    }

    pub fn flat_gradient(&self, grads: &Gradients<T>, idx: usize) -> T {
        match self.locate(idx) {
            (l, Some(rc), _) => grads[l].weights[rc],
            (l, None, j) => grads[l].bias[j],
        }
    }

    pub fn predict_rows(&self, rows: ArrayView2<'_, T>) -> Array2<T> {
        self.forward(rows).pop().expect("output layer")
    }
}

struct Adam<T> {
    m: Gradients<T>,
    v: Gradients<T>,
    t: i32,
}

impl<T: Scalar> Adam<T> {
    fn new(model: &MlpModel<T>) -> Self {
        let zeros = || {
            model
                .layers
                .iter()
                .map(|l| Dense {
                    weights: Array2::zeros(l.weights.raw_dim()),
                    bias: Array1::zeros(l.bias.raw_dim()),
                })
                .collect::<Vec<_>>()
        };
        Self {
            m: zeros(),
            v: zeros(),
            t: 0,
        }
    }

    fn step(&mut self, model: &mut MlpModel<T>, grads: &Gradients<T>, p: &MlpParams) {
        self.t += 1;
        let (b1, b2) = (T::of(p.beta1), T::of(p.beta2));
        let lr = T::of(p.learning_rate);
        let eps = T::of(p.epsilon);
        let c1 = T::one() - b1.powi(self.t);
        let c2 = T::one() - b2.powi(self.t);
        let update = |w: &mut T, g: T, m: &mut T, v: &mut T| {
            *m = b1 * *m + (T::one() - b1) * g;
            *v = b2 * *v + (T::one() - b2) * g * g;
            let mh = *m / c1;
            let vh = *v / c2;
            *w -= lr * mh / (vh.sqrt() + eps);
        };
        for (l, layer) in model.layers.iter_mut().enumerate() {
            ndarray::Zip::from(&mut layer.weights)
                .and(&grads[l].weights)
                .and(&mut self.m[l].weights)
                .and(&mut self.v[l].weights)
                .for_each(|w, &g, m, v| update(w, g, m, v));
            ndarray::Zip::from(&mut layer.bias)
                .and(&grads[l].bias)
                .and(&mut self.m[l].bias)
                .and(&mut self.v[l].bias)
                .for_each(|w, &g, m, v| update(w, g, m, v));
        }
    }
}

/// Mini-batch Adam on softmax cross-entropy with early stopping.
///
/// Stops after `patience` epochs without improvement of the validation loss
/// (training loss when `val` is `None`) and returns the best weights seen.
pub fn mlp_fit<T: Scalar>(
    train: &LabeledDataset<T>,
    val: Option<&LabeledDataset<T>>,
    params: &MlpParams,
) -> Result<MlpModel<T>> {
    if train.is_empty() {
        return Err(Error::EmptyData);
    }
    if params.batch_size == 0 || params.batch_size > train.len() {
        return Err(Error::BadHyperparameter(format!(
            "batch_size must be in 1..={}, got {}",
            train.len(),
            params.batch_size
        )));
    }
    if params.epochs == 0 {
        return Err(Error::BadHyperparameter("epochs must be >= 1".into()));
    }
    let mut sizes = vec![train.n_features()];
    sizes.extend(&params.hidden);
    sizes.push(N_CLASSES);
    let mut model = MlpModel::new(&sizes, params.seed)?;
    model.params = params.clone();

    let labels = train.label_codes();
    let val_labels = val.map(|v| v.label_codes());
    let mut adam = Adam::new(&model);
    let mut rng = seeded(params.seed, 1);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut best: Option<(T, Vec<Dense<T>>)> = None;
    let mut stale = 0;

    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = T::zero();
        for batch in order.chunks(params.batch_size) {
            let x = train.rows.select(Axis(0), batch);
            let y: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            let (loss, grads) = model.loss_and_gradients(x.view(), &y);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    loss: loss.as_f64(),
                });
            }
            epoch_loss += loss * T::of_usize(batch.len());
            adam.step(&mut model, &grads, params);
        }
        let monitored = match (val, &val_labels) {
            (Some(v), Some(vy)) if !v.is_empty() => model.loss(v.rows.view(), vy),
            _ => epoch_loss / T::of_usize(train.len()),
        };
        if !monitored.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                loss: monitored.as_f64(),
            });
        }
        model.history.push(monitored);
        if best.as_ref().is_none_or(|(b, _)| monitored < *b) {
            best = Some((monitored, model.layers.clone()));
            stale = 0;
        } else {
            stale += 1;
            if stale >= params.patience {
                break;
            }
        }
    }
    if let Some((_, layers)) = best {
        model.layers = layers;
    }
    Ok(model)
}

impl<T: Scalar> Classifier<T> for MlpModel<T> {
    fn n_features(&self) -> usize {
        self.n_inputs()
    }

    fn n_classes(&self) -> usize {
        self.n_outputs()
    }

    fn predict_proba(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.n_inputs() {
            return Err(Error::DimensionMismatch {
                expected: self.n_inputs(),
                got: x.len(),
            });
        }
        let row = ArrayView2::from_shape((1, x.len()), x).expect("1 x d");
        Ok(self.predict_rows(row).into_raw_vec_and_offset().0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow_model::AttackGroup;

    #[test]
    fn zero_output_layer_is_uniform() {
        let mut m = MlpModel::<f64>::new(&[3, 4, 7], 1).unwrap();
        m.layers[1].weights.fill(0.0);
        let p = m.predict_proba(&[0.2, -1.0, 5.0]).unwrap();
        assert!(p.iter().all(|v| (v - 1.0 / 7.0).abs() < 1e-12));
    }

    #[test]
    fn relu_blocks_negative_preactivations() {
        let mut m = MlpModel::<f64>::new(&[1, 1, 2], 0).unwrap();
        m.layers[0].weights[[0, 0]] = -1.0;
        m.layers[1].weights[[0, 0]] = 10.0;
        // input 3 → pre-activation −3 → ReLU 0 → both logits 0
        let p = m.predict_proba(&[3.0]).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12);
        let p = m.predict_proba(&[-3.0]).unwrap();
        assert!(p[0] > 0.99);
    }

    #[test]
    fn flat_param_indexing_round_trips() {
        let mut m = MlpModel::<f64>::new(&[2, 3, 2], 4).unwrap();
        assert_eq!(m.n_params(), 2 * 3 + 3 + 3 * 2 + 2);
        m.set_param(7, 9.5);
        assert_eq!(m.param(7), 9.5);
        assert_eq!(m.layers[0].bias[1], 9.5);
        m.set_param(15, -1.0);
        assert_eq!(m.layers[1].bias[0], -1.0);
    }

    fn constant_label(n: usize) -> LabeledDataset<f64> {
        let rows = (0..n).map(|i| vec![(i % 10) as f64 / 10.0, (i % 3) as f64]).collect();
        LabeledDataset::from_rows(vec!["a".into(), "b".into()], rows, vec![AttackGroup::Hijacking; n]).unwrap()
    }

    #[test]
    fn constant_label_converges() {
        let ds = constant_label(200);
        let params = MlpParams { hidden: vec![16], epochs: 60, batch_size: 32, learning_rate: 1e-2, ..Default::default() };
        let m = mlp_fit(&ds, None, &params).unwrap();
        let p = m.predict_proba(ds.row(5)).unwrap();
        assert!(p[AttackGroup::Hijacking.code()] >= 0.99);
    }

    #[test]
    fn same_seed_same_weights() {
        let ds = constant_label(64);
        let params = MlpParams { hidden: vec![8, 4], epochs: 3, batch_size: 16, ..Default::default() };
        assert_eq!(mlp_fit(&ds, None, &params).unwrap(), mlp_fit(&ds, None, &params).unwrap());
    }

    #[test]
    fn rejects_bad_batches() {
        let ds = constant_label(10);
        let params = MlpParams { batch_size: 11, ..Default::default() };
        assert!(matches!(mlp_fit(&ds, None, &params), Err(Error::BadHyperparameter(_))));
    }

    #[test]
    fn divergence_is_reported() {
        let rows = (0..20).map(|i| vec![1e308, if i % 2 == 0 { 1e308 } else { -1e308 }]).collect();
        let labels = (0..20).map(|i| AttackGroup::ALL[i % 2]).collect();
        let ds = LabeledDataset::from_rows(vec!["a".into(), "b".into()], rows, labels).unwrap();
        let params = MlpParams { hidden: vec![64], epochs: 5, batch_size: 4, ..Default::default() };
        assert!(matches!(mlp_fit(&ds, None, &params), Err(Error::NonFiniteLoss { .. })));
    }
}
