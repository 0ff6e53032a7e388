//! Multinomial logistic regression trained with mini-batch gradient descent.
//!
//! Parameters are stored flat: `k × d` weights in row-major order followed by
//! `k` biases.

use rand::seq::SliceRandom;

use super::{LearningError, Samples};
use crate::rng::seeded_rng;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    num_classes: usize,
    dim: usize,
    params: Vec<f64>,
}

impl LinearModel {
    pub fn zeros(num_classes: usize, dim: usize) -> Self {
        Self {
            num_classes,
            dim,
            params: vec![0.0; num_classes * dim + num_classes],
        }
    }

    pub fn from_params(num_classes: usize, dim: usize, params: Vec<f64>) -> Result<Self, LearningError> {
        if params.len() != num_classes * dim + num_classes {
            return Err(LearningError::ShapeMismatch {
                expected: num_classes * dim + num_classes,
                got: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(LearningError::NonFinite);
        }
        Ok(Self {
            num_classes,
            dim,
            params,
        })
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    /// Serialized size at 8 bytes per parameter.
    pub fn size_bytes(&self) -> usize {
        self.params.len() * 8
    }

    fn weight_row(&self, class: usize) -> &[f64] {
        &self.params[class * self.dim..(class + 1) * self.dim]
    }

    fn bias(&self, class: usize) -> f64 {
        self.params[self.num_classes * self.dim + class]
    }

    pub fn logits(&self, x: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.bias(k) + self.weight_row(k).iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    /// Lowest class index among the maximal logits.
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut logits = vec![0.0; self.num_classes];
        self.logits(x, &mut logits);
        let mut best = 0;
        for k in 1..logits.len() {
            if logits[k] > logits[best] {
                best = k;
            }
        }
        best
    }

    pub fn apply_delta(&mut self, delta: &[f64]) -> Result<(), LearningError> {
        if delta.len() != self.params.len() {
            return Err(LearningError::ShapeMismatch {
                expected: self.params.len(),
                got: delta.len(),
            });
        }
        for (p, d) in self.params.iter_mut().zip(delta) {
            *p += d;
        }
        if self.params.iter().any(|p| !p.is_finite()) {
            return Err(LearningError::NonFinite);
        }
        Ok(())
    }
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    z.iter_mut().for_each(|v| *v /= sum);
}

/// Mean cross-entropy over the rows `rows` of `data`.
pub fn mean_loss(model: &LinearModel, data: &Samples, rows: &[usize]) -> f64 {
    let mut z = vec![0.0; model.num_classes];
    let total: f64 = rows
        .iter()
        .map(|&i| {
            model.logits(data.row(i), &mut z);
            let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            lse - z[data.labels[i]]
        })
        .sum();
    total / rows.len() as f64
}

/// Gradient of [`mean_loss`] with respect to the flat parameter vector.
pub fn mean_gradient(model: &LinearModel, data: &Samples, rows: &[usize]) -> Vec<f64> {
    let (k, d) = (model.num_classes, model.dim);
    let mut grad = vec![0.0; model.params.len()];
    let mut p = vec![0.0; k];
    for &i in rows {
        let x = data.row(i);
        model.logits(x, &mut p);
        softmax_in_place(&mut p);
        p[data.labels[i]] -= 1.0;
        for (class, &err) in p.iter().enumerate() {
            for (g, v) in grad[class * d..(class + 1) * d].iter_mut().zip(x) {
                *g += err * v;
            }
            grad[k * d + class] += err;
        }
    }
    let n = rows.len() as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    grad
}

/// Local optimisation hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalTraining {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalUpdate {
    /// Trained parameters minus the received global parameters.
    pub delta: Vec<f64>,
    /// Set when the shard was empty and no training happened.
    pub empty_shard: bool,
}

/// Run `epochs` passes of mini-batch gradient descent from `global` over the
/// rows `shard` of `data`, reshuffling each epoch with `seed`.
pub fn local_train(
    global: &LinearModel,
    data: &Samples,
    shard: &[usize],
    opts: &LocalTraining,
    seed: u64,
) -> LocalUpdate {
    if shard.is_empty() {
        return LocalUpdate {
            delta: vec![0.0; global.num_params()],
            empty_shard: true,
        };
    }
    let mut model = global.clone();
    let mut rng = seeded_rng(seed);
    let mut order = shard.to_vec();
    let batch = opts.batch_size.max(1);
    for _ in 0..opts.epochs {
        order.shuffle(&mut rng);
        for rows in order.chunks(batch) {
            let grad = mean_gradient(&model, data, rows);
            for (p, g) in model.params.iter_mut().zip(&grad) {
                *p -= opts.lr * g;
            }
        }
    }
    let delta = model
        .params
        .iter()
        .zip(&global.params)
        .map(|(t, g)| t - g)
        .collect();
    LocalUpdate {
        delta,
        empty_shard: false,
    }
}

/// Element-wise mean of the deltas; `None` when there is nothing to average.
pub fn fedavg(deltas: &[Vec<f64>]) -> Result<Option<Vec<f64>>, LearningError> {
    let Some(first) = deltas.first() else {
        return Ok(None);
    };
    let len = first.len();
    let mut sum = vec![0.0; len];
    for d in deltas {
        if d.len() != len {
            return Err(LearningError::ShapeMismatch {
                expected: len,
                got: d.len(),
            });
        }
        for (s, v) in sum.iter_mut().zip(d) {
            *s += v;
        }
    }
    let n = deltas.len() as f64;
    Ok(Some(sum.into_iter().map(|s| s / n).collect()))
}

/// Share of `test` rows whose predicted class matches the label.
pub fn evaluate(model: &LinearModel, test: &Samples) -> f64 {
    if test.is_empty() {
        return 0.0;
    }
    let correct = (0..test.len())
        .filter(|&i| model.predict(test.row(i)) == test.labels[i])
        .count();
    correct as f64 / test.len() as f64
}
