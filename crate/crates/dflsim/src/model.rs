//! Local model architectures: multinomial logistic regression and a small
//! tanh MLP, both over flat parameter vectors.
//!
//! Keeping parameters flat makes federated aggregation a plain weighted mean
//! and keeps bit-reproducibility easy to reason about. All math is f64.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::distributions::{Distribution, Uniform};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    Logistic,
    Mlp,
}

/// Architecture and dimensions; the companion of every flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelShape {
    pub kind: ModelKind,
    pub n_features: usize,
    pub n_classes: usize,
    /// Hidden width; used by the MLP only.
    pub hidden: usize,
}

impl ModelShape {
    pub fn logistic(n_features: usize, n_classes: usize) -> Self {
        ModelShape {
            kind: ModelKind::Logistic,
            n_features,
            n_classes,
            hidden: 0,
        }
    }

    pub fn mlp(n_features: usize, hidden: usize, n_classes: usize) -> Self {
        ModelShape {
            kind: ModelKind::Mlp,
            n_features,
            n_classes,
            hidden,
        }
    }

    /// The standard shape for `kind` over `n_features` inputs: a 10-class
    /// head, with a 64-unit hidden layer for the MLP.
    pub fn of_kind(kind: ModelKind, n_features: usize) -> Self {
        match kind {
            ModelKind::Logistic => Self::logistic(n_features, 10),
            ModelKind::Mlp => Self::mlp(n_features, 64, 10),
        }
    }

    pub fn n_params(&self) -> usize {
        match self.kind {
            ModelKind::Logistic => self.n_classes * (self.n_features + 1),
            ModelKind::Mlp => {
                self.hidden * (self.n_features + 1) + self.n_classes * (self.hidden + 1)
            }
        }
    }

    /// Xavier-uniform weight init with zero biases, drawn layer by layer.
    pub fn init_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut params = vec![0.0; self.n_params()];
        match self.kind {
            ModelKind::Logistic => {
                init_layer(&mut params[..self.n_classes * self.n_features], self.n_features, self.n_classes, rng);
            }
            ModelKind::Mlp => {
                let w1 = self.hidden * self.n_features;
                init_layer(&mut params[..w1], self.n_features, self.hidden, rng);
                let w2_start = w1 + self.hidden;
                let w2_end = w2_start + self.n_classes * self.hidden;
                init_layer(&mut params[w2_start..w2_end], self.hidden, self.n_classes, rng);
            }
        }
        params
    }

    /// Class logits for a batch, rows = samples.
    pub fn logits(&self, params: &[f64], x: &ArrayView2<f64>) -> Array2<f64> {
        assert_eq!(params.len(), self.n_params(), "parameter vector length");
        match self.kind {
            ModelKind::Logistic => {
                let (w, b) = self.logistic_views(params);
                x.dot(&w.t()) + b
            }
            ModelKind::Mlp => {
                let (w1, b1, w2, b2) = self.mlp_views(params);
                let h = (x.dot(&w1.t()) + b1).mapv(f64::tanh);
                h.dot(&w2.t()) + b2
            }
        }
    }

    /// Mean cross-entropy of the batch.
    pub fn loss(&self, params: &[f64], x: &ArrayView2<f64>, y: &[u8]) -> f64 {
        let z = self.logits(params, x);
        let mut total = 0.0;
        for (row, &label) in z.outer_iter().zip(y) {
            let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
            total += lse - row[label as usize];
        }
        total / y.len() as f64
    }

    /// Gradient of [`ModelShape::loss`] with respect to the flat parameters.
    pub fn grad(&self, params: &[f64], x: &ArrayView2<f64>, y: &[u8]) -> Vec<f64> {
        let batch = y.len() as f64;
        match self.kind {
            ModelKind::Logistic => {
                let (w, b) = self.logistic_views(params);
                let mut dz = softmax_rows(x.dot(&w.t()) + b);
                subtract_labels(&mut dz, y, batch);
                let gw = dz.t().dot(x);
                let gb = dz.sum_axis(Axis(0));
                let mut g = Vec::with_capacity(self.n_params());
                g.extend(gw.iter());
                g.extend(gb.iter());
                g
            }
            ModelKind::Mlp => {
                let (w1, b1, w2, b2) = self.mlp_views(params);
                let h = (x.dot(&w1.t()) + b1).mapv(f64::tanh);
                let mut dz = softmax_rows(h.dot(&w2.t()) + b2);
                subtract_labels(&mut dz, y, batch);
                let gw2 = dz.t().dot(&h);
                let gb2 = dz.sum_axis(Axis(0));
                let dh = dz.dot(&w2) * (1.0 - &h * &h);
                let gw1 = dh.t().dot(x);
                let gb1 = dh.sum_axis(Axis(0));
                let mut g = Vec::with_capacity(self.n_params());
                g.extend(gw1.iter());
                g.extend(gb1.iter());
                g.extend(gw2.iter());
                g.extend(gb2.iter());
                g
            }
        }
    }

    /// Top-1 predictions; ties resolve to the lowest class index.
    pub fn predict(&self, params: &[f64], x: &ArrayView2<f64>) -> Vec<usize> {
        self.logits(params, x)
            .outer_iter()
            .map(|row| {
                let mut best = 0;
                for (k, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = k;
                    }
                }
                best
            })
            .collect()
    }

    fn logistic_views<'a>(&self, p: &'a [f64]) -> (ArrayView2<'a, f64>, ArrayView1<'a, f64>) {
        let nw = self.n_classes * self.n_features;
        (
            ArrayView2::from_shape((self.n_classes, self.n_features), &p[..nw]).unwrap(),
            ArrayView1::from_shape(self.n_classes, &p[nw..]).unwrap(),
        )
    }

    #[allow(clippy::type_complexity)]
    fn mlp_views<'a>(
        &self,
        p: &'a [f64],
    ) -> (
        ArrayView2<'a, f64>,
        ArrayView1<'a, f64>,
        ArrayView2<'a, f64>,
        ArrayView1<'a, f64>,
    ) {
        let w1 = self.hidden * self.n_features;
        let b1 = w1 + self.hidden;
        let w2 = b1 + self.n_classes * self.hidden;
        (
            ArrayView2::from_shape((self.hidden, self.n_features), &p[..w1]).unwrap(),
            ArrayView1::from_shape(self.hidden, &p[w1..b1]).unwrap(),
            ArrayView2::from_shape((self.n_classes, self.hidden), &p[b1..w2]).unwrap(),
            ArrayView1::from_shape(self.n_classes, &p[w2..]).unwrap(),
        )
    }
}

fn init_layer(weights: &mut [f64], fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let u = Uniform::new(-bound, bound);
    for w in weights {
        *w = u.sample(rng);
    }
}

fn softmax_rows(mut z: Array2<f64>) -> Array2<f64> {
    for mut row in z.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    z
}

/// Turns softmax probabilities into the mean cross-entropy gradient dL/dz.
fn subtract_labels(p: &mut Array2<f64>, y: &[u8], batch: f64) {
    for (mut row, &label) in p.rows_mut().into_iter().zip(y) {
        row[label as usize] -= 1.0;
        row.mapv_inplace(|v| v / batch);
    }
}

/// In-place SGD step `params -= lr * grad`.
pub fn sgd_step(params: &mut [f64], grad: &[f64], lr: f64) {
    debug_assert_eq!(params.len(), grad.len());
    for (p, g) in params.iter_mut().zip(grad) {
        *p -= lr * g;
    }
}
