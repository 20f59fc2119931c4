//! Single-hidden-layer perceptron trained with mini-batch SGD.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dataset::{Dataset, N_CLASSES};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error("training diverged (non-finite loss) in epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("empty training set")]
    EmptyData,
    #[error("invalid training parameter {name} = {value}")]
    InvalidParam { name: &'static str, value: f64 },
}

/// `n_in → hidden → 10` with a sigmoid hidden layer and softmax output.
/// Weight matrices are stored `[input][output]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub w1: Array2<f32>,
    pub b1: Array1<f32>,
    pub w2: Array2<f32>,
    pub b2: Array1<f32>,
}

pub fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(n_in: usize, hidden: usize, n_out: usize, rng: &mut R) -> Self {
        let mut glorot = |a: usize, b: usize| {
            let r = (6.0 / (a + b) as f32).sqrt();
            Array2::from_shape_simple_fn((a, b), || rng.random_range(-r..r))
        };
        let w1 = glorot(n_in, hidden);
        let w2 = glorot(hidden, n_out);
        Self { w1, b1: Array1::zeros(hidden), w2, b2: Array1::zeros(n_out) }
    }

    pub fn hidden(&self) -> usize {
        self.b1.len()
    }

    pub fn hidden_activations(&self, x: ArrayView2<f32>) -> Array2<f32> {
        (x.dot(&self.w1) + &self.b1).mapv_into(sigmoid)
    }

    /// Output logits.
    pub fn forward(&self, x: ArrayView2<f32>) -> Array2<f32> {
        self.hidden_activations(x).dot(&self.w2) + &self.b2
    }

    /// Sum of squared weights (biases excluded).
    pub fn weight_norm_sq(&self) -> f64 {
        [&self.w1, &self.w2].iter().flat_map(|w| w.iter()).map(|&v| f64::from(v) * f64::from(v)).sum()
    }

    pub fn is_finite(&self) -> bool {
        [&self.w1, &self.w2].iter().all(|w| w.iter().all(|v| v.is_finite()))
            && [&self.b1, &self.b2].iter().all(|b| b.iter().all(|v| v.is_finite()))
    }
}

/// Index of the largest score in each row (first on ties).
pub fn argmax_rows(scores: &Array2<f32>) -> Vec<usize> {
    scores
        .rows()
        .into_iter()
        .map(|r| {
            r.iter().enumerate().fold((0, f32::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best }).0
        })
        .collect()
}

/// Fraction of rows whose argmax equals the label.
pub fn accuracy(scores: &Array2<f32>, labels: &[u8]) -> f64 {
    assert!(!labels.is_empty(), "accuracy of an empty set");
    let hits = argmax_rows(scores).iter().zip(labels).filter(|(p, &l)| **p == l as usize).count();
    hits as f64 / labels.len() as f64
}

pub fn evaluate(model: &Mlp, data: &Dataset) -> f64 {
    accuracy(&model.forward(data.images.view()), &data.labels)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainParams {
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f32,
    pub momentum: f32,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self { hidden: 100, epochs: 30, batch_size: 16, learning_rate: 0.2, momentum: 0.9, seed: 0 }
    }
}

impl TrainParams {
    pub fn validate(&self) -> Result<(), TrainError> {
        let checks = [
            ("hidden", self.hidden as f64, self.hidden > 0),
            ("epochs", self.epochs as f64, self.epochs > 0),
            ("batch_size", self.batch_size as f64, self.batch_size > 0),
            ("learning_rate", self.learning_rate.into(), self.learning_rate > 0.0 && self.learning_rate.is_finite()),
            ("momentum", self.momentum.into(), (0.0..1.0).contains(&self.momentum)),
        ];
        match checks.iter().find(|c| !c.2) {
            Some(&(name, value, _)) => Err(TrainError::InvalidParam { name, value }),
            None => Ok(()),
        }
    }
}

/// Minimizes mean cross-entropy plus `lambda · Σw²` with momentum SGD.
/// Deterministic for a given seed.
pub fn train(data: &Dataset, lambda: f32, params: &TrainParams) -> Result<Mlp, TrainError> {
    params.validate()?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(TrainError::InvalidParam { name: "lambda", value: lambda.into() });
    }
    if data.is_empty() {
        return Err(TrainError::EmptyData);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut m = Mlp::init(data.n_features(), params.hidden, N_CLASSES, &mut rng);
    let mut vel = Mlp {
        w1: Array2::zeros(m.w1.raw_dim()),
        b1: Array1::zeros(m.b1.raw_dim()),
        w2: Array2::zeros(m.w2.raw_dim()),
        b2: Array1::zeros(m.b2.raw_dim()),
    };
    let mut order: Vec<usize> = (0..data.len()).collect();
    let (lr, mu) = (params.learning_rate, params.momentum);
    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        let mut loss = 0.0f64;
        for batch in order.chunks(params.batch_size) {
            let x = data.images.select(Axis(0), batch);
            let n = batch.len() as f32;
            let h = m.hidden_activations(x.view());
            let mut d = h.dot(&m.w2) + &m.b2;
            // Softmax in place, then subtract the one-hot target.
            for (mut row, &i) in d.rows_mut().into_iter().zip(batch) {
                let top = row.fold(f32::NEG_INFINITY, |a, &b| a.max(b));
                row.mapv_inplace(|z| (z - top).exp());
                let sum = row.sum();
                row /= sum;
                let y = data.labels[i] as usize;
                loss -= f64::from(row[y].max(f32::MIN_POSITIVE).ln());
                row[y] -= 1.0;
            }
            d /= n;
            let mut dh = d.dot(&m.w2.t());
            Zip::from(&mut dh).and(&h).for_each(|g, &a| *g *= a * (1.0 - a));
            let gw2 = h.t().dot(&d) + &(&m.w2 * (2.0 * lambda));
            let gw1 = x.t().dot(&dh) + &(&m.w1 * (2.0 * lambda));
            let gb2 = d.sum_axis(Axis(0));
            let gb1 = dh.sum_axis(Axis(0));
            let step = |w: &mut Array2<f32>, v: &mut Array2<f32>, g: &Array2<f32>| {
                Zip::from(&mut *v).and(g).for_each(|v, &g| *v = mu * *v - lr * g);
                *w += &*v;
            };
            step(&mut m.w1, &mut vel.w1, &gw1);
            step(&mut m.w2, &mut vel.w2, &gw2);
            Zip::from(&mut vel.b1).and(&gb1).for_each(|v, &g| *v = mu * *v - lr * g);
            Zip::from(&mut vel.b2).and(&gb2).for_each(|v, &g| *v = mu * *v - lr * g);
            m.b1 += &vel.b1;
            m.b2 += &vel.b2;
        }
        if !loss.is_finite() || !m.is_finite() {
            return Err(TrainError::Diverged { epoch });
        }
    }
    Ok(m)
}
