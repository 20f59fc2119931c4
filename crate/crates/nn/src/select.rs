//! Quantization-window search and regularization-strength selection.

use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::Dataset;
use crate::hw::{hw_accuracy, HiddenActivation, HwError, HwWeightModel};
use crate::mlp::{evaluate, train, Mlp, TrainError, TrainParams};
use crate::quant::{argmax_first, QuantizedMlp};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectError {
    #[error("empty {0} grid")]
    EmptyGrid(&'static str),
    #[error("empty {0} set")]
    EmptyData(&'static str),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Hw(#[from] HwError),
}

/// How a quantized network is scored.
#[derive(Debug, Clone, Copy)]
pub enum Evaluator<'a> {
    /// Float forward pass with dequantized weights and sigmoid hidden units.
    Software,
    /// Full hardware forward pass.
    Hardware { hw: &'a HwWeightModel, activation: HiddenActivation },
}

impl Evaluator<'_> {
    pub fn accuracy(&self, q: &QuantizedMlp, data: &Dataset) -> Result<f64, HwError> {
        match *self {
            Evaluator::Software => Ok(evaluate(&q.dequantized(), data)),
            Evaluator::Hardware { hw, activation } => hw_accuracy(q, hw, activation, data, None),
        }
    }
}

/// Validation accuracy over a grid of relative windows and the best entry.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSearch {
    pub rel_windows: Vec<f32>,
    pub accuracies: Vec<f64>,
    pub best: usize,
    pub model: QuantizedMlp,
}

impl WindowSearch {
    pub fn rel_window(&self) -> f32 {
        self.rel_windows[self.best]
    }

    pub fn accuracy(&self) -> f64 {
        self.accuracies[self.best]
    }
}

/// Quantizes `m` at each relative window and keeps the most accurate one on
/// `data`; ties go to the smaller window when the grid is ascending.
pub fn optimize_window(
    m: &Mlp,
    bits: u32,
    data: &Dataset,
    rel_windows: &[f32],
    eval: Evaluator<'_>,
) -> Result<WindowSearch, SelectError> {
    if rel_windows.is_empty() {
        return Err(SelectError::EmptyGrid("window"));
    }
    if data.is_empty() {
        return Err(SelectError::EmptyData("validation"));
    }
    let accuracies = rel_windows
        .par_iter()
        .map(|&r| eval.accuracy(&QuantizedMlp::from_mlp(m, bits, r), data))
        .collect::<Result<Vec<_>, _>>()?;
    let best = argmax_first(&accuracies).expect("nonempty grid");
    Ok(WindowSearch {
        rel_windows: rel_windows.to_vec(),
        accuracies,
        best,
        model: QuantizedMlp::from_mlp(m, bits, rel_windows[best]),
    })
}

/// `per_decade` log-spaced values per decade from `lo` to `hi` inclusive.
pub fn lambda_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f32> {
    let decades = (hi / lo).log10();
    let n = (decades * per_decade as f64).round() as usize;
    if n == 0 {
        return vec![lo as f32];
    }
    (0..=n).map(|k| (lo * 10f64.powf(decades * k as f64 / n as f64)) as f32).collect()
}

/// Trains one float network per regularization strength.
pub fn train_grid(train_set: &Dataset, lambdas: &[f32], params: &TrainParams) -> Result<Vec<Mlp>, SelectError> {
    if lambdas.is_empty() {
        return Err(SelectError::EmptyGrid("lambda"));
    }
    lambdas.par_iter().map(|&l| train(train_set, l, params).map_err(SelectError::from)).collect()
}

/// One (λ, window) point of the selection grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub lambda: f32,
    pub rel_window: f32,
    /// Validation error rate.
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Row-major over (λ, window).
    pub grid: Vec<GridPoint>,
    pub best: usize,
    pub model: QuantizedMlp,
}

impl Selection {
    pub fn cost(&self) -> f64 {
        self.grid[self.best].cost
    }

    pub fn lambda(&self) -> f32 {
        self.grid[self.best].lambda
    }

    pub fn rel_window(&self) -> f32 {
        self.grid[self.best].rel_window
    }
}

/// Scores every trained network at every window on the validation set and
/// returns the configuration of lowest cost (first in grid order on ties).
pub fn select_hw_aware(
    models: &[Mlp],
    lambdas: &[f32],
    validate: &Dataset,
    rel_windows: &[f32],
    bits: u32,
    eval: Evaluator<'_>,
) -> Result<Selection, SelectError> {
    if models.is_empty() || models.len() != lambdas.len() {
        return Err(SelectError::EmptyGrid("lambda"));
    }
    let mut grid = Vec::with_capacity(models.len() * rel_windows.len());
    for (m, &lambda) in models.iter().zip(lambdas) {
        let search = optimize_window(m, bits, validate, rel_windows, eval)?;
        grid.extend(search.rel_windows.iter().zip(&search.accuracies).map(|(&rel_window, &a)| GridPoint {
            lambda,
            rel_window,
            cost: 1.0 - a,
        }));
    }
    let neg: Vec<f64> = grid.iter().map(|p| -p.cost).collect();
    let best = argmax_first(&neg).expect("nonempty grid");
    let (i, j) = (best / rel_windows.len(), best % rel_windows.len());
    Ok(Selection { grid, best, model: QuantizedMlp::from_mlp(&models[i], bits, rel_windows[j]) })
}

/// Trains over `lambdas`, then selects with [`select_hw_aware`].
pub fn hw_aware_regularization(
    train_set: &Dataset,
    validate: &Dataset,
    lambdas: &[f32],
    rel_windows: &[f32],
    bits: u32,
    params: &TrainParams,
    eval: Evaluator<'_>,
) -> Result<Selection, SelectError> {
    if rel_windows.is_empty() {
        return Err(SelectError::EmptyGrid("window"));
    }
    let models = train_grid(train_set, lambdas, params)?;
    select_hw_aware(&models, lambdas, validate, rel_windows, bits, eval)
}

/// Software-only baseline: λ chosen by float validation accuracy, weights
/// quantized over the full range `max|w|`. Returns the index of the chosen
/// λ and the quantized network.
pub fn select_naive(models: &[Mlp], validate: &Dataset, bits: u32) -> Result<(usize, QuantizedMlp), SelectError> {
    if models.is_empty() {
        return Err(SelectError::EmptyGrid("lambda"));
    }
    let acc: Vec<f64> = models.iter().map(|m| evaluate(m, validate)).collect();
    let i = argmax_first(&acc).expect("nonempty grid");
    Ok((i, QuantizedMlp::from_mlp(&models[i], bits, 1.0)))
}
