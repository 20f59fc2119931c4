//! Uniform signed weight quantization with a clip window.

use ndarray::{Array1, Array2};

use crate::mlp::Mlp;

/// `bits` per weight magnitude; weights map to codes over `[-window, window]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantConfig {
    pub bits: u32,
    pub window: f32,
}

impl QuantConfig {
    pub fn levels(&self) -> i32 {
        (1i32 << self.bits) - 1
    }

    /// Weight value of one code step.
    pub fn step(&self) -> f32 {
        self.window / self.levels() as f32
    }

    pub fn is_valid(&self) -> bool {
        (1..=16).contains(&self.bits) && self.window > 0.0 && self.window.is_finite()
    }
}

/// Clips to the window and rounds to the nearest code, ties away from zero.
pub fn quantize_value(w: f32, cfg: QuantConfig) -> i32 {
    let l = cfg.levels();
    let x = (w.clamp(-cfg.window, cfg.window) / cfg.window) * l as f32;
    (x.round() as i32).clamp(-l, l)
}

pub fn quantize(weights: &Array2<f32>, cfg: QuantConfig) -> Array2<i32> {
    weights.mapv(|w| quantize_value(w, cfg))
}

pub fn dequantize(codes: &Array2<i32>, cfg: QuantConfig) -> Array2<f32> {
    let s = cfg.step();
    codes.mapv(|c| c as f32 * s)
}

pub fn max_abs(w: &Array2<f32>) -> f32 {
    w.iter().fold(0.0f32, |m, v| m.max(v.abs()))
}

/// MLP whose two weight matrices are integer codes; biases stay in full
/// precision.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedMlp {
    pub bits: u32,
    pub codes: [Array2<i32>; 2],
    pub configs: [QuantConfig; 2],
    pub biases: [Array1<f32>; 2],
}

impl QuantizedMlp {
    /// Quantizes each layer with window `rel_window · max|W_layer|`.
    pub fn from_mlp(m: &Mlp, bits: u32, rel_window: f32) -> Self {
        let cfg = |w: &Array2<f32>| {
            let top = max_abs(w);
            // An all-zero layer quantizes to zero codes under any window.
            QuantConfig { bits, window: if top > 0.0 { rel_window * top } else { 1.0 } }
        };
        let configs = [cfg(&m.w1), cfg(&m.w2)];
        Self {
            bits,
            codes: [quantize(&m.w1, configs[0]), quantize(&m.w2, configs[1])],
            configs,
            biases: [m.b1.clone(), m.b2.clone()],
        }
    }

    /// Float network with the dequantized weights.
    pub fn dequantized(&self) -> Mlp {
        Mlp {
            w1: dequantize(&self.codes[0], self.configs[0]),
            b1: self.biases[0].clone(),
            w2: dequantize(&self.codes[1], self.configs[1]),
            b2: self.biases[1].clone(),
        }
    }
}

/// `n` log-spaced relative windows from 0.1 to 1, ascending.
pub fn window_grid(n: usize) -> Vec<f32> {
    log_window_grid(0.1, n)
}

/// `n` log-spaced relative windows from `lo` to 1, ascending.
pub fn log_window_grid(lo: f32, n: usize) -> Vec<f32> {
    let lo = f64::from(lo).log10();
    match n {
        0 => Vec::new(),
        1 => vec![1.0],
        _ => (0..n).map(|k| 10f64.powf(lo * (1.0 - k as f64 / (n - 1) as f64)) as f32).collect(),
    }
}

/// Index of the best score, preferring the earliest (smallest window) on
/// ties.
pub fn argmax_first(scores: &[f64]) -> Option<usize> {
    scores
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, &s)| match best {
            Some((_, b)) if s <= b => best,
            _ => Some((i, s)),
        })
        .map(|(i, _)| i)
}
