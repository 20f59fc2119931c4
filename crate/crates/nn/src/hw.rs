//! Hardware inference through the weight-cell model.
//!
//! Inputs are voltages normalized to the read level (`x = v / v_read`), and
//! currents are normalized to `g0 · v_read`, so that an ideal ladder turns a
//! code `c` and input `x` into the current `c · x`. Multiplying a column
//! current by the layer's quantization step gives the pre-activation in
//! weight units.

use fexbar_core::circuit::{FetParams, ProgramWindow};
use fexbar_core::xbar::{drain_coupling, ladder, LadderBranch, Switch, XbarError};
use fexbar_core::FeCapParams;
use ndarray::{Array2, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::Dataset;
use crate::mlp::{accuracy, sigmoid};
use crate::quant::QuantizedMlp;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HwError {
    #[error("layer {layer} holds code {code}, outside ±{max} for {bits}-bit cells")]
    CodeOutOfRange { layer: usize, code: i32, max: i32, bits: u32 },
    #[error("invalid noise parameter {0}")]
    Noise(f64),
    #[error(transparent)]
    Device(#[from] XbarError),
}

/// Per-branch current as a function of the normalized input.
#[derive(Debug, Clone, PartialEq)]
pub enum BranchResponse {
    /// Branch `b` conducts `2^b · x` when on and nothing when off.
    Ideal,
    /// Samples at ascending inputs `x`; `on[b][k]` and `off[b][k]` are the
    /// normalized currents of branch `b` at `x[k]`. Linear in between, odd
    /// for negative inputs.
    Tabulated { x: Vec<f64>, on: Vec<Vec<f64>>, off: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HwWeightModel {
    pub bits: u32,
    /// V
    pub v_read: f64,
    /// µS
    pub g0: f64,
    pub response: BranchResponse,
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x < 0.0 {
        return -interp(xs, ys, -x);
    }
    let k = xs.partition_point(|&v| v <= x).clamp(1, xs.len() - 1);
    let (x0, x1, y0, y1) = (xs[k - 1], xs[k], ys[k - 1], ys[k]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

impl HwWeightModel {
    pub fn ideal(bits: u32, g0: f64, v_read: f64) -> Self {
        Self { bits, v_read, g0, response: BranchResponse::Ideal }
    }

    /// Tabulates nominal FeFET ladder branches at the given program/erase
    /// rest voltages over `points` inputs from 0 to `v_read`.
    pub fn from_device(
        bits: u32,
        r0: f64,
        fet: &FetParams,
        cap: &FeCapParams,
        window: ProgramWindow,
        v_read: f64,
        points: usize,
    ) -> Result<Self, HwError> {
        let g0 = 1e3 / r0;
        let unit = g0 * 1e-6 * v_read;
        let x: Vec<f64> = (0..points.max(2)).map(|k| k as f64 / (points.max(2) - 1) as f64).collect();
        let sample = |resistor, v_rest: f64| -> Result<Vec<f64>, XbarError> {
            let branch = LadderBranch {
                resistor,
                switch: Switch::FeFet { fet: *fet, v_rest, coupling: drain_coupling(fet, cap, v_rest) },
            };
            x.iter().map(|&xi| Ok(branch.current(xi * v_read)? / unit)).collect()
        };
        let resistors = ladder(r0, bits);
        let on = resistors.iter().map(|&r| sample(r, window.v_prog)).collect::<Result<_, _>>()?;
        let off = resistors.iter().map(|&r| sample(r, window.v_erase)).collect::<Result<_, _>>()?;
        Ok(Self { bits, v_read, g0, response: BranchResponse::Tabulated { x, on, off } })
    }

    pub fn max_code(&self) -> i32 {
        (1i32 << self.bits) - 1
    }

    /// Normalized current of branch `bit` at input `x`.
    pub fn branch_current(&self, bit: usize, on: bool, x: f64) -> f64 {
        match &self.response {
            BranchResponse::Ideal => {
                if on {
                    (1u64 << bit) as f64 * x
                } else {
                    0.0
                }
            }
            BranchResponse::Tabulated { x: xs, on: i_on, off: i_off } => {
                interp(xs, if on { &i_on[bit] } else { &i_off[bit] }, x)
            }
        }
    }

    /// Normalized current of one cell holding magnitude `m`.
    pub fn cell_current(&self, m: u32, x: f64) -> f64 {
        (0..self.bits as usize).map(|b| self.branch_current(b, m >> b & 1 == 1, x)).sum()
    }

    /// True when the cell current grows with the code at every sampled input.
    pub fn is_monotone(&self, inputs: &[f64]) -> bool {
        inputs.iter().all(|&x| {
            let g: Vec<f64> = (0..=self.max_code() as u32).map(|m| self.cell_current(m, x)).collect();
            g.windows(2).all(|w| w[1] >= w[0])
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HiddenActivation {
    /// Step to {0, 1} read levels at zero pre-activation.
    Binary,
    /// Analog read level `σ(z)`.
    Sigmoid,
    /// The pre-activation itself.
    Identity,
}

impl HiddenActivation {
    fn apply(self, z: f32) -> f32 {
        match self {
            Self::Binary => f32::from(u8::from(z > 0.0)),
            Self::Sigmoid => sigmoid(z),
            Self::Identity => z,
        }
    }
}

/// Multiplicative conductance factors for every branch of one layer,
/// indexed `((i·n_out + j)·2 + sign)·bits + bit`.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchFactors(pub Vec<f32>);

/// Normalized output currents of one differential layer for normalized
/// inputs `x` (`rows × n_in`).
pub fn layer_currents(
    codes: &Array2<i32>,
    hw: &HwWeightModel,
    x: &Array2<f32>,
    factors: Option<&BranchFactors>,
) -> Array2<f32> {
    let (n_in, n_out) = codes.dim();
    let bits = hw.bits as usize;
    let f = |i: usize, j: usize, s: usize, b: usize| factors.map_or(1.0, |f| f.0[((i * n_out + j) * 2 + s) * bits + b]);
    // Per branch and sign: is the branch on in that cell?
    let on = |c: i32, s: usize, b: usize| {
        let m = if (s == 0) == (c >= 0) { c.unsigned_abs() } else { 0 };
        m >> b & 1 == 1
    };
    match hw.response {
        BranchResponse::Ideal => {
            let g = Array2::from_shape_fn((n_in, n_out), |(i, j)| {
                let c = codes[[i, j]];
                (0..bits)
                    .map(|b| {
                        let w = (1u32 << b) as f32;
                        w * (f(i, j, 0, b) * f32::from(u8::from(on(c, 0, b)))
                            - f(i, j, 1, b) * f32::from(u8::from(on(c, 1, b))))
                    })
                    .sum::<f32>()
            });
            x.dot(&g)
        }
        BranchResponse::Tabulated { .. } => {
            let mut out = Array2::<f32>::zeros((x.nrows(), n_out));
            for b in 0..bits {
                for state in [true, false] {
                    let w = Array2::from_shape_fn((n_in, n_out), |(i, j)| {
                        let c = codes[[i, j]];
                        let pos = f32::from(u8::from(on(c, 0, b) == state));
                        let neg = f32::from(u8::from(on(c, 1, b) == state));
                        f(i, j, 0, b) * pos - f(i, j, 1, b) * neg
                    });
                    if w.iter().all(|&v| v == 0.0) {
                        continue;
                    }
                    let u = x.mapv(|xi| hw.branch_current(b, state, f64::from(xi)) as f32);
                    out += &u.dot(&w);
                }
            }
            out
        }
    }
}

fn check_codes(q: &QuantizedMlp, hw: &HwWeightModel) -> Result<(), HwError> {
    let max = hw.max_code();
    for (layer, codes) in q.codes.iter().enumerate() {
        if let Some(&code) = codes.iter().find(|c| c.abs() > max) {
            return Err(HwError::CodeOutOfRange { layer, code, max, bits: hw.bits });
        }
    }
    Ok(())
}

/// Class scores of the two-layer network evaluated through the weight
/// model. `factors` optionally perturbs each layer's branches.
pub fn hw_forward(
    q: &QuantizedMlp,
    hw: &HwWeightModel,
    activation: HiddenActivation,
    x: &Array2<f32>,
    factors: Option<&[BranchFactors; 2]>,
) -> Result<Array2<f32>, HwError> {
    check_codes(q, hw)?;
    let mut z = layer_currents(&q.codes[0], hw, x, factors.map(|f| &f[0])) * q.configs[0].step() + &q.biases[0];
    z.mapv_inplace(|v| activation.apply(v));
    Ok(layer_currents(&q.codes[1], hw, &z, factors.map(|f| &f[1])) * q.configs[1].step() + &q.biases[1])
}

pub fn hw_accuracy(
    q: &QuantizedMlp,
    hw: &HwWeightModel,
    activation: HiddenActivation,
    data: &Dataset,
    factors: Option<&[BranchFactors; 2]>,
) -> Result<f64, HwError> {
    Ok(accuracy(&hw_forward(q, hw, activation, &data.images, factors)?, &data.labels))
}

/// Distribution of branch conductance factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    /// `max(0, 1 + σ·z)` with standard normal `z`.
    Gaussian { sigma: f64 },
    /// `N / n` with `N ~ Poisson(n)`; relative spread `1/√n`.
    Poisson { n_dopants: f64 },
}

impl NoiseSpec {
    /// Poisson dopant noise with relative standard deviation `sigma`.
    pub fn poisson_with_sigma(sigma: f64) -> Self {
        Self::Poisson { n_dopants: 1.0 / (sigma * sigma) }
    }

    pub fn relative_sigma(&self) -> f64 {
        match *self {
            Self::Gaussian { sigma } => sigma,
            Self::Poisson { n_dopants } => n_dopants.sqrt().recip(),
        }
    }

    fn sampler(&self) -> Result<Sampler, HwError> {
        match *self {
            Self::Gaussian { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => Err(HwError::Noise(sigma)),
            Self::Poisson { n_dopants } if !(n_dopants > 0.0 && n_dopants.is_finite()) => {
                Err(HwError::Noise(n_dopants))
            }
            Self::Gaussian { sigma: 0.0 } => Ok(Sampler::One),
            Self::Gaussian { sigma } => Normal::new(1.0, sigma).map(Sampler::Normal).map_err(|_| HwError::Noise(sigma)),
            Self::Poisson { n_dopants } => {
                Poisson::new(n_dopants).map(|p| Sampler::Poisson(p, n_dopants)).map_err(|_| HwError::Noise(n_dopants))
            }
        }
    }
}

enum Sampler {
    One,
    Normal(Normal<f64>),
    Poisson(Poisson<f64>, f64),
}

impl Sampler {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f32 {
        match self {
            Sampler::One => 1.0,
            Sampler::Normal(n) => n.sample(rng).max(0.0) as f32,
            Sampler::Poisson(p, n) => (p.sample(rng) / n) as f32,
        }
    }
}

/// Which conductances share a draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseScope {
    /// Every ladder branch draws independently.
    PerBranch,
    /// One draw per weight, shared by all branches of both cells.
    PerWeight,
}

/// Draws factors for both layers, layer by layer in index order.
pub fn draw_factors<R: Rng + ?Sized>(
    q: &QuantizedMlp,
    hw: &HwWeightModel,
    noise: NoiseSpec,
    scope: NoiseScope,
    rng: &mut R,
) -> Result<[BranchFactors; 2], HwError> {
    let sampler = noise.sampler()?;
    let per_weight = 2 * hw.bits as usize;
    let mut layer = |codes: &Array2<i32>| {
        let n = codes.len() * per_weight;
        match scope {
            NoiseScope::PerBranch => BranchFactors((0..n).map(|_| sampler.draw(rng)).collect()),
            NoiseScope::PerWeight => BranchFactors(
                (0..codes.len()).flat_map(|_| std::iter::repeat_n(sampler.draw(rng), per_weight)).collect(),
            ),
        }
    };
    let first = layer(&q.codes[0]);
    Ok([first, layer(&q.codes[1])])
}

/// Monte Carlo test accuracies under conductance noise. Trial `t` uses the
/// ChaCha8 stream `t` of `seed`, so results do not depend on scheduling.
#[allow(clippy::too_many_arguments)]
pub fn noise_mc(
    q: &QuantizedMlp,
    hw: &HwWeightModel,
    activation: HiddenActivation,
    test: &Dataset,
    noise: NoiseSpec,
    scope: NoiseScope,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>, HwError> {
    noise.sampler()?;
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let f = draw_factors(q, hw, noise, scope, &mut rng)?;
            hw_accuracy(q, hw, activation, test, Some(&f))
        })
        .collect()
}

/// Elementwise check used by tests: `a ≈ b` within `tol` relative to the
/// largest magnitude.
pub fn close(a: &Array2<f32>, b: &Array2<f32>, tol: f32) -> bool {
    let scale = b.iter().fold(1e-30f32, |m, v| m.max(v.abs()));
    a.dim() == b.dim() && Zip::from(a).and(b).all(|x, y| (x - y).abs() <= tol * scale)
}
