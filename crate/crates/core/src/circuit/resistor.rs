use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::SolverError;

/// Doped passive resistor. `r_nominal` in kΩ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResistorParams {
    pub r_nominal: f64,
    pub n_dopants: f64,
}

impl ResistorParams {
    pub fn new(r_nominal: f64, n_dopants: f64) -> Self {
        Self { r_nominal, n_dopants }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.r_nominal > 0.0) || self.r_nominal.is_nan() {
            return Err(SolverError::InvalidParam { name: "r_nominal", value: self.r_nominal });
        }
        if !(self.n_dopants > 0.0 && self.n_dopants.is_finite()) {
            return Err(SolverError::InvalidParam { name: "n_dopants", value: self.n_dopants });
        }
        Ok(())
    }

    /// Conductance in µS; an open resistor (infinite resistance) gives 0.
    pub fn conductance_us(&self) -> f64 {
        1e3 / self.r_nominal
    }
}

/// Ohmic current in A.
pub fn resistor_iv(params: &ResistorParams, v: f64) -> f64 {
    v / (params.r_nominal * 1e3)
}

/// Relative conductance `N/n` for a Poisson dopant count `N` with mean `n`.
pub fn sample_conductance_factor<R: Rng + ?Sized>(n_dopants: f64, rng: &mut R) -> f64 {
    let poisson = Poisson::new(n_dopants).expect("dopant count must be positive and finite");
    poisson.sample(rng) / n_dopants
}

/// Resistor instance with a Poisson-distributed dopant count. A zero draw
/// yields an open resistor.
pub fn sample_resistor<R: Rng + ?Sized>(params: &ResistorParams, rng: &mut R) -> ResistorParams {
    let factor = sample_conductance_factor(params.n_dopants, rng);
    let r = if factor > 0.0 { params.r_nominal / factor } else { f64::INFINITY };
    ResistorParams { r_nominal: r, n_dopants: params.n_dopants }
}
