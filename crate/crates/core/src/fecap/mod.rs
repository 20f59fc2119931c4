//! Ferroelectric capacitor model.
//!
//! Polarization is a quasi-static Preisach turning-point function of an
//! internal voltage `v_int`, which itself follows the applied voltage through
//! a second-order delay. The linear (non-ferroelectric) charge responds to the
//! instantaneous applied voltage.

mod dynamics;
mod preisach;
mod sweep;

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

pub use dynamics::{propagate, Propagated};
pub use preisach::{FeCapState, TurningPoint};
pub use sweep::{quasistatic_sweep, sweep_from, triangle_waveform, TracePoint};

use crate::UC_CM2_NM2_TO_FC;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeCapError {
    #[error("invalid FeCap parameter {name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },
    #[error("time step must be positive, got {0} s")]
    NonPositiveStep(f64),
    #[error("time step {dt} s exceeds the integrator bound 0.1/(gamma*omega0) = {bound} s")]
    StepTooLarge { dt: f64, bound: f64 },
    #[error("internal voltage {v} V lies outside the active turning-point pair [{lo}, {hi}] V")]
    OutsideActivePair { v: f64, lo: f64, hi: f64 },
    #[error("degenerate turning-point pair at {v} V with distinct polarizations {p_lo} and {p_hi}")]
    Degenerate { v: f64, p_lo: f64, p_hi: f64 },
    #[error("waveform samples must have strictly increasing time")]
    NonMonotoneTime,
}

/// Direction of the last change in internal voltage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    Increasing,
    Decreasing,
}

impl Branch {
    pub fn flipped(self) -> Self {
        match self {
            Branch::Increasing => Branch::Decreasing,
            Branch::Decreasing => Branch::Increasing,
        }
    }
}

/// Calibration of one ferroelectric capacitor.
///
/// `theta_*` in µC/cm², voltages in V, `omega0` in rad/s, `c_lin` in µF/cm²,
/// `area` in nm². The `*_plus` set shapes the decreasing branch (which
/// switches near `-vc_plus`) and the `*_minus` set the increasing branch
/// (which switches near `+vc_minus`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeCapParams {
    pub theta_plus: f64,
    pub theta_minus: f64,
    pub vc_plus: f64,
    pub vc_minus: f64,
    pub vsc_plus: f64,
    pub vsc_minus: f64,
    pub omega0: f64,
    pub gamma: f64,
    pub c_lin: f64,
    pub area: f64,
}

impl Default for FeCapParams {
    fn default() -> Self {
        Self::hzo_default()
    }
}

impl FeCapParams {
    /// Shipped symmetric HfZrO2-like calibration at the optimal-area point.
    pub fn hzo_default() -> Self {
        Self {
            theta_plus: 20.0,
            theta_minus: 20.0,
            vc_plus: 1.0,
            vc_minus: 1.0,
            vsc_plus: 0.35,
            vsc_minus: 0.35,
            omega0: 2.0 * PI * 25e6,
            gamma: 1.0,
            c_lin: 2.0,
            area: 1250.0,
        }
    }

    pub fn with_area(mut self, area: f64) -> Self {
        self.area = area;
        self
    }

    pub fn validate(&self) -> Result<(), FeCapError> {
        let positive = [
            ("theta_plus", self.theta_plus),
            ("theta_minus", self.theta_minus),
            ("vsc_plus", self.vsc_plus),
            ("vsc_minus", self.vsc_minus),
            ("omega0", self.omega0),
            ("gamma", self.gamma),
            ("area", self.area),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(FeCapError::InvalidParam { name, reason: format!("must be > 0, got {v}") });
            }
        }
        let non_negative = [("vc_plus", self.vc_plus), ("vc_minus", self.vc_minus), ("c_lin", self.c_lin)];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(FeCapError::InvalidParam { name, reason: format!("must be >= 0, got {v}") });
            }
        }
        Ok(())
    }

    /// Natural frequency of the internal-voltage delay in Hz.
    pub fn f0(&self) -> f64 {
        self.omega0 / (2.0 * PI)
    }

    /// Largest time step accepted by [`FeCapState::step_dynamics`].
    pub fn max_step(&self) -> f64 {
        0.1 / (self.gamma * self.omega0)
    }

    pub fn theta_max(&self) -> f64 {
        self.theta_plus.max(self.theta_minus)
    }

    /// Voltage beyond which both branches are saturated to round-off.
    pub fn saturation_voltage(&self) -> f64 {
        self.vc_plus.max(self.vc_minus) + 12.0 * self.vsc_plus.max(self.vsc_minus)
    }

    /// Linear capacitance of the whole capacitor in fF.
    pub fn linear_capacitance_ff(&self) -> f64 {
        self.c_lin * self.area * UC_CM2_NM2_TO_FC
    }

    /// Outermost (saturation) turning-point pair, lower first.
    pub fn saturation_pair(&self) -> (TurningPoint, TurningPoint) {
        let vs = self.saturation_voltage();
        (
            TurningPoint { v: -vs, p: raw_response(self, Branch::Decreasing, -vs) },
            TurningPoint { v: vs, p: raw_response(self, Branch::Increasing, vs) },
        )
    }
}

/// Unscaled branch response `θ·tanh((v ± Vc)/Vsc)` in µC/cm².
///
/// The decreasing branch uses the `plus` parameter set with `+Vc`, the
/// increasing branch the `minus` set with `-Vc`.
pub fn raw_response(params: &FeCapParams, branch: Branch, v_int: f64) -> f64 {
    match branch {
        Branch::Decreasing => params.theta_plus * ((v_int + params.vc_plus) / params.vsc_plus).tanh(),
        Branch::Increasing => params.theta_minus * ((v_int - params.vc_minus) / params.vsc_minus).tanh(),
    }
}

/// Total capacitor charge in fC: ferroelectric part from the delayed internal
/// state, linear part from the instantaneous applied voltage.
pub fn total_charge(params: &FeCapParams, state: &FeCapState, v_app: f64) -> f64 {
    charge_from_polarization(params, state.polarization(params), v_app)
}

/// Total charge in fC for a known polarization.
pub fn charge_from_polarization(params: &FeCapParams, p: f64, v_app: f64) -> f64 {
    (p + params.c_lin * v_app) * params.area * UC_CM2_NM2_TO_FC
}
