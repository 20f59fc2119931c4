//! Second-order delay of the internal voltage.
//!
//! `v'' + 2γω0·v' + ω0²·v = ω0²·u(t)` is linear, so each step is propagated
//! exactly with the closed-form matrix exponential, treating the applied
//! voltage `u` as linear in time across the step.

use super::{Branch, FeCapError, FeCapParams, FeCapState, TurningPoint};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagated {
    pub v: f64,
    pub rate: f64,
}

/// Advances `(v, rate)` by `dt` with the input ramping from `u0` to `u1`.
pub fn propagate(params: &FeCapParams, v: f64, rate: f64, u0: f64, u1: f64, dt: f64) -> Propagated {
    let w = params.omega0;
    let g = params.gamma;
    let slope = (u1 - u0) / dt;
    // With y = v - u the input drops out except for a constant forcing
    // -2γω0·slope, whose equilibrium is y_eq.
    let y_eq = -2.0 * g * slope / w;
    let z0 = v - u0 - y_eq;
    let zd0 = rate - slope;
    let (m11, m12, m21, m22) = exp_matrix(w, g, dt);
    let z1 = m11 * z0 + m12 * zd0;
    let zd1 = m21 * z0 + m22 * zd0;
    Propagated { v: z1 + y_eq + u1, rate: zd1 + slope }
}

/// `exp(A·t)` for `A = [[0, 1], [-ω², -2γω]]`, row-major.
fn exp_matrix(w: f64, g: f64, t: f64) -> (f64, f64, f64, f64) {
    let s = -g * w;
    let mu2 = w * w * (g * g - 1.0);
    let x2 = mu2 * t * t;
    let (c, sinc) = if x2.abs() < 1e-8 {
        (1.0 + 0.5 * x2 + x2 * x2 / 24.0, t * (1.0 + x2 / 6.0 + x2 * x2 / 120.0))
    } else if mu2 > 0.0 {
        let mu = mu2.sqrt();
        ((mu * t).cosh(), (mu * t).sinh() / mu)
    } else {
        let nu = (-mu2).sqrt();
        ((nu * t).cos(), (nu * t).sin() / nu)
    };
    let e = (s * t).exp();
    (e * (c - s * sinc), e * sinc, -e * w * w * sinc, e * (c + s * sinc))
}

impl FeCapState {
    /// One step with the applied voltage held at `v_app`.
    pub fn step_dynamics(
        &mut self,
        params: &FeCapParams,
        v_app: f64,
        dt: f64,
    ) -> Result<Option<TurningPoint>, FeCapError> {
        self.step_ramp(params, v_app, v_app, dt)
    }

    /// One step with the applied voltage ramping linearly from `u0` to `u1`.
    ///
    /// If the internal-voltage rate changes sign during the step, the
    /// reversal instant is located by linear interpolation of the rate, the
    /// turning point there is recorded (wiping overtaken pairs) and the branch
    /// flips. Returns the recorded turning point, if any.
    pub fn step_ramp(
        &mut self,
        params: &FeCapParams,
        u0: f64,
        u1: f64,
        dt: f64,
    ) -> Result<Option<TurningPoint>, FeCapError> {
        if !(dt > 0.0) {
            return Err(FeCapError::NonPositiveStep(dt));
        }
        let bound = params.max_step();
        if dt > bound * (1.0 + 1e-9) {
            return Err(FeCapError::StepTooLarge { dt, bound });
        }
        let (v0, r0) = (self.v_int, self.v_int_rate);
        let end = propagate(params, v0, r0, u0, u1, dt);

        let eps = 1e-9 * params.omega0;
        let reversed = match self.branch {
            Branch::Increasing => end.rate < -eps,
            Branch::Decreasing => end.rate > eps,
        };
        let mut recorded = None;
        if reversed {
            let along = match self.branch {
                Branch::Increasing => r0 > 0.0,
                Branch::Decreasing => r0 < 0.0,
            };
            let t_star = if along { (dt * r0 / (r0 - end.rate)).clamp(0.0, dt) } else { 0.0 };
            let v_star = if t_star > 0.0 {
                let u_star = u0 + (u1 - u0) * t_star / dt;
                propagate(params, v0, r0, u0, u_star, t_star).v
            } else {
                v0
            };
            self.v_int = v_star;
            self.wipe_to_current();
            let tp = TurningPoint { v: v_star, p: self.polarization(params) };
            self.record_turning_point(tp);
            recorded = Some(tp);
        }
        self.v_int = end.v;
        self.v_int_rate = end.rate;
        self.wipe_to_current();
        Ok(recorded)
    }
}
