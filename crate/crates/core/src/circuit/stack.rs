//! Charge balance of the FeCap in series with the FET gate.

use crate::fecap::{charge_from_polarization, FeCapParams, FeCapState, TurningPoint};
use crate::root::{newton_bisect, Root, RootError, Tolerance};
use crate::UC_CM2_NM2_TO_FC;

use super::fet::{fet_gate_charge, fet_gate_charge_sharp, FetParams};
use super::SolverError;

/// Largest charge-balance residual accepted for a stack solution (fC).
pub const CHARGE_TOLERANCE: f64 = 1e-6;

const MAX_SPAN: f64 = 1e3;

/// Node voltages and charge of the FeCap/FET stack at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StackSolution {
    pub v_cap: f64,
    pub v_g: f64,
    /// fC
    pub q: f64,
    /// fC
    pub residual: f64,
}

fn tolerance() -> Tolerance {
    Tolerance { f_abs: 1e-12, x_abs: 1e-15, ..Tolerance::default() }
}

/// Splits `v_app` between FeCap and gate for the state's present polarization.
pub fn solve_stack(
    cap: &FeCapParams,
    state: &FeCapState,
    fet: &FetParams,
    v_app: f64,
) -> Result<StackSolution, SolverError> {
    solve_stack_with_polarization(cap, state.polarization(cap), fet, v_app, None)
}

/// [`solve_stack`] for a known polarization, optionally seeded with a gate
/// voltage guess.
pub fn solve_stack_with_polarization(
    cap: &FeCapParams,
    p: f64,
    fet: &FetParams,
    v_app: f64,
    guess: Option<f64>,
) -> Result<StackSolution, SolverError> {
    let c_lin = cap.linear_capacitance_ff();
    // Decreasing in v_g: more gate voltage means less FeCap voltage.
    let residual = |v_g: f64| {
        let f = charge_from_polarization(cap, p, v_app - v_g) - fet_gate_charge(fet, v_g);
        (f, -c_lin - fet.gate_capacitance(v_g))
    };
    let root = widening_solve(residual, v_app.abs() + 5.0, guess.unwrap_or(0.0))?;
    finish(root.x, v_app, fet, residual(root.x).0)
}

/// Solves on `[-span, span]`, widening the bracket when a strongly polarized
/// FeCap on a small gate capacitance pushes the root beyond it.
fn widening_solve(f: impl Fn(f64) -> (f64, f64), span: f64, guess: f64) -> Result<Root, SolverError> {
    let mut span = span;
    loop {
        match newton_bisect(&f, -span, span, guess.clamp(-span, span), tolerance()) {
            Err(RootError::NotBracketed { .. }) if span < MAX_SPAN => span *= 4.0,
            other => return Ok(other?),
        }
    }
}

fn finish(v_g: f64, v_app: f64, fet: &FetParams, residual: f64) -> Result<StackSolution, SolverError> {
    if !(residual.abs() <= CHARGE_TOLERANCE) {
        return Err(SolverError::Residual { residual });
    }
    Ok(StackSolution { v_cap: v_app - v_g, v_g, q: fet_gate_charge(fet, v_g), residual })
}

/// Quasi-static rest point at zero applied voltage.
///
/// The internal voltage is allowed to settle along its present branch (or,
/// if the charge balance pulls the other way, along the reversed branch)
/// until the FeCap charge meets the gate-charge load line.
pub fn loadline_rest_point(
    cap: &FeCapParams,
    state: &FeCapState,
    fet: &FetParams,
) -> Result<StackSolution, SolverError> {
    rest_point(cap, state, |v| fet_gate_charge(fet, v), |v| fet.gate_capacitance(v))
}

/// [`loadline_rest_point`] against the unsmoothed two-segment load line
/// `Q = C_gg·V_g`.
pub fn loadline_rest_point_sharp(
    cap: &FeCapParams,
    state: &FeCapState,
    fet: &FetParams,
) -> Result<StackSolution, SolverError> {
    let c = |v: f64| if v > fet.vt { fet.cgg_inv } else { fet.cgg_dep };
    rest_point(cap, state, |v| fet_gate_charge_sharp(fet, v), c)
}

fn rest_point(
    cap: &FeCapParams,
    state: &FeCapState,
    gate_charge: impl Fn(f64) -> f64,
    gate_capacitance: impl Fn(f64) -> f64,
) -> Result<StackSolution, SolverError> {
    let forward = state.clone();
    let mut reversed = state.clone();
    reversed.record_turning_point(TurningPoint { v: state.v_int, p: state.polarization(cap) });
    let along = |v: f64| {
        let ahead = match state.branch {
            crate::Branch::Increasing => v >= state.v_int,
            crate::Branch::Decreasing => v <= state.v_int,
        };
        if ahead {
            forward.polarization_along_branch(cap, v)
        } else {
            reversed.polarization_along_branch(cap, v)
        }
    };
    let area = cap.area * UC_CM2_NM2_TO_FC;
    let c_lin = cap.linear_capacitance_ff();
    // Increasing in v_cap; at rest v_g = -v_cap.
    let residual = |v: f64| {
        let f = along(v) * area + c_lin * v - gate_charge(-v);
        let h = 1e-7;
        let slope = (along(v + h) - along(v - h)) / (2.0 * h);
        (f, slope.max(0.0) * area + c_lin + gate_capacitance(-v))
    };
    let root = widening_solve(residual, cap.saturation_voltage() + 5.0, state.v_int)?;
    let v_cap = root.x;
    let v_g = -v_cap;
    let residual = residual(v_cap).0;
    if !(residual.abs() <= CHARGE_TOLERANCE) {
        return Err(SolverError::Residual { residual });
    }
    Ok(StackSolution { v_cap, v_g, q: gate_charge(v_g), residual })
}
