//! FET and resistor models, the FeCap/FET stack and program/erase analysis.

mod fet;
mod resistor;
mod stack;
mod transient;
mod vt_band;

use thiserror::Error;

use crate::fecap::FeCapError;
use crate::root::RootError;

pub use fet::{
    fet_gate_charge, fet_gate_charge_sharp, fet_ids, fet_ids_derivatives, FetParams, CGG_TRANSITION_HALF_WIDTH,
    THERMAL_VOLTAGE,
};
pub use resistor::{resistor_iv, sample_conductance_factor, sample_resistor, ResistorParams};
pub use stack::{
    loadline_rest_point, loadline_rest_point_sharp, solve_stack, solve_stack_with_polarization, StackSolution,
    CHARGE_TOLERANCE,
};
pub use transient::{
    area_sweep, log_areas, program_window, standard_sequence, transient, AreaPoint, FeFetStack, ProgramPulse,
    ProgramWindow, Protocol, PulseTarget, TransientPoint,
};
pub use vt_band::{erased_coupling, vt_band, vt_band_loaded, ERASE_MARGIN, PROGRAM_MARGIN};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid parameter {name} = {value}")]
    InvalidParam { name: &'static str, value: f64 },
    #[error(transparent)]
    Root(#[from] RootError),
    #[error(transparent)]
    FeCap(#[from] FeCapError),
    #[error("charge balance residual {residual} fC exceeds tolerance")]
    Residual { residual: f64 },
    #[error(
        "FeCap/gate coupling did not settle at t = {time} s after {iterations} iterations (last change {change} V)"
    )]
    FixedPoint { time: f64, iterations: usize, change: f64 },
}
