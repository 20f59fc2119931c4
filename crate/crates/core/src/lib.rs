//! Device and circuit models for FeFET-gated multi-bit resistive weight cells.
//!
//! The crate is layered bottom-up:
//!
//! - [`fecap`]: ferroelectric capacitor with a Preisach turning-point
//!   polarization model driven by a second-order internal-voltage delay.
//! - [`circuit`]: compact FET and passive-resistor models, the self-consistent
//!   FeCap/FET stack, program/erase transients, area sweeps and the Vt band.
//! - [`xbar`]: the binary-ladder weight cell and the differential crossbar
//!   array used for analog multiply-and-accumulate.
//!
//! Unit conventions used throughout: voltages in V, time in s, polarization
//! in µC/cm², areas in nm², charges in fC, capacitances in fF, currents in A,
//! resistances in kΩ and conductances in µS.

// `!(x > 0.0)` deliberately also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod fecap;
pub mod root;
pub mod xbar;

pub use circuit::{FetParams, ProgramPulse, Protocol, PulseTarget, ResistorParams, SolverError, StackSolution};
pub use fecap::{Branch, FeCapError, FeCapParams, FeCapState, TurningPoint};
pub use xbar::{CellArray, CrossbarArray, WeightCell, WeightCode, XbarError};

/// Conversion factor from (µC/cm²)·nm² to fC, and from (µF/cm²)·nm² to fF.
pub const UC_CM2_NM2_TO_FC: f64 = 1e-5;
