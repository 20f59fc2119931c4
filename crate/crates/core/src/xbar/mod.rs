//! Binary-ladder weight cells and the differential crossbar array.
//!
//! A weight cell is `n_bits` parallel branches; branch `i` is a passive
//! resistor `R0/2^i` in series with a FeFET that enables or disables it. A
//! signed weight uses two cells (positive and negative column) whose output
//! currents are subtracted by the summing amplifier at virtual ground.

mod array;
mod cell;
mod code;

use thiserror::Error;

use crate::circuit::SolverError;

pub use array::{infer, program_array, CellArray, CrossbarArray, Sign};
pub use cell::{
    cell_current, drain_coupling, effective_weight, ladder, LadderBranch, Switch, WeightCell, CLASSIFY_VOLTAGE,
    DEFAULT_N_DOPANTS, DEFAULT_R0, READ_VOLTAGE,
};
pub use code::{decode_differential, encode_differential, ideal_conductance, WeightCode, MAX_BITS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum XbarError {
    #[error("code {value} out of range for {n_bits}-bit weights (|code| <= {})", (1i64 << n_bits) - 1)]
    CodeOutOfRange { value: i64, n_bits: u32 },
    #[error("unsupported bit count {0}")]
    BitCount(u32),
    #[error("expected {expected} bits, got {got}")]
    BitLength { expected: usize, got: usize },
    #[error("effective weight is undefined at zero input voltage")]
    ZeroInput,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid parameter {name} = {value}")]
    InvalidParam { name: &'static str, value: f64 },
    #[error(transparent)]
    Solver(#[from] SolverError),
}
