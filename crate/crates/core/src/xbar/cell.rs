use crate::circuit::{fet_ids, fet_ids_derivatives, resistor_iv, FetParams, ProgramWindow, ResistorParams};
use crate::fecap::FeCapParams;
use crate::root::{newton_bisect, Tolerance};

use super::XbarError;

/// LSB resistor in kΩ.
pub const DEFAULT_R0: f64 = 60.0;
/// Expected dopant count of a resistor body.
pub const DEFAULT_N_DOPANTS: f64 = 100.0;
/// Nominal inference input level (V).
pub const READ_VOLTAGE: f64 = 0.3;
/// Input level for ON/OFF classification of single branches (V).
pub const CLASSIFY_VOLTAGE: f64 = 0.05;

/// What gates a ladder branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Switch {
    /// Zero-resistance short when on, open when off.
    Ideal { on: bool },
    /// FeFET with its floating gate at `v_rest` for a grounded drain. The
    /// drain pulls the gate up by `coupling · v_drain`.
    FeFet { fet: FetParams, v_rest: f64, coupling: f64 },
}

/// Drain-to-gate coupling ratio of a FeFET at rest voltage `v_rest`, with the
/// FeCap's far plate (program line) grounded.
pub fn drain_coupling(fet: &FetParams, cap: &FeCapParams, v_rest: f64) -> f64 {
    fet.cgd_par / (fet.cgd_par + fet.gate_capacitance(v_rest) + cap.linear_capacitance_ff())
}

/// Resistor from the input line to the FET drain; the FET source sits on the
/// virtual-ground output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderBranch {
    pub resistor: ResistorParams,
    pub switch: Switch,
}

impl LadderBranch {
    /// Branch current in A for input voltage `v_in`.
    pub fn current(&self, v_in: f64) -> Result<f64, XbarError> {
        if v_in == 0.0 || !self.resistor.r_nominal.is_finite() {
            return Ok(0.0);
        }
        match self.switch {
            Switch::Ideal { on } => Ok(if on { resistor_iv(&self.resistor, v_in) } else { 0.0 }),
            Switch::FeFet { fet, v_rest, coupling } => {
                let r = self.resistor.r_nominal * 1e3;
                // Continuity at the drain node; decreasing in v_d.
                let f = |vd: f64| {
                    let vg = v_rest + coupling * vd;
                    let (dg, dd) = fet_ids_derivatives(&fet, vg, vd);
                    ((v_in - vd) / r - fet_ids(&fet, vg, vd), -1.0 / r - dg * coupling - dd)
                };
                let tol = Tolerance { f_abs: 0.0, x_abs: 1e-15, ..Tolerance::default() };
                let root = newton_bisect(f, 0.0, v_in, 0.5 * v_in, tol).map_err(crate::circuit::SolverError::from)?;
                Ok((v_in - root.x) / r)
            }
        }
    }

    /// Conductance in µS seen at [`CLASSIFY_VOLTAGE`].
    pub fn small_signal_conductance(&self) -> Result<f64, XbarError> {
        Ok(self.current(CLASSIFY_VOLTAGE)? / CLASSIFY_VOLTAGE * 1e6)
    }
}

/// Nominal resistors `R0/2^i` for an `n_bits` ladder.
pub fn ladder(r0: f64, n_bits: u32) -> Vec<ResistorParams> {
    (0..n_bits).map(|i| ResistorParams::new(r0 / f64::from(1u32 << i), DEFAULT_N_DOPANTS)).collect()
}

/// One ladder of binary-weighted branches.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightCell {
    /// LSB conductance `1/R0` in µS, excluding the FET.
    pub g0: f64,
    /// LSB first.
    pub branches: Vec<LadderBranch>,
}

impl WeightCell {
    pub fn new(r0: f64, resistors: Vec<ResistorParams>, switches: Vec<Switch>) -> Result<Self, XbarError> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(XbarError::InvalidParam { name: "r0", value: r0 });
        }
        if resistors.is_empty() {
            return Err(XbarError::BitCount(0));
        }
        if resistors.len() != switches.len() {
            return Err(XbarError::BitLength { expected: resistors.len(), got: switches.len() });
        }
        let branches =
            resistors.into_iter().zip(switches).map(|(resistor, switch)| LadderBranch { resistor, switch }).collect();
        Ok(Self { g0: 1e3 / r0, branches })
    }

    /// Nominal ladder with ideal switches.
    pub fn ideal(bits: &[bool], r0: f64) -> Result<Self, XbarError> {
        let switches = bits.iter().map(|&on| Switch::Ideal { on }).collect();
        Self::new(r0, ladder(r0, bits.len() as u32), switches)
    }

    /// Nominal ladder whose FeFETs sit at the programmed or erased rest
    /// voltage of `window`.
    pub fn programmed(
        bits: &[bool],
        r0: f64,
        fet: &FetParams,
        cap: &FeCapParams,
        window: ProgramWindow,
    ) -> Result<Self, XbarError> {
        let switches = bits
            .iter()
            .map(|&on| {
                let v_rest = if on { window.v_prog } else { window.v_erase };
                Switch::FeFet { fet: *fet, v_rest, coupling: drain_coupling(fet, cap, v_rest) }
            })
            .collect();
        Self::new(r0, ladder(r0, bits.len() as u32), switches)
    }

    pub fn n_bits(&self) -> usize {
        self.branches.len()
    }

    /// Total current in A with the output at virtual ground.
    pub fn current(&self, v_in: f64) -> Result<f64, XbarError> {
        self.branches.iter().map(|b| b.current(v_in)).sum()
    }

    /// `current / v_in` in µS.
    pub fn effective_weight(&self, v_in: f64) -> Result<f64, XbarError> {
        if v_in == 0.0 {
            return Err(XbarError::ZeroInput);
        }
        Ok(self.current(v_in)? / v_in * 1e6)
    }

    /// Branches whose conductance exceeds `g0/10`.
    pub fn on_bits(&self) -> Result<Vec<bool>, XbarError> {
        self.branches.iter().map(|b| Ok(b.small_signal_conductance()? > 0.1 * self.g0)).collect()
    }
}

pub fn cell_current(cell: &WeightCell, v_in: f64) -> Result<f64, XbarError> {
    cell.current(v_in)
}

pub fn effective_weight(cell: &WeightCell, v_in: f64) -> Result<f64, XbarError> {
    cell.effective_weight(v_in)
}
