//! Program/erase transients of a single FeFET stack.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fecap::{FeCapParams, FeCapState};

use super::fet::FetParams;
use super::stack::{solve_stack_with_polarization, StackSolution};
use super::SolverError;

const FIXED_POINT_TOL: f64 = 1e-9;
const FIXED_POINT_MAX: usize = 50;

/// Terminal the pulse is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PulseTarget {
    /// Program terminal high: drives the gate node positive ("program").
    ProgramLine,
    /// In/out terminals high with the program terminal grounded ("erase").
    InOutLine,
}

/// Trapezoidal pulse. Times in s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProgramPulse {
    pub target: PulseTarget,
    pub amplitude: f64,
    pub rise: f64,
    pub width: f64,
    pub fall: f64,
    pub select_on: bool,
}

impl ProgramPulse {
    pub fn validate(&self) -> Result<(), SolverError> {
        for (name, v) in [("rise", self.rise), ("width", self.width), ("fall", self.fall)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SolverError::InvalidParam { name, value: v });
            }
        }
        if !self.amplitude.is_finite() {
            return Err(SolverError::InvalidParam { name: "amplitude", value: self.amplitude });
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.rise + self.width + self.fall
    }

    /// Line voltage `t` seconds after the pulse starts.
    pub fn line_voltage(&self, t: f64) -> f64 {
        let s = if t <= 0.0 {
            0.0
        } else if t < self.rise {
            t / self.rise
        } else if t <= self.rise + self.width {
            1.0
        } else if t < self.duration() {
            (self.duration() - t) / self.fall
        } else {
            0.0
        };
        self.amplitude * s
    }
}

/// Pulse levels, timing and select-device settings of the program/erase
/// scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Protocol {
    pub amplitude: f64,
    pub rise: f64,
    pub width: f64,
    pub fall: f64,
    /// Quiet time after each pulse.
    pub settle: f64,
    pub v_select: f64,
    pub vt_select: f64,
    pub dt: f64,
    /// Erase/program pairs applied before the recorded erase and program.
    pub conditioning_cycles: usize,
}

impl Default for Protocol {
    fn default() -> Self {
        Self {
            amplitude: 3.0,
            rise: 10e-9,
            width: 100e-9,
            fall: 10e-9,
            settle: 200e-9,
            v_select: 3.3,
            vt_select: 0.35,
            dt: 0.1e-9,
            conditioning_cycles: 1,
        }
    }
}

impl Protocol {
    pub fn validate(&self, cap: &FeCapParams) -> Result<(), SolverError> {
        self.erase().validate()?;
        if !(self.settle >= 0.0) {
            return Err(SolverError::InvalidParam { name: "settle", value: self.settle });
        }
        if !(self.dt > 0.0 && self.dt <= cap.max_step()) {
            return Err(SolverError::InvalidParam { name: "dt", value: self.dt });
        }
        Ok(())
    }

    pub fn erase(&self) -> ProgramPulse {
        self.pulse(PulseTarget::InOutLine, true)
    }

    pub fn program(&self, select_on: bool) -> ProgramPulse {
        self.pulse(PulseTarget::ProgramLine, select_on)
    }

    fn pulse(&self, target: PulseTarget, select_on: bool) -> ProgramPulse {
        ProgramPulse {
            target,
            amplitude: self.amplitude,
            rise: self.rise,
            width: self.width,
            fall: self.fall,
            select_on,
        }
    }

    /// Terminal voltages `(v_prog, v_inout, v_sel, v_app)` at time `t` into
    /// `pulse`; `v_app` is the voltage reaching the FeCap/FET stack.
    ///
    /// The select device passes at most `v_select - vt_select` from the
    /// program line and nothing when it is off.
    pub fn terminals(&self, pulse: &ProgramPulse, t: f64) -> (f64, f64, f64, f64) {
        let line = pulse.line_voltage(t);
        let active = t > 0.0 && t < pulse.duration();
        let v_sel = if pulse.select_on && active { self.v_select } else { 0.0 };
        match pulse.target {
            PulseTarget::ProgramLine => {
                let v_app = if pulse.select_on { line.min(self.v_select - self.vt_select) } else { 0.0 };
                (line, 0.0, v_sel, v_app)
            }
            PulseTarget::InOutLine => {
                let v_app = if pulse.select_on { -line } else { 0.0 };
                (0.0, line, v_sel, v_app)
            }
        }
    }
}

/// One sample of a stack transient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransientPoint {
    pub time: f64,
    pub v_prog: f64,
    pub v_inout: f64,
    pub v_sel: f64,
    pub v_cap: f64,
    pub v_g: f64,
    /// µC/cm²
    pub p: f64,
}

/// FeCap in series with a FET gate, with the applied voltage as input.
#[derive(Debug, Clone, PartialEq)]
pub struct FeFetStack {
    pub cap: FeCapParams,
    pub fet: FetParams,
    pub state: FeCapState,
    pub solution: StackSolution,
    pub v_app: f64,
    pub time: f64,
}

impl FeFetStack {
    /// Uncharged stack at rest.
    pub fn new(cap: FeCapParams, fet: FetParams) -> Result<Self, SolverError> {
        cap.validate()?;
        fet.validate()?;
        let state = FeCapState::initial(&cap);
        let solution = solve_stack_with_polarization(&cap, state.polarization(&cap), &fet, 0.0, None)?;
        Ok(Self { cap, fet, state, solution, v_app: 0.0, time: 0.0 })
    }

    pub fn polarization(&self) -> f64 {
        self.state.polarization(&self.cap)
    }

    /// True when the internal voltage has caught up with the FeCap voltage
    /// and stopped moving.
    pub fn is_quiescent(&self) -> bool {
        (self.state.v_int - self.solution.v_cap).abs() <= FIXED_POINT_TOL
            && (self.state.v_int_rate / self.cap.omega0).abs() <= FIXED_POINT_TOL
    }

    /// Advances by `dt` with the applied voltage ramping to `v_app`.
    ///
    /// The FeCap dynamics are driven by its own terminal voltage, which
    /// depends on the gate node and therefore on the polarization at the end
    /// of the step; the two are iterated to a fixed point.
    pub fn step(&mut self, v_app: f64, dt: f64) -> Result<(), SolverError> {
        if v_app == self.v_app && self.is_quiescent() {
            self.time += dt;
            return Ok(());
        }
        let v_cap0 = self.solution.v_cap;
        let mut v_g = self.solution.v_g;
        let mut change = f64::INFINITY;
        for _ in 0..FIXED_POINT_MAX {
            let mut trial = self.state.clone();
            trial.step_ramp(&self.cap, v_cap0, v_app - v_g, dt)?;
            let p = trial.polarization(&self.cap);
            let sol = solve_stack_with_polarization(&self.cap, p, &self.fet, v_app, Some(v_g))?;
            change = (sol.v_g - v_g).abs();
            v_g = sol.v_g;
            if change <= FIXED_POINT_TOL {
                self.state = trial;
                self.solution = sol;
                self.v_app = v_app;
                self.time += dt;
                return Ok(());
            }
        }
        Err(SolverError::FixedPoint { time: self.time, iterations: FIXED_POINT_MAX, change })
    }

    /// Runs one pulse followed by the protocol's settle time, appending
    /// samples to `trace` when given.
    pub fn apply_pulse(
        &mut self,
        pulse: &ProgramPulse,
        protocol: &Protocol,
        mut trace: Option<&mut Vec<TransientPoint>>,
    ) -> Result<(), SolverError> {
        pulse.validate()?;
        let start = self.time;
        let mut t = 0.0;
        let mut record = |stack: &Self, t: f64| {
            if let Some(trace) = trace.as_deref_mut() {
                let (v_prog, v_inout, v_sel, _) = protocol.terminals(pulse, t);
                trace.push(TransientPoint {
                    time: stack.time,
                    v_prog,
                    v_inout,
                    v_sel,
                    v_cap: stack.solution.v_cap,
                    v_g: stack.solution.v_g,
                    p: stack.polarization(),
                });
            }
        };
        record(self, 0.0);
        // Phase boundaries are hit exactly so the corners of the trapezoid
        // fall on step edges.
        for phase in [pulse.rise, pulse.width, pulse.fall, protocol.settle] {
            if phase <= 0.0 {
                continue;
            }
            let n = (phase / protocol.dt).ceil().max(1.0) as usize;
            let dt = phase / n as f64;
            let t0 = t;
            for k in 1..=n {
                t = t0 + k as f64 * dt;
                let (_, _, _, v_app) = protocol.terminals(pulse, t);
                self.step(v_app, dt)?;
                record(self, t);
            }
        }
        self.time = start + t;
        Ok(())
    }
}

/// Applies `pulses` in order and returns the full node trace.
pub fn transient(
    stack: &mut FeFetStack,
    pulses: &[ProgramPulse],
    protocol: &Protocol,
) -> Result<Vec<TransientPoint>, SolverError> {
    protocol.validate(&stack.cap)?;
    let mut trace = Vec::new();
    for pulse in pulses {
        stack.apply_pulse(pulse, protocol, Some(&mut trace))?;
    }
    Ok(trace)
}

/// Pulse list for the standard scheme: `conditioning_cycles` erase/program
/// pairs, then the recorded erase and program.
pub fn standard_sequence(protocol: &Protocol) -> Vec<ProgramPulse> {
    let mut pulses = Vec::with_capacity(2 * protocol.conditioning_cycles + 2);
    for _ in 0..=protocol.conditioning_cycles {
        pulses.push(protocol.erase());
        pulses.push(protocol.program(true));
    }
    pulses
}

/// Rest gate voltages after the standard erase and program.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProgramWindow {
    pub v_prog: f64,
    pub v_erase: f64,
}

impl ProgramWindow {
    pub fn delta_v(&self) -> f64 {
        self.v_prog - self.v_erase
    }
}

/// Runs the standard sequence on a fresh stack.
pub fn program_window(cap: &FeCapParams, fet: &FetParams, protocol: &Protocol) -> Result<ProgramWindow, SolverError> {
    protocol.validate(cap)?;
    let mut stack = FeFetStack::new(*cap, *fet)?;
    let mut window = ProgramWindow { v_prog: f64::NAN, v_erase: f64::NAN };
    for pulse in standard_sequence(protocol) {
        stack.apply_pulse(&pulse, protocol, None)?;
        match pulse.target {
            PulseTarget::InOutLine => window.v_erase = stack.solution.v_g,
            PulseTarget::ProgramLine => window.v_prog = stack.solution.v_g,
        }
    }
    Ok(window)
}

/// One row of an area sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaPoint {
    pub area: f64,
    pub v_prog: f64,
    pub v_erase: f64,
    pub delta_v: f64,
}

/// Program window as a function of FeCap area. Areas are simulated
/// independently and in parallel; output order follows `areas`.
pub fn area_sweep(
    template: &FeCapParams,
    fet: &FetParams,
    areas: &[f64],
    protocol: &Protocol,
) -> Result<Vec<AreaPoint>, SolverError> {
    if let Some(&bad) = areas.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        return Err(SolverError::InvalidParam { name: "area", value: bad });
    }
    if areas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SolverError::InvalidParam { name: "areas (not ascending)", value: f64::NAN });
    }
    areas
        .par_iter()
        .map(|&area| {
            let w = program_window(&template.with_area(area), fet, protocol)?;
            Ok(AreaPoint { area, v_prog: w.v_prog, v_erase: w.v_erase, delta_v: w.delta_v() })
        })
        .collect()
}

/// `n` log-spaced areas from `lo` to `hi` inclusive.
pub fn log_areas(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect(),
    }
}
