use rand::Rng;
use rayon::prelude::*;

use crate::circuit::{sample_resistor, FeFetStack, FetParams, Protocol, ResistorParams};
use crate::fecap::FeCapParams;

use super::cell::{drain_coupling, ladder, Switch, WeightCell};
use super::code::{decode_differential, encode_differential, WeightCode, MAX_BITS};
use super::XbarError;

/// Which cell of a differential pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Pos,
    Neg,
}

impl Sign {
    fn offset(self) -> usize {
        match self {
            Sign::Pos => 0,
            Sign::Neg => 1,
        }
    }
}

/// Grid of differential cell pairs, `[input][output]`, evaluated in
/// inference mode.
#[derive(Debug, Clone, PartialEq)]
pub struct CellArray {
    pub n_inputs: usize,
    pub n_outputs: usize,
    pairs: Vec<(WeightCell, WeightCell)>,
}

impl CellArray {
    pub fn new(n_inputs: usize, n_outputs: usize, pairs: Vec<(WeightCell, WeightCell)>) -> Result<Self, XbarError> {
        if pairs.len() != n_inputs * n_outputs {
            return Err(XbarError::Shape(format!("{} cell pairs for a {n_inputs}x{n_outputs} array", pairs.len())));
        }
        Ok(Self { n_inputs, n_outputs, pairs })
    }

    /// Ideal-switch array holding `codes[input][output]`.
    pub fn ideal(codes: &[Vec<WeightCode>], r0: f64) -> Result<Self, XbarError> {
        let (n_inputs, n_outputs) = shape(codes)?;
        let pairs = codes
            .iter()
            .flatten()
            .map(|&c| {
                let (p, n) = encode_differential(c);
                Ok((WeightCell::ideal(&p, r0)?, WeightCell::ideal(&n, r0)?))
            })
            .collect::<Result<_, XbarError>>()?;
        Self::new(n_inputs, n_outputs, pairs)
    }

    pub fn pair(&self, input: usize, output: usize) -> &(WeightCell, WeightCell) {
        &self.pairs[input * self.n_outputs + output]
    }

    /// Same array with every pair's cells exchanged.
    pub fn swapped(&self) -> Self {
        let pairs = self.pairs.iter().map(|(p, n)| (n.clone(), p.clone())).collect();
        Self { pairs, ..*self }
    }

    /// Output currents in A with all outputs at virtual ground.
    pub fn infer(&self, v_in: &[f64]) -> Result<Vec<f64>, XbarError> {
        if v_in.len() != self.n_inputs {
            return Err(XbarError::Shape(format!("{} inputs for {} rows", v_in.len(), self.n_inputs)));
        }
        (0..self.n_outputs)
            .into_par_iter()
            .map(|j| {
                let mut sum = 0.0;
                for (i, &v) in v_in.iter().enumerate() {
                    let (p, n) = self.pair(i, j);
                    sum += p.current(v)? - n.current(v)?;
                }
                Ok(sum)
            })
            .collect()
    }
}

fn shape(codes: &[Vec<WeightCode>]) -> Result<(usize, usize), XbarError> {
    let n_outputs = codes.first().map_or(0, Vec::len);
    if codes.is_empty() || n_outputs == 0 || codes.iter().any(|r| r.len() != n_outputs) {
        return Err(XbarError::Shape("code matrix must be a non-empty rectangle".into()));
    }
    Ok((codes.len(), n_outputs))
}

/// Physical crossbar with one FeFET stack per ladder branch.
///
/// Program lines run per row and bit and are shared by every cell of the
/// row. Select lines run per physical column: each output has a positive
/// and a negative column.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossbarArray {
    pub n_inputs: usize,
    pub n_outputs: usize,
    pub n_bits: u32,
    /// kΩ
    pub r0: f64,
    pub cap: FeCapParams,
    pub fet: FetParams,
    pub protocol: Protocol,
    devices: Vec<FeFetStack>,
    resistors: Vec<ResistorParams>,
}

impl CrossbarArray {
    /// Fresh array whose devices have been through the protocol's
    /// conditioning cycles.
    pub fn new(
        n_inputs: usize,
        n_outputs: usize,
        n_bits: u32,
        r0: f64,
        cap: FeCapParams,
        fet: FetParams,
        protocol: Protocol,
    ) -> Result<Self, XbarError> {
        if n_inputs == 0 || n_outputs == 0 {
            return Err(XbarError::Shape(format!("{n_inputs}x{n_outputs} array")));
        }
        if !(1..=MAX_BITS).contains(&n_bits) {
            return Err(XbarError::BitCount(n_bits));
        }
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(XbarError::InvalidParam { name: "r0", value: r0 });
        }
        protocol.validate(&cap)?;
        let mut stack = FeFetStack::new(cap, fet)?;
        for _ in 0..protocol.conditioning_cycles {
            stack.apply_pulse(&protocol.erase(), &protocol, None)?;
            stack.apply_pulse(&protocol.program(true), &protocol, None)?;
        }
        let n = n_inputs * n_outputs * 2 * n_bits as usize;
        let nominal = ladder(r0, n_bits);
        let resistors = (0..n).map(|k| nominal[k % n_bits as usize]).collect();
        Ok(Self { n_inputs, n_outputs, n_bits, r0, cap, fet, protocol, devices: vec![stack; n], resistors })
    }

    fn index(&self, input: usize, output: usize, sign: Sign, bit: usize) -> usize {
        ((input * self.n_outputs + output) * 2 + sign.offset()) * self.n_bits as usize + bit
    }

    pub fn device(&self, input: usize, output: usize, sign: Sign, bit: usize) -> &FeFetStack {
        &self.devices[self.index(input, output, sign, bit)]
    }

    pub fn resistor(&self, input: usize, output: usize, sign: Sign, bit: usize) -> &ResistorParams {
        &self.resistors[self.index(input, output, sign, bit)]
    }

    /// Replaces every resistor by a Poisson dopant-count sample.
    pub fn sample_resistors<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for r in &mut self.resistors {
            *r = sample_resistor(r, rng);
        }
    }

    /// Erases every cell at once through the in/out lines.
    pub fn flash_erase(&mut self) -> Result<(), XbarError> {
        let (protocol, pulse) = (&self.protocol, self.protocol.erase());
        self.devices.par_iter_mut().try_for_each(|d| d.apply_pulse(&pulse, protocol, None))?;
        Ok(())
    }

    /// Programs physical column `(output, sign)`: `bits[input][bit]` says
    /// which row/bit program lines are pulsed while the column's select
    /// line is on. Every other cell on a pulsed line sees the pulse with its
    /// select device off.
    pub fn program_column(&mut self, output: usize, sign: Sign, bits: &[Vec<bool>]) -> Result<(), XbarError> {
        if output >= self.n_outputs {
            return Err(XbarError::Shape(format!("column {output} of {}", self.n_outputs)));
        }
        if bits.len() != self.n_inputs {
            return Err(XbarError::Shape(format!("{} rows of bits for {} inputs", bits.len(), self.n_inputs)));
        }
        if let Some(row) = bits.iter().find(|r| r.len() != self.n_bits as usize) {
            return Err(XbarError::BitLength { expected: self.n_bits as usize, got: row.len() });
        }
        let (selected, unselected) = (self.protocol.program(true), self.protocol.program(false));
        let (n_outputs, n_bits) = (self.n_outputs, self.n_bits as usize);
        let protocol = &self.protocol;
        self.devices.par_iter_mut().enumerate().try_for_each(|(k, d)| {
            let bit = k % n_bits;
            let column = k / n_bits % 2;
            let j = k / (2 * n_bits) % n_outputs;
            let i = k / (2 * n_bits * n_outputs);
            if !bits[i][bit] {
                return Ok(());
            }
            let on = j == output && column == sign.offset();
            d.apply_pulse(if on { &selected } else { &unselected }, protocol, None)
        })?;
        Ok(())
    }

    /// Flash erase followed by column-by-column programming of
    /// `codes[input][output]`.
    pub fn program(&mut self, codes: &[Vec<WeightCode>]) -> Result<(), XbarError> {
        let (n_inputs, n_outputs) = shape(codes)?;
        if (n_inputs, n_outputs) != (self.n_inputs, self.n_outputs) {
            return Err(XbarError::Shape(format!(
                "{n_inputs}x{n_outputs} codes for a {}x{} array",
                self.n_inputs, self.n_outputs
            )));
        }
        if let Some(c) = codes.iter().flatten().find(|c| c.n_bits() != self.n_bits) {
            return Err(XbarError::BitLength { expected: self.n_bits as usize, got: c.n_bits() as usize });
        }
        self.flash_erase()?;
        for j in 0..self.n_outputs {
            let split: Vec<_> = codes.iter().map(|row| encode_differential(row[j])).collect();
            for sign in [Sign::Pos, Sign::Neg] {
                let bits: Vec<Vec<bool>> =
                    split.iter().map(|(p, n)| if sign == Sign::Pos { p.clone() } else { n.clone() }).collect();
                if bits.iter().flatten().any(|&b| b) {
                    self.program_column(j, sign, &bits)?;
                }
            }
        }
        Ok(())
    }

    fn cell(&self, input: usize, output: usize, sign: Sign) -> Result<WeightCell, XbarError> {
        let n = self.n_bits as usize;
        let base = self.index(input, output, sign, 0);
        let switches = self.devices[base..base + n]
            .iter()
            .map(|d| {
                let v_rest = d.solution.v_g;
                Switch::FeFet { fet: self.fet, v_rest, coupling: drain_coupling(&self.fet, &self.cap, v_rest) }
            })
            .collect();
        WeightCell::new(self.r0, self.resistors[base..base + n].to_vec(), switches)
    }

    /// Inference-mode view with the devices at their rest points.
    pub fn cells(&self) -> Result<CellArray, XbarError> {
        let mut pairs = Vec::with_capacity(self.n_inputs * self.n_outputs);
        for i in 0..self.n_inputs {
            for j in 0..self.n_outputs {
                pairs.push((self.cell(i, j, Sign::Pos)?, self.cell(i, j, Sign::Neg)?));
            }
        }
        CellArray::new(self.n_inputs, self.n_outputs, pairs)
    }

    /// Inference-mode view with every FeFET replaced by an ideal switch in
    /// its classified ON/OFF state.
    pub fn ideal_cells(&self) -> Result<CellArray, XbarError> {
        let mut view = self.cells()?;
        for (p, n) in &mut view.pairs {
            for cell in [p, n] {
                let on_bits = cell.on_bits()?;
                for (branch, on) in cell.branches.iter_mut().zip(on_bits) {
                    branch.switch = Switch::Ideal { on };
                }
            }
        }
        Ok(view)
    }

    /// Codes recovered from the ON/OFF state of every branch.
    pub fn read_back(&self) -> Result<Vec<Vec<WeightCode>>, XbarError> {
        let view = self.cells()?;
        (0..self.n_inputs)
            .map(|i| {
                (0..self.n_outputs)
                    .map(|j| {
                        let (p, n) = view.pair(i, j);
                        decode_differential(&p.on_bits()?, &n.on_bits()?)
                    })
                    .collect()
            })
            .collect()
    }

    pub fn infer(&self, v_in: &[f64]) -> Result<Vec<f64>, XbarError> {
        self.cells()?.infer(v_in)
    }
}

pub fn program_array(array: &mut CrossbarArray, codes: &[Vec<WeightCode>]) -> Result<(), XbarError> {
    array.program(codes)
}

pub fn infer(array: &CrossbarArray, v_in: &[f64]) -> Result<Vec<f64>, XbarError> {
    array.infer(v_in)
}
