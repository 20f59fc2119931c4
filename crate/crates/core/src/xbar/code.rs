use super::XbarError;

/// Widest supported cell.
pub const MAX_BITS: u32 = 16;

/// Signed integer weight for an `n_bits` differential pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WeightCode {
    value: i32,
    n_bits: u32,
}

impl WeightCode {
    pub fn new(value: i32, n_bits: u32) -> Result<Self, XbarError> {
        if !(1..=MAX_BITS).contains(&n_bits) {
            return Err(XbarError::BitCount(n_bits));
        }
        if value.unsigned_abs() > Self::max_magnitude(n_bits) {
            return Err(XbarError::CodeOutOfRange { value: value.into(), n_bits });
        }
        Ok(Self { value, n_bits })
    }

    /// `2^n - 1`.
    pub fn max_magnitude(n_bits: u32) -> u32 {
        (1u32 << n_bits) - 1
    }

    pub fn value(self) -> i32 {
        self.value
    }

    pub fn n_bits(self) -> u32 {
        self.n_bits
    }
}

fn magnitude_bits(m: u32, n_bits: u32) -> Vec<bool> {
    (0..n_bits).map(|i| m >> i & 1 == 1).collect()
}

fn magnitude(bits: &[bool]) -> u32 {
    bits.iter().enumerate().map(|(i, &b)| u32::from(b) << i).sum()
}

/// Sign-magnitude split into (positive cell, negative cell) bits, LSB first.
pub fn encode_differential(code: WeightCode) -> (Vec<bool>, Vec<bool>) {
    let m = code.value.unsigned_abs();
    let zero = vec![false; code.n_bits as usize];
    if code.value >= 0 {
        (magnitude_bits(m, code.n_bits), zero)
    } else {
        (zero, magnitude_bits(m, code.n_bits))
    }
}

/// Inverse of [`encode_differential`]; a pair with both cells set decodes to
/// the difference of their magnitudes.
pub fn decode_differential(pos: &[bool], neg: &[bool]) -> Result<WeightCode, XbarError> {
    if pos.len() != neg.len() {
        return Err(XbarError::BitLength { expected: pos.len(), got: neg.len() });
    }
    let value = magnitude(pos) as i64 - magnitude(neg) as i64;
    WeightCode::new(value as i32, pos.len() as u32)
}

/// Ideal ladder conductance `g0 · Σ b_i 2^i` in the units of `g0`.
pub fn ideal_conductance(bits: &[bool], g0: f64) -> f64 {
    g0 * bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| (1u64 << i) as f64).sum::<f64>()
}
