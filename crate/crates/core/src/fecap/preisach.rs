use serde::{Deserialize, Serialize};

use super::{raw_response, Branch, FeCapError, FeCapParams};

/// Voltage below which two reversals are treated as the same point.
const COINCIDENT_V: f64 = 1e-12;

/// Internal voltage and polarization at a reversal of the internal voltage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurningPoint {
    pub v: f64,
    pub p: f64,
}

/// Dynamic and hysteretic state of one ferroelectric capacitor.
///
/// `history[0]` and `history[1]` are the lower and upper saturation points.
/// The remaining entries are reversal points in chronological order; they
/// alternate between minima and maxima and each lies strictly inside the
/// interval of the pair that was active when it was recorded. The last entry
/// is where the current branch started: a minimum while increasing, a maximum
/// while decreasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeCapState {
    pub v_int: f64,
    pub v_int_rate: f64,
    pub branch: Branch,
    pub history: Vec<TurningPoint>,
}

impl FeCapState {
    /// Uncharged capacitor at rest: `v_int = 0`, decreasing branch, with a
    /// virgin reversal point at `(0, 0)` so that the polarization starts at 0.
    pub fn initial(params: &FeCapParams) -> Self {
        let (lo, hi) = params.saturation_pair();
        Self {
            v_int: 0.0,
            v_int_rate: 0.0,
            branch: Branch::Decreasing,
            history: vec![lo, hi, TurningPoint { v: 0.0, p: 0.0 }],
        }
    }

    /// State on the saturation loop at `v_int` (clamped to the saturation
    /// voltage) following `branch`.
    pub fn saturated(params: &FeCapParams, branch: Branch, v_int: f64) -> Self {
        let (lo, hi) = params.saturation_pair();
        let v = v_int.clamp(lo.v, hi.v);
        Self { v_int: v, v_int_rate: 0.0, branch, history: vec![lo, hi] }
    }

    /// Number of stored reversal points inside the saturation pair.
    pub fn depth(&self) -> usize {
        self.history.len() - 2
    }

    /// Active pair `(lower, upper)` for the current branch.
    pub fn active_pair(&self) -> (TurningPoint, TurningPoint) {
        active_pair(&self.history, self.branch)
    }

    /// Polarization at the current internal voltage in µC/cm².
    pub fn polarization(&self, params: &FeCapParams) -> f64 {
        let (lo, hi) = self.active_pair();
        interpolate(params, self.branch, lo, hi, self.v_int)
    }

    /// Polarization on the active pair at an arbitrary internal voltage.
    ///
    /// Fails if `v` lies outside an inner active pair; beyond the saturation
    /// pair the saturated value is returned.
    pub fn polarization_at(&self, params: &FeCapParams, v: f64) -> Result<f64, FeCapError> {
        let (lo, hi) = self.active_pair();
        if self.depth() > 0 && (v < lo.v - COINCIDENT_V || v > hi.v + COINCIDENT_V) {
            return Err(FeCapError::OutsideActivePair { v, lo: lo.v, hi: hi.v });
        }
        if hi.v - lo.v <= 0.0 && hi.p != lo.p {
            return Err(FeCapError::Degenerate { v: hi.v, p_lo: lo.p, p_hi: hi.p });
        }
        Ok(interpolate(params, self.branch, lo, hi, v))
    }

    /// Polarization reached if the internal voltage moved monotonically from
    /// its present value to `v` along the current branch, wiping any pairs
    /// overtaken on the way. `v` must lie in the direction of the branch.
    pub fn polarization_along_branch(&self, params: &FeCapParams, v: f64) -> f64 {
        let mut history = self.history.clone();
        wipe(&mut history, self.branch, v);
        let (lo, hi) = active_pair(&history, self.branch);
        interpolate(params, self.branch, lo, hi, v)
    }

    /// Records a reversal of the internal voltage at `tp` and flips the branch.
    ///
    /// Pairs overtaken by the excursion up to `tp.v` are wiped first. A
    /// reversal at (or beyond) saturation only flips the branch; a reversal
    /// coincident with the previous one cancels it.
    pub fn record_turning_point(&mut self, tp: TurningPoint) {
        wipe(&mut self.history, self.branch, tp.v);
        let n = self.history.len();
        if n == 2 {
            let (lo, hi) = (self.history[0], self.history[1]);
            if tp.v > lo.v && tp.v < hi.v {
                self.history.push(tp);
            }
        } else {
            let last = self.history[n - 1];
            let zero_length = match self.branch {
                Branch::Increasing => tp.v <= last.v + COINCIDENT_V,
                Branch::Decreasing => tp.v >= last.v - COINCIDENT_V,
            };
            if zero_length {
                // A single stored point is kept and reinterpreted so the
                // virgin curve stays continuous.
                if n >= 4 {
                    self.history.pop();
                }
            } else {
                self.history.push(tp);
            }
        }
        self.branch = self.branch.flipped();
    }

    /// Removes pairs overtaken by the current internal voltage.
    pub(crate) fn wipe_to_current(&mut self) {
        wipe(&mut self.history, self.branch, self.v_int);
    }

    /// Checks the alternation and strict nesting of the stored reversals.
    pub fn is_nested(&self) -> bool {
        let n = self.history.len();
        if n < 2 || self.history[0].v >= self.history[1].v {
            return false;
        }
        let inner = &self.history[2..];
        if inner.is_empty() {
            return true;
        }
        // Type of the last point follows from the branch; earlier ones alternate.
        let last_is_min = self.branch == Branch::Increasing;
        let (mut lo, mut hi) = (self.history[0].v, self.history[1].v);
        for (k, tp) in inner.iter().enumerate() {
            let from_end = inner.len() - 1 - k;
            let is_min = if from_end % 2 == 0 { last_is_min } else { !last_is_min };
            if !(tp.v > lo && tp.v < hi) {
                return false;
            }
            if is_min {
                lo = tp.v;
            } else {
                hi = tp.v;
            }
        }
        true
    }
}

fn active_pair(history: &[TurningPoint], branch: Branch) -> (TurningPoint, TurningPoint) {
    let n = history.len();
    if n == 2 {
        return (history[0], history[1]);
    }
    let last = history[n - 1];
    let partner = if n >= 4 {
        history[n - 2]
    } else {
        match branch {
            Branch::Increasing => history[1],
            Branch::Decreasing => history[0],
        }
    };
    if last.v <= partner.v {
        (last, partner)
    } else {
        (partner, last)
    }
}

/// Pops every pair whose far end has been reached by `v` moving along `branch`.
fn wipe(history: &mut Vec<TurningPoint>, branch: Branch, v: f64) {
    loop {
        let n = history.len();
        if n <= 2 {
            return;
        }
        let far = if n >= 4 {
            history[n - 2]
        } else {
            match branch {
                Branch::Increasing => history[1],
                Branch::Decreasing => history[0],
            }
        };
        let passed = match branch {
            Branch::Increasing => v >= far.v,
            Branch::Decreasing => v <= far.v,
        };
        if !passed {
            return;
        }
        let pops = if n >= 4 { 2 } else { 1 };
        history.truncate(n - pops);
    }
}

/// Scaled and shifted branch response through the pair `(lo, hi)`.
fn interpolate(params: &FeCapParams, branch: Branch, lo: TurningPoint, hi: TurningPoint, v: f64) -> f64 {
    if v >= hi.v {
        return hi.p;
    }
    if v <= lo.v {
        return lo.p;
    }
    let f_hi = raw_response(params, branch, hi.v);
    let f_lo = raw_response(params, branch, lo.v);
    let denom = f_hi - f_lo;
    if denom.abs() < 1e-12 * params.theta_plus {
        let t = (v - lo.v) / (hi.v - lo.v);
        return lo.p + t * (hi.p - lo.p);
    }
    let f = raw_response(params, branch, v);
    (f - f_hi) * ((hi.p - lo.p) / denom) + hi.p
}
