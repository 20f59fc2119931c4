use serde::{Deserialize, Serialize};

use super::SolverError;

/// Thermal voltage at 300 K.
pub const THERMAL_VOLTAGE: f64 = 0.025852;

/// Half-width of the depletion/inversion capacitance transition (V).
pub const CGG_TRANSITION_HALF_WIDTH: f64 = 0.025;

/// Compact FET used as the FeFET's underlying transistor.
///
/// `k` in A/V², `ss` in mV/dec, `i0` in A (subthreshold current at
/// `vgs = vt`), capacitances in fF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FetParams {
    pub vt: f64,
    pub k: f64,
    pub ss: f64,
    pub i0: f64,
    pub cgg_inv: f64,
    pub cgg_dep: f64,
    pub cgd_par: f64,
}

impl Default for FetParams {
    fn default() -> Self {
        Self::logic_default()
    }
}

impl FetParams {
    /// Shipped default device matched to [`crate::FeCapParams::hzo_default`].
    pub fn logic_default() -> Self {
        Self { vt: 0.35, k: 20e-3, ss: 80.0, i0: 2e-6, cgg_inv: 1.3, cgg_dep: 0.046, cgd_par: 0.01 }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let check = |name: &'static str, ok: bool, v: f64| {
            if ok {
                Ok(())
            } else {
                Err(SolverError::InvalidParam { name, value: v })
            }
        };
        check("vt", self.vt.is_finite() && (0.0..=1.0).contains(&self.vt), self.vt)?;
        check("k", self.k.is_finite() && self.k >= 0.0, self.k)?;
        check("ss", self.ss.is_finite() && self.ss >= 60.0, self.ss)?;
        check("i0", self.i0.is_finite() && self.i0 >= 0.0, self.i0)?;
        check("cgg_inv", self.cgg_inv.is_finite() && self.cgg_inv >= 0.0, self.cgg_inv)?;
        check("cgg_dep", self.cgg_dep.is_finite() && self.cgg_dep >= 0.0, self.cgg_dep)?;
        check("cgd_par", self.cgd_par.is_finite() && self.cgd_par >= 0.0, self.cgd_par)?;
        if self.cgg_dep > self.cgg_inv {
            return Err(SolverError::InvalidParam { name: "cgg_dep", value: self.cgg_dep });
        }
        Ok(())
    }

    /// Small-signal gate capacitance dQ/dVg in fF.
    pub fn gate_capacitance(&self, vg: f64) -> f64 {
        let h = CGG_TRANSITION_HALF_WIDTH;
        let (a, b) = (self.vt - h, self.vt + h);
        if vg <= a {
            self.cgg_dep
        } else if vg >= b {
            self.cgg_inv
        } else {
            self.cgg_dep + (self.cgg_inv - self.cgg_dep) * (vg - a) / (2.0 * h)
        }
    }
}

/// Drain current in A for source-referenced `vgs` and `vds`.
///
/// Square law above threshold plus an exponential subthreshold diffusion term
/// that is capped at its threshold value, which keeps the current continuous
/// across every region boundary. Negative `vds` swaps source and drain.
pub fn fet_ids(params: &FetParams, vgs: f64, vds: f64) -> f64 {
    if vds < 0.0 {
        return -fet_ids(params, vgs - vds, -vds);
    }
    let decade = params.ss * 1e-3;
    let weak = params.i0 * 10f64.powf((vgs.min(params.vt) - params.vt) / decade) * (-(-vds / THERMAL_VOLTAGE).exp_m1());
    let vov = vgs - params.vt;
    let strong = if vov <= 0.0 {
        0.0
    } else if vds < vov {
        params.k * (vov * vds - 0.5 * vds * vds)
    } else {
        0.5 * params.k * vov * vov
    };
    weak + strong
}

/// Partial derivatives `(dI/dvgs, dI/dvds)` of [`fet_ids`].
pub fn fet_ids_derivatives(params: &FetParams, vgs: f64, vds: f64) -> (f64, f64) {
    if vds < 0.0 {
        // I(vgs, vds) = -J(vgs - vds, -vds)
        let (dg, dd) = fet_ids_derivatives(params, vgs - vds, -vds);
        return (-dg, dg + dd);
    }
    let decade = params.ss * 1e-3;
    let expo = params.i0 * 10f64.powf((vgs.min(params.vt) - params.vt) / decade);
    let sat = -(-vds / THERMAL_VOLTAGE).exp_m1();
    let mut dg = if vgs < params.vt { expo * sat * std::f64::consts::LN_10 / decade } else { 0.0 };
    let mut dd = expo * (-vds / THERMAL_VOLTAGE).exp() / THERMAL_VOLTAGE;
    let vov = vgs - params.vt;
    if vov > 0.0 {
        if vds < vov {
            dg += params.k * vds;
            dd += params.k * (vov - vds);
        } else {
            dg += params.k * vov;
        }
    }
    (dg, dd)
}

/// Gate charge in fC with `Q(0) = 0`: slope `cgg_dep` below threshold,
/// `cgg_inv` above, joined by a linear capacitance ramp over a 50 mV window.
pub fn fet_gate_charge(params: &FetParams, vg: f64) -> f64 {
    antiderivative(params, vg) - antiderivative(params, 0.0)
}

/// Two-segment gate charge without the transition smoothing.
pub fn fet_gate_charge_sharp(params: &FetParams, vg: f64) -> f64 {
    let g = |v: f64| params.cgg_dep * v + (params.cgg_inv - params.cgg_dep) * (v - params.vt).max(0.0);
    g(vg) - g(0.0)
}

fn antiderivative(params: &FetParams, v: f64) -> f64 {
    let h = CGG_TRANSITION_HALF_WIDTH;
    let (a, b) = (params.vt - h, params.vt + h);
    let dc = params.cgg_inv - params.cgg_dep;
    if v <= a {
        params.cgg_dep * v
    } else if v >= b {
        params.cgg_dep * v + dc * (v - params.vt)
    } else {
        params.cgg_dep * v + dc * (v - a) * (v - a) / (4.0 * h)
    }
}
