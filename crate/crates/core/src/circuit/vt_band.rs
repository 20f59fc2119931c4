use super::fet::FetParams;

/// Gate overdrive a programmed device must keep above Vt (V).
pub const PROGRAM_MARGIN: f64 = 0.1;
/// Distance an erased gate must stay below Vt (V).
pub const ERASE_MARGIN: f64 = 0.2;

/// Drain-to-gate coupling ratio of an erased device whose gate node also sees
/// `c_load` fF (e.g. the FeCap) to AC ground.
pub fn erased_coupling(fet: &FetParams, c_load: f64) -> f64 {
    let total = fet.cgd_par + fet.cgg_dep + c_load;
    if total > 0.0 {
        fet.cgd_par / total
    } else {
        0.0
    }
}

/// Allowed threshold-voltage interval `(vt_min, vt_max)`, or `None` when the
/// two margins conflict.
///
/// Erased gates rise with the input through the drain coupling, worst at
/// `v_in_max`. Programmed branches conduct, so their drain and hence their
/// gate stays essentially at its rest value.
pub fn vt_band(fet: &FetParams, v_prog: f64, v_erase: f64, v_in_max: f64) -> Option<(f64, f64)> {
    vt_band_loaded(fet, v_prog, v_erase, v_in_max, 0.0)
}

/// [`vt_band`] with an extra gate-node capacitance `c_load` in fF.
pub fn vt_band_loaded(fet: &FetParams, v_prog: f64, v_erase: f64, v_in_max: f64, c_load: f64) -> Option<(f64, f64)> {
    let shift = erased_coupling(fet, c_load) * v_in_max.max(0.0);
    let lo = v_erase + shift + ERASE_MARGIN;
    let hi = v_prog - PROGRAM_MARGIN;
    (lo <= hi).then_some((lo, hi))
}
