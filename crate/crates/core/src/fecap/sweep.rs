use super::{charge_from_polarization, FeCapError, FeCapParams, FeCapState};

/// One sample of a capacitor trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub time: f64,
    pub v_app: f64,
    pub v_int: f64,
    /// µC/cm²
    pub p: f64,
    /// fC
    pub q: f64,
}

/// Drives a fresh capacitor directly with a sampled voltage waveform
/// `(time, v_app)`, treating the voltage as linear between samples.
pub fn quasistatic_sweep(params: &FeCapParams, waveform: &[(f64, f64)]) -> Result<Vec<TracePoint>, FeCapError> {
    params.validate()?;
    let mut state = FeCapState::initial(params);
    sweep_from(params, &mut state, waveform)
}

/// Same as [`quasistatic_sweep`] but continues from an existing state.
pub fn sweep_from(
    params: &FeCapParams,
    state: &mut FeCapState,
    waveform: &[(f64, f64)],
) -> Result<Vec<TracePoint>, FeCapError> {
    let mut out = Vec::with_capacity(waveform.len());
    let Some(&(t0, v0)) = waveform.first() else {
        return Ok(out);
    };
    let sample = |state: &FeCapState, time: f64, v_app: f64| {
        let p = state.polarization(params);
        TracePoint { time, v_app, v_int: state.v_int, p, q: charge_from_polarization(params, p, v_app) }
    };
    out.push(sample(state, t0, v0));
    for pair in waveform.windows(2) {
        let ((ta, va), (tb, vb)) = (pair[0], pair[1]);
        if !(tb > ta) {
            return Err(FeCapError::NonMonotoneTime);
        }
        state.step_ramp(params, va, vb, tb - ta)?;
        out.push(sample(state, tb, vb));
    }
    Ok(out)
}

/// Triangular waveform starting at 0 V: up to `+amplitude`, down to
/// `-amplitude`, back to 0, repeated `cycles` times.
///
/// Each quarter period has `samples_per_quarter` steps.
pub fn triangle_waveform(amplitude: f64, frequency: f64, cycles: usize, samples_per_quarter: usize) -> Vec<(f64, f64)> {
    let quarter = 0.25 / frequency;
    let n = samples_per_quarter.max(1);
    let dt = quarter / n as f64;
    let total = 4 * n * cycles;
    (0..=total)
        .map(|k| {
            let phase = (k % (4 * n)) as f64 / n as f64;
            let v = if phase <= 1.0 {
                phase
            } else if phase <= 3.0 {
                2.0 - phase
            } else {
                phase - 4.0
            };
            (k as f64 * dt, amplitude * v)
        })
        .collect()
}
