use fexbar_core::fecap::{quasistatic_sweep, raw_response, sweep_from, triangle_waveform, TracePoint};
use fexbar_core::{Branch, FeCapParams, FeCapState};
use proptest::prelude::*;

/// Closed-form unit-step response of `v'' + 2γω v' + ω² v = ω²` from rest.
fn step_response(w: f64, g: f64, t: f64) -> f64 {
    if (g - 1.0).abs() < 1e-12 {
        1.0 - (-w * t).exp() * (1.0 + w * t)
    } else if g < 1.0 {
        let wd = w * (1.0 - g * g).sqrt();
        1.0 - (-g * w * t).exp() * ((wd * t).cos() + g * w / wd * (wd * t).sin())
    } else {
        let s = w * (g * g - 1.0).sqrt();
        let (r1, r2) = (-g * w + s, -g * w - s);
        1.0 - (r2 * (r1 * t).exp() - r1 * (r2 * t).exp()) / (r2 - r1)
    }
}

#[test]
fn step_response_matches_closed_form() {
    for gamma in [0.5, 1.0, 2.0] {
        let p = FeCapParams { gamma, ..FeCapParams::hzo_default() };
        let dt = 0.01 / (gamma * p.omega0);
        let mut s = FeCapState::initial(&p);
        let mut worst: f64 = 0.0;
        for k in 1..=3000 {
            s.step_dynamics(&p, 1.0, dt).unwrap();
            let exact = step_response(p.omega0, gamma, k as f64 * dt);
            worst = worst.max((s.v_int - exact).abs() / exact.abs().max(1e-3));
        }
        assert!(worst < 1e-6, "gamma {gamma}: {worst:e}");
    }
}

fn params_fast() -> FeCapParams {
    FeCapParams::hzo_default()
}

/// Second of two saturating triangle cycles at loop frequency `f`, sampled
/// at `n` points per quarter period.
fn second_cycle(p: &FeCapParams, f: f64, n: usize) -> Vec<TracePoint> {
    let steps = (0.25 / f / p.max_step()).ceil() as usize;
    let fine = steps.div_ceil(n) * n;
    let trace = quasistatic_sweep(p, &triangle_waveform(3.0, f, 2, fine)).unwrap();
    let per_cycle = 4 * fine;
    trace[per_cycle..].iter().step_by(fine / n).copied().collect()
}

fn max_gap(a: &[TracePoint], b: &[TracePoint]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x.p - y.p).abs()).fold(0.0, f64::max)
}

#[test]
fn saturation_loop_is_point_symmetric() {
    let p = params_fast();
    let t = second_cycle(&p, p.f0() / 200.0, 50);
    // Samples k and k + half period see opposite applied voltages.
    let half = t.len() / 2;
    for k in 0..half {
        let (a, b) = (t[k], t[k + half]);
        assert!((a.v_app + b.v_app).abs() < 1e-12);
        assert!((a.p + b.p).abs() < 1e-6, "{a:?} vs {b:?}");
    }
}

#[test]
fn periodic_loops_retrace() {
    let p = params_fast();
    let f = p.f0() / 200.0;
    let n = (0.25 / f / p.max_step()).ceil() as usize;
    let trace = quasistatic_sweep(&p, &triangle_waveform(3.0, f, 3, n)).unwrap();
    let c = 4 * n;
    for k in 0..=c {
        assert!((trace[c + k].p - trace[2 * c + k].p).abs() < 1e-9);
    }
}

#[test]
fn halving_the_rate_below_f0_over_100_barely_moves_the_loop() {
    let p = params_fast();
    let gap = |f: f64| max_gap(&second_cycle(&p, f, 40), &second_cycle(&p, f / 2.0, 40));
    let near = gap(p.f0() / 100.0);
    let far = gap(p.f0() / 400.0);
    // The residual is the finite delay of the internal voltage, which
    // shrinks in proportion to the sweep rate.
    assert!(near < 0.1 * p.theta_plus, "{near}");
    assert!(far < near / 3.0, "{far} vs {near}");
}

#[test]
fn half_amplitude_minor_loop_is_inside_saturation_loop() {
    let p = params_fast();
    let f = p.f0() / 200.0;
    let n = (0.25 / f / p.max_step()).ceil() as usize;
    // Saturate positively, then cycle between +3 V and -1.5 V.
    let up: Vec<(f64, f64)> = (0..=n).map(|k| (k as f64 * 0.25 / f / n as f64, 3.0 * k as f64 / n as f64)).collect();
    let mut s = FeCapState::initial(&p);
    sweep_from(&p, &mut s, &up).unwrap();
    let mut minor = Vec::new();
    for cycle in 0..2 {
        let t0 = (0.25 + cycle as f64) / f;
        let w: Vec<(f64, f64)> = (0..=4 * n)
            .map(|k| {
                let x = k as f64 / (4 * n) as f64;
                let v = if x < 0.5 { 3.0 - 9.0 * x } else { -1.5 + 9.0 * (x - 0.5) };
                (t0 + x / f, v)
            })
            .collect();
        minor = sweep_from(&p, &mut s, &w).unwrap();
    }
    let lowest = minor.iter().map(|t| t.p).fold(f64::INFINITY, f64::min);
    assert!(lowest > -0.9 * p.theta_minus, "{lowest}");
    for t in &minor {
        assert!(t.p > raw_response(&p, Branch::Increasing, t.v_int) - 1e-9);
        assert!(t.p < raw_response(&p, Branch::Decreasing, t.v_int) + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn random_walks_stay_bounded_and_nested(levels in prop::collection::vec(-3.5f64..3.5, 1..8)) {
        let p = params_fast();
        let mut s = FeCapState::initial(&p);
        let dt = p.max_step();
        let mut v = 0.0;
        let mut t = 0.0;
        for target in levels {
            let n = 200;
            let w: Vec<(f64, f64)> = (0..=n).map(|k| (t + k as f64 * dt, v + (target - v) * k as f64 / n as f64)).collect();
            let trace = sweep_from(&p, &mut s, &w).unwrap();
            t += n as f64 * dt;
            v = target;
            for pt in trace {
                prop_assert!(pt.p.abs() <= p.theta_max() + 1e-12);
            }
            prop_assert!(s.is_nested());
        }
    }

    #[test]
    fn reversal_points_are_interpolation_nodes(levels in prop::collection::vec(-2.5f64..2.5, 2..6)) {
        let p = params_fast();
        let mut s = FeCapState::initial(&p);
        let dt = p.max_step();
        let (mut v, mut t) = (0.0, 0.0);
        for target in levels {
            let n = 400;
            let w: Vec<(f64, f64)> = (0..=n).map(|k| (t + k as f64 * dt, v + (target - v) * k as f64 / n as f64)).collect();
            sweep_from(&p, &mut s, &w).unwrap();
            t += n as f64 * dt;
            v = target;
            let (lo, hi) = s.active_pair();
            prop_assert!((s.polarization_at(&p, lo.v).unwrap() - lo.p).abs() < 1e-9);
            prop_assert!((s.polarization_at(&p, hi.v).unwrap() - hi.p).abs() < 1e-9);
        }
    }
}
