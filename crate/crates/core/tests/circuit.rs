use fexbar_core::circuit::{
    area_sweep, loadline_rest_point, loadline_rest_point_sharp, log_areas, program_window, solve_stack, transient,
    vt_band, FeFetStack, FetParams, Protocol, TransientPoint,
};
use fexbar_core::fecap::raw_response;
use fexbar_core::{Branch, FeCapParams};

fn stack() -> FeFetStack {
    FeFetStack::new(FeCapParams::hzo_default(), FetParams::default()).unwrap()
}

#[test]
fn operating_points_of_default_device() {
    let w = program_window(&FeCapParams::hzo_default(), &FetParams::default(), &Protocol::default()).unwrap();
    assert!((w.v_prog - 0.5).abs() <= 0.1, "{w:?}");
    assert!((w.v_erase + 0.25).abs() <= 0.1, "{w:?}");
}

#[test]
fn cycling_reaches_periodic_steady_state() {
    let proto = Protocol::default();
    let mut s = stack();
    let mut ends = Vec::new();
    for _ in 0..4 {
        let mut cycle = Vec::new();
        for pulse in [proto.erase(), proto.program(true)] {
            s.apply_pulse(&pulse, &proto, None).unwrap();
            cycle.push((s.solution.v_cap, s.solution.v_g));
        }
        ends.push(cycle);
    }
    for k in 1..ends.len() - 1 {
        for (a, b) in ends[k].iter().zip(&ends[k + 1]) {
            assert!((a.0 - b.0).abs() < 1e-3 && (a.1 - b.1).abs() < 1e-3, "cycle {k}: {a:?} vs {b:?}");
        }
    }
}

#[test]
fn select_off_program_is_exact_no_op() {
    let proto = Protocol::default();
    let mut s = stack();
    for pulse in [proto.erase(), proto.program(true), proto.erase()] {
        s.apply_pulse(&pulse, &proto, None).unwrap();
    }
    let before = s.clone();
    s.apply_pulse(&proto.program(false), &proto, None).unwrap();
    assert_eq!(s.state, before.state);
    assert_eq!(s.solution, before.solution);
}

#[test]
fn erased_rest_has_slightly_positive_fecap_voltage() {
    let proto = Protocol::default();
    let mut s = stack();
    for pulse in [proto.erase(), proto.program(true), proto.erase()] {
        s.apply_pulse(&pulse, &proto, None).unwrap();
    }
    assert!(s.solution.v_cap > 0.0 && s.solution.v_cap < 0.5, "{:?}", s.solution);
}

#[test]
fn steady_state_loop_lies_inside_saturation_loop() {
    let cap = FeCapParams::hzo_default();
    let proto = Protocol::default();
    let mut s = stack();
    transient(&mut s, &[proto.erase(), proto.program(true)], &proto).unwrap();
    let steady: Vec<TransientPoint> = transient(&mut s, &[proto.erase(), proto.program(true)], &proto).unwrap();
    assert!(steady.iter().all(|t| t.p.abs() < cap.theta_plus));
    // The branches are evaluated at the internal voltage, which the trace
    // does not carry, so the cycle is stepped by hand.
    let mut s2 = s.clone();
    for pulse in [proto.erase(), proto.program(true)] {
        let dt = proto.dt;
        let n = (pulse.duration() / dt).round() as usize;
        for k in 1..=n {
            let (_, _, _, v_app) = proto.terminals(&pulse, k as f64 * dt);
            s2.step(v_app, dt).unwrap();
            let v = s2.state.v_int;
            let p = s2.polarization();
            assert!(p > raw_response(&cap, Branch::Increasing, v) && p < raw_response(&cap, Branch::Decreasing, v));
        }
    }
}

#[test]
fn programmed_gate_exceeds_erased_gate_across_calibrations() {
    let proto = Protocol::default();
    let base = FeCapParams::hzo_default();
    let matrix = [
        base,
        FeCapParams { vc_plus: 0.9, vc_minus: 0.9, ..base },
        FeCapParams { vsc_plus: 0.3, vsc_minus: 0.3, ..base },
        FeCapParams { theta_plus: 25.0, theta_minus: 25.0, ..base },
        FeCapParams { gamma: 0.7, ..base },
    ];
    for cap in matrix {
        let w = program_window(&cap, &FetParams::default(), &proto).unwrap();
        assert!(w.v_prog > w.v_erase, "{cap:?}: {w:?}");
    }
}

#[test]
fn rest_point_formulations_agree() {
    let cap = FeCapParams::hzo_default();
    let proto = Protocol::default();
    let mut s = stack();
    for pulse in [proto.erase(), proto.program(true), proto.erase(), proto.program(true)] {
        s.apply_pulse(&pulse, &proto, None).unwrap();
        let from_transient = s.solution.v_g;
        let settled = solve_stack(&cap, &s.state, &s.fet, 0.0).unwrap();
        let smooth = loadline_rest_point(&cap, &s.state, &s.fet).unwrap();
        let sharp = loadline_rest_point_sharp(&cap, &s.state, &s.fet).unwrap();
        assert!((settled.v_g - from_transient).abs() < 1e-9);
        assert!((smooth.v_g - from_transient).abs() < 1e-6, "{smooth:?} vs {from_transient}");
        assert!((sharp.v_g - smooth.v_g).abs() < 0.01, "{sharp:?} vs {smooth:?}");
    }
}

#[test]
fn area_sweep_has_interior_maximum() {
    let areas = log_areas(1250.0, 12500.0, 11);
    let pts = area_sweep(&FeCapParams::hzo_default(), &FetParams::default(), &areas, &Protocol::default()).unwrap();
    let (imax, best) = pts.iter().enumerate().max_by(|a, b| a.1.delta_v.total_cmp(&b.1.delta_v)).unwrap();
    assert!(imax > 0 && imax < pts.len() - 1, "{pts:?}");
    assert!(best.delta_v >= 0.4);
    let slopes: Vec<f64> = pts.windows(2).map(|w| w[1].delta_v - w[0].delta_v).collect();
    assert!(slopes.windows(2).any(|w| w[0].signum() != w[1].signum()));
}

#[test]
fn area_sweep_is_schedule_independent() {
    let areas = log_areas(1250.0, 12500.0, 6);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
            area_sweep(&FeCapParams::hzo_default(), &FetParams::default(), &areas, &Protocol::default()).unwrap()
        })
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn vt_band_of_default_operating_point() {
    let w = program_window(&FeCapParams::hzo_default(), &FetParams::default(), &Protocol::default()).unwrap();
    let (lo, hi) = vt_band(&FetParams::default(), w.v_prog, w.v_erase, 0.5).unwrap();
    assert!(lo <= 0.2 && hi >= 0.3, "({lo}, {hi})");
}
