//! Acceptance suite. Prints one line per criterion and exits nonzero if a
//! criterion fails outside the list of known deviations.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use fexbar_cli::config::{Config, ExperimentKind};
use fexbar_cli::experiments::{mnist_dir, weight_model};
use fexbar_core::circuit::{
    area_sweep, log_areas, program_window, sample_conductance_factor, FeFetStack, ProgramWindow,
};
use fexbar_core::fecap::{quasistatic_sweep, sweep_from, triangle_waveform, TracePoint};
use fexbar_core::xbar::{ideal_conductance, DEFAULT_R0, READ_VOLTAGE};
use fexbar_core::{CellArray, CrossbarArray, FeCapParams, FeCapState, FetParams, Protocol, WeightCell, WeightCode};
use fexbar_nn::quant::log_window_grid;
use fexbar_nn::select::{lambda_grid, select_hw_aware, select_naive, train_grid};
use fexbar_nn::{
    evaluate, load_mnist, noise_mc, optimize_window, train, Evaluator, HiddenActivation, HwWeightModel, Mlp,
    NoiseScope, NoiseSpec, QuantizedMlp, SplitSizes, Splits,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Default)]
struct Report {
    failed: Vec<u32>,
}

impl Report {
    fn line(&mut self, id: u32, name: &str, pass: bool, known: bool, detail: String) {
        let status = match (pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known deviation)",
            (false, false) => "FAIL",
        };
        println!("[{status}] {id:>2} {name}: {detail}");
        if !pass && !known {
            self.failed.push(id);
        }
    }

    fn skip(&self, id: u32, name: &str, why: &str) {
        println!("[SKIP] {id:>2} {name}: {why}");
    }
}

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

fn ode_oracle(r: &mut Report) {
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    for gamma in [0.5, 1.0, 2.0] {
        let p = FeCapParams { gamma, ..FeCapParams::hzo_default() };
        let dt = 0.01 / (gamma * p.omega0);
        let mut s = FeCapState::initial(&p);
        for k in 1..=5000 {
            s.step_dynamics(&p, 1.0, dt).expect("step within bound");
            let exact = step_response(p.omega0, gamma, k as f64 * dt);
            worst = worst.max((s.v_int - exact).abs() / exact.abs().max(1e-3));
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    r.line(
        1,
        "ODE step oracle",
        worst <= 1e-6 && secs < 1.0,
        false,
        format!("max rel err {worst:.2e} (<= 1e-6), {secs:.3} s (< 1 s)"),
    );
}

/// Second of two saturating triangle cycles at loop frequency `f`, sampled
/// at `n` points per quarter period.
fn second_cycle(p: &FeCapParams, f: f64, n: usize) -> Vec<TracePoint> {
    let steps = (0.25 / f / p.max_step()).ceil() as usize;
    let fine = steps.div_ceil(n) * n;
    let trace = quasistatic_sweep(p, &triangle_waveform(3.0, f, 2, fine)).expect("sweep");
    trace[4 * fine..].iter().step_by(fine / n).copied().collect()
}

fn ramp(t0: f64, dt: f64, from: f64, to: f64, n: usize) -> Vec<(f64, f64)> {
    (0..=n).map(|k| (t0 + k as f64 * dt, from + (to - from) * k as f64 / n as f64)).collect()
}

fn hysteresis(r: &mut Report) {
    let t0 = Instant::now();
    let p = FeCapParams::hzo_default();
    let theta = p.theta_plus;

    let t = second_cycle(&p, p.f0() / 200.0, 50);
    let half = t.len() / 2;
    let asym = (0..half).map(|k| (t[k].p + t[k + half].p).abs()).fold(0.0, f64::max);

    // Saturate, then cycle between two interior levels with identical ramps.
    // Once two cycles have replaced the reversal points left by the
    // saturating approach, every visit to a level lands on the same
    // polarization as the visit one cycle earlier.
    let dt = p.max_step();
    let n = 400;
    let mut s = FeCapState::initial(&p);
    let mut time = 0.0;
    let mut v = 0.0;
    let mut closure: f64 = 0.0;
    let mut node: f64 = 0.0;
    let mut visits = Vec::new();
    for target in [3.0, -1.0, 1.5, -1.0, 1.5, -1.0, 1.5, -1.0, 1.5, -1.0, 1.5] {
        sweep_from(&p, &mut s, &ramp(time, dt, v, target, n)).expect("sweep");
        time += n as f64 * dt;
        v = target;
        visits.push(s.polarization(&p));
        let (lo, hi) = s.active_pair();
        for tp in [lo, hi] {
            node = node.max((s.polarization_at(&p, tp.v).expect("node inside loop") - tp.p).abs());
        }
    }
    for k in 6..visits.len() {
        closure = closure.max((visits[k] - visits[k - 2]).abs());
    }
    let closure_ok = closure <= 1e-9 * theta && node <= 1e-9 * theta;

    let gap = {
        let a = second_cycle(&p, p.f0() / 100.0, 40);
        let b = second_cycle(&p, p.f0() / 1000.0, 40);
        a.iter().zip(&b).map(|(x, y)| (x.p - y.p).abs()).fold(0.0, f64::max)
    };
    let secs = t0.elapsed().as_secs_f64();
    let detail = format!("symmetry {asym:.1e}, closure {closure:.1e}, nodes {node:.1e} uC/cm2, {secs:.2} s (< 10 s)");
    r.line(
        2,
        "hysteresis symmetry and minor-loop closure",
        asym <= 1e-6 * theta && closure_ok && secs < 10.0,
        false,
        detail,
    );
    r.line(
        2,
        "hysteresis rate independence",
        gap <= 1e-3 * theta,
        true,
        format!("loop gap f0/100 vs f0/1000 = {:.3}% of theta (<= 0.1%)", 100.0 * gap / theta),
    );
}

fn stack() -> FeFetStack {
    FeFetStack::new(FeCapParams::hzo_default(), FetParams::default()).expect("default stack")
}

fn default_window() -> ProgramWindow {
    program_window(&FeCapParams::hzo_default(), &FetParams::default(), &Protocol::default()).expect("program window")
}

fn program_erase(r: &mut Report) {
    let t0 = Instant::now();
    let w = default_window();
    let proto = Protocol::default();
    let mut s = stack();
    let mut ends = Vec::new();
    for _ in 0..4 {
        let mut cycle = Vec::new();
        for pulse in [proto.erase(), proto.program(true)] {
            s.apply_pulse(&pulse, &proto, None).expect("pulse");
            cycle.push(s.solution.v_g);
        }
        ends.push(cycle);
    }
    let drift =
        ends[1..].windows(2).flat_map(|c| c[0].iter().zip(&c[1]).map(|(a, b)| (a - b).abs())).fold(0.0, f64::max);
    let before = s.clone();
    s.apply_pulse(&proto.program(false), &proto, None).expect("pulse");
    let noop = s.state == before.state && s.solution == before.solution;
    let secs = t0.elapsed().as_secs_f64();
    let pass = (w.v_prog - 0.5).abs() <= 0.1 && (w.v_erase + 0.25).abs() <= 0.1 && drift <= 1e-3 && noop && secs < 10.0;
    r.line(
        3,
        "program/erase operating points",
        pass,
        false,
        format!(
            "v_prog {:.4} V (0.5 +- 0.1), v_erase {:.4} V (-0.25 +- 0.1), cycle drift {:.1e} V (<= 1 mV), select-off exact {noop}, {secs:.2} s",
            w.v_prog, w.v_erase, drift
        ),
    );
}

fn area(r: &mut Report) {
    let t0 = Instant::now();
    let areas = log_areas(1250.0, 12500.0, 11);
    let pts = area_sweep(&FeCapParams::hzo_default(), &FetParams::default(), &areas, &Protocol::default())
        .expect("area sweep");
    let (imax, best) = pts.iter().enumerate().max_by(|a, b| a.1.delta_v.total_cmp(&b.1.delta_v)).expect("points");
    let interior = imax > 0 && imax < pts.len() - 1;
    let secs = t0.elapsed().as_secs_f64();
    r.line(
        4,
        "area sweep",
        interior && best.delta_v >= 0.4 && secs < 30.0,
        false,
        format!(
            "peak {:.3} V at {:.0} nm2 (interior {interior}, >= 0.4 V), {secs:.2} s (< 30 s)",
            best.delta_v, best.area
        ),
    );
}

fn bits(m: u32, n: u32) -> Vec<bool> {
    (0..n).map(|i| m >> i & 1 == 1).collect()
}

fn cell(r: &mut Report) {
    let t0 = Instant::now();
    let w = default_window();
    let cells: Vec<WeightCell> = (0..4)
        .map(|m| {
            WeightCell::programmed(&bits(m, 2), DEFAULT_R0, &FetParams::default(), &FeCapParams::hzo_default(), w)
                .expect("cell")
        })
        .collect();
    let g0 = cells[0].g0;
    let mut err: f64 = 0.0;
    for (m, c) in cells.iter().enumerate() {
        let ideal = ideal_conductance(&bits(m as u32, 2), g0);
        let g = c.effective_weight(0.1).expect("read");
        err = err.max((g - ideal).abs() / ideal.max(g0));
    }
    let monotone = [0.05, 0.1, 0.2, 0.3, 0.5].iter().all(|&v| {
        let g: Vec<f64> = cells.iter().map(|c| c.effective_weight(v).expect("read")).collect();
        g.windows(2).all(|p| p[1] > p[0])
    });
    let on_off =
        cells[3].effective_weight(READ_VOLTAGE).expect("read") / cells[0].effective_weight(READ_VOLTAGE).expect("read");
    let secs = t0.elapsed().as_secs_f64();
    r.line(
        5,
        "2-bit weight cell",
        err <= 0.02 && monotone && on_off >= 1e3 && secs < 10.0,
        false,
        format!(
            "max err {:.2}% at 0.1 V (<= 2%), monotone {monotone}, ON/OFF {on_off:.2e} at 0.3 V (>= 1e3, target 1e4 met: {}), {secs:.2} s",
            100.0 * err,
            on_off >= 1e4
        ),
    );
}

fn codes(raw: &[&[i32]]) -> Vec<Vec<WeightCode>> {
    raw.iter().map(|row| row.iter().map(|&v| WeightCode::new(v, 2).expect("code")).collect()).collect()
}

fn crossbar(r: &mut Report) {
    let g0 = 1.0 / (DEFAULT_R0 * 1e3);
    let dense = |c: &[Vec<WeightCode>], v: &[f64], j: usize| -> f64 {
        (0..v.len()).map(|i| g0 * f64::from(c[i][j].value()) * v[i]).sum()
    };
    let mut exact_err: f64 = 0.0;
    let cases: [(Vec<Vec<WeightCode>>, Vec<f64>); 2] = [
        (codes(&[&[2, -3], &[-1, 1]]), vec![0.2, 0.3]),
        (codes(&[&[3, -1, 0], &[-3, 2, 1], &[0, 0, -2], &[1, 3, -3]]), vec![0.3, 0.1, 0.25, 0.05]),
    ];
    for (c, v) in &cases {
        let out = CellArray::ideal(c, DEFAULT_R0).expect("cells").infer(v).expect("infer");
        for (j, o) in out.iter().enumerate() {
            let d = dense(c, v, j);
            exact_err = exact_err.max((o - d).abs() / d.abs().max(f64::MIN_POSITIVE));
        }
    }

    let c = &cases[1].0;
    let mut x =
        CrossbarArray::new(4, 3, 2, DEFAULT_R0, FeCapParams::hzo_default(), FetParams::default(), Protocol::default())
            .expect("array");
    x.program(c).expect("program");
    let v = [READ_VOLTAGE; 4];
    let real = x.infer(&v).expect("infer");
    let mut rel: f64 = 0.0;
    for (j, o) in real.iter().enumerate() {
        let gross: f64 = (0..4).map(|i| g0 * f64::from(c[i][j].value().unsigned_abs()) * v[i]).sum();
        rel = rel.max((o - dense(c, &v, j)).abs() / gross);
    }
    r.line(
        6,
        "crossbar oracle",
        exact_err <= 4.0 * f64::EPSILON && rel <= 0.05,
        false,
        format!(
            "ideal-limit rel err {exact_err:.1e} (round-off), nonlinear 4x3 err {:.2}% of gross current (<= 5%)",
            100.0 * rel
        ),
    );
}

fn noise_sigma() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let n = 100_000;
    let x: Vec<f64> = (0..n).map(|_| sample_conductance_factor(100.0, &mut rng)).collect();
    let mean = x.iter().sum::<f64>() / n as f64;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() / mean
}

fn data_dir() -> Option<PathBuf> {
    let mut cfg = Config::new(ExperimentKind::Train);
    cfg.mnist.dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist").to_string_lossy().into_owned();
    let dir = mnist_dir(&cfg);
    dir.join("train-images-idx3-ubyte").exists().then_some(dir)
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn precision(r: &mut Report, s: &Splits) -> Mlp {
    let t0 = Instant::now();
    let cfg = Config::new(ExperimentKind::QuantizeEval);
    let windows = log_window_grid(cfg.quant.rel_window_min, cfg.quant.windows);
    let opt = |m: &Mlp, b: u32| -> f64 {
        let best = optimize_window(m, b, &s.validate, &windows, Evaluator::Software).expect("window search");
        Evaluator::Software.accuracy(&best.model, &s.test).expect("accuracy")
    };
    let m50 = train(&s.train, cfg.training.lambda, &cfg.training.params(50, cfg.seed)).expect("train");
    let (one, two50) = (opt(&m50, 1), opt(&m50, 2));
    let m200 = train(&s.train, cfg.training.lambda, &cfg.training.params(200, cfg.seed)).expect("train");
    let float = evaluate(&m200, &s.test);
    let two = opt(&m200, 2);
    let secs = t0.elapsed().as_secs_f64();
    r.line(
        7,
        "MNIST precision trend",
        float >= 0.95 && float - two <= 0.02 && one < two50 && secs < 600.0,
        false,
        format!(
            "H=200 float {float:.4} (>= 0.95), 2-bit {two:.4} (gap {:.2}% <= 2%); H=50 1-bit {one:.4} < 2-bit {two50:.4}; {secs:.0} s (< 600 s)",
            100.0 * (float - two)
        ),
    );
    m200
}

fn noise(r: &mut Report, s: &Splits, m: &Mlp) {
    let sigma = noise_sigma();
    r.line(
        8,
        "dopant noise sigma at N=100",
        (sigma - 0.1).abs() <= 0.005,
        false,
        format!("{sigma:.4} over 1e5 draws (0.10 +- 0.005)"),
    );

    let cfg = Config::new(ExperimentKind::NoiseMc);
    let n = &cfg.noise;
    let hw = HwWeightModel::ideal(n.bits, 1e3 / cfg.cell.r0, cfg.cell.v_read);
    let act = HiddenActivation::Sigmoid;
    let windows = log_window_grid(cfg.quant.rel_window_min, cfg.quant.windows);
    let best = optimize_window(m, n.bits, &s.validate, &windows, Evaluator::Hardware { hw: &hw, activation: act })
        .expect("window");
    let acc = |sigma: f64| -> f64 {
        let spec = if sigma == 0.0 { NoiseSpec::Gaussian { sigma: 0.0 } } else { NoiseSpec::poisson_with_sigma(sigma) };
        mean(
            &noise_mc(&best.model, &hw, act, &s.test, spec, NoiseScope::PerBranch, n.trials, cfg.seed)
                .expect("noise mc"),
        )
    };
    let (clean, a10, a30) = (acc(0.0), acc(0.1), acc(0.3));
    let (d10, d30) = (clean - a10, clean - a30);
    r.line(
        8,
        "noise drop at 10%",
        d10 < 0.01,
        false,
        format!("noiseless {clean:.4}, 10% mean {a10:.4}, drop {:.2}% (< 1%)", 100.0 * d10),
    );
    r.line(
        8,
        "extra drop at 30%",
        d30 - d10 >= 0.01,
        true,
        format!("30% mean {a30:.4}, drop {:.2}%, extra over 10% {:.2}% (>= 1%)", 100.0 * d30, 100.0 * (d30 - d10)),
    );
}

fn hw_reg(r: &mut Report, s: &Splits) {
    let t0 = Instant::now();
    let cfg = Config::new(ExperimentKind::HwReg);
    let h = &cfg.hw_reg;
    let lambdas = lambda_grid(h.lambda_min, h.lambda_max, h.lambdas_per_decade);
    let windows = log_window_grid(cfg.quant.rel_window_min, cfg.quant.windows);
    let hw =
        weight_model(&cfg, h.model, h.bits, cfg.quant.table_points).expect("weight model").expect("hardware model");
    let eval = Evaluator::Hardware { hw: &hw, activation: HiddenActivation::Binary };
    let hidden = h.hidden[0];
    let models = train_grid(&s.train, &lambdas, &cfg.training.params(hidden, cfg.seed)).expect("train grid");
    let sel = select_hw_aware(&models, &lambdas, &s.validate, &windows, h.bits, eval).expect("selection");

    // Exhaustive oracle, scored independently of the selection routine.
    let mut exhaustive = f64::INFINITY;
    for m in &models {
        for &w in &windows {
            let q = QuantizedMlp::from_mlp(m, h.bits, w);
            exhaustive = exhaustive.min(1.0 - eval.accuracy(&q, &s.validate).expect("accuracy"));
        }
    }
    let chosen = eval.accuracy(&sel.model, &s.test).expect("accuracy");
    let (i, naive) = select_naive(&models, &s.validate, h.bits).expect("naive");
    let naive_acc = eval.accuracy(&naive, &s.test).expect("accuracy");
    let secs = t0.elapsed().as_secs_f64();
    r.line(
        9,
        "hardware-aware selection",
        sel.cost() == exhaustive && chosen >= naive_acc,
        false,
        format!(
            "cost {:.4} vs exhaustive {exhaustive:.4} over {} points; H={hidden} test {chosen:.4} (lambda {:.1e}, window {:.3}) vs naive {naive_acc:.4} (lambda {:.1e}), margin {:+.2}%, {secs:.0} s",
            sel.cost(),
            sel.grid.len(),
            sel.lambda(),
            sel.rel_window(),
            lambdas[i],
            100.0 * (chosen - naive_acc)
        ),
    );
}

const SMALL_MNIST: &str = r#"
[mnist]
train = 1000
validate = 300
test = 300
[training]
hidden = [20]
epochs = 2
[quant]
bits = [1, 2]
windows = 4
[noise]
trials = 4
[hw_reg]
hidden = [16]
lambda_max = 1e-5
lambdas_per_decade = 1
"#;

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .expect("output dir")
        .map(|e| {
            let e = e.expect("entry");
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).expect("read"))
        })
        .collect();
    out.sort();
    out
}

fn reproducibility(r: &mut Report, data: Option<&Path>) {
    let t0 = Instant::now();
    let tmp = tempfile::tempdir().expect("tempdir");
    let mut ran = 0;
    let mut mismatched = Vec::new();
    let mut errors = Vec::new();
    for kind in ExperimentKind::ALL {
        if kind.needs_mnist() && data.is_none() {
            continue;
        }
        let config = tmp.path().join(format!("{}.toml", kind.name()));
        std::fs::write(&config, format!("experiment = \"{}\"\n{SMALL_MNIST}", kind.name())).expect("write config");
        let mut outputs = Vec::new();
        for (run, threads) in [(0, 1), (1, 1), (2, 3)] {
            let out = tmp.path().join(format!("{}-{run}", kind.name()));
            let mut cmd = Command::new(env!("CARGO_BIN_EXE_fexbar"));
            cmd.arg("run").arg("--config").arg(&config).arg("--out").arg(&out).arg("--seed").arg("7");
            cmd.arg("--threads").arg(threads.to_string());
            if let Some(d) = data {
                cmd.env("FEXBAR_MNIST_DIR", d);
            }
            let status = cmd.output().expect("spawn fexbar");
            if !status.status.success() {
                errors.push(format!("{}: {}", kind.name(), String::from_utf8_lossy(&status.stderr).trim()));
                break;
            }
            outputs.push(files(&out));
        }
        if outputs.len() == 3 && (outputs[0] != outputs[1] || outputs[0] != outputs[2] || outputs[0].is_empty()) {
            mismatched.push(kind.name());
        }
        ran += 1;
    }
    let secs = t0.elapsed().as_secs_f64();
    let skipped = if data.is_none() { " (MNIST experiments skipped)" } else { "" };
    r.line(
        10,
        "reproducibility",
        mismatched.is_empty() && errors.is_empty(),
        false,
        format!(
            "{ran} experiments x 3 runs (threads 1, 1, 3){skipped}; mismatched {mismatched:?}; errors {errors:?}; {secs:.1} s"
        ),
    );
}

fn main() {
    let mut r = Report::default();
    ode_oracle(&mut r);
    hysteresis(&mut r);
    program_erase(&mut r);
    area(&mut r);
    cell(&mut r);
    crossbar(&mut r);

    let data = data_dir();
    match &data {
        Some(dir) => {
            let cfg = Config::new(ExperimentKind::Train);
            let m = &cfg.mnist;
            let splits =
                load_mnist(dir, SplitSizes { train: m.train, validate: m.validate, test: m.test }).expect("MNIST");
            let m200 = precision(&mut r, &splits);
            noise(&mut r, &splits, &m200);
            hw_reg(&mut r, &splits);
        }
        None => {
            let why = "MNIST not found; set FEXBAR_MNIST_DIR";
            r.skip(7, "MNIST precision trend", why);
            let sigma = noise_sigma();
            r.line(
                8,
                "dopant noise sigma at N=100",
                (sigma - 0.1).abs() <= 0.005,
                false,
                format!("{sigma:.4} over 1e5 draws"),
            );
            r.skip(8, "noise accuracy drops", why);
            r.skip(9, "hardware-aware selection", why);
        }
    }
    reproducibility(&mut r, data.as_deref());

    if r.failed.is_empty() {
        println!("acceptance: all criteria pass outside known deviations");
    } else {
        println!("acceptance: failing criteria {:?}", r.failed);
        std::process::exit(1);
    }
}
