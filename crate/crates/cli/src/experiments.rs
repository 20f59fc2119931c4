//! One pipeline per experiment kind. Each writes its CSV files into the
//! output directory and returns a one-line summary.

use std::path::{Path, PathBuf};

use fexbar_core::circuit::{area_sweep, log_areas, program_window, standard_sequence, transient, FeFetStack};
use fexbar_core::fecap::{quasistatic_sweep, triangle_waveform};
use fexbar_core::xbar::{ideal_conductance, CellArray, CrossbarArray, WeightCell};
use fexbar_core::WeightCode;
use fexbar_nn::quant::log_window_grid;
use fexbar_nn::select::{lambda_grid, select_hw_aware, select_naive, train_grid};
use fexbar_nn::{
    array_area, container, evaluate, load_mnist, noise_mc, optimize_window, train, Evaluator, HiddenActivation,
    HwWeightModel, NoiseScope, NoiseSpec, QuantizedMlp, SplitSizes, Splits,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ActivationKind, Config, ExperimentKind, NoiseKind, ScopeKind, WeightModelKind};
use crate::output::{float, write_atomic, ResultRow, Table, RESULT_HEADER};
use crate::CliError;

pub const MNIST_DIR_ENV: &str = "FEXBAR_MNIST_DIR";

/// Runs the configured experiment.
pub fn run(cfg: &Config, out: &Path) -> Result<String, CliError> {
    match cfg.experiment {
        ExperimentKind::Hysteresis => hysteresis(cfg, out),
        ExperimentKind::ProgramErase => program_erase(cfg, out),
        ExperimentKind::AreaSweep => run_area_sweep(cfg, out),
        ExperimentKind::CellIv => cell_iv(cfg, out),
        ExperimentKind::Weights => weights(cfg, out),
        ExperimentKind::Train => run_train(cfg, out),
        ExperimentKind::QuantizeEval => quantize_eval(cfg, out),
        ExperimentKind::NoiseMc => run_noise_mc(cfg, out),
        ExperimentKind::HwReg => hw_reg(cfg, out),
    }
}

fn save(out: &Path, name: &str, table: &Table) -> Result<(), CliError> {
    write_atomic(&out.join(name), &table.to_bytes())
}

fn hysteresis(cfg: &Config, out: &Path) -> Result<String, CliError> {
    let h = &cfg.hysteresis;
    let wave = triangle_waveform(h.amplitude, h.frequency_ratio * cfg.fecap.f0(), h.cycles, h.samples_per_quarter);
    let trace = quasistatic_sweep(&cfg.fecap, &wave).map_err(|e| CliError::Solver(e.to_string()))?;
    let mut t = Table::new(&["time_s", "v_app_V", "v_int_V", "P_uC_cm2", "Q_fC"]);
    for p in &trace {
        t.push(vec![float(p.time), float(p.v_app), float(p.v_int), float(p.p), float(p.q)]);
    }
    save(out, "hysteresis.csv", &t)?;
    let p_max = trace.iter().map(|p| p.p.abs()).fold(0.0, f64::max);
    Ok(format!("hysteresis: {} samples, max |P| = {p_max:.4} uC/cm2 (theta = {})", trace.len(), cfg.fecap.theta_max()))
}

fn program_erase(cfg: &Config, out: &Path) -> Result<String, CliError> {
    let mut stack = FeFetStack::new(cfg.fecap, cfg.fet)?;
    let points = transient(&mut stack, &standard_sequence(&cfg.protocol), &cfg.protocol)?;
    let mut t = Table::new(&["time_s", "v_prog_V", "v_inout_V", "v_sel_V", "v_cap_V", "v_g_V", "P_uC_cm2"]);
    for p in &points {
        t.push([p.time, p.v_prog, p.v_inout, p.v_sel, p.v_cap, p.v_g, p.p].map(float).to_vec());
    }
    save(out, "program_erase.csv", &t)?;
    let w = program_window(&cfg.fecap, &cfg.fet, &cfg.protocol)?;
    Ok(format!(
        "program-erase: programmed v_g = {:.4} V, erased v_g = {:.4} V, window = {:.4} V",
        w.v_prog,
        w.v_erase,
        w.delta_v()
    ))
}

fn run_area_sweep(cfg: &Config, out: &Path) -> Result<String, CliError> {
    let a = &cfg.area_sweep;
    let pts = area_sweep(&cfg.fecap, &cfg.fet, &log_areas(a.area_min, a.area_max, a.points), &cfg.protocol)?;
    let mut t = Table::new(&["area_nm2", "v_prog_V", "v_erase_V", "delta_v_V"]);
    for p in &pts {
        t.push([p.area, p.v_prog, p.v_erase, p.delta_v].map(float).to_vec());
    }
    save(out, "area_sweep.csv", &t)?;
    let (i, best) = pts.iter().enumerate().max_by(|a, b| a.1.delta_v.total_cmp(&b.1.delta_v)).expect("points >= 2");
    let place = if i > 0 && i + 1 < pts.len() { "interior" } else { "at an end" };
    Ok(format!("area-sweep: peak window {:.4} V at {:.1} nm2 ({place})", best.delta_v, best.area))
}

fn bits_of(m: u32, n: u32) -> Vec<bool> {
    (0..n).map(|b| m >> b & 1 == 1).collect()
}

fn cell_iv(cfg: &Config, out: &Path) -> Result<String, CliError> {
    let c = &cfg.cell;
    let window = program_window(&cfg.fecap, &cfg.fet, &cfg.protocol)?;
    let mut t = Table::new(&["v_in_V", "code", "i_A", "g_uS", "g_ideal_uS"]);
    let mut at_read = Vec::new();
    for m in 0..1u32 << c.bits {
        let bits = bits_of(m, c.bits);
        let cell = WeightCell::programmed(&bits, c.r0, &cfg.fet, &cfg.fecap, window)?;
        let ideal = ideal_conductance(&bits, cell.g0);
        for k in 1..=c.points {
            let v = c.v_max * k as f64 / c.points as f64;
            let i = cell.current(v)?;
            t.push(vec![float(v), m.to_string(), float(i), float(i / v * 1e6), float(ideal)]);
        }
        at_read.push(cell.current(c.v_read)?);
    }
    save(out, "cell_iv.csv", &t)?;
    let on_off = at_read.last().expect("codes") / at_read[0];
    Ok(format!("cell-iv: {} codes, ON/OFF current ratio {on_off:.3e} at {} V", at_read.len(), c.v_read))
}

fn weights(cfg: &Config, out: &Path) -> Result<String, CliError> {
    let c = &cfg.cell;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let max = (1i32 << c.bits) - 1;
    let codes: Vec<Vec<WeightCode>> = (0..c.inputs)
        .map(|_| (0..c.outputs).map(|_| WeightCode::new(rng.random_range(-max..=max), c.bits)).collect())
        .collect::<Result<_, _>>()?;
    let v_in: Vec<f64> = (0..c.inputs).map(|_| rng.random_range(0.0..=c.v_read)).collect();
    let mut array = CrossbarArray::new(c.inputs, c.outputs, c.bits, c.r0, cfg.fecap, cfg.fet, cfg.protocol)?;
    if c.resistor_noise {
        array.sample_resistors(&mut rng);
    }
    array.program(&codes)?;
    let back = array.read_back()?;
    let mut t = Table::new(&["input", "output", "code", "read_back"]);
    let mut mismatches = 0;
    for (i, (row, got)) in codes.iter().zip(&back).enumerate() {
        for (j, (want, have)) in row.iter().zip(got).enumerate() {
            mismatches += usize::from(want != have);
            t.push(vec![i.to_string(), j.to_string(), want.value().to_string(), have.value().to_string()]);
        }
    }
    save(out, "weights_codes.csv", &t)?;
    let real = array.infer(&v_in)?;
    let ideal = CellArray::ideal(&codes, c.r0)?.infer(&v_in)?;
    let mut t = Table::new(&["output", "i_A", "i_ideal_A"]);
    let mut worst: f64 = 0.0;
    let scale = ideal.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (j, (a, b)) in real.iter().zip(&ideal).enumerate() {
        worst = worst.max((a - b).abs());
        t.push(vec![j.to_string(), float(*a), float(*b)]);
    }
    save(out, "weights_mac.csv", &t)?;
    Ok(format!(
        "weights: {}x{} array, {mismatches} read-back mismatches, largest output error {:.2}% of the largest ideal output",
        c.inputs,
        c.outputs,
        100.0 * worst / scale.max(f64::MIN_POSITIVE)
    ))
}

/// MNIST directory: the environment override, else the config entry.
pub fn mnist_dir(cfg: &Config) -> PathBuf {
    match std::env::var_os(MNIST_DIR_ENV) {
        Some(d) if !d.is_empty() => PathBuf::from(d),
        _ => PathBuf::from(&cfg.mnist.dir),
    }
}

fn load_splits(cfg: &Config) -> Result<Splits, CliError> {
    let m = &cfg.mnist;
    let sizes = SplitSizes { train: m.train, validate: m.validate, test: m.test };
    load_mnist(&mnist_dir(cfg), sizes).map_err(|e| CliError::Io(e.to_string()))
}

fn activation(a: ActivationKind) -> HiddenActivation {
    match a {
        ActivationKind::Binary => HiddenActivation::Binary,
        ActivationKind::Sigmoid => HiddenActivation::Sigmoid,
    }
}

/// Weight model for `bits`-bit cells; `None` for software evaluation.
pub fn weight_model(
    cfg: &Config,
    kind: WeightModelKind,
    bits: u32,
    table_points: usize,
) -> Result<Option<HwWeightModel>, CliError> {
    let c = &cfg.cell;
    Ok(match kind {
        WeightModelKind::Software => None,
        WeightModelKind::Ideal => Some(HwWeightModel::ideal(bits, 1e3 / c.r0, c.v_read)),
        WeightModelKind::Device => {
            let window = program_window(&cfg.fecap, &cfg.fet, &cfg.protocol)?;
            Some(HwWeightModel::from_device(bits, c.r0, &cfg.fet, &cfg.fecap, window, c.v_read, table_points)?)
        }
    })
}

fn evaluator(model: Option<&HwWeightModel>, act: ActivationKind) -> Evaluator<'_> {
    match model {
        None => Evaluator::Software,
        Some(hw) => Evaluator::Hardware { hw, activation: activation(act) },
    }
}

fn float_row(experiment: &'static str, hidden: usize, lambda: f32, accuracy: f64) -> ResultRow {
    ResultRow { experiment, hidden, bits: 0, window: 0.0, lambda, sigma: 0.0, trial: 0, accuracy }
}

fn results(rows: &[ResultRow]) -> Table {
    let mut t = Table::new(&RESULT_HEADER);
    for r in rows {
        t.push(r.fields());
    }
    t
}

fn run_train(cfg: &Config, out: &Path) -> Result<String, CliError> {
    let s = load_splits(cfg)?;
    let tc = &cfg.training;
    let mut rows = Vec::new();
    for &h in &tc.hidden {
        let m = train(&s.train, tc.lambda, &tc.params(h, cfg.seed))?;
        write_atomic(&out.join(format!("model_h{h}.fxbw")), &container::to_bytes(&m))?;
        rows.push(float_row("float-validate", h, tc.lambda, evaluate(&m, &s.validate)));
        rows.push(float_row("float-test", h, tc.lambda, evaluate(&m, &s.test)));
    }
    save(out, "train.csv", &results(&rows))?;
    let last = rows.last().expect("hidden sizes");
    Ok(format!("train: {} networks, float test accuracy {:.4} at H = {}", tc.hidden.len(), last.accuracy, last.hidden))
}

fn grid(cfg: &Config) -> Vec<f32> {
    log_window_grid(cfg.quant.rel_window_min, cfg.quant.windows)
}

fn quantize_eval(cfg: &Config, out: &Path) -> Result<String, CliError> {
    let s = load_splits(cfg)?;
    let (tc, q) = (&cfg.training, &cfg.quant);
    let windows = grid(cfg);
    let mut rows = Vec::new();
    for &h in &tc.hidden {
        let m = train(&s.train, tc.lambda, &tc.params(h, cfg.seed))?;
        rows.push(float_row("float-test", h, tc.lambda, evaluate(&m, &s.test)));
        for &bits in &q.bits {
            let hw = weight_model(cfg, q.model, bits, q.table_points)?;
            let eval = evaluator(hw.as_ref(), q.activation);
            let best = optimize_window(&m, bits, &s.validate, &windows, eval)?;
            let base = ResultRow {
                experiment: "",
                hidden: h,
                bits,
                window: 0.0,
                lambda: tc.lambda,
                sigma: 0.0,
                trial: 0,
                accuracy: 0.0,
            };
            rows.push(ResultRow {
                experiment: "quantized-optimized",
                window: best.rel_window(),
                accuracy: eval.accuracy(&best.model, &s.test)?,
                ..base
            });
            let naive = QuantizedMlp::from_mlp(&m, bits, 1.0);
            rows.push(ResultRow {
                experiment: "quantized-full-range",
                window: 1.0,
                accuracy: eval.accuracy(&naive, &s.test)?,
                ..base
            });
        }
    }
    save(out, "quantize_eval.csv", &results(&rows))?;
    let summary: Vec<String> = rows
        .iter()
        .filter(|r| r.experiment != "quantized-full-range")
        .map(|r| {
            if r.bits == 0 {
                format!("H{} float {:.4}", r.hidden, r.accuracy)
            } else {
                format!("{}b {:.4}", r.bits, r.accuracy)
            }
        })
        .collect();
    Ok(format!("quantize-eval: {}", summary.join(", ")))
}

pub fn noise_spec(kind: NoiseKind, sigma: f64) -> NoiseSpec {
    match kind {
        _ if sigma == 0.0 => NoiseSpec::Gaussian { sigma: 0.0 },
        NoiseKind::Poisson => NoiseSpec::poisson_with_sigma(sigma),
        NoiseKind::Gaussian => NoiseSpec::Gaussian { sigma },
    }
}

fn run_noise_mc(cfg: &Config, out: &Path) -> Result<String, CliError> {
    let s = load_splits(cfg)?;
    let (tc, n) = (&cfg.training, &cfg.noise);
    let hw = HwWeightModel::ideal(n.bits, 1e3 / cfg.cell.r0, cfg.cell.v_read);
    let act = activation(n.activation);
    let scope = match n.scope {
        ScopeKind::PerBranch => NoiseScope::PerBranch,
        ScopeKind::PerWeight => NoiseScope::PerWeight,
    };
    let windows = grid(cfg);
    let mut rows = Vec::new();
    let mut means = Vec::new();
    for &h in &tc.hidden {
        let m = train(&s.train, tc.lambda, &tc.params(h, cfg.seed))?;
        let best =
            optimize_window(&m, n.bits, &s.validate, &windows, Evaluator::Hardware { hw: &hw, activation: act })?;
        for &sigma in &n.sigmas {
            let acc = noise_mc(&best.model, &hw, act, &s.test, noise_spec(n.kind, sigma), scope, n.trials, cfg.seed)?;
            means.push(format!("H{h} sigma {sigma}: {:.4}", acc.iter().sum::<f64>() / acc.len() as f64));
            rows.extend(acc.iter().enumerate().map(|(trial, &accuracy)| ResultRow {
                experiment: "noise-mc",
                hidden: h,
                bits: n.bits,
                window: best.rel_window(),
                lambda: tc.lambda,
                sigma,
                trial,
                accuracy,
            }));
        }
    }
    save(out, "noise_mc.csv", &results(&rows))?;
    Ok(format!("noise-mc: mean accuracy {}", means.join(", ")))
}

fn hw_reg(cfg: &Config, out: &Path) -> Result<String, CliError> {
    let s = load_splits(cfg)?;
    let (tc, r) = (&cfg.training, &cfg.hw_reg);
    let lambdas = lambda_grid(r.lambda_min, r.lambda_max, r.lambdas_per_decade);
    let windows = grid(cfg);
    let hw = weight_model(cfg, r.model, r.bits, cfg.quant.table_points)?;
    let eval = evaluator(hw.as_ref(), r.activation);
    let mut header = RESULT_HEADER.to_vec();
    header.push("array_area_um2");
    let mut t = Table::new(&header);
    let mut summary = Vec::new();
    for &h in &r.hidden {
        let area = float(array_area(s.train.n_features(), h, 10, r.bits, r.branch_area_um2));
        let models = train_grid(&s.train, &lambdas, &tc.params(h, cfg.seed))?;
        let sel = select_hw_aware(&models, &lambdas, &s.validate, &windows, r.bits, eval)?;
        let mut push = |row: ResultRow| {
            let mut f = row.fields();
            f.push(area.clone());
            t.push(f);
        };
        let base = ResultRow {
            experiment: "",
            hidden: h,
            bits: r.bits,
            window: 0.0,
            lambda: 0.0,
            sigma: 0.0,
            trial: 0,
            accuracy: 0.0,
        };
        for p in &sel.grid {
            push(ResultRow {
                experiment: "hw-reg-validate",
                window: p.rel_window,
                lambda: p.lambda,
                accuracy: 1.0 - p.cost,
                ..base
            });
        }
        let chosen = eval.accuracy(&sel.model, &s.test)?;
        push(ResultRow {
            experiment: "hw-reg-selected-test",
            window: sel.rel_window(),
            lambda: sel.lambda(),
            accuracy: chosen,
            ..base
        });
        let (i, naive) = select_naive(&models, &s.validate, r.bits)?;
        let naive_acc = eval.accuracy(&naive, &s.test)?;
        push(ResultRow {
            experiment: "naive-selected-test",
            window: 1.0,
            lambda: lambdas[i],
            accuracy: naive_acc,
            ..base
        });
        summary.push(format!(
            "H{h}: selected {chosen:.4} vs naive {naive_acc:.4} (lambda {:.2e}, window {:.3})",
            sel.lambda(),
            sel.rel_window()
        ));
    }
    save(out, "hw_reg.csv", &t)?;
    Ok(format!("hw-reg: {}", summary.join("; ")))
}
