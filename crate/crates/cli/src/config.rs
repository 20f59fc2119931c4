//! Experiment configuration: TOML with includes, defaults and a full error
//! list on validation.
//!
//! A config file is a TOML table. `include = ["a.toml", ...]` pulls other
//! files in first (paths relative to the including file); the including
//! file's own keys win. Every key missing after the merge takes its default.

use std::fmt;
use std::path::{Path, PathBuf};

use fexbar_core::circuit::{FetParams, Protocol};
use fexbar_core::FeCapParams;
use fexbar_nn::TrainParams;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

const MAX_INCLUDE_DEPTH: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Hysteresis,
    ProgramErase,
    AreaSweep,
    CellIv,
    Weights,
    Train,
    QuantizeEval,
    NoiseMc,
    HwReg,
}

impl ExperimentKind {
    pub const ALL: [Self; 9] = [
        Self::Hysteresis,
        Self::ProgramErase,
        Self::AreaSweep,
        Self::CellIv,
        Self::Weights,
        Self::Train,
        Self::QuantizeEval,
        Self::NoiseMc,
        Self::HwReg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Hysteresis => "hysteresis",
            Self::ProgramErase => "program-erase",
            Self::AreaSweep => "area-sweep",
            Self::CellIv => "cell-iv",
            Self::Weights => "weights",
            Self::Train => "train",
            Self::QuantizeEval => "quantize-eval",
            Self::NoiseMc => "noise-mc",
            Self::HwReg => "hw-reg",
        }
    }

    pub fn needs_mnist(self) -> bool {
        matches!(self, Self::Train | Self::QuantizeEval | Self::NoiseMc | Self::HwReg)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Triangle-wave drive of a bare capacitor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HysteresisConfig {
    /// V
    pub amplitude: f64,
    /// Loop frequency as a fraction of the delay's natural frequency.
    pub frequency_ratio: f64,
    pub cycles: usize,
    pub samples_per_quarter: usize,
}

impl Default for HysteresisConfig {
    fn default() -> Self {
        Self { amplitude: 3.0, frequency_ratio: 1e-2, cycles: 2, samples_per_quarter: 2000 }
    }
}

/// Log-spaced FeCap areas, nm².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaSweepConfig {
    pub area_min: f64,
    pub area_max: f64,
    pub points: usize,
}

impl Default for AreaSweepConfig {
    fn default() -> Self {
        Self { area_min: 1250.0, area_max: 12500.0, points: 11 }
    }
}

/// Weight-cell and crossbar settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    pub bits: u32,
    /// kΩ
    pub r0: f64,
    /// Highest input voltage of the I-V sweep, V.
    pub v_max: f64,
    pub points: usize,
    /// Read voltage that a normalized input of 1 maps to, V.
    pub v_read: f64,
    /// Crossbar size of the `weights` experiment.
    pub inputs: usize,
    pub outputs: usize,
    /// Draw every crossbar resistor from its dopant statistics.
    pub resistor_noise: bool,
}

impl Default for CellConfig {
    fn default() -> Self {
        Self { bits: 2, r0: 60.0, v_max: 0.5, points: 50, v_read: 0.3, inputs: 4, outputs: 3, resistor_noise: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MnistConfig {
    /// Directory with the four IDX files; the `FEXBAR_MNIST_DIR`
    /// environment variable overrides it.
    pub dir: String,
    pub train: usize,
    pub validate: usize,
    pub test: usize,
}

impl Default for MnistConfig {
    fn default() -> Self {
        Self { dir: "data/mnist".into(), train: 10_000, validate: 2_000, test: 2_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f32,
    pub momentum: f32,
    pub lambda: f32,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        let t = TrainParams::default();
        Self {
            hidden: vec![50, 200],
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            momentum: t.momentum,
            lambda: 1e-6,
        }
    }
}

impl TrainingConfig {
    pub fn params(&self, hidden: usize, seed: u64) -> TrainParams {
        TrainParams {
            hidden,
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightModelKind {
    /// Dequantized weights in the float network.
    Software,
    /// Ideal ladder conductances.
    Ideal,
    /// Tabulated conductances of the default FeFET ladder.
    Device,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActivationKind {
    Binary,
    Sigmoid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantConfig {
    pub bits: Vec<u32>,
    /// Number of log-spaced relative windows between `rel_window_min` and 1.
    pub windows: usize,
    pub rel_window_min: f32,
    pub model: WeightModelKind,
    pub activation: ActivationKind,
    /// Samples of the tabulated device response.
    pub table_points: usize,
}

impl Default for QuantConfig {
    fn default() -> Self {
        Self {
            bits: vec![1, 2, 4],
            windows: 20,
            rel_window_min: 0.1,
            model: WeightModelKind::Software,
            activation: ActivationKind::Sigmoid,
            table_points: 65,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    Poisson,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScopeKind {
    PerBranch,
    PerWeight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub bits: u32,
    /// Relative conductance spreads.
    pub sigmas: Vec<f64>,
    pub trials: usize,
    pub kind: NoiseKind,
    pub scope: ScopeKind,
    pub activation: ActivationKind,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            bits: 2,
            sigmas: vec![0.0, 0.1, 0.3],
            trials: 20,
            kind: NoiseKind::Poisson,
            scope: ScopeKind::PerBranch,
            activation: ActivationKind::Sigmoid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HwRegConfig {
    pub hidden: Vec<usize>,
    pub bits: u32,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambdas_per_decade: usize,
    pub model: WeightModelKind,
    pub activation: ActivationKind,
    /// Footprint of one ladder branch, µm² (placeholder).
    pub branch_area_um2: f64,
}

impl Default for HwRegConfig {
    fn default() -> Self {
        Self {
            hidden: vec![200],
            bits: 2,
            lambda_min: 1e-6,
            lambda_max: 1e-2,
            lambdas_per_decade: 6,
            model: WeightModelKind::Device,
            activation: ActivationKind::Binary,
            branch_area_um2: fexbar_nn::DEFAULT_BRANCH_AREA_UM2,
        }
    }
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub fecap: FeCapParams,
    pub fet: FetParams,
    pub protocol: Protocol,
    pub hysteresis: HysteresisConfig,
    pub area_sweep: AreaSweepConfig,
    pub cell: CellConfig,
    pub mnist: MnistConfig,
    pub training: TrainingConfig,
    pub quant: QuantConfig,
    pub noise: NoiseConfig,
    pub hw_reg: HwRegConfig,
}

impl Config {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            seed: 0,
            fecap: FeCapParams::default(),
            fet: FetParams::default(),
            protocol: Protocol::default(),
            hysteresis: HysteresisConfig::default(),
            area_sweep: AreaSweepConfig::default(),
            cell: CellConfig::default(),
            mnist: MnistConfig::default(),
            training: TrainingConfig::default(),
            quant: QuantConfig::default(),
            noise: NoiseConfig::default(),
            hw_reg: HwRegConfig::default(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Every problem found while loading a config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "config error: {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

fn read_table(path: &Path, errors: &mut Vec<String>) -> Option<Table> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            errors.push(format!("{}: {e}", path.display()));
            return None;
        }
    };
    parse_table(&text, &path.display().to_string(), errors)
}

fn parse_table(text: &str, origin: &str, errors: &mut Vec<String>) -> Option<Table> {
    match text.parse::<Table>() {
        Ok(t) => Some(t),
        Err(e) => {
            let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1);
            let msg = e.message().trim_end().to_string();
            errors.push(match line {
                Some(l) => format!("{origin}:{l}: {msg}"),
                None => format!("{origin}: {msg}"),
            });
            None
        }
    }
}

/// Later keys win; tables merge recursively.
fn merge(base: &mut Table, top: Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Loads `path` with its includes, included files first.
fn load_tree(path: &Path, stack: &mut Vec<PathBuf>, errors: &mut Vec<String>) -> Option<Table> {
    let canonical = path.canonicalize().unwrap_or_else(|_| path.to_path_buf());
    if stack.contains(&canonical) {
        errors.push(format!("{}: include cycle", path.display()));
        return None;
    }
    if stack.len() >= MAX_INCLUDE_DEPTH {
        errors.push(format!("{}: includes nested deeper than {MAX_INCLUDE_DEPTH}", path.display()));
        return None;
    }
    let mut own = read_table(path, errors)?;
    let includes = match own.remove("include") {
        None => Vec::new(),
        Some(Value::Array(items)) => items,
        Some(Value::String(s)) => vec![Value::String(s)],
        Some(other) => {
            errors.push(format!(
                "{}: include: expected a path or list of paths, found {}",
                path.display(),
                other.type_str()
            ));
            Vec::new()
        }
    };
    stack.push(canonical);
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut merged = Table::new();
    for item in includes {
        match item {
            Value::String(rel) => {
                if let Some(t) = load_tree(&dir.join(rel), stack, errors) {
                    merge(&mut merged, t);
                }
            }
            other => errors.push(format!("{}: include: expected a path, found {}", path.display(), other.type_str())),
        }
    }
    stack.pop();
    merge(&mut merged, own);
    Some(merged)
}

/// Compares the user table against the defaults: unknown keys and type
/// mismatches, each addressed by its dotted path.
fn check_keys(user: &Table, defaults: &Table, prefix: &str, errors: &mut Vec<String>) {
    for (k, v) in user {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        let Some(d) = defaults.get(k) else {
            errors.push(format!("{path}: unknown key"));
            continue;
        };
        match (d, v) {
            (Value::Table(dt), Value::Table(ut)) => check_keys(ut, dt, &path, errors),
            (Value::Array(da), Value::Array(ua)) => {
                if let Some(proto) = da.first() {
                    for (i, item) in ua.iter().enumerate() {
                        if !same_kind(proto, item) {
                            errors.push(format!(
                                "{path}[{i}]: expected {}, found {}",
                                proto.type_str(),
                                item.type_str()
                            ));
                        }
                    }
                }
            }
            _ if !same_kind(d, v) => errors.push(format!("{path}: expected {}, found {}", d.type_str(), v.type_str())),
            _ => {}
        }
    }
}

fn same_kind(default: &Value, v: &Value) -> bool {
    matches!(
        (default, v),
        (Value::Float(_), Value::Float(_) | Value::Integer(_))
            | (Value::Integer(_), Value::Integer(_))
            | (Value::String(_), Value::String(_))
            | (Value::Boolean(_), Value::Boolean(_))
            | (Value::Array(_), Value::Array(_))
            | (Value::Table(_), Value::Table(_))
    )
}

/// Resolves a config from a parsed table. `kind` comes from the command line
/// and must agree with any `experiment` key.
pub fn resolve(user: Table, kind: Option<ExperimentKind>, seed: Option<u64>) -> Result<Config, ConfigErrors> {
    let mut errors = Vec::new();
    let defaults = match Value::try_from(Config::new(ExperimentKind::Hysteresis)).expect("config serializes") {
        Value::Table(t) => t,
        _ => unreachable!("config serializes to a table"),
    };
    check_keys(&user, &defaults, "", &mut errors);
    let from_file = match user.get("experiment") {
        Some(Value::String(s)) => match ExperimentKind::deserialize(Value::String(s.clone())) {
            Ok(k) => Some(k),
            Err(_) => {
                errors.push(format!("experiment: unknown kind \"{s}\""));
                None
            }
        },
        _ => None,
    };
    let experiment = match (kind, from_file) {
        (Some(a), Some(b)) if a != b => {
            errors.push(format!("experiment: config says {b} but the command is {a}"));
            None
        }
        (Some(a), _) => Some(a),
        (None, Some(b)) => Some(b),
        (None, None) => {
            if !user.contains_key("experiment") {
                errors.push("experiment: missing experiment kind".into());
            }
            None
        }
    };
    if !errors.is_empty() {
        return Err(ConfigErrors(errors));
    }
    let mut merged = defaults;
    merge(&mut merged, user);
    merged.insert("experiment".into(), Value::String(experiment.expect("checked").name().into()));
    if let Some(s) = seed {
        merged.insert("seed".into(), Value::Integer(s as i64));
    }
    // Per-section decoding so that one bad section does not hide another.
    for (name, v) in &merged {
        if let Value::Table(_) = v {
            if let Err(e) = decode_section(name, v.clone()) {
                errors.push(format!("{name}: {}", e.message().trim_end()));
            }
        }
    }
    if !errors.is_empty() {
        return Err(ConfigErrors(errors));
    }
    let cfg: Config =
        Value::Table(merged).try_into().map_err(|e: toml::de::Error| ConfigErrors(vec![e.message().into()]))?;
    let sanity = sanity_check(&cfg);
    if sanity.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors(sanity))
    }
}

fn decode_section(name: &str, v: Value) -> Result<(), toml::de::Error> {
    match name {
        "fecap" => v.try_into::<FeCapParams>().map(drop),
        "fet" => v.try_into::<FetParams>().map(drop),
        "protocol" => v.try_into::<Protocol>().map(drop),
        "hysteresis" => v.try_into::<HysteresisConfig>().map(drop),
        "area_sweep" => v.try_into::<AreaSweepConfig>().map(drop),
        "cell" => v.try_into::<CellConfig>().map(drop),
        "mnist" => v.try_into::<MnistConfig>().map(drop),
        "training" => v.try_into::<TrainingConfig>().map(drop),
        "quant" => v.try_into::<QuantConfig>().map(drop),
        "noise" => v.try_into::<NoiseConfig>().map(drop),
        "hw_reg" => v.try_into::<HwRegConfig>().map(drop),
        _ => Ok(()),
    }
}

/// Loads and validates a config file.
pub fn load(path: &Path, kind: Option<ExperimentKind>, seed: Option<u64>) -> Result<Config, ConfigErrors> {
    let mut errors = Vec::new();
    match load_tree(path, &mut Vec::new(), &mut errors) {
        Some(t) if errors.is_empty() => resolve(t, kind, seed),
        _ => Err(ConfigErrors(errors)),
    }
}

/// Validates config text that has no includes.
pub fn validate_config(text: &str, kind: Option<ExperimentKind>) -> Result<Config, ConfigErrors> {
    let mut errors = Vec::new();
    match parse_table(text, "<config>", &mut errors) {
        Some(mut t) if errors.is_empty() => {
            if t.remove("include").is_some() {
                return Err(ConfigErrors(vec!["include: not allowed in inline config".into()]));
            }
            resolve(t, kind, None)
        }
        _ => Err(ConfigErrors(errors)),
    }
}

fn sanity_check(c: &Config) -> Vec<String> {
    let mut e = Vec::new();
    let mut need = |ok: bool, msg: String| {
        if !ok {
            e.push(msg);
        }
    };
    if let Err(err) = c.fecap.validate() {
        need(false, format!("fecap: {err}"));
    }
    if let Err(err) = c.fet.validate() {
        need(false, format!("fet: {err}"));
    }
    let bound = c.fecap.max_step();
    need(
        c.protocol.dt > 0.0 && c.protocol.dt <= bound,
        format!(
            "protocol.dt = {:e} s violates the integrator bound 0 < dt <= 0.1/(gamma*omega0) = {bound:e} s",
            c.protocol.dt
        ),
    );
    for (name, v) in [("rise", c.protocol.rise), ("width", c.protocol.width), ("fall", c.protocol.fall)] {
        need(v > 0.0 && v.is_finite(), format!("protocol.{name} = {v} must be > 0"));
    }
    need(c.protocol.settle >= 0.0, format!("protocol.settle = {} must be >= 0", c.protocol.settle));
    need(c.protocol.amplitude.is_finite(), "protocol.amplitude must be finite".into());

    let h = &c.hysteresis;
    need(h.amplitude > 0.0 && h.amplitude.is_finite(), format!("hysteresis.amplitude = {} must be > 0", h.amplitude));
    need(
        h.frequency_ratio > 0.0 && h.frequency_ratio.is_finite(),
        format!("hysteresis.frequency_ratio = {} must be > 0", h.frequency_ratio),
    );
    need(h.cycles >= 1, "hysteresis.cycles must be >= 1".into());
    need(h.samples_per_quarter >= 1, "hysteresis.samples_per_quarter must be >= 1".into());
    if c.experiment == ExperimentKind::Hysteresis && h.frequency_ratio > 0.0 && h.samples_per_quarter >= 1 {
        let dt = 0.25 / (h.frequency_ratio * c.fecap.f0()) / h.samples_per_quarter as f64;
        need(
            dt <= bound,
            format!("hysteresis sample spacing {dt:e} s violates the integrator bound {bound:e} s; raise samples_per_quarter"),
        );
    }

    let a = &c.area_sweep;
    need(a.area_min > 0.0, format!("area_sweep.area_min = {} must be > 0", a.area_min));
    need(a.area_max > a.area_min, format!("area_sweep.area_max = {} must exceed area_min", a.area_max));
    need(a.points >= 2, "area_sweep.points must be >= 2".into());

    let cell = &c.cell;
    need((1..=16).contains(&cell.bits), format!("cell.bits = {} must be in 1..=16", cell.bits));
    need(cell.r0 > 0.0 && cell.r0.is_finite(), format!("cell.r0 = {} must be > 0", cell.r0));
    need(cell.v_max > 0.0, format!("cell.v_max = {} must be > 0", cell.v_max));
    need(cell.v_read > 0.0, format!("cell.v_read = {} must be > 0", cell.v_read));
    need(cell.points >= 1, "cell.points must be >= 1".into());
    need(cell.inputs >= 1 && cell.outputs >= 1, "cell.inputs and cell.outputs must be >= 1".into());

    let m = &c.mnist;
    need(m.train >= 1 && m.validate >= 1 && m.test >= 1, "mnist split sizes must be >= 1".into());

    let t = &c.training;
    need(!t.hidden.is_empty() && t.hidden.iter().all(|&h| h > 0), "training.hidden must list positive sizes".into());
    need(t.lambda >= 0.0 && t.lambda.is_finite(), format!("training.lambda = {} must be >= 0", t.lambda));
    if let Err(err) = t.params(1, 0).validate() {
        need(false, format!("training: {err}"));
    }

    let q = &c.quant;
    need(
        !q.bits.is_empty() && q.bits.iter().all(|b| (1..=16).contains(b)),
        "quant.bits must list values in 1..=16".into(),
    );
    need(q.windows >= 1, "quant.windows must be >= 1".into());
    need(
        q.rel_window_min > 0.0 && q.rel_window_min <= 1.0,
        format!("quant.rel_window_min = {} must be in (0, 1]", q.rel_window_min),
    );
    need(q.table_points >= 2, "quant.table_points must be >= 2".into());

    let n = &c.noise;
    need((1..=16).contains(&n.bits), format!("noise.bits = {} must be in 1..=16", n.bits));
    need(n.trials >= 1, "noise.trials must be >= 1".into());
    need(n.sigmas.iter().all(|s| s.is_finite() && *s >= 0.0), "noise.sigmas must be finite and >= 0".into());

    let r = &c.hw_reg;
    need(!r.hidden.is_empty() && r.hidden.iter().all(|&h| h > 0), "hw_reg.hidden must list positive sizes".into());
    need((1..=16).contains(&r.bits), format!("hw_reg.bits = {} must be in 1..=16", r.bits));
    need(r.lambda_min > 0.0 && r.lambda_max >= r.lambda_min, "hw_reg needs 0 < lambda_min <= lambda_max".into());
    need(r.lambdas_per_decade >= 1, "hw_reg.lambdas_per_decade must be >= 1".into());
    need(r.branch_area_um2 > 0.0, format!("hw_reg.branch_area_um2 = {} must be > 0", r.branch_area_um2));
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = validate_config("experiment = \"area-sweep\"", None).unwrap();
        assert_eq!(c, Config::new(ExperimentKind::AreaSweep));
        let again = validate_config(&c.to_toml(), None).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn missing_kind_is_named() {
        let e = validate_config("seed = 3", None).unwrap_err();
        assert_eq!(e.0, vec!["experiment: missing experiment kind".to_string()]);
        assert_eq!(validate_config("seed = 3", Some(ExperimentKind::Train)).unwrap().seed, 3);
    }

    #[test]
    fn every_problem_is_reported() {
        let text = "experiment = \"hysteresis\"\nbogus = 1\n[fecap]\narea = \"big\"\ncolour = 2\n[cell]\nbits = 1.5\n";
        let e = validate_config(text, None).unwrap_err().0;
        assert!(e.contains(&"bogus: unknown key".to_string()), "{e:?}");
        assert!(e.contains(&"fecap.colour: unknown key".to_string()), "{e:?}");
        assert!(e.contains(&"fecap.area: expected float, found string".to_string()), "{e:?}");
        assert!(e.contains(&"cell.bits: expected integer, found float".to_string()), "{e:?}");
    }

    #[test]
    fn dt_bound_is_cited() {
        let e = validate_config("experiment = \"program-erase\"\n[protocol]\ndt = 1e-6\n", None).unwrap_err().0;
        assert_eq!(e.len(), 1);
        assert!(e[0].contains("integrator bound"), "{e:?}");
        let e = validate_config(
            "experiment = \"train\"\n[hw_reg]\nbranch_area_um2 = -1\n[quant]\nrel_window_min = 0\n",
            None,
        )
        .unwrap_err()
        .0;
        assert_eq!(e.len(), 2, "{e:?}");
    }

    #[test]
    fn syntax_errors_carry_lines() {
        let e = validate_config("experiment = \"train\"\nseed = = 2\n", None).unwrap_err().0;
        assert!(e[0].starts_with("<config>:2:"), "{e:?}");
    }

    #[test]
    fn conflicting_kinds() {
        let e = validate_config("experiment = \"train\"", Some(ExperimentKind::HwReg)).unwrap_err().0;
        assert!(e[0].contains("hw-reg"));
        assert!(validate_config("experiment = \"nope\"", None).is_err());
        assert!(validate_config("experiment = \"hw-reg\"\n[noise]\nkind = \"uniform\"\n", None).is_err());
    }

    #[test]
    fn includes_merge_with_local_precedence() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("calib")).unwrap();
        std::fs::write(dir.path().join("calib/dev.toml"), "[fecap]\narea = 2000.0\ngamma = 2.0\n").unwrap();
        std::fs::write(
            dir.path().join("run.toml"),
            "include = [\"calib/dev.toml\"]\nexperiment = \"hysteresis\"\n[fecap]\ngamma = 0.5\n",
        )
        .unwrap();
        let c = load(&dir.path().join("run.toml"), None, Some(9)).unwrap();
        assert_eq!((c.fecap.area, c.fecap.gamma, c.seed), (2000.0, 0.5, 9));

        std::fs::write(dir.path().join("a.toml"), "include = \"b.toml\"").unwrap();
        std::fs::write(dir.path().join("b.toml"), "include = [\"a.toml\"]").unwrap();
        let e = load(&dir.path().join("a.toml"), Some(ExperimentKind::Train), None).unwrap_err().0;
        assert!(e[0].contains("include cycle"), "{e:?}");
    }
}
