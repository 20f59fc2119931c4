//! CSV emission with full-precision floats and atomic file replacement.

use std::io::Write;
use std::path::Path;

use crate::CliError;

/// 17 significant digits: enough to round-trip any f64. Negative zero is
/// written as zero.
pub fn float(v: f64) -> String {
    format!("{:.16e}", if v == 0.0 { 0.0 } else { v })
}

/// Nine significant digits: enough to round-trip any f32.
pub fn float32(v: f32) -> String {
    format!("{:.8e}", if v == 0.0 { 0.0 } else { v })
}

/// Rows of string fields under a header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Header of the accuracy results written by the MNIST experiments.
pub const RESULT_HEADER: [&str; 8] = ["experiment", "hidden", "bits", "window", "lambda", "sigma", "trial", "accuracy"];

/// One accuracy result. `bits = 0` marks the float network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResultRow {
    pub experiment: &'static str,
    pub hidden: usize,
    pub bits: u32,
    /// Relative window.
    pub window: f32,
    pub lambda: f32,
    pub sigma: f64,
    pub trial: usize,
    pub accuracy: f64,
}

impl ResultRow {
    pub fn fields(&self) -> Vec<String> {
        vec![
            self.experiment.to_string(),
            self.hidden.to_string(),
            self.bits.to_string(),
            float32(self.window),
            float32(self.lambda),
            float(self.sigma),
            self.trial.to_string(),
            float(self.accuracy),
        ]
    }
}
