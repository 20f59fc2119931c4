//! MNIST perceptrons on multi-bit FeFET weight cells: training, weight
//! quantization, hardware-model inference, conductance-noise Monte Carlo and
//! hardware-aware selection of the regularization strength.

pub mod container;
pub mod dataset;
pub mod hw;
pub mod idx;
pub mod mlp;
pub mod quant;
pub mod select;

pub use dataset::{load_mnist, Dataset, Split, SplitSizes, Splits};
pub use hw::{hw_accuracy, hw_forward, noise_mc, HiddenActivation, HwError, HwWeightModel, NoiseScope, NoiseSpec};
pub use mlp::{evaluate, train, Mlp, TrainError, TrainParams};
pub use quant::{window_grid, QuantConfig, QuantizedMlp};
pub use select::{hw_aware_regularization, optimize_window, Evaluator, SelectError, Selection, WindowSearch};

/// Placeholder footprint of one ladder branch (one bit of one cell), µm².
pub const DEFAULT_BRANCH_AREA_UM2: f64 = 0.05;

/// Footprint of the differential arrays holding both weight layers.
pub fn array_area(n_in: usize, hidden: usize, n_out: usize, bits: u32, branch_area: f64) -> f64 {
    ((n_in * hidden + hidden * n_out) * 2 * bits as usize) as f64 * branch_area
}
