use std::ops::Range;
use std::path::Path;

use ndarray::{Array2, Axis};

use crate::idx::{read_pair, IdxArray, IdxError};

pub const N_CLASSES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Validate,
    Test,
}

/// Images as rows of intensities in [0, 1] with their class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub images: Array2<f32>,
    pub labels: Vec<u8>,
    pub split: Split,
}

impl Dataset {
    pub fn new(images: Array2<f32>, labels: Vec<u8>, split: Split) -> Self {
        assert_eq!(images.nrows(), labels.len(), "one label per image");
        Self { images, labels, split }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.images.ncols()
    }

    /// Reads `range` of an IDX image/label pair.
    pub fn load_idx(images: &Path, labels: &Path, range: Range<usize>, split: Split) -> Result<Self, IdxError> {
        let (x, y) = read_pair(images, labels)?;
        Self::from_idx(&x, &y, images, labels, range, split)
    }

    fn from_idx(
        x: &IdxArray,
        y: &IdxArray,
        images: &Path,
        labels: &Path,
        range: Range<usize>,
        split: Split,
    ) -> Result<Self, IdxError> {
        let n = x.dims[0];
        if range.end > n || range.start > range.end {
            return Err(IdxError::DimensionMismatch {
                path: images.into(),
                detail: format!("rows {range:?} requested from {n} images"),
            });
        }
        if let Some(&bad) = y.data.iter().find(|&&l| l as usize >= N_CLASSES) {
            return Err(IdxError::DimensionMismatch { path: labels.into(), detail: format!("label {bad}") });
        }
        let width: usize = x.dims[1..].iter().product();
        let pixels = x.data[range.start * width..range.end * width].iter().map(|&b| f32::from(b) / 255.0).collect();
        let images = Array2::from_shape_vec((range.len(), width), pixels).expect("shape matches payload");
        Ok(Self::new(images, y.data[range].to_vec(), split))
    }

    /// Rows `idx` as a new dataset.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self::new(self.images.select(Axis(0), idx), idx.iter().map(|&i| self.labels[i]).collect(), self.split)
    }
}

/// Train/validate/test triple.
#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub train: Dataset,
    pub validate: Dataset,
    pub test: Dataset,
}

/// Sizes drawn from the MNIST files: training rows come from the start of
/// the training file and validation rows from its end, so they never
/// overlap. Test rows are spread evenly over the whole test file, because its
/// two halves come from writer populations of different difficulty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSizes {
    pub train: usize,
    pub validate: usize,
    pub test: usize,
}

impl SplitSizes {
    pub const DESK: Self = Self { train: 10_000, validate: 2_000, test: 2_000 };
    pub const FULL: Self = Self { train: 50_000, validate: 10_000, test: 10_000 };
}

pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

/// Loads the three splits from a directory holding the four MNIST files.
pub fn load_mnist(dir: &Path, sizes: SplitSizes) -> Result<Splits, IdxError> {
    let (ti, tl) = (dir.join(TRAIN_IMAGES), dir.join(TRAIN_LABELS));
    let (x, y) = read_pair(&ti, &tl)?;
    let n_train_file = y.dims[0];
    if sizes.train + sizes.validate > n_train_file {
        return Err(IdxError::DimensionMismatch {
            path: tl,
            detail: format!("{} + {} rows requested from {n_train_file}", sizes.train, sizes.validate),
        });
    }
    Ok(Splits {
        train: Dataset::from_idx(&x, &y, &ti, &tl, 0..sizes.train, Split::Train)?,
        validate: Dataset::from_idx(&x, &y, &ti, &tl, n_train_file - sizes.validate..n_train_file, Split::Validate)?,
        test: load_spread(&dir.join(TEST_IMAGES), &dir.join(TEST_LABELS), sizes.test)?,
    })
}

/// `n` rows at evenly spaced positions of an IDX pair.
fn load_spread(images: &Path, labels: &Path, n: usize) -> Result<Dataset, IdxError> {
    let (x, y) = read_pair(images, labels)?;
    let total = y.dims[0];
    let all = Dataset::from_idx(&x, &y, images, labels, 0..total, Split::Test)?;
    if n > total {
        return Err(IdxError::DimensionMismatch {
            path: labels.into(),
            detail: format!("{n} rows requested from {total}"),
        });
    }
    let idx: Vec<usize> = (0..n).map(|k| k * total / n).collect();
    Ok(all.select(&idx))
}
