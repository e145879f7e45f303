//! Spatial autocorrelation: weight-matrix constructions, Moran's I, and
//! significance testing across occupancy instances.

mod moran;
mod significance;
mod weights;

pub use moran::morans_i;
pub use significance::{
    significance, significance_sweep, MoranReport, SignificanceMethod, SliceWeights, SweepOutcome,
};
pub use weights::{build_weights, WeightMatrix, WeightMode, WeightSpec};

use thiserror::Error;

/// Two-sided significance level used throughout.
pub const ALPHA: f64 = 0.01;

#[derive(Debug, Error)]
pub enum SpatialError {
    #[error("need at least 2 block-faces, got {0}")]
    TooFewBlocks(usize),
    #[error("knn requires 1 <= k < n, got k = {k}, n = {n}")]
    InvalidK { k: usize, n: usize },
    #[error("labels length {labels} does not match block count {n}")]
    LabelMismatch { labels: usize, n: usize },
    #[error("occupancy length {occupancy} does not match weight dimension {n}")]
    LengthMismatch { occupancy: usize, n: usize },
    #[error("occupancy is constant; Moran's I denominator is zero")]
    DegenerateVariance,
    #[error("weight matrix has zero total weight")]
    DegenerateWeights,
    #[error("analytic significance needs n >= 4, got {0}")]
    TooFewForAnalytic(usize),
    #[error("permutation test needs at least 100 permutations, got {0}")]
    TooFewPermutations(usize),
    #[error("no usable slices in sweep ({degenerate} degenerate)")]
    EmptySweep { degenerate: usize },
    #[error("no weight matrix for slice {0}")]
    MissingSliceWeights(String),
}
