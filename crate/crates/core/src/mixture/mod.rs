//! Gaussian mixture zone models over (latitude, longitude, occupancy)
//! features: EM fitting with restarts, BIC model selection, and hard
//! assignments.

mod em;
mod features;
mod model;
mod select;

pub use em::{assign, e_step, em_fit, em_fit_traced, log_likelihood, m_step, FitTrace};
pub use features::{FeatureMatrix, NormParams, FEATURE_DIM};
pub use model::{GaussianParams, Responsibilities, ZoneModel};
pub use select::{bic, degrees_of_freedom, select_k, KSelection};

pub(crate) use select::grid_blockfaces;

use thiserror::Error;

/// Floor applied to every diagonal variance entry, in normalized feature
/// units. Prevents singular densities when block-faces share coordinates.
pub const VARIANCE_FLOOR: f64 = 1e-6;

/// A component whose responsibility mass falls below `MASS_FLOOR_PER_SAMPLE
/// * n` is treated as collapsed.
pub const MASS_FLOOR_PER_SAMPLE: f64 = 1e-8;

/// EM termination and restart controls.
#[derive(Debug, Clone, PartialEq)]
pub struct EmConfig {
    /// Convergence threshold on the change in log likelihood.
    pub epsilon: f64,
    /// Iteration cap per restart.
    pub max_iter: usize,
    /// Number of random initializations; the best converged fit wins.
    pub restarts: usize,
    /// Base seed; each restart derives its own child seed.
    pub seed: u64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            epsilon: 1e-6,
            max_iter: 500,
            restarts: 10,
            seed: 0,
        }
    }
}

impl EmConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Error)]
pub enum MixtureError {
    #[error("need at least k samples: n = {n}, k = {k}")]
    TooFewSamples { n: usize, k: usize },
    #[error("k must be >= 1")]
    ZeroComponents,
    #[error("model dimensions do not match features: {detail}")]
    DimensionMismatch { detail: String },
    #[error("variance {value} below floor {floor} in component {component}")]
    VarianceBelowFloor {
        component: usize,
        value: f64,
        floor: f64,
    },
    #[error("component {component} collapsed (mass {mass:.3e})")]
    ComponentCollapse { component: usize, mass: f64 },
    #[error("all {restarts} restarts collapsed while fitting {slice}")]
    FitFailure { restarts: usize, slice: String },
    #[error("empty k range")]
    EmptyKRange,
    #[error("features were normalized with different parameters than the model")]
    NormMismatch,
    #[error(transparent)]
    Ingest(#[from] crate::ingest::IngestError),
    #[error("block id `{0}` in grid has no matching block-face")]
    UnknownBlock(String),
}
