//! Temporal stability of the spatial demand model: repeatability-based
//! consistency, k-means dispersion of component centers, seasonal and
//! price-change occupancy deltas, and within-zone variance.

mod consistency;
mod deltas;
mod dispersion;
mod kmeans;
mod variance;

pub use consistency::{
    consistency_metric, consistency_table, AnchorResult, ConsistencyReport, ConsistencyTable,
};
pub use deltas::{occupancy_diff, seasonal_delta, OccupancyDiffRow, SeasonalDeltaRow};
pub use dispersion::{centroid_dispersion, fit_per_date_models, CentroidDispersion};
pub use kmeans::{kmeans, KMeansFit};
pub use variance::zone_variance;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TemporalError {
    #[error("need at least 2 dates at {detail}, found {found}")]
    TooFewDates { detail: String, found: usize },
    #[error("fewer than 2 usable anchors at {detail} ({skipped} fits failed)")]
    TooFewAnchors { detail: String, skipped: usize },
    #[error("models disagree on k: expected {expected}, found {found}")]
    MixedK { expected: usize, found: usize },
    #[error("need at least 2 models, got {0}")]
    TooFewModels(usize),
    #[error("labels length {labels} does not match block count {n}")]
    LabelMismatch { labels: usize, n: usize },
    #[error("every label group is a singleton; variance undefined")]
    AllSingletonGroups,
    #[error("date range {0} matched no grid timestamps")]
    EmptyRange(String),
    #[error(transparent)]
    Mixture(#[from] crate::mixture::MixtureError),
    #[error(transparent)]
    Ingest(#[from] crate::ingest::IngestError),
}
