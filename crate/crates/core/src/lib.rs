//! Demand-homogeneous curbside parking zones.
//!
//! The library turns raw paid-parking transaction tables into hourly
//! occupancy grids, partitions block-faces into zones by fitting
//! diagonal-covariance Gaussian mixtures over (latitude, longitude,
//! occupancy) features, selects the zone count by BIC, and validates the
//! partition with Moran's I spatial autocorrelation and a
//! repeatability-based temporal consistency metric.
//!
//! Pipeline stages map onto the top-level modules:
//!
//! * [`ingest`] — transaction/supply/geometry tables to [`OccupancyGrid`]
//! * [`mixture`] — EM fitting, BIC model selection, hard assignments
//! * [`spatial`] — spatial weight matrices, Moran's I, significance sweeps
//! * [`temporal`] — consistency metric, centroid dispersion, occupancy deltas
//! * [`synth`] — deterministic synthetic data plus brute-force oracles

pub mod geo;
pub mod ingest;
pub mod mixture;
pub mod schedule;
pub mod seed;
pub mod spatial;
pub mod synth;
pub mod temporal;

pub use ingest::{
    BlockFace, IngestError, IngestReport, OccupancyGrid, PaymentSource, Transaction,
};
pub use mixture::{EmConfig, FeatureMatrix, MixtureError, NormParams, ZoneModel};
pub use schedule::{Schedule, ScheduleError};
pub use spatial::{MoranReport, SignificanceMethod, SpatialError, WeightMatrix, WeightSpec};
pub use synth::{SynthError, SynthSpec};
pub use temporal::{ConsistencyReport, TemporalError};
