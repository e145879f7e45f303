//! Ingest: transaction, supply, and geometry tables to hourly occupancy grids.
//!
//! Occupancy at a block-face is estimated by counting active transactions per
//! minute, dividing by the block-face supply, clipping at 150%, and averaging
//! the 60 minute values of each paid hour.

mod grid;
mod io;
mod types;

pub use grid::{build_grid, build_grid_over, slice_mean, GridBuild, IngestReport, OccupancyGrid};
pub use io::{
    read_blockfaces_csv, read_grid_csv, read_transactions_csv, write_blockfaces_csv,
    write_grid_csv, write_transactions_csv,
};
pub use types::{BlockFace, PaymentSource, Transaction};

use thiserror::Error;

/// Occupancy fractions are clipped at 150%.
pub const OCCUPANCY_CEILING: f64 = 1.5;

/// One parking space is estimated per 25 feet of legal parking zone.
pub const FEET_PER_SPACE: f64 = 25.0;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("length must be positive, got {0}")]
    InvalidLength(f64),
    #[error("block {id}: coordinate out of range (lat {lat}, lon {lon})")]
    InvalidCoordinate { id: String, lat: f64, lon: f64 },
    #[error("{file} line {line}: {message}")]
    Malformed {
        file: String,
        line: u64,
        message: String,
    },
    #[error("{file}: missing required column `{column}`")]
    MissingColumn { file: String, column: String },
    #[error("{file}: {source}")]
    Io {
        file: String,
        #[source]
        source: std::io::Error,
    },
    #[error("no timestamps match the requested slice ({detail})")]
    EmptySlice { detail: String },
    #[error("grid rows ({rows}) do not align with block ids ({ids})")]
    Misaligned { rows: usize, ids: usize },
    #[error("grid value {value} outside [0, {OCCUPANCY_CEILING}] at row {row}, column {col}")]
    ValueOutOfRange { value: f64, row: usize, col: usize },
    #[error("duplicate block id `{0}`")]
    DuplicateBlock(String),
}

/// Estimated spaces for a legal parking zone of `length_feet`:
/// one space per full 25-foot increment.
pub fn estimate_supply(length_feet: f64) -> Result<u32, IngestError> {
    if !(length_feet > 0.0) {
        return Err(IngestError::InvalidLength(length_feet));
    }
    Ok((length_feet / FEET_PER_SPACE).floor() as u32)
}

/// Occupancy fraction for one minute: active transactions over supply,
/// clipped at [`OCCUPANCY_CEILING`]. Requires `supply > 0`; zero-supply
/// block-faces are excluded before this point and listed in the ingest
/// report.
pub fn minute_occupancy(active_count: u32, supply: u32) -> f64 {
    debug_assert!(supply > 0, "zero-supply blocks must be excluded upstream");
    (active_count as f64 / supply as f64).min(OCCUPANCY_CEILING)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn supply_exact_multiple() {
        assert_eq!(estimate_supply(100.0).unwrap(), 4);
    }

    #[test]
    fn supply_single_increment() {
        assert_eq!(estimate_supply(25.0).unwrap(), 1);
    }

    #[test]
    fn supply_floors_partial_increment() {
        assert_eq!(estimate_supply(24.0).unwrap(), 0);
    }

    #[test]
    fn supply_rejects_non_positive_length() {
        assert!(matches!(
            estimate_supply(0.0),
            Err(IngestError::InvalidLength(_))
        ));
        assert!(matches!(
            estimate_supply(-3.0),
            Err(IngestError::InvalidLength(_))
        ));
    }

    #[test]
    fn minute_occupancy_direct_ratio() {
        assert_eq!(minute_occupancy(3, 6), 0.5);
    }

    #[test]
    fn minute_occupancy_clips_at_150_percent() {
        assert_eq!(minute_occupancy(9, 5), 1.5);
    }

    #[test]
    fn minute_occupancy_zero_active() {
        assert_eq!(minute_occupancy(0, 8), 0.0);
    }
}
