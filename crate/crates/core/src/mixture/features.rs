//! Feature matrices: (latitude, longitude, occupancy) rows, min-max
//! normalized column-wise to [0, 1].

use serde::{Deserialize, Serialize};

use crate::ingest::BlockFace;

/// Feature dimensionality: latitude, longitude, occupancy.
pub const FEATURE_DIM: usize = 3;

/// Per-column min/max retained so later slices can be projected into the
/// same normalized space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub min: [f64; FEATURE_DIM],
    pub max: [f64; FEATURE_DIM],
}

impl NormParams {
    /// Normalizes one raw value in column `c`. A constant column
    /// (min == max) maps to zero.
    pub fn apply(&self, c: usize, raw: f64) -> f64 {
        let range = self.max[c] - self.min[c];
        if range == 0.0 {
            0.0
        } else {
            (raw - self.min[c]) / range
        }
    }

    /// Inverse of [`NormParams::apply`]; constant columns map back to min.
    pub fn invert(&self, c: usize, normalized: f64) -> f64 {
        self.min[c] + normalized * (self.max[c] - self.min[c])
    }
}

/// n × 3 normalized sample matrix plus the normalization that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: Vec<[f64; FEATURE_DIM]>,
    norm: NormParams,
}

impl FeatureMatrix {
    /// Fits min-max normalization on `raw` and applies it. Every resulting
    /// entry lies in [0, 1]; constant columns become all-zeros.
    pub fn fit(raw: &[[f64; FEATURE_DIM]]) -> Self {
        let mut min = [f64::INFINITY; FEATURE_DIM];
        let mut max = [f64::NEG_INFINITY; FEATURE_DIM];
        for row in raw {
            for c in 0..FEATURE_DIM {
                min[c] = min[c].min(row[c]);
                max[c] = max[c].max(row[c]);
            }
        }
        if raw.is_empty() {
            min = [0.0; FEATURE_DIM];
            max = [0.0; FEATURE_DIM];
        }
        let norm = NormParams { min, max };
        Self::with_norm(raw, norm)
    }

    /// Applies an existing normalization without refitting. Values outside
    /// [0, 1] are permitted (clamp-free transform).
    pub fn with_norm(raw: &[[f64; FEATURE_DIM]], norm: NormParams) -> Self {
        let rows = raw
            .iter()
            .map(|row| {
                let mut out = [0.0; FEATURE_DIM];
                for c in 0..FEATURE_DIM {
                    out[c] = norm.apply(c, row[c]);
                }
                out
            })
            .collect();
        FeatureMatrix { rows, norm }
    }

    /// Raw (lat, lon, occupancy) rows for a set of block-faces and their
    /// per-block occupancy values, ready for [`FeatureMatrix::fit`].
    pub fn raw_rows(blockfaces: &[&BlockFace], occupancy: &[f64]) -> Vec<[f64; FEATURE_DIM]> {
        debug_assert_eq!(blockfaces.len(), occupancy.len());
        blockfaces
            .iter()
            .zip(occupancy)
            .map(|(b, &o)| {
                let (lat, lon) = b.midpoint();
                [lat, lon, o]
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[[f64; FEATURE_DIM]] {
        &self.rows
    }

    pub fn norm(&self) -> &NormParams {
        &self.norm
    }

    /// Per-column mean of the normalized rows.
    pub fn column_means(&self) -> [f64; FEATURE_DIM] {
        let mut mean = [0.0; FEATURE_DIM];
        for row in &self.rows {
            for c in 0..FEATURE_DIM {
                mean[c] += row[c];
            }
        }
        let n = self.rows.len().max(1) as f64;
        for m in &mut mean {
            *m /= n;
        }
        mean
    }

    /// Per-column population variance of the normalized rows.
    pub fn column_variances(&self) -> [f64; FEATURE_DIM] {
        let mean = self.column_means();
        let mut var = [0.0; FEATURE_DIM];
        for row in &self.rows {
            for c in 0..FEATURE_DIM {
                let d = row[c] - mean[c];
                var[c] += d * d;
            }
        }
        let n = self.rows.len().max(1) as f64;
        for v in &mut var {
            *v /= n;
        }
        var
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_normalizes_to_unit_interval() {
        let raw = vec![[47.0, -122.4, 0.2], [47.5, -122.0, 0.8], [47.2, -122.2, 0.5]];
        let f = FeatureMatrix::fit(&raw);
        for row in f.rows() {
            for &v in row {
                assert!((0.0..=1.0).contains(&v), "value {v} outside [0,1]");
            }
        }
        // Extremes hit exactly 0 and 1 in each column.
        for c in 0..FEATURE_DIM {
            let col: Vec<f64> = f.rows().iter().map(|r| r[c]).collect();
            assert_eq!(col.iter().cloned().fold(f64::INFINITY, f64::min), 0.0);
            assert_eq!(col.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 1.0);
        }
    }

    #[test]
    fn constant_column_becomes_zeros() {
        let raw = vec![[47.0, -122.0, 0.3], [47.0, -122.5, 0.9]];
        let f = FeatureMatrix::fit(&raw);
        assert!(f.rows().iter().all(|r| r[0] == 0.0));
    }

    #[test]
    fn normalization_round_trips() {
        let raw = vec![[47.61, -122.34, 0.25], [47.63, -122.36, 0.75], [47.60, -122.30, 1.1]];
        let f = FeatureMatrix::fit(&raw);
        for (orig, row) in raw.iter().zip(f.rows()) {
            for c in 0..FEATURE_DIM {
                let back = f.norm().invert(c, row[c]);
                assert!(
                    (back - orig[c]).abs() <= 1e-12,
                    "column {c}: {back} != {}",
                    orig[c]
                );
            }
        }
    }

    #[test]
    fn with_norm_permits_values_outside_unit_interval() {
        let norm = NormParams {
            min: [0.0, 0.0, 0.0],
            max: [1.0, 1.0, 0.5],
        };
        let f = FeatureMatrix::with_norm(&[[0.5, 0.5, 1.0]], norm);
        assert_eq!(f.rows()[0][2], 2.0);
    }
}
