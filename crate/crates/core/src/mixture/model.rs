//! Fitted mixture models and responsibility matrices.

use serde::{Deserialize, Serialize};

use super::features::{NormParams, FEATURE_DIM};

/// Mixture parameters produced by one M-step: weights on the probability
/// simplex, component means, and diagonal variances (floored).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianParams {
    pub weights: Vec<f64>,
    pub means: Vec<[f64; FEATURE_DIM]>,
    pub variances: Vec<[f64; FEATURE_DIM]>,
}

/// A fitted zone model: mixture parameters in normalized feature space, the
/// normalization itself, and the hard assignments of the training samples.
///
/// Serializes losslessly to JSON (floats round-trip exactly).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneModel {
    pub k: usize,
    pub weights: Vec<f64>,
    pub means: Vec<[f64; FEATURE_DIM]>,
    pub variances: Vec<[f64; FEATURE_DIM]>,
    pub norm: NormParams,
    pub log_likelihood: f64,
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl ZoneModel {
    /// Denormalized (latitude, longitude) of each component center.
    pub fn spatial_centers(&self) -> Vec<[f64; 2]> {
        self.means
            .iter()
            .map(|m| [self.norm.invert(0, m[0]), self.norm.invert(1, m[1])])
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization cannot fail") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// n × k posterior matrix; each row sums to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    n: usize,
    k: usize,
    r: Vec<f64>, // row-major
}

impl Responsibilities {
    pub(crate) fn from_rows(n: usize, k: usize, r: Vec<f64>) -> Self {
        debug_assert_eq!(r.len(), n * k);
        Responsibilities { n, k, r }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.r[i * self.k + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.r[i * self.k..(i + 1) * self.k]
    }

    /// Argmax component per row; ties break toward the lowest index.
    pub fn hard_assignments(&self) -> Vec<usize> {
        (0..self.n)
            .map(|i| {
                let row = self.row(i);
                let mut best = 0usize;
                for (j, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hard_assignment_ties_break_low() {
        let r = Responsibilities::from_rows(1, 3, vec![0.4, 0.4, 0.2]);
        assert_eq!(r.hard_assignments(), vec![0]);
    }

    #[test]
    fn model_json_round_trip_is_lossless() {
        let model = ZoneModel {
            k: 2,
            weights: vec![0.3333333333333333, 0.6666666666666667],
            means: vec![[0.1, 0.2, 0.3], [1.0 / 3.0, 2.0 / 7.0, 0.9]],
            variances: vec![[1e-6, 0.04, 0.01], [0.25, 1.0 / 81.0, 3e-5]],
            norm: NormParams {
                min: [47.606, -122.355, 0.0],
                max: [47.62, -122.33, 1.2345678901234567],
            },
            log_likelihood: -123.45678901234567,
            assignments: vec![0, 1, 1, 0],
            seed: 42,
        };
        let parsed = ZoneModel::from_json(&model.to_json()).unwrap();
        assert_eq!(parsed, model);
        // Float fields must be bit-identical, not just approximately equal.
        assert!(parsed.log_likelihood.to_bits() == model.log_likelihood.to_bits());
        assert!(parsed.norm.max[2].to_bits() == model.norm.max[2].to_bits());
    }
}
