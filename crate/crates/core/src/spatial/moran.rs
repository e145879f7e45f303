//! Global Moran's I statistic.

use super::weights::WeightMatrix;
use super::SpatialError;

/// Moran's I of an occupancy vector under a spatial weight matrix:
///
/// ```text
/// I = N / (sum_ij w_ij) * [sum_ij w_ij (o_i - mean)(o_j - mean)] / [sum_i (o_i - mean)^2]
/// ```
///
/// Ranges over [-1, 1] for row-reasonable weights: -1 is perfect dispersion,
/// +1 perfect clustering of similar values.
pub fn morans_i(occupancy: &[f64], weights: &WeightMatrix) -> Result<f64, SpatialError> {
    let n = weights.n();
    if occupancy.len() != n {
        return Err(SpatialError::LengthMismatch {
            occupancy: occupancy.len(),
            n,
        });
    }

    let mean = occupancy.iter().sum::<f64>() / n as f64;
    let deviations: Vec<f64> = occupancy.iter().map(|o| o - mean).collect();

    let variance_sum: f64 = deviations.iter().map(|d| d * d).sum();
    if variance_sum == 0.0 {
        return Err(SpatialError::DegenerateVariance);
    }
    let total_weight = weights.total();
    if total_weight == 0.0 {
        return Err(SpatialError::DegenerateWeights);
    }

    // Row-by-row inner products; the brute-force oracle uses the literal
    // double sum instead.
    let mut cross = 0.0;
    for (i, &di) in deviations.iter().enumerate() {
        let row = weights.row(i);
        let mut row_dot = 0.0;
        for (j, &dj) in deviations.iter().enumerate() {
            row_dot += row[j] * dj;
        }
        cross += di * row_dot;
    }

    Ok((n as f64 / total_weight) * (cross / variance_sum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::BlockFace;
    use crate::spatial::weights::{build_weights, WeightMode, WeightSpec};

    fn ring_faces(n: usize) -> Vec<BlockFace> {
        (0..n)
            .map(|i| {
                let theta = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                let lat = 0.01 * theta.sin();
                let lon = 0.01 * theta.cos();
                BlockFace::new(format!("r{i}"), (lat, lon), (lat, lon), 4, "X", "T").unwrap()
            })
            .collect()
    }

    #[test]
    fn alternating_ring_is_perfect_dispersion() {
        let faces = ring_faces(12);
        let w = build_weights(&faces, &WeightSpec::Knn { k: 2 }).unwrap();
        let occupancy: Vec<f64> = (0..12).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let i = morans_i(&occupancy, &w).unwrap();
        assert!((i - (-1.0)).abs() < 1e-12, "ring I = {i}, expected -1");
    }

    #[test]
    fn two_blocks_within_weights_is_perfect_clustering() {
        let n = 10;
        let labels: Vec<usize> = (0..n).map(|i| i / 5).collect();
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j && labels[i] == labels[j] {
                    w[i * n + j] = 1.0;
                }
            }
        }
        let w = WeightMatrix::from_dense(w, n, WeightMode::AreaConnections).unwrap();
        let occupancy: Vec<f64> = labels.iter().map(|&l| if l == 0 { 0.2 } else { 0.9 }).collect();
        let i = morans_i(&occupancy, &w).unwrap();
        assert!((i - 1.0).abs() < 1e-12, "clustered I = {i}, expected 1");
    }

    #[test]
    fn constant_occupancy_is_degenerate() {
        let faces = ring_faces(6);
        let w = build_weights(&faces, &WeightSpec::Knn { k: 2 }).unwrap();
        assert!(matches!(
            morans_i(&[0.5; 6], &w),
            Err(SpatialError::DegenerateVariance)
        ));
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let faces = ring_faces(6);
        let w = build_weights(&faces, &WeightSpec::Knn { k: 2 }).unwrap();
        assert!(matches!(
            morans_i(&[0.5; 5], &w),
            Err(SpatialError::LengthMismatch { .. })
        ));
    }
}
