//! Brute-force reference implementations used by tests and acceptance
//! criteria. Each oracle evaluates its defining formula literally, with no
//! code shared with the production paths it checks.

use chrono::NaiveDateTime;

use crate::ingest::Transaction;
use crate::schedule::Schedule;
use crate::spatial::SpatialError;

/// Moran's I by the literal double sum:
/// `I = N / S0 * [sum_i sum_j w_ij (o_i - m)(o_j - m)] / [sum_i (o_i - m)^2]`
/// over a row-major n×n weight slice.
pub fn oracle_morans_i(occupancy: &[f64], w: &[f64], n: usize) -> Result<f64, SpatialError> {
    assert_eq!(occupancy.len(), n);
    assert_eq!(w.len(), n * n);

    let mut mean = 0.0;
    for &o in occupancy {
        mean += o;
    }
    mean /= n as f64;

    let mut denominator = 0.0;
    for i in 0..n {
        denominator += (occupancy[i] - mean) * (occupancy[i] - mean);
    }
    if denominator == 0.0 {
        return Err(SpatialError::DegenerateVariance);
    }

    let mut s0 = 0.0;
    let mut numerator = 0.0;
    for i in 0..n {
        for j in 0..n {
            s0 += w[i * n + j];
            numerator += w[i * n + j] * (occupancy[i] - mean) * (occupancy[j] - mean);
        }
    }
    if s0 == 0.0 {
        return Err(SpatialError::DegenerateWeights);
    }

    Ok((n as f64 / s0) * (numerator / denominator))
}

/// Arithmetic mean by direct summation.
pub fn oracle_mean(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    for &v in values {
        sum += v;
    }
    sum / values.len() as f64
}

/// Mixture M-step moments by the literal update formulas: weights
/// `sum_i r_ij / n`, means `sum_i r_ij x_i / sum_i r_ij`, diagonal variances
/// `sum_i r_ij (x_i - mu_j)^2 / sum_i r_ij`. No variance floor is applied.
#[allow(clippy::type_complexity)]
pub fn oracle_weighted_moments(
    rows: &[[f64; 3]],
    resp: &[f64],
    k: usize,
) -> (Vec<f64>, Vec<[f64; 3]>, Vec<[f64; 3]>) {
    let n = rows.len();
    assert_eq!(resp.len(), n * k);

    let mut weights = vec![0.0; k];
    let mut means = vec![[0.0; 3]; k];
    let mut variances = vec![[0.0; 3]; k];

    for j in 0..k {
        let mut mass = 0.0;
        for i in 0..n {
            mass += resp[i * k + j];
        }
        weights[j] = mass / n as f64;

        for d in 0..3 {
            let mut acc = 0.0;
            for i in 0..n {
                acc += resp[i * k + j] * rows[i][d];
            }
            means[j][d] = acc / mass;
        }
        for d in 0..3 {
            let mut acc = 0.0;
            for i in 0..n {
                let diff = rows[i][d] - means[j][d];
                acc += resp[i * k + j] * diff * diff;
            }
            variances[j][d] = acc / mass;
        }
    }
    (weights, means, variances)
}

/// Hourly occupancy for one block by brute force: scans every minute of the
/// hour, counting transactions active at that minute (truncated at the end
/// of the paid window of their start date), and averages the 60 clipped
/// minute ratios by direct summation.
pub fn oracle_hourly_occupancy(
    transactions: &[Transaction],
    block_id: &str,
    supply: u32,
    schedule: &Schedule,
    hour_start: NaiveDateTime,
) -> f64 {
    let mut sum = 0.0;
    for minute in 0..60 {
        let m = hour_start + chrono::Duration::minutes(minute);
        let mut active = 0u32;
        for tx in transactions {
            if tx.block_id != block_id {
                continue;
            }
            let Some((open, close)) = schedule.window_on(tx.start.date()) else {
                continue;
            };
            let end = (tx.start + chrono::Duration::minutes(tx.duration_minutes as i64)).min(close);
            let begin = tx.start.max(open);
            if begin <= m && m < end {
                active += 1;
            }
        }
        let ratio = active as f64 / supply as f64;
        sum += ratio.min(1.5);
    }
    sum / 60.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_hand_arithmetic() {
        // n = 2, symmetric unit weights, o = (0, 1): mean 1/2, deviations
        // -1/2 and 1/2. Numerator = 2 * (1 * -1/4) = -1/2, denominator = 1/2,
        // S0 = 2, so I = (2/2) * (-1/2)/(1/2) = -1.
        let w = vec![0.0, 1.0, 1.0, 0.0];
        let i = oracle_morans_i(&[0.0, 1.0], &w, 2).unwrap();
        assert!((i - (-1.0)).abs() < 1e-15);
    }

    #[test]
    fn constant_occupancy_raises_the_shared_degenerate_error() {
        let w = vec![0.0, 1.0, 1.0, 0.0];
        assert!(matches!(
            oracle_morans_i(&[0.7, 0.7], &w, 2),
            Err(SpatialError::DegenerateVariance)
        ));
    }

    #[test]
    fn oracle_mean_is_the_plain_average() {
        assert_eq!(oracle_mean(&[0.4, 0.6]), 0.5);
        assert_eq!(oracle_mean(&[1.0]), 1.0);
    }
}
