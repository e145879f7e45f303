//! Significance of Moran's I: analytic moments under the randomization
//! assumption, or a seeded permutation test, swept across occupancy
//! instances.

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::moran::morans_i;
use super::weights::WeightMatrix;
use super::{SpatialError, ALPHA};
use crate::ingest::OccupancyGrid;
use crate::seed;

/// How to turn a Moran's I value into a p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignificanceMethod {
    /// Closed-form mean and variance of I under the randomization
    /// assumption, with a two-sided normal p-value.
    Analytic,
    /// Two-sided tail fraction among `m` seeded occupancy permutations,
    /// with +1 smoothing on numerator and denominator.
    Permutation { m: usize, seed: u64 },
}

/// Moran's I with its significance assessment for one occupancy instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MoranReport {
    pub i: f64,
    /// Expected I under the null: -1/(N-1).
    pub expected_i: f64,
    pub z_score: f64,
    pub p_value: f64,
    /// Two-sided p below [`ALPHA`].
    pub significant: bool,
    /// Weight-construction tag, e.g. `knn(5)` or `gmm_connections`.
    pub mode: String,
    pub slice_date: Option<NaiveDate>,
    pub slice_hour: Option<u32>,
    /// All-zero weight rows (singleton label groups) in the matrix used.
    pub zero_rows: usize,
}

/// Expected value of Moran's I under the null hypothesis.
pub fn expected_i(n: usize) -> f64 {
    -1.0 / (n as f64 - 1.0)
}

/// Variance of I under the randomization assumption (Cliff-Ord moments),
/// valid for asymmetric weight matrices.
fn randomization_variance(deviations: &[f64], weights: &WeightMatrix) -> f64 {
    let n = weights.n();
    let nf = n as f64;

    let s0: f64 = weights.total();
    let mut s1 = 0.0;
    let mut row_sums = vec![0.0; n];
    let mut col_sums = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            let wij = weights.get(i, j);
            let wji = weights.get(j, i);
            s1 += (wij + wji) * (wij + wji);
            row_sums[i] += wij;
            col_sums[j] += wij;
        }
    }
    s1 *= 0.5;
    let s2: f64 = (0..n)
        .map(|i| {
            let t = row_sums[i] + col_sums[i];
            t * t
        })
        .sum();

    let m2 = deviations.iter().map(|d| d * d).sum::<f64>() / nf;
    let m4 = deviations.iter().map(|d| d.powi(4)).sum::<f64>() / nf;
    let b2 = m4 / (m2 * m2);

    let a = nf * ((nf * nf - 3.0 * nf + 3.0) * s1 - nf * s2 + 3.0 * s0 * s0);
    let b = b2 * ((nf * nf - nf) * s1 - 2.0 * nf * s2 + 6.0 * s0 * s0);
    let c = (nf - 1.0) * (nf - 2.0) * (nf - 3.0) * s0 * s0;
    let e_i = expected_i(n);
    (a - b) / c - e_i * e_i
}

/// Assesses the significance of Moran's I for one occupancy instance.
pub fn significance(
    occupancy: &[f64],
    weights: &WeightMatrix,
    method: &SignificanceMethod,
) -> Result<MoranReport, SpatialError> {
    let observed = morans_i(occupancy, weights)?;
    let n = weights.n();
    let e_i = expected_i(n);

    let (z_score, p_value) = match method {
        SignificanceMethod::Analytic => {
            if n < 4 {
                return Err(SpatialError::TooFewForAnalytic(n));
            }
            let mean = occupancy.iter().sum::<f64>() / n as f64;
            let deviations: Vec<f64> = occupancy.iter().map(|o| o - mean).collect();
            let var = randomization_variance(&deviations, weights);
            let z = if observed == e_i {
                0.0
            } else {
                (observed - e_i) / var.sqrt()
            };
            let normal = Normal::new(0.0, 1.0).expect("standard normal");
            let p = 2.0 * normal.cdf(-z.abs());
            (z, p)
        }
        SignificanceMethod::Permutation { m, seed: base } => {
            if *m < 100 {
                return Err(SpatialError::TooFewPermutations(*m));
            }
            let perm_i: Vec<f64> = (0..*m)
                .into_par_iter()
                .map(|p| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed::mix(*base, p as u64));
                    let mut shuffled = occupancy.to_vec();
                    shuffled.shuffle(&mut rng);
                    morans_i(&shuffled, weights).expect("permutation preserves variance")
                })
                .collect();

            let observed_dev = (observed - e_i).abs();
            let extreme = perm_i
                .iter()
                .filter(|&&v| (v - e_i).abs() >= observed_dev)
                .count();
            let p = (extreme + 1) as f64 / (*m + 1) as f64;

            let mean: f64 = perm_i.iter().sum::<f64>() / *m as f64;
            let var: f64 =
                perm_i.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (*m as f64 - 1.0);
            let z = if var > 0.0 {
                (observed - mean) / var.sqrt()
            } else {
                0.0
            };
            (z, p)
        }
    };

    Ok(MoranReport {
        i: observed,
        expected_i: e_i,
        z_score,
        p_value,
        significant: p_value < ALPHA,
        mode: weights.mode().to_string(),
        slice_date: None,
        slice_hour: None,
        zero_rows: weights.zero_rows().len(),
    })
}

/// Weight matrices for a sweep: one fixed matrix, or one per
/// (day-of-week, hour) slice keyed by `(num_days_from_monday, hour)`.
#[derive(Debug, Clone)]
pub enum SliceWeights {
    Fixed(WeightMatrix),
    PerDowHour(BTreeMap<(u32, u32), WeightMatrix>),
}

impl SliceWeights {
    fn for_timestamp(&self, t: &NaiveDateTime) -> Result<&WeightMatrix, SpatialError> {
        match self {
            SliceWeights::Fixed(w) => Ok(w),
            SliceWeights::PerDowHour(map) => {
                let key = (t.weekday().num_days_from_monday(), t.hour());
                map.get(&key)
                    .ok_or_else(|| SpatialError::MissingSliceWeights(format!("{t}")))
            }
        }
    }
}

/// A significance sweep across every occupancy instance of a grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub reports: Vec<MoranReport>,
    /// Instances excluded for constant occupancy.
    pub degenerate: usize,
    pub significant: usize,
    /// Percentage of usable instances with p below [`ALPHA`].
    pub significant_pct: f64,
}

impl SweepOutcome {
    /// Renders `slice_date,slice_hour,mode,I,z,p,significant` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("slice_date,slice_hour,mode,I,z,p,significant\n");
        for r in &self.reports {
            let date = r.slice_date.map(|d| d.to_string()).unwrap_or_default();
            let hour = r.slice_hour.map(|h| h.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{:.6},{:.6},{:.6},{}\n",
                date, hour, r.mode, r.i, r.z_score, r.p_value, r.significant
            ));
        }
        out
    }
}

/// Runs [`significance`] on every timestamp of the grid (each instance is
/// the occupancy at one date and hour) and reports the percentage that is
/// significant. Degenerate (constant-occupancy) instances are excluded and
/// counted separately.
pub fn significance_sweep(
    grid: &OccupancyGrid,
    weights: &SliceWeights,
    method: &SignificanceMethod,
) -> Result<SweepOutcome, SpatialError> {
    let results: Vec<Result<Option<MoranReport>, SpatialError>> = (0..grid.n_timestamps())
        .into_par_iter()
        .map(|t| {
            let ts = &grid.timestamps()[t];
            let w = weights.for_timestamp(ts)?;
            let occupancy = grid.column(t);
            match significance(&occupancy, w, method) {
                Ok(mut report) => {
                    report.slice_date = Some(ts.date());
                    report.slice_hour = Some(ts.hour());
                    Ok(Some(report))
                }
                Err(SpatialError::DegenerateVariance) => Ok(None),
                Err(other) => Err(other),
            }
        })
        .collect();

    let mut reports = Vec::new();
    let mut degenerate = 0usize;
    for r in results {
        match r? {
            Some(report) => reports.push(report),
            None => degenerate += 1,
        }
    }
    if reports.is_empty() {
        return Err(SpatialError::EmptySweep { degenerate });
    }
    let significant = reports.iter().filter(|r| r.significant).count();
    let significant_pct = 100.0 * significant as f64 / reports.len() as f64;
    Ok(SweepOutcome {
        reports,
        degenerate,
        significant,
        significant_pct,
    })
}
