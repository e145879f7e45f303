//! BIC model selection: the zone count is the k minimizing the mean BIC over
//! every (day-of-week, hour) slice.

use chrono::Weekday;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::em::em_fit;
use super::features::{FeatureMatrix, FEATURE_DIM};
use super::model::ZoneModel;
use super::{EmConfig, MixtureError};
use crate::ingest::{slice_mean, BlockFace, OccupancyGrid};
use crate::seed;

/// Degrees of freedom of a k-component diagonal-covariance mixture over
/// d-dimensional data: each component contributes d from the mean, d from
/// the diagonal covariance, and 1 from the prior.
pub fn degrees_of_freedom(k: usize) -> usize {
    k * (2 * FEATURE_DIM + 1)
}

/// Bayesian information criterion: `-2 LL + ln(n) * dof`.
pub fn bic(model: &ZoneModel, n: usize) -> f64 {
    -2.0 * model.log_likelihood + (n as f64).ln() * degrees_of_freedom(model.k) as f64
}

/// Outcome of a k search: the winner plus the mean BIC of every candidate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KSelection {
    pub k: usize,
    /// (k, mean BIC across slices), ascending in k.
    pub mean_bic: Vec<(usize, f64)>,
    /// Slices the search averaged over.
    pub slices: usize,
}

/// Resolves grid block ids against block-faces, in grid row order.
pub(crate) fn grid_blockfaces<'a>(
    grid: &OccupancyGrid,
    blockfaces: &'a [BlockFace],
) -> Result<Vec<&'a BlockFace>, MixtureError> {
    grid.block_ids()
        .iter()
        .map(|id| {
            blockfaces
                .iter()
                .find(|b| &b.id == id)
                .ok_or_else(|| MixtureError::UnknownBlock(id.clone()))
        })
        .collect()
}

/// Searches `k_range` by fitting every (day-of-week, hour) slice-mean
/// feature matrix at each candidate k and minimizing the mean BIC.
/// Ties break toward the smallest k.
pub fn select_k(
    grid: &OccupancyGrid,
    blockfaces: &[BlockFace],
    k_range: std::ops::RangeInclusive<usize>,
    config: &EmConfig,
) -> Result<KSelection, MixtureError> {
    if k_range.is_empty() {
        return Err(MixtureError::EmptyKRange);
    }
    let n = grid.n_blocks();
    let k_max = *k_range.end();
    if k_max > n {
        return Err(MixtureError::TooFewSamples { n, k: k_max });
    }

    let faces = grid_blockfaces(grid, blockfaces)?;
    let (from, to) = match (grid.timestamps().first(), grid.timestamps().last()) {
        (Some(a), Some(b)) => (a.date(), b.date()),
        _ => {
            return Err(MixtureError::Ingest(crate::ingest::IngestError::EmptySlice {
                detail: "grid has no timestamps".into(),
            }))
        }
    };

    // One feature matrix per (day-of-week, hour): per-block mean occupancy.
    let slices = grid.slices();
    let mut slice_features = Vec::with_capacity(slices.len());
    for &(day, hour) in &slices {
        let occ = slice_mean(grid, day, hour, from, to)?;
        let raw = FeatureMatrix::raw_rows(&faces, &occ);
        slice_features.push(((day, hour), FeatureMatrix::fit(&raw)));
    }

    let ks: Vec<usize> = k_range.collect();
    let jobs: Vec<(usize, &((Weekday, u32), FeatureMatrix))> = ks
        .iter()
        .flat_map(|&k| slice_features.iter().map(move |s| (k, s)))
        .collect();

    let bics: Vec<Result<(usize, f64), MixtureError>> = jobs
        .par_iter()
        .map(|&(k, ((day, hour), features))| {
            let slice_seed = seed::for_slice(config.seed, day.num_days_from_monday(), *hour);
            let fit_config = EmConfig {
                seed: seed::mix(slice_seed, k as u64),
                ..config.clone()
            };
            let model = em_fit(features, k, &fit_config).map_err(|e| match e {
                MixtureError::FitFailure { restarts, .. } => MixtureError::FitFailure {
                    restarts,
                    slice: format!("{day} {hour}:00, k = {k}"),
                },
                other => other,
            })?;
            Ok((k, bic(&model, features.len())))
        })
        .collect();

    let mut totals: Vec<(usize, f64)> = ks.iter().map(|&k| (k, 0.0)).collect();
    for r in bics {
        let (k, b) = r?;
        let slot = totals.iter_mut().find(|(kk, _)| *kk == k).expect("known k");
        slot.1 += b;
    }
    let n_slices = slice_features.len() as f64;
    for (_, b) in &mut totals {
        *b /= n_slices;
    }

    let mut best = totals[0];
    for &(k, b) in &totals[1..] {
        if b < best.1 {
            best = (k, b);
        }
    }

    Ok(KSelection {
        k: best.0,
        mean_bic: totals,
        slices: slice_features.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixture::NormParams;

    fn model_with_ll(k: usize, ll: f64) -> ZoneModel {
        ZoneModel {
            k,
            weights: vec![1.0 / k as f64; k],
            means: vec![[0.5; FEATURE_DIM]; k],
            variances: vec![[0.1; FEATURE_DIM]; k],
            norm: NormParams {
                min: [0.0; FEATURE_DIM],
                max: [1.0; FEATURE_DIM],
            },
            log_likelihood: ll,
            assignments: vec![],
            seed: 0,
        }
    }

    #[test]
    fn bic_direct_arithmetic() {
        // -2(-100) + 14 ln 50, with dof = 2 * (2*3 + 1) = 14.
        let model = model_with_ll(2, -100.0);
        let expected = 200.0 + 14.0 * 50f64.ln();
        assert!((bic(&model, 50) - expected).abs() < 1e-12);
        assert!((expected - 254.768_322_076).abs() < 1e-6);
    }

    #[test]
    fn dof_formula() {
        assert_eq!(degrees_of_freedom(1), 7);
        assert_eq!(degrees_of_freedom(2), 14);
        for k in 1..=10 {
            assert_eq!(degrees_of_freedom(2 * k), 2 * degrees_of_freedom(k));
        }
    }
}
