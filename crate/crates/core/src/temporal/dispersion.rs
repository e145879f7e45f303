//! Week-to-week drift of component centers, in meters.
//!
//! Pools the spatial centers of the models fitted at each date of one
//! (day-of-week, hour) slice, clusters them with k-means, and reports the
//! mean haversine distance from each center to its cluster centroid.

use chrono::{NaiveDate, NaiveTime, Weekday};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geo::haversine_m;
use crate::ingest::{BlockFace, OccupancyGrid};
use crate::mixture::{em_fit, EmConfig, FeatureMatrix, ZoneModel};
use crate::seed;

use super::kmeans::kmeans;
use super::TemporalError;

/// Mean distance in meters from pooled component centers to their k-means
/// centroid, for one (day-of-week, hour) slice.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CentroidDispersion {
    pub day: Weekday,
    pub hour: u32,
    pub k: usize,
    pub mean_distance_m: f64,
    /// Number of pooled centers (k × number of models).
    pub centers: usize,
}

/// Clusters the denormalized spatial centers of `models` (all fitted with
/// the same k) and returns the mean haversine distance to the centroids.
pub fn centroid_dispersion(
    day: Weekday,
    hour: u32,
    models: &[ZoneModel],
    k: usize,
    seed_base: u64,
) -> Result<CentroidDispersion, TemporalError> {
    if models.len() < 2 {
        return Err(TemporalError::TooFewModels(models.len()));
    }
    for m in models {
        if m.k != k {
            return Err(TemporalError::MixedK {
                expected: k,
                found: m.k,
            });
        }
    }

    let centers: Vec<[f64; 2]> = models.iter().flat_map(|m| m.spatial_centers()).collect();
    let fit = kmeans(&centers, k, 10, seed::for_slice(seed_base, day.num_days_from_monday(), hour));

    let mean_distance_m = centers
        .iter()
        .zip(&fit.assignments)
        .map(|(p, &c)| {
            let centroid = fit.centroids[c];
            haversine_m((p[0], p[1]), (centroid[0], centroid[1]))
        })
        .sum::<f64>()
        / centers.len() as f64;

    Ok(CentroidDispersion {
        day,
        hour,
        k,
        mean_distance_m,
        centers: centers.len(),
    })
}

/// Fits one model per date of a (day-of-week, hour) slice, each on that
/// date's raw occupancy with a date-derived seed. Dates whose fit fails are
/// skipped.
pub fn fit_per_date_models(
    grid: &OccupancyGrid,
    blockfaces: &[BlockFace],
    day: Weekday,
    hour: u32,
    k: usize,
    config: &EmConfig,
) -> Result<Vec<(NaiveDate, ZoneModel)>, TemporalError> {
    let dates = grid.dates_at(day, hour);
    if dates.len() < 2 {
        return Err(TemporalError::TooFewDates {
            detail: format!("{day} {hour}:00"),
            found: dates.len(),
        });
    }
    let faces = crate::mixture::grid_blockfaces(grid, blockfaces)?;
    let time = NaiveTime::from_hms_opt(hour, 0, 0).expect("valid hour");

    let fits: Vec<Option<(NaiveDate, ZoneModel)>> = dates
        .par_iter()
        .map(|&date| {
            let ts = date.and_time(time);
            let idx = grid
                .timestamp_indices(|t| *t == ts)
                .next()
                .expect("date came from the grid");
            let occ = grid.column(idx);
            let features = FeatureMatrix::fit(&FeatureMatrix::raw_rows(&faces, &occ));
            let fit_config = EmConfig {
                seed: seed::for_date(config.seed, date),
                ..config.clone()
            };
            em_fit(&features, k, &fit_config).ok().map(|m| (date, m))
        })
        .collect();

    Ok(fits.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixture::NormParams;

    fn model_with_centers(centers: &[[f64; 2]]) -> ZoneModel {
        // Identity normalization on the spatial columns keeps the centers as
        // given.
        ZoneModel {
            k: centers.len(),
            weights: vec![1.0 / centers.len() as f64; centers.len()],
            means: centers.iter().map(|c| [c[0], c[1], 0.5]).collect(),
            variances: vec![[0.01; 3]; centers.len()],
            norm: NormParams {
                min: [0.0, 0.0, 0.0],
                max: [1.0, 1.0, 1.0],
            },
            log_likelihood: 0.0,
            assignments: vec![],
            seed: 0,
        }
    }

    #[test]
    fn identical_models_have_zero_dispersion() {
        let m = model_with_centers(&[[47.61, -122.35], [47.62, -122.33]]);
        let d = centroid_dispersion(Weekday::Wed, 10, &[m.clone(), m.clone(), m], 2, 1).unwrap();
        assert_eq!(d.mean_distance_m, 0.0);
        assert_eq!(d.centers, 6);
    }

    #[test]
    fn two_centers_one_degree_apart_k1() {
        let a = model_with_centers(&[[0.0, 10.0]]);
        let b = model_with_centers(&[[1.0, 10.0]]);
        let d = centroid_dispersion(Weekday::Wed, 10, &[a, b], 1, 1).unwrap();
        // Centroid sits at the midpoint: each center is half a degree of
        // latitude away, about 55,597 m on the mean-radius sphere.
        let expected = crate::geo::EARTH_RADIUS_M * 0.5f64.to_radians();
        assert!(
            (d.mean_distance_m - expected).abs() < 1e-6,
            "got {}, want {expected}",
            d.mean_distance_m
        );
        assert!((d.mean_distance_m - 55_597.46).abs() < 0.01);
    }

    #[test]
    fn mixed_k_is_rejected() {
        let a = model_with_centers(&[[0.0, 0.0]]);
        let b = model_with_centers(&[[0.0, 0.0], [1.0, 1.0]]);
        assert!(matches!(
            centroid_dispersion(Weekday::Mon, 9, &[a, b], 1, 1),
            Err(TemporalError::MixedK { expected: 1, found: 2 })
        ));
    }

    #[test]
    fn fewer_than_two_models_is_rejected() {
        let a = model_with_centers(&[[0.0, 0.0]]);
        assert!(matches!(
            centroid_dispersion(Weekday::Mon, 9, &[a], 1, 1),
            Err(TemporalError::TooFewModels(1))
        ));
    }

    #[test]
    fn dispersion_invariant_under_component_relabeling() {
        let a = model_with_centers(&[[47.0, -122.0], [47.5, -122.5]]);
        let mut b = a.clone();
        b.means.reverse();
        b.weights.reverse();
        b.variances.reverse();
        let d1 = centroid_dispersion(Weekday::Fri, 12, &[a.clone(), a.clone()], 2, 3).unwrap();
        let d2 = centroid_dispersion(Weekday::Fri, 12, &[a, b], 2, 3).unwrap();
        assert!((d1.mean_distance_m - d2.mean_distance_m).abs() < 1e-9);
    }
}
