//! Within-zone occupancy variance: how demand-homogeneous a labeling is.

use crate::ingest::OccupancyGrid;

use super::TemporalError;

/// Mean within-label occupancy variance.
///
/// Per time slice, the population variance of occupancy is computed inside
/// each label group of size >= 2; group variances are averaged weighted by
/// group size, then averaged across slices. Lower values mean more
/// homogeneous zones.
pub fn zone_variance<L: Ord>(
    grid: &OccupancyGrid,
    labels: &[L],
) -> Result<f64, TemporalError> {
    if labels.len() != grid.n_blocks() {
        return Err(TemporalError::LabelMismatch {
            labels: labels.len(),
            n: grid.n_blocks(),
        });
    }

    // Group block indices by label.
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| labels[a].cmp(&labels[b]));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &b in &order {
        match groups.last_mut() {
            Some(g) if labels[g[0]] == labels[b] => g.push(b),
            _ => groups.push(vec![b]),
        }
    }
    groups.retain(|g| g.len() >= 2);
    if groups.is_empty() {
        return Err(TemporalError::AllSingletonGroups);
    }

    let member_total: usize = groups.iter().map(|g| g.len()).sum();
    let mut slice_total = 0.0;
    for t in 0..grid.n_timestamps() {
        let mut weighted = 0.0;
        for g in &groups {
            let mean = g.iter().map(|&b| grid.value(b, t)).sum::<f64>() / g.len() as f64;
            let var = g
                .iter()
                .map(|&b| {
                    let d = grid.value(b, t) - mean;
                    d * d
                })
                .sum::<f64>()
                / g.len() as f64;
            weighted += var * g.len() as f64;
        }
        slice_total += weighted / member_total as f64;
    }
    Ok(slice_total / grid.n_timestamps() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn grid_of(values: Vec<f64>, blocks: usize) -> OccupancyGrid {
        let cols = values.len() / blocks;
        let d = NaiveDate::from_ymd_opt(2017, 6, 5).unwrap();
        let timestamps = (0..cols)
            .map(|h| d.and_hms_opt(8 + h as u32, 0, 0).unwrap())
            .collect();
        let ids = (0..blocks).map(|b| format!("b{b}")).collect();
        OccupancyGrid::new(ids, timestamps, values).unwrap()
    }

    #[test]
    fn constant_groups_have_zero_variance() {
        // Two groups, constant occupancy inside each.
        let grid = grid_of(vec![0.3, 0.3, 0.3, 0.3, 0.9, 0.9, 0.9, 0.9], 4);
        let labels = vec![0, 0, 1, 1];
        assert_eq!(zone_variance(&grid, &labels).unwrap(), 0.0);
    }

    #[test]
    fn two_point_group_population_variance() {
        // One group {0.4, 0.6}: population variance is 0.01.
        let grid = grid_of(vec![0.4, 0.6], 2);
        let labels = vec![0, 0];
        let v = zone_variance(&grid, &labels).unwrap();
        assert!((v - 0.01).abs() < 1e-15, "got {v}");
    }

    #[test]
    fn singletons_are_excluded_from_the_average() {
        // Group 0 = {0.4, 0.6}; label 1 is a singleton and must not dilute.
        let grid = grid_of(vec![0.4, 0.6, 1.2], 3);
        let labels = vec![0, 0, 1];
        let v = zone_variance(&grid, &labels).unwrap();
        assert!((v - 0.01).abs() < 1e-15, "got {v}");
    }

    #[test]
    fn all_singletons_is_an_error() {
        let grid = grid_of(vec![0.4, 0.6], 2);
        let labels = vec![0, 1];
        assert!(matches!(
            zone_variance(&grid, &labels),
            Err(TemporalError::AllSingletonGroups)
        ));
    }

    #[test]
    fn label_length_must_match() {
        let grid = grid_of(vec![0.4, 0.6], 2);
        assert!(matches!(
            zone_variance(&grid, &[0]),
            Err(TemporalError::LabelMismatch { labels: 1, n: 2 })
        ));
    }
}
