//! Occupancy change between two periods: the seasonal per-hour delta table
//! and the per-zone relative change table.

use chrono::{Datelike, NaiveDate, Timelike, Weekday};
use serde::{Deserialize, Serialize};

use crate::ingest::OccupancyGrid;

use super::TemporalError;

/// Seasonal change at one hour of the day.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeasonalDeltaRow {
    pub hour: u32,
    /// Mean occupancy gain, in percentage points, over blocks that increased.
    pub mean_increase_pp: f64,
    /// Mean occupancy loss, in percentage points, over blocks that decreased.
    pub mean_decrease_pp: f64,
    /// Percentage of blocks whose occupancy increased (zero change counts as
    /// non-increasing).
    pub pct_increasing: f64,
    /// Blocks compared at this hour.
    pub blocks: usize,
    /// Blocks missing from either season at this hour.
    pub excluded: usize,
}

fn block_mean_at_hour(
    grid: &OccupancyGrid,
    block: usize,
    hour: u32,
    range: (NaiveDate, NaiveDate),
) -> Option<f64> {
    let idx: Vec<usize> = grid
        .timestamp_indices(|t| t.hour() == hour && t.date() >= range.0 && t.date() <= range.1)
        .collect();
    if idx.is_empty() {
        return None;
    }
    Some(idx.iter().map(|&i| grid.value(block, i)).sum::<f64>() / idx.len() as f64)
}

/// Per paid hour-of-day comparison of per-block mean occupancy between two
/// inclusive date ranges.
pub fn seasonal_delta(
    grid: &OccupancyGrid,
    season_a: (NaiveDate, NaiveDate),
    season_b: (NaiveDate, NaiveDate),
) -> Result<Vec<SeasonalDeltaRow>, TemporalError> {
    for (name, range) in [("season_a", season_a), ("season_b", season_b)] {
        if grid
            .timestamp_indices(|t| t.date() >= range.0 && t.date() <= range.1)
            .next()
            .is_none()
        {
            return Err(TemporalError::EmptyRange(format!(
                "{name} {}..={}",
                range.0, range.1
            )));
        }
    }

    let mut rows = Vec::new();
    for hour in grid.hours() {
        let mut increases = Vec::new();
        let mut decreases = Vec::new();
        let mut increasing = 0usize;
        let mut blocks = 0usize;
        let mut excluded = 0usize;
        for b in 0..grid.n_blocks() {
            let (a, bb) = match (
                block_mean_at_hour(grid, b, hour, season_a),
                block_mean_at_hour(grid, b, hour, season_b),
            ) {
                (Some(a), Some(bb)) => (a, bb),
                _ => {
                    excluded += 1;
                    continue;
                }
            };
            blocks += 1;
            let delta_pp = 100.0 * (bb - a);
            if delta_pp > 0.0 {
                increasing += 1;
                increases.push(delta_pp);
            } else if delta_pp < 0.0 {
                decreases.push(-delta_pp);
            }
        }
        let mean = |v: &[f64]| {
            if v.is_empty() {
                0.0
            } else {
                v.iter().sum::<f64>() / v.len() as f64
            }
        };
        rows.push(SeasonalDeltaRow {
            hour,
            mean_increase_pp: mean(&increases),
            mean_decrease_pp: mean(&decreases),
            pct_increasing: if blocks == 0 {
                0.0
            } else {
                100.0 * increasing as f64 / blocks as f64
            },
            blocks,
            excluded,
        });
    }
    Ok(rows)
}

/// Relative occupancy change of one zone at one (day-of-week, hour).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OccupancyDiffRow {
    pub zone: String,
    pub day: Weekday,
    pub hour: u32,
    /// `100 * (b - a) / max(a, 0.01)` on the zone-mean occupancy.
    pub rel_change_pct: f64,
    /// Whether the denominator floor was applied.
    pub floored: bool,
}

/// Denominator floor guarding the relative change against near-zero
/// occupancy.
pub const REL_CHANGE_FLOOR: f64 = 0.01;

/// Per-zone, per-(day-of-week, hour) relative occupancy change between two
/// periods, aggregated by zone label.
pub fn occupancy_diff(
    grid: &OccupancyGrid,
    period_a: (NaiveDate, NaiveDate),
    period_b: (NaiveDate, NaiveDate),
    zone_labels: &[String],
) -> Result<Vec<OccupancyDiffRow>, TemporalError> {
    if zone_labels.len() != grid.n_blocks() {
        return Err(TemporalError::LabelMismatch {
            labels: zone_labels.len(),
            n: grid.n_blocks(),
        });
    }
    for (name, range) in [("period_a", period_a), ("period_b", period_b)] {
        if grid
            .timestamp_indices(|t| t.date() >= range.0 && t.date() <= range.1)
            .next()
            .is_none()
        {
            return Err(TemporalError::EmptyRange(format!(
                "{name} {}..={}",
                range.0, range.1
            )));
        }
    }

    let mut zones: Vec<&String> = zone_labels.iter().collect();
    zones.sort();
    zones.dedup();

    let mut rows = Vec::new();
    for zone in zones {
        let members: Vec<usize> = (0..grid.n_blocks())
            .filter(|&b| &zone_labels[b] == zone)
            .collect();
        for &(day, hour) in &grid.slices() {
            let zone_mean = |range: (NaiveDate, NaiveDate)| -> Option<f64> {
                let idx: Vec<usize> = grid
                    .timestamp_indices(|t| {
                        t.weekday() == day
                            && t.hour() == hour
                            && t.date() >= range.0
                            && t.date() <= range.1
                    })
                    .collect();
                if idx.is_empty() {
                    return None;
                }
                let mut total = 0.0;
                for &b in &members {
                    total +=
                        idx.iter().map(|&i| grid.value(b, i)).sum::<f64>() / idx.len() as f64;
                }
                Some(total / members.len() as f64)
            };
            let (Some(a), Some(b)) = (zone_mean(period_a), zone_mean(period_b)) else {
                continue;
            };
            let floored = a < REL_CHANGE_FLOOR;
            let denom = a.max(REL_CHANGE_FLOOR);
            rows.push(OccupancyDiffRow {
                zone: zone.clone(),
                day,
                hour,
                rel_change_pct: 100.0 * (b - a) / denom,
                floored,
            });
        }
    }
    Ok(rows)
}
