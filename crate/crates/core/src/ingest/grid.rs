//! Hourly occupancy grids built from minute-level active-transaction counts.

use std::collections::HashMap;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike, Weekday};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{minute_occupancy, BlockFace, IngestError, Transaction, OCCUPANCY_CEILING};
use crate::schedule::Schedule;

/// Block-face × hourly-timestamp matrix of occupancy fractions in
/// `[0, 1.5]`. Rows align one-to-one with `block_ids`, columns with
/// `timestamps` (strictly ascending hour starts inside paid hours).
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    block_ids: Vec<String>,
    timestamps: Vec<NaiveDateTime>,
    values: Vec<f64>, // row-major, blocks × timestamps
}

impl OccupancyGrid {
    pub fn new(
        block_ids: Vec<String>,
        timestamps: Vec<NaiveDateTime>,
        values: Vec<f64>,
    ) -> Result<Self, IngestError> {
        if values.len() != block_ids.len() * timestamps.len() {
            return Err(IngestError::Misaligned {
                rows: values.len(),
                ids: block_ids.len() * timestamps.len(),
            });
        }
        let mut seen = std::collections::HashSet::new();
        for id in &block_ids {
            if !seen.insert(id.as_str()) {
                return Err(IngestError::DuplicateBlock(id.clone()));
            }
        }
        debug_assert!(timestamps.windows(2).all(|w| w[0] < w[1]));
        let cols = timestamps.len();
        for (i, &v) in values.iter().enumerate() {
            if !(0.0..=OCCUPANCY_CEILING).contains(&v) {
                return Err(IngestError::ValueOutOfRange {
                    value: v,
                    row: i / cols.max(1),
                    col: i % cols.max(1),
                });
            }
        }
        Ok(OccupancyGrid {
            block_ids,
            timestamps,
            values,
        })
    }

    pub fn block_ids(&self) -> &[String] {
        &self.block_ids
    }

    pub fn timestamps(&self) -> &[NaiveDateTime] {
        &self.timestamps
    }

    pub fn n_blocks(&self) -> usize {
        self.block_ids.len()
    }

    pub fn n_timestamps(&self) -> usize {
        self.timestamps.len()
    }

    pub fn value(&self, block: usize, ts: usize) -> f64 {
        self.values[block * self.timestamps.len() + ts]
    }

    /// Occupancy of every block at timestamp index `ts`.
    pub fn column(&self, ts: usize) -> Vec<f64> {
        (0..self.block_ids.len()).map(|b| self.value(b, ts)).collect()
    }

    /// Row of all hourly values for one block.
    pub fn row(&self, block: usize) -> &[f64] {
        let cols = self.timestamps.len();
        &self.values[block * cols..(block + 1) * cols]
    }

    /// Indices of timestamps matching a predicate.
    pub fn timestamp_indices<'a>(
        &'a self,
        pred: impl Fn(&NaiveDateTime) -> bool + 'a,
    ) -> impl Iterator<Item = usize> + 'a {
        self.timestamps
            .iter()
            .enumerate()
            .filter(move |(_, t)| pred(t))
            .map(|(i, _)| i)
    }

    /// Distinct dates having a timestamp at (day-of-week, hour), ascending.
    pub fn dates_at(&self, day: Weekday, hour: u32) -> Vec<NaiveDate> {
        let mut dates: Vec<NaiveDate> = self
            .timestamps
            .iter()
            .filter(|t| t.weekday() == day && t.hour() == hour)
            .map(|t| t.date())
            .collect();
        dates.dedup();
        dates
    }

    /// Distinct hours-of-day present in the grid, ascending.
    pub fn hours(&self) -> Vec<u32> {
        let mut hours: Vec<u32> = self.timestamps.iter().map(|t| t.hour()).collect();
        hours.sort_unstable();
        hours.dedup();
        hours
    }

    /// Distinct (day-of-week, hour) pairs present, in Monday-first order.
    pub fn slices(&self) -> Vec<(Weekday, u32)> {
        let mut keys: Vec<(u32, u32)> = self
            .timestamps
            .iter()
            .map(|t| (t.weekday().num_days_from_monday(), t.hour()))
            .collect();
        keys.sort_unstable();
        keys.dedup();
        keys.into_iter()
            .map(|(d, h)| (Weekday::try_from(d as u8).expect("weekday index"), h))
            .collect()
    }

    /// A copy restricted to timestamps satisfying the predicate.
    pub fn filter_timestamps(&self, pred: impl Fn(&NaiveDateTime) -> bool) -> OccupancyGrid {
        let keep: Vec<usize> = self.timestamp_indices(pred).collect();
        let timestamps: Vec<NaiveDateTime> = keep.iter().map(|&i| self.timestamps[i]).collect();
        let mut values = Vec::with_capacity(self.block_ids.len() * keep.len());
        for b in 0..self.block_ids.len() {
            for &i in &keep {
                values.push(self.value(b, i));
            }
        }
        OccupancyGrid {
            block_ids: self.block_ids.clone(),
            timestamps,
            values,
        }
    }
}

/// Per-block arithmetic mean occupancy over all timestamps matching
/// (day-of-week, hour) within `[from, to]` inclusive.
pub fn slice_mean(
    grid: &OccupancyGrid,
    day: Weekday,
    hour: u32,
    from: NaiveDate,
    to: NaiveDate,
) -> Result<Vec<f64>, IngestError> {
    let idx: Vec<usize> = grid
        .timestamp_indices(|t| {
            t.weekday() == day && t.hour() == hour && t.date() >= from && t.date() <= to
        })
        .collect();
    if idx.is_empty() {
        return Err(IngestError::EmptySlice {
            detail: format!("{day} {hour}:00 in {from}..={to}"),
        });
    }
    let n = idx.len() as f64;
    Ok((0..grid.n_blocks())
        .map(|b| idx.iter().map(|&i| grid.value(b, i)).sum::<f64>() / n)
        .collect())
}

/// Ingest accounting: what was excluded, truncated, or clipped.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestReport {
    /// Block-faces included in the grid.
    pub blocks: usize,
    /// Block-faces excluded for zero supply (occupancy undefined).
    pub excluded_blocks: Vec<String>,
    pub timestamps: usize,
    /// Transactions read from input.
    pub transactions: usize,
    /// Transactions whose block id resolved to no known block-face.
    pub unresolved_transactions: usize,
    /// Transactions on excluded (zero-supply) block-faces.
    pub excluded_block_transactions: usize,
    /// Transactions with no active minute inside paid hours.
    pub out_of_schedule_transactions: usize,
    /// Transactions truncated at the end of the paid window.
    pub truncated_transactions: usize,
    /// Grid cells where at least one minute exceeded the 150% ceiling.
    pub clipped_cells: usize,
    pub total_cells: usize,
    /// `clipped_cells / total_cells`.
    pub clip_rate: f64,
    /// Transaction counting policy applied by the builder.
    pub counting_policy: String,
}

/// Result of [`build_grid`]: the grid plus its ingest report.
#[derive(Debug, Clone)]
pub struct GridBuild {
    pub grid: OccupancyGrid,
    pub report: IngestReport,
}

/// Builds the hourly occupancy grid over the date span of `transactions`.
///
/// See [`build_grid_over`] for the semantics; the date range is derived as
/// the min..max transaction start date.
pub fn build_grid(
    transactions: &[Transaction],
    blockfaces: &[BlockFace],
    schedule: &Schedule,
) -> Result<GridBuild, IngestError> {
    let from = transactions.iter().map(|t| t.start.date()).min();
    let to = transactions.iter().map(|t| t.start.date()).max();
    match (from, to) {
        (Some(from), Some(to)) => build_grid_over(transactions, blockfaces, schedule, from, to),
        _ => Err(IngestError::EmptySlice {
            detail: "no transactions to derive a date range from".into(),
        }),
    }
}

/// Builds the hourly occupancy grid for paid hours in `[from, to]`.
///
/// A transaction is active in minute `m` iff `start <= m < start + duration`,
/// truncated at the end of the paid window of its start date. Each hourly
/// value is the arithmetic mean of the 60 minute occupancies of that hour.
/// Zero-supply block-faces are excluded and listed in the report; every
/// active transaction is counted with no deduplication of overlapping
/// payments at one space.
pub fn build_grid_over(
    transactions: &[Transaction],
    blockfaces: &[BlockFace],
    schedule: &Schedule,
    from: NaiveDate,
    to: NaiveDate,
) -> Result<GridBuild, IngestError> {
    let mut included: Vec<&BlockFace> = Vec::new();
    let mut excluded_blocks: Vec<String> = Vec::new();
    let mut excluded_set = std::collections::HashSet::new();
    for b in blockfaces {
        if b.supply == 0 {
            excluded_blocks.push(b.id.clone());
            excluded_set.insert(b.id.as_str());
        } else {
            included.push(b);
        }
    }

    let mut block_index: HashMap<&str, usize> = HashMap::with_capacity(included.len());
    for (i, b) in included.iter().enumerate() {
        if block_index.insert(b.id.as_str(), i).is_some() {
            return Err(IngestError::DuplicateBlock(b.id.clone()));
        }
    }

    let timestamps = schedule.paid_hours(from, to);
    if timestamps.is_empty() {
        return Err(IngestError::EmptySlice {
            detail: format!("no paid hours in {from}..={to}"),
        });
    }

    // Map each paid date to a dense day index so minute offsets can be
    // computed arithmetically.
    let hpd = schedule.hours_per_day() as i64;
    let minutes_per_day = hpd * 60;
    let mut day_index: HashMap<NaiveDate, i64> = HashMap::new();
    for t in &timestamps {
        let next = day_index.len() as i64;
        day_index.entry(t.date()).or_insert(next);
    }
    let total_minutes = (day_index.len() as i64 * minutes_per_day) as usize;

    // Active-minute intervals per block, as [start, end) grid-minute indices.
    let mut intervals: Vec<Vec<(u32, u32)>> = vec![Vec::new(); included.len()];
    let mut unresolved = 0usize;
    let mut excluded_tx = 0usize;
    let mut out_of_schedule = 0usize;
    let mut truncated = 0usize;

    for tx in transactions {
        let block = match block_index.get(tx.block_id.as_str()) {
            Some(&b) => b,
            None => {
                if excluded_set.contains(tx.block_id.as_str()) {
                    excluded_tx += 1;
                } else {
                    unresolved += 1;
                }
                continue;
            }
        };
        let Some((open, close)) = schedule.window_on(tx.start.date()) else {
            out_of_schedule += 1;
            continue;
        };
        let end = tx.start + chrono::Duration::minutes(tx.duration_minutes as i64);
        let active_from = tx.start.max(open);
        let active_to = end.min(close);
        if active_to <= active_from || tx.start.date() < from || tx.start.date() > to {
            out_of_schedule += 1;
            continue;
        }
        if end > close {
            truncated += 1;
        }
        let day = day_index[&tx.start.date()];
        let lo = day * minutes_per_day + (active_from - open).num_minutes();
        let hi = lo + (active_to - active_from).num_minutes();
        debug_assert!(0 <= lo && lo < hi && hi as usize <= total_minutes);
        intervals[block].push((lo as u32, hi as u32));
    }

    // Per block: difference array over paid minutes, prefix sum, clip,
    // hourly means. Blocks are independent.
    let n_ts = timestamps.len();
    let rows: Vec<(Vec<f64>, usize)> = included
        .par_iter()
        .zip(intervals.par_iter())
        .map(|(b, ivals)| {
            let mut diff = vec![0i32; total_minutes + 1];
            for &(lo, hi) in ivals {
                diff[lo as usize] += 1;
                diff[hi as usize] -= 1;
            }
            let mut row = Vec::with_capacity(n_ts);
            let mut clipped_cells = 0usize;
            let mut active: i32 = 0;
            let mut m = 0usize;
            for _ in 0..n_ts {
                let mut sum = 0.0f64;
                let mut clipped = false;
                for _ in 0..60 {
                    active += diff[m];
                    m += 1;
                    let count = active as u32;
                    if count as f64 / b.supply as f64 > OCCUPANCY_CEILING {
                        clipped = true;
                    }
                    sum += minute_occupancy(count, b.supply);
                }
                if clipped {
                    clipped_cells += 1;
                }
                row.push(sum / 60.0);
            }
            (row, clipped_cells)
        })
        .collect();

    let mut values = Vec::with_capacity(included.len() * n_ts);
    let mut clipped_cells = 0usize;
    for (row, clipped) in rows {
        values.extend_from_slice(&row);
        clipped_cells += clipped;
    }

    let total_cells = included.len() * n_ts;
    let grid = OccupancyGrid::new(
        included.iter().map(|b| b.id.clone()).collect(),
        timestamps,
        values,
    )?;
    let report = IngestReport {
        blocks: included.len(),
        excluded_blocks,
        timestamps: grid.n_timestamps(),
        transactions: transactions.len(),
        unresolved_transactions: unresolved,
        excluded_block_transactions: excluded_tx,
        out_of_schedule_transactions: out_of_schedule,
        truncated_transactions: truncated,
        clipped_cells,
        total_cells,
        clip_rate: if total_cells == 0 {
            0.0
        } else {
            clipped_cells as f64 / total_cells as f64
        },
        counting_policy: "every active transaction is counted; overlapping payments at one \
                          space are not deduplicated"
            .into(),
    };
    Ok(GridBuild { grid, report })
}
