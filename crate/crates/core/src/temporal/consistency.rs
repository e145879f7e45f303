//! Repeatability-based consistency of spatial demand.
//!
//! For a (day-of-week, hour) slice: learn a model on one date, assign every
//! other date under that fixed model with the anchor's normalization, score
//! the percentage of block-faces keeping their anchor label, then average
//! over comparison dates and over anchors.

use chrono::{NaiveDate, NaiveTime, Weekday};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ingest::{BlockFace, OccupancyGrid};
use crate::mixture::{assign, em_fit, EmConfig, FeatureMatrix};
use crate::schedule::Schedule;
use crate::seed;

use super::TemporalError;

/// Consistency of one anchor date: the mean match percentage against every
/// other date of the slice.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnchorResult {
    pub date: NaiveDate,
    pub mean_pct: f64,
}

/// Consistency metric for one (day-of-week, hour) slice.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub day: Weekday,
    pub hour: u32,
    pub anchors: Vec<AnchorResult>,
    /// Anchor dates whose fit failed and were skipped.
    pub skipped: Vec<NaiveDate>,
    /// Mean of the per-anchor percentages.
    pub mean_pct: f64,
    /// All dates participating in the slice.
    pub dates: Vec<NaiveDate>,
}

/// Computes the consistency metric at (day, hour) with k mixture components.
///
/// Per-anchor fits use a date-derived deterministic seed, so the report does
/// not depend on anchor iteration order.
pub fn consistency_metric(
    grid: &OccupancyGrid,
    blockfaces: &[BlockFace],
    day: Weekday,
    hour: u32,
    k: usize,
    config: &EmConfig,
) -> Result<ConsistencyReport, TemporalError> {
    let dates = grid.dates_at(day, hour);
    if dates.len() < 2 {
        return Err(TemporalError::TooFewDates {
            detail: format!("{day} {hour}:00"),
            found: dates.len(),
        });
    }

    let faces = crate::mixture::grid_blockfaces(grid, blockfaces)?;
    let time = NaiveTime::from_hms_opt(hour, 0, 0).expect("valid hour");
    let raw_by_date: Vec<(NaiveDate, Vec<[f64; 3]>)> = dates
        .iter()
        .map(|&date| {
            let ts = date.and_time(time);
            let idx = grid
                .timestamp_indices(|t| *t == ts)
                .next()
                .expect("date came from the grid");
            let occ = grid.column(idx);
            (date, FeatureMatrix::raw_rows(&faces, &occ))
        })
        .collect();

    let outcomes: Vec<Result<AnchorResult, NaiveDate>> = raw_by_date
        .par_iter()
        .map(|(anchor_date, anchor_raw)| {
            let features = FeatureMatrix::fit(anchor_raw);
            let fit_config = EmConfig {
                seed: seed::for_date(config.seed, *anchor_date),
                ..config.clone()
            };
            let model = match em_fit(&features, k, &fit_config) {
                Ok(m) => m,
                Err(_) => return Err(*anchor_date),
            };
            let mut total = 0.0;
            let mut comparisons = 0usize;
            for (other_date, other_raw) in &raw_by_date {
                if other_date == anchor_date {
                    continue;
                }
                let other = FeatureMatrix::with_norm(other_raw, model.norm.clone());
                let labels = assign(&other, &model).expect("norm matches by construction");
                let matches = labels
                    .iter()
                    .zip(&model.assignments)
                    .filter(|(a, b)| a == b)
                    .count();
                total += 100.0 * matches as f64 / labels.len() as f64;
                comparisons += 1;
            }
            Ok(AnchorResult {
                date: *anchor_date,
                mean_pct: total / comparisons as f64,
            })
        })
        .collect();

    let mut anchors = Vec::new();
    let mut skipped = Vec::new();
    for o in outcomes {
        match o {
            Ok(a) => anchors.push(a),
            Err(date) => skipped.push(date),
        }
    }
    if anchors.len() < 2 {
        return Err(TemporalError::TooFewAnchors {
            detail: format!("{day} {hour}:00"),
            skipped: skipped.len(),
        });
    }

    let mean_pct = anchors.iter().map(|a| a.mean_pct).sum::<f64>() / anchors.len() as f64;
    Ok(ConsistencyReport {
        day,
        hour,
        anchors,
        skipped,
        mean_pct,
        dates,
    })
}

/// Consistency results laid out as a day × hour table with Daily and Hourly
/// margins.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencyTable {
    pub days: Vec<Weekday>,
    pub hours: Vec<u32>,
    /// Day-major cells; `None` where no report was available.
    pub cells: Vec<Option<f64>>,
}

fn hour_label(hour: u32) -> String {
    match hour {
        0 => "12AM".into(),
        1..=11 => format!("{hour}AM"),
        12 => "12PM".into(),
        _ => format!("{}PM", hour - 12),
    }
}

/// Arranges per-slice consistency reports into the table layout: rows are
/// the schedule's paid days, columns its paid hours.
pub fn consistency_table(reports: &[ConsistencyReport], schedule: &Schedule) -> ConsistencyTable {
    let days: Vec<Weekday> = schedule.paid_days().collect();
    let hours: Vec<u32> = schedule.hours().collect();
    let mut cells = vec![None; days.len() * hours.len()];
    for r in reports {
        if let (Some(di), Some(hi)) = (
            days.iter().position(|d| *d == r.day),
            hours.iter().position(|h| *h == r.hour),
        ) {
            cells[di * hours.len() + hi] = Some(r.mean_pct);
        }
    }
    ConsistencyTable { days, hours, cells }
}

impl ConsistencyTable {
    fn cell(&self, di: usize, hi: usize) -> Option<f64> {
        self.cells[di * self.hours.len() + hi]
    }

    /// Renders the table as CSV: one row per day with a trailing Daily mean,
    /// then a final Hourly row of per-hour means.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("day");
        for &h in &self.hours {
            out.push(',');
            out.push_str(&hour_label(h));
        }
        out.push_str(",Daily\n");

        for (di, day) in self.days.iter().enumerate() {
            out.push_str(&day.to_string());
            let mut present = Vec::new();
            for hi in 0..self.hours.len() {
                out.push(',');
                if let Some(v) = self.cell(di, hi) {
                    out.push_str(&format!("{v:.1}"));
                    present.push(v);
                }
            }
            out.push(',');
            if !present.is_empty() {
                let daily = present.iter().sum::<f64>() / present.len() as f64;
                out.push_str(&format!("{daily:.1}"));
            }
            out.push('\n');
        }

        out.push_str("Hourly");
        for hi in 0..self.hours.len() {
            let col: Vec<f64> = (0..self.days.len()).filter_map(|di| self.cell(di, hi)).collect();
            out.push(',');
            if !col.is_empty() {
                let hourly = col.iter().sum::<f64>() / col.len() as f64;
                out.push_str(&format!("{hourly:.1}"));
            }
        }
        out.push_str(",\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hour_labels_match_clock_convention() {
        assert_eq!(hour_label(8), "8AM");
        assert_eq!(hour_label(12), "12PM");
        assert_eq!(hour_label(19), "7PM");
        assert_eq!(hour_label(0), "12AM");
    }

    #[test]
    fn table_layout_places_margins() {
        let schedule = Schedule::new([Weekday::Mon, Weekday::Tue], 8, 10).unwrap();
        let reports = vec![
            ConsistencyReport {
                day: Weekday::Mon,
                hour: 8,
                anchors: vec![],
                skipped: vec![],
                mean_pct: 90.0,
                dates: vec![],
            },
            ConsistencyReport {
                day: Weekday::Mon,
                hour: 9,
                anchors: vec![],
                skipped: vec![],
                mean_pct: 80.0,
                dates: vec![],
            },
            ConsistencyReport {
                day: Weekday::Tue,
                hour: 8,
                anchors: vec![],
                skipped: vec![],
                mean_pct: 70.0,
                dates: vec![],
            },
        ];
        let csv = consistency_table(&reports, &schedule).to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "day,8AM,9AM,Daily");
        assert_eq!(lines[1], "Mon,90.0,80.0,85.0");
        assert_eq!(lines[2], "Tue,70.0,,70.0");
        assert_eq!(lines[3], "Hourly,80.0,80.0,");
    }
}
