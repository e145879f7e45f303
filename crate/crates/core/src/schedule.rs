//! Paid-parking schedule: which weekdays and which hours carry paid parking.
//!
//! Occupancy is only defined inside the paid window, so the schedule decides
//! which grid timestamps exist and where straddling transactions are
//! truncated.

use chrono::{Datelike, NaiveDate, NaiveDateTime, NaiveTime, Weekday};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("schedule line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid paid window: start hour {start} must be < end hour {end} (both in 0..=24)")]
    InvalidWindow { start: u32, end: u32 },
    #[error("schedule has no paid days")]
    NoPaidDays,
}

/// Paid days and the daily paid window `[start_hour, end_hour)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    days: [bool; 7], // indexed by Weekday::num_days_from_monday
    start_hour: u32,
    end_hour: u32,
}

impl Default for Schedule {
    /// Monday–Saturday, 8AM–8PM.
    fn default() -> Self {
        Schedule {
            days: [true, true, true, true, true, true, false],
            start_hour: 8,
            end_hour: 20,
        }
    }
}

impl Schedule {
    pub fn new(
        days: impl IntoIterator<Item = Weekday>,
        start_hour: u32,
        end_hour: u32,
    ) -> Result<Self, ScheduleError> {
        if start_hour >= end_hour || end_hour > 24 {
            return Err(ScheduleError::InvalidWindow {
                start: start_hour,
                end: end_hour,
            });
        }
        let mut flags = [false; 7];
        for d in days {
            flags[d.num_days_from_monday() as usize] = true;
        }
        if !flags.iter().any(|&f| f) {
            return Err(ScheduleError::NoPaidDays);
        }
        Ok(Schedule {
            days: flags,
            start_hour,
            end_hour,
        })
    }

    pub fn is_paid_day(&self, day: Weekday) -> bool {
        self.days[day.num_days_from_monday() as usize]
    }

    pub fn paid_days(&self) -> impl Iterator<Item = Weekday> + '_ {
        (0..7u8)
            .map(|i| Weekday::try_from(i).expect("weekday index"))
            .filter(|d| self.is_paid_day(*d))
    }

    pub fn start_hour(&self) -> u32 {
        self.start_hour
    }

    pub fn end_hour(&self) -> u32 {
        self.end_hour
    }

    /// Paid hours of a day, as hour-of-day values.
    pub fn hours(&self) -> impl Iterator<Item = u32> + Clone {
        self.start_hour..self.end_hour
    }

    pub fn hours_per_day(&self) -> u32 {
        self.end_hour - self.start_hour
    }

    /// The paid window on `date`, or `None` when `date` is not a paid day.
    pub fn window_on(&self, date: NaiveDate) -> Option<(NaiveDateTime, NaiveDateTime)> {
        if !self.is_paid_day(date.weekday()) {
            return None;
        }
        let open = date.and_time(NaiveTime::from_hms_opt(self.start_hour, 0, 0)?);
        let close = if self.end_hour == 24 {
            date.succ_opt()?.and_time(NaiveTime::MIN)
        } else {
            date.and_time(NaiveTime::from_hms_opt(self.end_hour, 0, 0)?)
        };
        Some((open, close))
    }

    /// Hour-start timestamps of every paid hour in `[from, to]`, ascending.
    pub fn paid_hours(&self, from: NaiveDate, to: NaiveDate) -> Vec<NaiveDateTime> {
        let mut out = Vec::new();
        let mut date = from;
        while date <= to {
            if self.is_paid_day(date.weekday()) {
                for h in self.hours() {
                    out.push(date.and_time(NaiveTime::from_hms_opt(h, 0, 0).expect("hour")));
                }
            }
            match date.succ_opt() {
                Some(next) => date = next,
                None => break,
            }
        }
        out
    }

    /// Parses the key-value schedule file format:
    ///
    /// ```text
    /// days = Mon,Tue,Wed,Thu,Fri,Sat
    /// start_hour = 8
    /// end_hour = 20
    /// ```
    ///
    /// Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self, ScheduleError> {
        let mut days: Option<Vec<Weekday>> = None;
        let mut start_hour: Option<u32> = None;
        let mut end_hour: Option<u32> = None;

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ScheduleError::Parse {
                line: line_no,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "days" => {
                    let parsed: Result<Vec<Weekday>, _> = value
                        .split(',')
                        .map(|d| d.trim().parse::<Weekday>())
                        .collect();
                    days = Some(parsed.map_err(|_| ScheduleError::Parse {
                        line: line_no,
                        message: format!("unrecognized weekday in `{value}`"),
                    })?);
                }
                "start_hour" | "end_hour" => {
                    let hour: u32 = value.parse().map_err(|_| ScheduleError::Parse {
                        line: line_no,
                        message: format!("`{key}` must be an integer hour, got `{value}`"),
                    })?;
                    if key == "start_hour" {
                        start_hour = Some(hour);
                    } else {
                        end_hour = Some(hour);
                    }
                }
                other => {
                    return Err(ScheduleError::Parse {
                        line: line_no,
                        message: format!("unknown key `{other}`"),
                    });
                }
            }
        }

        let default = Schedule::default();
        Schedule::new(
            days.unwrap_or_else(|| default.paid_days().collect()),
            start_hour.unwrap_or(default.start_hour),
            end_hour.unwrap_or(default.end_hour),
        )
    }

    /// Renders the schedule in the key-value file format accepted by [`Schedule::parse`].
    pub fn to_config_string(&self) -> String {
        let days: Vec<&str> = self
            .paid_days()
            .map(|d| match d {
                Weekday::Mon => "Mon",
                Weekday::Tue => "Tue",
                Weekday::Wed => "Wed",
                Weekday::Thu => "Thu",
                Weekday::Fri => "Fri",
                Weekday::Sat => "Sat",
                Weekday::Sun => "Sun",
            })
            .collect();
        format!(
            "days = {}\nstart_hour = {}\nend_hour = {}\n",
            days.join(","),
            self.start_hour,
            self.end_hour
        )
    }
}
