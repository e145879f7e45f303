//! Static block-face identity and paid-parking transactions.

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::IngestError;

/// One side of a street segment holding curbside parking spaces; the atomic
/// spatial unit of the analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockFace {
    pub id: String,
    /// (latitude, longitude) of one end, in degrees.
    pub endpoint_a: (f64, f64),
    /// (latitude, longitude) of the other end, in degrees.
    pub endpoint_b: (f64, f64),
    /// Estimated number of parking spaces.
    pub supply: u32,
    /// City-designated paid parking area label.
    pub paid_area: String,
    pub neighborhood: String,
}

impl BlockFace {
    pub fn new(
        id: impl Into<String>,
        endpoint_a: (f64, f64),
        endpoint_b: (f64, f64),
        supply: u32,
        paid_area: impl Into<String>,
        neighborhood: impl Into<String>,
    ) -> Result<Self, IngestError> {
        let id = id.into();
        for (lat, lon) in [endpoint_a, endpoint_b] {
            if !((-90.0..=90.0).contains(&lat) && (-180.0..=180.0).contains(&lon)) {
                return Err(IngestError::InvalidCoordinate { id, lat, lon });
            }
        }
        Ok(BlockFace {
            id,
            endpoint_a,
            endpoint_b,
            supply,
            paid_area: paid_area.into(),
            neighborhood: neighborhood.into(),
        })
    }

    /// Arithmetic mean of the endpoint coordinates; the block-face location
    /// used by all downstream spatial features.
    pub fn midpoint(&self) -> (f64, f64) {
        (
            (self.endpoint_a.0 + self.endpoint_b.0) / 2.0,
            (self.endpoint_a.1 + self.endpoint_b.1) / 2.0,
        )
    }
}

/// Payment channel a transaction was recorded through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PaymentSource {
    Paystation,
    Payphone,
}

impl std::str::FromStr for PaymentSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "paystation" => Ok(PaymentSource::Paystation),
            "payphone" => Ok(PaymentSource::Payphone),
            other => Err(format!("unknown payment source `{other}`")),
        }
    }
}

impl std::fmt::Display for PaymentSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PaymentSource::Paystation => write!(f, "paystation"),
            PaymentSource::Payphone => write!(f, "payphone"),
        }
    }
}

/// A paid-parking transaction at minute resolution, local clock time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transaction {
    pub block_id: String,
    pub start: NaiveDateTime,
    /// Paid duration; always at least one minute.
    pub duration_minutes: u32,
    pub source: PaymentSource,
}

impl Transaction {
    pub fn new(
        block_id: impl Into<String>,
        start: NaiveDateTime,
        duration_minutes: u32,
        source: PaymentSource,
    ) -> Self {
        debug_assert!(duration_minutes >= 1);
        Transaction {
            block_id: block_id.into(),
            start,
            duration_minutes,
            source,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_is_endpoint_mean() {
        let b = BlockFace::new("b1", (47.0, -122.0), (48.0, -121.0), 4, "N", "Belltown").unwrap();
        assert_eq!(b.midpoint(), (47.5, -121.5));
    }

    #[test]
    fn rejects_out_of_range_coordinates() {
        assert!(BlockFace::new("b1", (91.0, 0.0), (0.0, 0.0), 1, "N", "X").is_err());
        assert!(BlockFace::new("b1", (0.0, 181.0), (0.0, 0.0), 1, "N", "X").is_err());
    }

    #[test]
    fn payment_source_round_trips() {
        for s in ["paystation", "payphone"] {
            let parsed: PaymentSource = s.parse().unwrap();
            assert_eq!(parsed.to_string(), s);
        }
    }
}
