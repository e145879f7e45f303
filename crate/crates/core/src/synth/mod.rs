//! Deterministic synthetic data: spatially clustered block-faces with
//! controlled occupancy targets, realized either as transaction tables (for
//! end-to-end ingest) or directly as occupancy grids (for large sweeps).

pub mod oracle;

use chrono::{Datelike, NaiveDate, NaiveTime};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::ingest::{
    build_grid_over, BlockFace, GridBuild, OccupancyGrid, PaymentSource, Transaction,
    OCCUPANCY_CEILING,
};
use crate::schedule::Schedule;
use crate::seed;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Ingest(#[from] crate::ingest::IngestError),
}

/// Lat/lon bounding box the generator centers its clusters in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min_lat: f64,
    pub min_lon: f64,
    pub max_lat: f64,
    pub max_lon: f64,
}

impl BBox {
    fn center(&self) -> (f64, f64) {
        (
            (self.min_lat + self.max_lat) / 2.0,
            (self.min_lon + self.max_lon) / 2.0,
        )
    }
}

/// Demand profile of one spatial cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterSpec {
    /// Target occupancy fraction in [0, 1.5].
    pub base_occupancy: f64,
    /// Standard deviation of per-(block, hour) Gaussian noise on the target.
    pub noise_std: f64,
}

/// Generator parameters. Fully seed-deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_blocks: usize,
    pub bbox: BBox,
    pub clusters: Vec<ClusterSpec>,
    /// Spacing between neighboring cluster centers, in degrees.
    pub separation_deg: f64,
    /// Within-cluster spread of block-face midpoints, in degrees.
    pub spatial_std_deg: f64,
    pub weeks: u32,
    pub start_date: NaiveDate,
    pub schedule: Schedule,
    /// Spaces per block-face.
    pub supply: u32,
    pub seed: u64,
}

impl SynthSpec {
    /// A compact clustered default: useful in tests and as a CLI template.
    pub fn demo(seed: u64) -> Self {
        SynthSpec {
            n_blocks: 60,
            bbox: BBox {
                min_lat: 47.60,
                min_lon: -122.36,
                max_lat: 47.63,
                max_lon: -122.33,
            },
            clusters: vec![
                ClusterSpec { base_occupancy: 0.25, noise_std: 0.02 },
                ClusterSpec { base_occupancy: 0.65, noise_std: 0.02 },
                ClusterSpec { base_occupancy: 1.05, noise_std: 0.02 },
            ],
            separation_deg: 0.01,
            spatial_std_deg: 0.001,
            weeks: 2,
            start_date: NaiveDate::from_ymd_opt(2017, 6, 5).expect("valid date"),
            schedule: Schedule::default(),
            supply: 20,
            seed,
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        let fail = |m: String| Err(SynthError::InvalidSpec(m));
        if self.n_blocks == 0 {
            return fail("n_blocks must be >= 1".into());
        }
        if self.clusters.is_empty() {
            return fail("need at least one cluster".into());
        }
        if !(self.separation_deg > 0.0) {
            return fail(format!("separation must be positive, got {}", self.separation_deg));
        }
        if !(self.spatial_std_deg > 0.0) {
            return fail(format!("spatial std must be positive, got {}", self.spatial_std_deg));
        }
        for (i, c) in self.clusters.iter().enumerate() {
            if !(0.0..=OCCUPANCY_CEILING).contains(&c.base_occupancy) {
                return fail(format!(
                    "cluster {i}: base occupancy {} outside [0, {OCCUPANCY_CEILING}]",
                    c.base_occupancy
                ));
            }
            if c.noise_std < 0.0 {
                return fail(format!("cluster {i}: negative noise std"));
            }
        }
        if self.supply == 0 {
            return fail("supply must be >= 1; occupancy targets are infeasible at zero supply".into());
        }
        if self.weeks == 0 {
            return fail("weeks must be >= 1".into());
        }
        if self.bbox.min_lat >= self.bbox.max_lat || self.bbox.min_lon >= self.bbox.max_lon {
            return fail("bounding box is empty".into());
        }
        Ok(())
    }

    pub fn end_date(&self) -> NaiveDate {
        self.start_date + chrono::Duration::days(self.weeks as i64 * 7 - 1)
    }
}

/// Generated dataset: tables in the exact schemas ingest consumes, plus the
/// ground-truth cluster label of each block-face.
#[derive(Debug, Clone)]
pub struct SynthData {
    pub blockfaces: Vec<BlockFace>,
    pub transactions: Vec<Transaction>,
    pub labels: Vec<usize>,
}

/// Cluster centers arranged on a grid around the bbox center with
/// `separation_deg` spacing.
fn cluster_centers(spec: &SynthSpec) -> Vec<(f64, f64)> {
    let k = spec.clusters.len();
    let cols = (k as f64).sqrt().ceil() as usize;
    let rows = k.div_ceil(cols);
    let (clat, clon) = spec.bbox.center();
    (0..k)
        .map(|c| {
            let row = c / cols;
            let col = c % cols;
            let lat = clat + (row as f64 - (rows as f64 - 1.0) / 2.0) * spec.separation_deg;
            let lon = clon + (col as f64 - (cols as f64 - 1.0) / 2.0) * spec.separation_deg;
            (lat, lon)
        })
        .collect()
}

fn block_geometry(spec: &SynthSpec) -> Result<(Vec<BlockFace>, Vec<usize>), SynthError> {
    let centers = cluster_centers(spec);
    let k = spec.clusters.len();
    let mut blockfaces = Vec::with_capacity(spec.n_blocks);
    let mut labels = Vec::with_capacity(spec.n_blocks);
    let (_, clon) = spec.bbox.center();

    for b in 0..spec.n_blocks {
        let cluster = b % k;
        let mut rng = ChaCha8Rng::seed_from_u64(seed::mix(spec.seed, b as u64));
        let (clat_c, clon_c) = centers[cluster];
        let dlat: f64 = StandardNormal.sample(&mut rng);
        let dlon: f64 = StandardNormal.sample(&mut rng);
        let lat = clat_c + dlat * spec.spatial_std_deg;
        let lon = clon_c + dlon * spec.spatial_std_deg;
        // Endpoints straddle the midpoint along the street axis.
        let half = 0.0002;
        let paid_area = if lon >= clon { "EAST" } else { "WEST" };
        let face = BlockFace::new(
            format!("B{b:04}"),
            (lat, lon - half),
            (lat, lon + half),
            spec.supply,
            paid_area,
            "SYNTH",
        )
        .map_err(|e| SynthError::InvalidSpec(format!("geometry out of range: {e}")))?;
        blockfaces.push(face);
        labels.push(cluster);
    }
    Ok((blockfaces, labels))
}

/// Active-space count for one (block, date, hour) cell: the cluster's base
/// occupancy plus seeded Gaussian noise, clamped to [0, 1.5], quantized by
/// supply. Independent of iteration order.
fn cell_count(spec: &SynthSpec, block: usize, cluster: usize, date: NaiveDate, hour: u32) -> u32 {
    let cell_salt = (date.num_days_from_ce() as u64) << 8 | hour as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed::mix(seed::mix(spec.seed, block as u64), cell_salt));
    let c = &spec.clusters[cluster];
    let noise: f64 = if c.noise_std > 0.0 {
        let z: f64 = StandardNormal.sample(&mut rng);
        z * c.noise_std
    } else {
        0.0
    };
    let target = (c.base_occupancy + noise).clamp(0.0, OCCUPANCY_CEILING);
    (target * spec.supply as f64).round() as u32
}

/// Generates block-faces, ground-truth labels, and a transaction table whose
/// minute-level active counts reproduce the target occupancies. Each
/// occupied space in an hour yields one hour-long transaction, so counts are
/// exact and constant within the hour.
pub fn generate(spec: &SynthSpec) -> Result<SynthData, SynthError> {
    spec.validate()?;
    let (blockfaces, labels) = block_geometry(spec)?;

    let mut transactions = Vec::new();
    for (b, face) in blockfaces.iter().enumerate() {
        let mut date = spec.start_date;
        while date <= spec.end_date() {
            if spec.schedule.is_paid_day(date.weekday()) {
                for hour in spec.schedule.hours() {
                    let count = cell_count(spec, b, labels[b], date, hour);
                    let start = date.and_time(NaiveTime::from_hms_opt(hour, 0, 0).expect("hour"));
                    for space in 0..count {
                        let source = if space % 2 == 0 {
                            PaymentSource::Paystation
                        } else {
                            PaymentSource::Payphone
                        };
                        transactions.push(Transaction::new(face.id.clone(), start, 60, source));
                    }
                }
            }
            date = date.succ_opt().expect("in-range date");
        }
    }

    Ok(SynthData {
        blockfaces,
        transactions,
        labels,
    })
}

/// Generates the occupancy grid directly, bypassing transaction
/// materialization. Bit-identical to running [`generate`] through
/// [`build_grid_over`] over the spec's date range; intended for sweeps large
/// enough that the transaction table would dominate memory.
pub fn generate_grid(
    spec: &SynthSpec,
) -> Result<(Vec<BlockFace>, OccupancyGrid, Vec<usize>), SynthError> {
    spec.validate()?;
    let (blockfaces, labels) = block_geometry(spec)?;

    let timestamps = spec.schedule.paid_hours(spec.start_date, spec.end_date());
    let mut values = Vec::with_capacity(blockfaces.len() * timestamps.len());
    for b in 0..blockfaces.len() {
        for ts in &timestamps {
            let count = cell_count(spec, b, labels[b], ts.date(), chrono::Timelike::hour(ts));
            // Same accumulation as the grid builder: 60 equal minutes.
            let minute = crate::ingest::minute_occupancy(count, spec.supply);
            let mut sum = 0.0;
            for _ in 0..60 {
                sum += minute;
            }
            values.push(sum / 60.0);
        }
    }

    let grid = OccupancyGrid::new(
        blockfaces.iter().map(|b| b.id.clone()).collect(),
        timestamps,
        values,
    )?;
    Ok((blockfaces, grid, labels))
}

/// Convenience: generate transactions and run them through the real grid
/// builder over the spec's date range.
pub fn generate_and_ingest(spec: &SynthSpec) -> Result<(SynthData, GridBuild), SynthError> {
    let data = generate(spec)?;
    let build = build_grid_over(
        &data.transactions,
        &data.blockfaces,
        &spec.schedule,
        spec.start_date,
        spec.end_date(),
    )?;
    Ok((data, build))
}
