//! CSV readers and writers for the ingest file formats.
//!
//! All writers emit rows in a fixed order so identical inputs produce
//! byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::{NaiveDateTime, Timelike};
use csv::StringRecord;

use super::{BlockFace, IngestError, OccupancyGrid, PaymentSource, Transaction};

const TS_FORMAT: &str = "%Y-%m-%dT%H:%M";

fn io_err(path: &Path, source: std::io::Error) -> IngestError {
    IngestError::Io {
        file: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path, err: csv::Error) -> IngestError {
    let line = err
        .position()
        .map(|p| p.line())
        .unwrap_or_default();
    match err.into_kind() {
        csv::ErrorKind::Io(e) => io_err(path, e),
        kind => IngestError::Malformed {
            file: path.display().to_string(),
            line,
            message: format!("{kind:?}"),
        },
    }
}

/// Opens a CSV file and verifies the header contains every required column.
/// Returns the reader and the column index of each required name.
fn open_csv(
    path: &Path,
    required: &[&str],
) -> Result<(csv::Reader<File>, Vec<usize>), IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let mut indices = Vec::with_capacity(required.len());
    for name in required {
        match headers.iter().position(|h| h == *name) {
            Some(i) => indices.push(i),
            None => {
                return Err(IngestError::MissingColumn {
                    file: path.display().to_string(),
                    column: (*name).to_string(),
                })
            }
        }
    }
    Ok((reader, indices))
}

fn field<'r>(
    record: &'r StringRecord,
    idx: usize,
    name: &str,
    path: &Path,
) -> Result<&'r str, IngestError> {
    record.get(idx).ok_or_else(|| IngestError::Malformed {
        file: path.display().to_string(),
        line: record.position().map(|p| p.line()).unwrap_or_default(),
        message: format!("row too short, missing `{name}`"),
    })
}

fn parse_field<T: std::str::FromStr>(
    record: &StringRecord,
    idx: usize,
    name: &str,
    path: &Path,
) -> Result<T, IngestError> {
    let raw = field(record, idx, name, path)?;
    raw.parse().map_err(|_| IngestError::Malformed {
        file: path.display().to_string(),
        line: record.position().map(|p| p.line()).unwrap_or_default(),
        message: format!("cannot parse `{name}` from `{raw}`"),
    })
}

/// Reads `block_id,start,duration_minutes,source` rows; `start` is local
/// time `YYYY-MM-DDTHH:MM`.
pub fn read_transactions_csv(path: impl AsRef<Path>) -> Result<Vec<Transaction>, IngestError> {
    let path = path.as_ref();
    let (mut reader, idx) = open_csv(path, &["block_id", "start", "duration_minutes", "source"])?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or_default();
        let block_id = field(&record, idx[0], "block_id", path)?.to_string();
        let start_raw = field(&record, idx[1], "start", path)?;
        let start = NaiveDateTime::parse_from_str(start_raw, TS_FORMAT).map_err(|_| {
            IngestError::Malformed {
                file: path.display().to_string(),
                line,
                message: format!("cannot parse `start` from `{start_raw}` (want YYYY-MM-DDTHH:MM)"),
            }
        })?;
        let duration_minutes: u32 = parse_field(&record, idx[2], "duration_minutes", path)?;
        if duration_minutes == 0 {
            return Err(IngestError::Malformed {
                file: path.display().to_string(),
                line,
                message: "duration_minutes must be >= 1".into(),
            });
        }
        let source: PaymentSource = parse_field(&record, idx[3], "source", path)?;
        out.push(Transaction {
            block_id,
            start,
            duration_minutes,
            source,
        });
    }
    Ok(out)
}

/// Reads `block_id,lat_a,lon_a,lat_b,lon_b,supply,paid_area,neighborhood` rows.
pub fn read_blockfaces_csv(path: impl AsRef<Path>) -> Result<Vec<BlockFace>, IngestError> {
    let path = path.as_ref();
    let (mut reader, idx) = open_csv(
        path,
        &[
            "block_id",
            "lat_a",
            "lon_a",
            "lat_b",
            "lon_b",
            "supply",
            "paid_area",
            "neighborhood",
        ],
    )?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or_default();
        let id = field(&record, idx[0], "block_id", path)?.to_string();
        let lat_a: f64 = parse_field(&record, idx[1], "lat_a", path)?;
        let lon_a: f64 = parse_field(&record, idx[2], "lon_a", path)?;
        let lat_b: f64 = parse_field(&record, idx[3], "lat_b", path)?;
        let lon_b: f64 = parse_field(&record, idx[4], "lon_b", path)?;
        let supply: u32 = parse_field(&record, idx[5], "supply", path)?;
        let paid_area = field(&record, idx[6], "paid_area", path)?.to_string();
        let neighborhood = field(&record, idx[7], "neighborhood", path)?.to_string();
        let block = BlockFace::new(id, (lat_a, lon_a), (lat_b, lon_b), supply, paid_area, neighborhood)
            .map_err(|e| IngestError::Malformed {
                file: path.display().to_string(),
                line,
                message: e.to_string(),
            })?;
        out.push(block);
    }
    Ok(out)
}

/// Writes `block_id,timestamp,occupancy` rows, block-major, occupancy with
/// six decimal places.
pub fn write_grid_csv(grid: &OccupancyGrid, path: impl AsRef<Path>) -> Result<(), IngestError> {
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    let mut write = || -> std::io::Result<()> {
        writeln!(w, "block_id,timestamp,occupancy")?;
        for (b, id) in grid.block_ids().iter().enumerate() {
            for (t, ts) in grid.timestamps().iter().enumerate() {
                writeln!(w, "{},{},{:.6}", id, ts.format(TS_FORMAT), grid.value(b, t))?;
            }
        }
        w.flush()
    };
    write().map_err(|e| io_err(path, e))
}

/// Reads a grid written by [`write_grid_csv`]. Rows must be grouped by block
/// and every block must cover the same timestamps in the same order.
pub fn read_grid_csv(path: impl AsRef<Path>) -> Result<OccupancyGrid, IngestError> {
    let path = path.as_ref();
    let (mut reader, idx) = open_csv(path, &["block_id", "timestamp", "occupancy"])?;

    let mut block_ids: Vec<String> = Vec::new();
    let mut timestamps: Vec<NaiveDateTime> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut first_block_done = false;
    let mut col = 0usize;

    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or_default();
        let id = field(&record, idx[0], "block_id", path)?;
        let ts_raw = field(&record, idx[1], "timestamp", path)?;
        let ts = NaiveDateTime::parse_from_str(ts_raw, TS_FORMAT).map_err(|_| {
            IngestError::Malformed {
                file: path.display().to_string(),
                line,
                message: format!("cannot parse `timestamp` from `{ts_raw}`"),
            }
        })?;
        if ts.minute() != 0 {
            return Err(IngestError::Malformed {
                file: path.display().to_string(),
                line,
                message: format!("grid timestamps must be hour starts, got {ts_raw}"),
            });
        }
        let occupancy: f64 = parse_field(&record, idx[2], "occupancy", path)?;

        match block_ids.last() {
            Some(last) if last == id => col += 1,
            _ => {
                if block_ids.iter().any(|b| b == id) {
                    return Err(IngestError::Malformed {
                        file: path.display().to_string(),
                        line,
                        message: format!("rows for block `{id}` are not contiguous"),
                    });
                }
                if !block_ids.is_empty() {
                    first_block_done = true;
                }
                block_ids.push(id.to_string());
                col = 0;
            }
        }
        if first_block_done {
            if col >= timestamps.len() || timestamps[col] != ts {
                return Err(IngestError::Malformed {
                    file: path.display().to_string(),
                    line,
                    message: format!("timestamp {ts_raw} out of order for block `{id}`"),
                });
            }
        } else {
            timestamps.push(ts);
        }
        values.push(occupancy);
    }

    OccupancyGrid::new(block_ids, timestamps, values)
}

/// Writes `block_id,start,duration_minutes,source` rows in input order.
pub fn write_transactions_csv(
    transactions: &[Transaction],
    path: impl AsRef<Path>,
) -> Result<(), IngestError> {
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    let mut write = || -> std::io::Result<()> {
        writeln!(w, "block_id,start,duration_minutes,source")?;
        for t in transactions {
            writeln!(
                w,
                "{},{},{},{}",
                t.block_id,
                t.start.format(TS_FORMAT),
                t.duration_minutes,
                t.source
            )?;
        }
        w.flush()
    };
    write().map_err(|e| io_err(path, e))
}

/// Writes `block_id,lat_a,lon_a,lat_b,lon_b,supply,paid_area,neighborhood`
/// rows in input order with full float precision.
pub fn write_blockfaces_csv(
    blockfaces: &[BlockFace],
    path: impl AsRef<Path>,
) -> Result<(), IngestError> {
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    let mut write = || -> std::io::Result<()> {
        writeln!(w, "block_id,lat_a,lon_a,lat_b,lon_b,supply,paid_area,neighborhood")?;
        for b in blockfaces {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                b.id,
                b.endpoint_a.0,
                b.endpoint_a.1,
                b.endpoint_b.0,
                b.endpoint_b.1,
                b.supply,
                b.paid_area,
                b.neighborhood
            )?;
        }
        w.flush()
    };
    write().map_err(|e| io_err(path, e))
}
