//! Ingestion of raw single-column QoS traces.

use std::io::Read;
use std::path::Path;

use crate::signature::QoSSeries;
use crate::stats::mean;
use crate::{Error, Result};

/// Reads one numeric column and averages it into `horizon_days` equal chunks.
/// Trailing rows that do not fill a whole chunk are dropped.
pub fn load_trace(
    path: &Path,
    horizon_days: u32,
    has_header: bool,
    attribute_id: &str,
) -> Result<QoSSeries> {
    let file = std::fs::File::open(path)?;
    read_trace(file, horizon_days, has_header, attribute_id)
}

pub fn read_trace<R: Read>(
    reader: R,
    horizon_days: u32,
    has_header: bool,
    attribute_id: &str,
) -> Result<QoSSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 1 + has_header as usize;
        let record = record.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let field = record.get(0).unwrap_or("");
        let v: f64 = field.parse().map_err(|_| Error::Parse {
            line,
            message: format!("expected a number, found {field:?}"),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                line,
                message: format!("non-finite value {field:?}"),
            });
        }
        rows.push(v);
    }
    let days = horizon_days as usize;
    if days == 0 || rows.len() < days {
        return Err(Error::InsufficientData {
            rows: rows.len(),
            needed: days.max(1),
        });
    }
    let chunk = rows.len() / days;
    let values = rows.chunks_exact(chunk).take(days).map(mean).collect();
    QoSSeries::new(attribute_id, 0, values)
}
