// SPDX-License-Identifier: Apache-2.0

//! Run records stored as JSON lines.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{IndexDescription, Params};
use crate::metrics::AccuracyReport;

pub const RUN_SCHEMA_VERSION: u32 = 1;

/// Outcome of one query configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub algorithm: String,
    pub index: IndexDescription,
    pub dataset: String,
    pub dataset_count: usize,
    pub build_params: Params,
    pub config: String,
    pub search_params: Params,
    /// `num_queries / wall_seconds` of the fastest pass.
    pub qps: f64,
    pub accuracy: AccuracyReport,
    pub build_seconds: f64,
    pub index_size_bytes: u64,
    pub wall_seconds: f64,
    pub num_queries: usize,
    pub repeats: usize,
    pub workers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_joules: Option<f64>,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

/// Appends records to `path`, one JSON object per line.
pub fn persist_runs(records: &[RunRecord], path: &Path) -> Result<()> {
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut out = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads every record; blank lines are skipped.
pub fn load_runs(path: &Path) -> Result<Vec<RunRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: RunRecord = serde_json::from_str(&line).map_err(|e| Error::Malformed {
            line: i + 1,
            message: e.to_string(),
        })?;
        if record.schema_version != RUN_SCHEMA_VERSION {
            return Err(Error::Malformed {
                line: i + 1,
                message: format!(
                    "run record schema version {} is not supported (expected {RUN_SCHEMA_VERSION})",
                    record.schema_version
                ),
            });
        }
        records.push(record);
    }
    Ok(records)
}
