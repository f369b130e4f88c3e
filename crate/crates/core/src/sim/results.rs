use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const CSV_HEADER: &str =
    "precoder,snr_db,N,K,T,qam,trials,bit_errors,total_bits,ber,ci95_low,ci95_high,mean_runtime_ms";

/// Aggregated bit errors of one (precoder, SNR) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    pub precoder: String,
    pub snr_db: f64,
    #[serde(rename = "N")]
    pub antennas: usize,
    #[serde(rename = "K")]
    pub users: usize,
    #[serde(rename = "T")]
    pub block_len: usize,
    /// Constellation size, e.g. 16.
    pub qam: usize,
    /// Trials that completed; failed ones are excluded.
    pub trials: u64,
    pub bit_errors: u64,
    pub total_bits: u64,
    pub ber: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub mean_runtime_ms: f64,
    #[serde(skip)]
    pub failed_trials: u64,
}

/// Writes one row per record in the given order. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_results(records: &[BerRecord], path: impl AsRef<Path>) -> Result<()> {
    let mut file = File::create(path)?;
    if records.is_empty() {
        writeln!(file, "{CSV_HEADER}")?;
        return Ok(());
    }
    let mut w = csv::Writer::from_writer(file);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results(path: impl AsRef<Path>) -> Result<Vec<BerRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}
