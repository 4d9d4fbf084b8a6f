//! Binary time-series records.
//!
//! Layout: magic `TINREC01`, little-endian u32 header length, JSON header
//! (run configuration echo, channel names, sample count), then the channel
//! data as little-endian f64, one channel after another.  The binary round
//! trip is bit-exact; CSV export exists for eyeballing only.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SimConfig;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"TINREC01";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordHeader {
    /// Sample rate [Hz]
    pub fs: f64,
    pub seed: u64,
    pub channel_names: Vec<String>,
    pub n_samples: usize,
    /// The configuration that produced this record.
    pub config: SimConfig,
}

#[derive(Debug, Clone)]
pub struct SimRecord {
    pub header: RecordHeader,
    /// One column per channel, in `header.channel_names` order.
    pub channels: Vec<Vec<f64>>,
}

impl SimRecord {
    pub fn channel(&self, name: &str) -> Result<&[f64]> {
        self.header
            .channel_names
            .iter()
            .position(|n| n == name)
            .map(|k| self.channels[k].as_slice())
            .ok_or_else(|| {
                Error::Parse(format!(
                    "record has no channel {name:?} (has: {})",
                    self.header.channel_names.join(", ")
                ))
            })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        let header = serde_json::to_vec(&self.header)
            .map_err(|e| Error::Parse(format!("header serialization failed: {e}")))?;
        out.write_all(MAGIC)?;
        out.write_all(&(header.len() as u32).to_le_bytes())?;
        out.write_all(&header)?;
        for channel in &self.channels {
            for v in channel {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<SimRecord> {
        let mut input = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Parse(format!(
                "not a record file (magic {:?})",
                String::from_utf8_lossy(&magic)
            )));
        }
        let mut len = [0u8; 4];
        input.read_exact(&mut len)?;
        let mut header_bytes = vec![0u8; u32::from_le_bytes(len) as usize];
        input.read_exact(&mut header_bytes)?;
        let header: RecordHeader = serde_json::from_slice(&header_bytes)
            .map_err(|e| Error::Parse(format!("bad record header: {e}")))?;
        let mut channels = Vec::with_capacity(header.channel_names.len());
        let mut buf = vec![0u8; header.n_samples * 8];
        for _ in 0..header.channel_names.len() {
            input.read_exact(&mut buf)?;
            channels.push(
                buf.chunks_exact(8)
                    .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
                    .collect(),
            );
        }
        Ok(SimRecord { header, channels })
    }

    /// Lossy CSV export: time column plus one column per channel.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "time_s,{}", self.header.channel_names.join(","))?;
        let h = 1.0 / self.header.fs;
        for i in 0..self.header.n_samples {
            write!(out, "{:.9e}", i as f64 * h)?;
            for channel in &self.channels {
                write!(out, ",{:.12e}", channel[i])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}
