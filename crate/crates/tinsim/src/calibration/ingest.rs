//! Spectrum ingestion from lab-style CSV exports.
//!
//! Accepts the crate's own PSD CSV plus a permissive variant: `#` comment
//! lines anywhere, a header row naming the columns, arbitrary column order,
//! and extra columns that are simply ignored.  The frequency axis must be
//! uniform and ascending — everything downstream assumes a regular grid.

use std::path::Path;

use crate::spectra::{FrequencyGrid, Psd, PsdUnits};
use crate::{Error, Result};

/// Read a PSD from a CSV file, locating columns by header name
/// (case-insensitive).
pub fn read_psd_csv_flexible(
    path: &Path,
    frequency_column: &str,
    value_column: &str,
    units: PsdUnits,
) -> Result<Psd> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (header_line, header) = rows
        .next()
        .ok_or_else(|| Error::Parse(format!("{}: no header row found", path.display())))?;
    let names: Vec<String> = header
        .split(',')
        .map(|c| c.trim().to_ascii_lowercase())
        .collect();
    let locate = |wanted: &str| {
        names
            .iter()
            .position(|n| n == &wanted.to_ascii_lowercase())
            .ok_or_else(|| {
                Error::Parse(format!(
                    "{}:{}: no column named {wanted:?} in header {:?}",
                    path.display(),
                    header_line,
                    names
                ))
            })
    };
    let f_idx = locate(frequency_column)?;
    let v_idx = locate(value_column)?;

    let mut freqs = Vec::new();
    let mut values = Vec::new();
    for (line_no, row) in rows {
        let cells: Vec<&str> = row.split(',').map(str::trim).collect();
        let cell = |idx: usize| -> Result<f64> {
            cells
                .get(idx)
                .ok_or_else(|| {
                    Error::Parse(format!(
                        "{}:{line_no}: row has {} columns, need {}",
                        path.display(),
                        cells.len(),
                        idx + 1
                    ))
                })?
                .parse()
                .map_err(|e| {
                    Error::Parse(format!("{}:{line_no}: {e}", path.display()))
                })
        };
        freqs.push(cell(f_idx)?);
        values.push(cell(v_idx)?);
    }
    if freqs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{}: need at least two data rows",
            path.display()
        )));
    }

    let df = freqs[1] - freqs[0];
    if df <= 0.0 {
        return Err(Error::Parse(format!(
            "{}: frequency axis must ascend",
            path.display()
        )));
    }
    for (k, pair) in freqs.windows(2).enumerate() {
        if ((pair[1] - pair[0]) - df).abs() > 1e-6 * df {
            return Err(Error::GridMismatch(format!(
                "{}: non-uniform frequency step near row {}",
                path.display(),
                k + 2
            )));
        }
    }
    let grid = FrequencyGrid::new(freqs[0], df, freqs.len())?;
    Psd::new(grid, values, units)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_commented_reordered_lab_export() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lab.csv");
        std::fs::write(
            &path,
            "# instrument: spectrum analyzer\n\
             # span 0-4 Hz\n\
             extra, Value, frequency_hz\n\
             9, 1.0e-12, 0.0\n\
             9, 2.0e-12, 0.5\n\
             # mid-file remark\n\
             9, 3.0e-12, 1.0\n",
        )
        .unwrap();
        let psd =
            read_psd_csv_flexible(&path, "frequency_hz", "value", PsdUnits::Rin).unwrap();
        assert_eq!(psd.grid.n, 3);
        assert!((psd.grid.df - 0.5).abs() < 1e-12);
        assert_eq!(psd.values[2], 3.0e-12);
    }

    #[test]
    fn rejects_missing_columns_and_ragged_grids() {
        let dir = tempfile::tempdir().unwrap();
        let bad_header = dir.path().join("a.csv");
        std::fs::write(&bad_header, "f,v\n0,1\n1,2\n").unwrap();
        assert!(matches!(
            read_psd_csv_flexible(&bad_header, "frequency_hz", "v", PsdUnits::Rin),
            Err(Error::Parse(_))
        ));

        let ragged = dir.path().join("b.csv");
        std::fs::write(&ragged, "f,v\n0,1\n1,2\n3,4\n").unwrap();
        assert!(matches!(
            read_psd_csv_flexible(&ragged, "f", "v", PsdUnits::Rin),
            Err(Error::GridMismatch(_))
        ));
    }
}
