//! On-disk grid format: a JSON header plus a data file of `(index, re, im)`
//! records, either CSV or little-endian binary (`u64`, `f64`, `f64`).
//! Indices not listed are zero, so sparse fixtures stay small.

use super::GridFunction;
use crate::error::{LabError, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Csv,
    Bin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    pub dim: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub l: f64,
    pub format: DataFormat,
    /// Data file path, relative to the header's directory.
    pub data: String,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> LabError {
    LabError::validation(format!("{}: {e}", path.display()))
}

/// Write `f` as `<stem>.json` plus `<stem>.csv` or `<stem>.bin`.
pub fn write_grid(header_path: &Path, f: &GridFunction, format: DataFormat) -> Result<()> {
    let ext = match format {
        DataFormat::Csv => "csv",
        DataFormat::Bin => "bin",
    };
    let data_path = header_path.with_extension(ext);
    let header = GridHeader {
        dim: f.dim(),
        n: f.n(),
        l: f.side(),
        format,
        data: data_path.file_name().unwrap().to_string_lossy().into_owned(),
    };
    let json = serde_json::to_string_pretty(&header).map_err(|e| io_err(header_path, e))?;
    fs::write(header_path, json + "\n").map_err(|e| io_err(header_path, e))?;
    let file = fs::File::create(&data_path).map_err(|e| io_err(&data_path, e))?;
    match format {
        DataFormat::Csv => {
            let mut w = csv::Writer::from_writer(file);
            w.write_record(["index", "re", "im"]).map_err(|e| io_err(&data_path, e))?;
            for (i, v) in f.values().iter().enumerate() {
                if v.re != 0.0 || v.im != 0.0 {
                    w.write_record([i.to_string(), format!("{:e}", v.re), format!("{:e}", v.im)])
                        .map_err(|e| io_err(&data_path, e))?;
                }
            }
            w.flush().map_err(|e| io_err(&data_path, e))?;
        }
        DataFormat::Bin => {
            let mut w = BufWriter::new(file);
            for (i, v) in f.values().iter().enumerate() {
                if v.re != 0.0 || v.im != 0.0 {
                    w.write_all(&(i as u64).to_le_bytes()).map_err(|e| io_err(&data_path, e))?;
                    w.write_all(&v.re.to_le_bytes()).map_err(|e| io_err(&data_path, e))?;
                    w.write_all(&v.im.to_le_bytes()).map_err(|e| io_err(&data_path, e))?;
                }
            }
            w.flush().map_err(|e| io_err(&data_path, e))?;
        }
    }
    Ok(())
}

/// Read a grid from its JSON header.
pub fn read_grid(header_path: &Path) -> Result<GridFunction> {
    let text = fs::read_to_string(header_path).map_err(|e| io_err(header_path, e))?;
    let header: GridHeader = serde_json::from_str(&text).map_err(|e| io_err(header_path, e))?;
    let mut g = GridFunction::zeros(header.dim, header.n, header.l)?;
    let data_path: PathBuf = header_path.parent().unwrap_or(Path::new(".")).join(&header.data);
    let len = g.len();
    let mut put = |i: u64, re: f64, im: f64| -> Result<()> {
        let i = i as usize;
        if i >= len {
            return Err(io_err(&data_path, format!("index {i} out of range for {len} samples")));
        }
        if !(re.is_finite() && im.is_finite()) {
            return Err(io_err(&data_path, format!("non-finite value at index {i}")));
        }
        g.values_mut()[i] = Complex64::new(re, im);
        Ok(())
    };
    match header.format {
        DataFormat::Csv => {
            let mut r = csv::Reader::from_path(&data_path).map_err(|e| io_err(&data_path, e))?;
            for rec in r.records() {
                let rec = rec.map_err(|e| io_err(&data_path, e))?;
                let field = |k: usize| rec.get(k).ok_or_else(|| io_err(&data_path, "short record"));
                let i: u64 = field(0)?.trim().parse().map_err(|e| io_err(&data_path, e))?;
                let re: f64 = field(1)?.trim().parse().map_err(|e| io_err(&data_path, e))?;
                let im: f64 = field(2)?.trim().parse().map_err(|e| io_err(&data_path, e))?;
                put(i, re, im)?;
            }
        }
        DataFormat::Bin => {
            let mut bytes = Vec::new();
            fs::File::open(&data_path)
                .and_then(|mut f| f.read_to_end(&mut bytes))
                .map_err(|e| io_err(&data_path, e))?;
            if bytes.len() % 24 != 0 {
                return Err(io_err(&data_path, "binary data length is not a multiple of 24"));
            }
            for rec in bytes.chunks_exact(24) {
                let i = u64::from_le_bytes(rec[0..8].try_into().unwrap());
                let re = f64::from_le_bytes(rec[8..16].try_into().unwrap());
                let im = f64::from_le_bytes(rec[16..24].try_into().unwrap());
                put(i, re, im)?;
            }
        }
    }
    Ok(g)
}
