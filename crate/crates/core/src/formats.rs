//! On-disk formats for volatility series and input-kind sniffing.
//!
//! Binary layout: 8-byte magic `MFVOL001`, u64 LE length, then length
//! f64 LE values. Trailing bytes after the payload are an error, not
//! slack. The CSV form is `bin_start_timestamp,v`; synthetic series
//! without calendar days label rows with the bare bin index.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;

use crate::error::{MfError, Result};
use crate::ingest::{SessionCalendar, VolatilitySeries};

pub const VOL_MAGIC: &[u8; 8] = b"MFVOL001";
const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

pub fn write_vol_binary(path: &Path, series: &VolatilitySeries) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(VOL_MAGIC)?;
    w.write_all(&(series.values.len() as u64).to_le_bytes())?;
    for v in &series.values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_vol_binary(mut r: impl Read, instrument_id: &str) -> Result<VolatilitySeries> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| MfError::Format("file shorter than the 8-byte magic".into()))?;
    if &magic != VOL_MAGIC {
        return Err(MfError::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&magic),
            String::from_utf8_lossy(VOL_MAGIC)
        )));
    }
    let mut len_buf = [0u8; 8];
    r.read_exact(&mut len_buf)
        .map_err(|_| MfError::Format("truncated length field".into()))?;
    let len64 = u64::from_le_bytes(len_buf);
    if len64 > (1 << 40) {
        return Err(MfError::Format(format!("implausible length field {len64}")));
    }
    let len = len64 as usize;
    let mut payload = vec![0u8; len * 8];
    r.read_exact(&mut payload)
        .map_err(|_| MfError::Format(format!("truncated payload, expected {len} values")))?;
    let mut trailer = [0u8; 1];
    if r.read(&mut trailer)? != 0 {
        return Err(MfError::Format("trailing bytes after payload".into()));
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(VolatilitySeries::synthetic(instrument_id, values))
}

/// Written row-per-bin; timestamps come from the calendar when the series
/// carries day metadata, otherwise the bin index stands in.
pub fn write_vol_csv(
    path: &Path,
    series: &VolatilitySeries,
    calendar: Option<&SessionCalendar>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "bin_start_timestamp,v")?;
    let bins_per_day = calendar.map(|c| c.bins_per_day());
    for (i, v) in series.values.iter().enumerate() {
        let label = match (calendar, bins_per_day) {
            (Some(cal), Some(bpd)) if !series.days.is_empty() && bpd > 0 => {
                let day = i / bpd;
                series
                    .days
                    .get(day)
                    .and_then(|&d| cal.bin_start(d, i % bpd))
                    .map(|t| t.format("%Y-%m-%dT%H:%M:%S").to_string())
            }
            _ => None,
        };
        match label {
            Some(l) => writeln!(w, "{l},{v}")?,
            None => writeln!(w, "{i},{v}")?,
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_vol_csv(r: impl Read, instrument_id: &str) -> Result<VolatilitySeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(r);
    let headers = rdr
        .headers()
        .map_err(|e| MfError::Format(format!("malformed header: {e}")))?;
    let v_idx = headers
        .iter()
        .position(|h| h == "v")
        .ok_or_else(|| MfError::Format("volatility CSV lacks a `v` column".into()))?;
    let mut values = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| MfError::Format(format!("bad CSV record: {e}")))?;
        let raw = record
            .get(v_idx)
            .ok_or_else(|| MfError::Format("short CSV record".into()))?;
        let v: f64 = raw
            .parse()
            .map_err(|_| MfError::Format(format!("unparsable volatility value `{raw}`")))?;
        values.push(v);
    }
    if values.is_empty() {
        return Err(MfError::EmptyInput("volatility CSV has no data rows".into()));
    }
    Ok(VolatilitySeries::synthetic(instrument_id, values))
}

/// Transparently unwraps gzip by magic, regardless of extension.
pub fn open_maybe_gz(path: &Path) -> Result<Box<dyn Read>> {
    let mut f = BufReader::new(File::open(path)?);
    let head = f.fill_buf()?;
    if head.len() >= 2 && head[..2] == GZIP_MAGIC {
        Ok(Box::new(GzDecoder::new(f)))
    } else {
        Ok(Box::new(f))
    }
}

/// Read a volatility series, sniffing binary vs CSV by magic.
pub fn read_vol_auto(path: &Path, instrument_id: &str) -> Result<VolatilitySeries> {
    let mut r = BufReader::new(open_maybe_gz(path)?);
    let head = r.fill_buf()?;
    if head.len() >= 8 && &head[..8] == VOL_MAGIC {
        read_vol_binary(r, instrument_id)
    } else {
        read_vol_csv(r, instrument_id)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputKind {
    VolBinary,
    VolCsv,
    TickCsv,
}

/// Classify a file for batch processing: binary by magic, then CSV by
/// whether the header carries the tick price column.
pub fn sniff_kind(path: &Path, price_column: &str) -> Result<InputKind> {
    let mut r = BufReader::new(open_maybe_gz(path)?);
    let head = r.fill_buf()?;
    if head.len() >= 8 && &head[..8] == VOL_MAGIC {
        return Ok(InputKind::VolBinary);
    }
    let mut first_line = String::new();
    r.read_line(&mut first_line)?;
    let has = |col: &str| first_line.split(',').any(|h| h.trim() == col);
    if has(price_column) {
        Ok(InputKind::TickCsv)
    } else if has("v") {
        Ok(InputKind::VolCsv)
    } else {
        Err(MfError::Format(format!(
            "cannot classify `{}`: no magic, no `{price_column}` or `v` column",
            path.display()
        )))
    }
}
