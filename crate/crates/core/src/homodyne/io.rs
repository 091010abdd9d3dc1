//! Dataset and record-store files.
//!
//! Quadrature datasets are CSV with header `segment_id,phase_rad,x`.
//! Record stores are little-endian binary:
//!
//! ```text
//! "HRV1"  u32 n_records  u32 n_samples  f32 dt_ns
//! f32 t0[n_records]        (seconds)
//! f32 phase[n_records]     (radians)
//! f32 samples[n_records * n_samples]   (record-major)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{HomodyneRecord, QuadratureSample};
use crate::error::{Error, Result};

pub const DATASET_HEADER: [&str; 3] = ["segment_id", "phase_rad", "x"];
pub const RECORD_MAGIC: &[u8; 4] = b"HRV1";

pub fn write_dataset<W: Write>(samples: &[QuadratureSample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(DATASET_HEADER).map_err(io)?;
    for s in samples {
        w.write_record(&[s.segment_id.to_string(), format!("{:.17e}", s.phase), format!("{:.17e}", s.value)])
            .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dataset_file(samples: &[QuadratureSample], path: &Path) -> Result<()> {
    write_dataset(samples, BufWriter::new(File::create(path)?))
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: u64) -> Result<T> {
    let raw = rec.get(i).ok_or_else(|| Error::Parse { line, msg: format!("missing column {}", DATASET_HEADER[i]) })?;
    raw.trim()
        .parse()
        .map_err(|_| Error::Parse { line, msg: format!("bad {} value {raw:?}", DATASET_HEADER[i]) })
}

pub fn read_dataset<R: Read>(input: R) -> Result<Vec<QuadratureSample>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(input);
    let header = r.headers().map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?.clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names != DATASET_HEADER {
        return Err(Error::Parse { line: 1, msg: format!("expected header {}, got {}", DATASET_HEADER.join(","), names.join(",")) });
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::Parse { line, msg: e.to_string() }
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != 3 {
            return Err(Error::Parse { line, msg: format!("expected 3 fields, got {}", rec.len()) });
        }
        let segment_id: u64 = field(&rec, 0, line)?;
        let phase: f64 = field(&rec, 1, line)?;
        let value: f64 = field(&rec, 2, line)?;
        if !phase.is_finite() || !value.is_finite() {
            return Err(Error::Parse { line, msg: "non-finite value".into() });
        }
        out.push(QuadratureSample { segment_id, phase, value });
    }
    Ok(out)
}

pub fn read_dataset_file(path: &Path) -> Result<Vec<QuadratureSample>> {
    read_dataset(BufReader::new(File::open(path)?))
}

/// Write records sharing one geometry. Values are stored as `f32`.
pub fn write_records<W: Write>(records: &[HomodyneRecord], out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    let n_samples = records.first().map(|r| r.samples.len()).unwrap_or(0);
    let dt = records.first().map(|r| r.dt).unwrap_or(0.0);
    if records.iter().any(|r| r.samples.len() != n_samples || r.dt != dt) {
        return Err(Error::Contract("records must share one sampling geometry".into()));
    }
    let n_records = u32::try_from(records.len()).map_err(|_| Error::Format("too many records".into()))?;
    w.write_all(RECORD_MAGIC)?;
    w.write_all(&n_records.to_le_bytes())?;
    w.write_all(&(n_samples as u32).to_le_bytes())?;
    w.write_all(&((dt * 1e9) as f32).to_le_bytes())?;
    for r in records {
        w.write_all(&(r.t0 as f32).to_le_bytes())?;
    }
    for r in records {
        w.write_all(&(r.lo_phase as f32).to_le_bytes())?;
    }
    for r in records {
        for &x in &r.samples {
            w.write_all(&(x as f32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_records_file(records: &[HomodyneRecord], path: &Path) -> Result<()> {
    write_records(records, File::create(path)?)
}

fn read_f32s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f32>> {
    let mut buf = vec![0u8; n * 4];
    r.read_exact(&mut buf).map_err(|_| Error::Format("record store truncated".into()))?;
    Ok(buf.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<HomodyneRecord>> {
    let mut r = BufReader::new(input);
    let mut head = [0u8; 16];
    r.read_exact(&mut head).map_err(|_| Error::Format("record store header truncated".into()))?;
    if &head[0..4] != RECORD_MAGIC {
        return Err(Error::Format("not an HRV1 record store".into()));
    }
    let n_records = u32::from_le_bytes(head[4..8].try_into().unwrap()) as usize;
    let n_samples = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
    let dt_ns = f32::from_le_bytes(head[12..16].try_into().unwrap());
    let t0 = read_f32s(&mut r, n_records)?;
    let phase = read_f32s(&mut r, n_records)?;
    let dt = dt_ns as f64 * 1e-9;
    let mut out = Vec::with_capacity(n_records);
    for i in 0..n_records {
        let samples = read_f32s(&mut r, n_samples)?.into_iter().map(f64::from).collect();
        out.push(HomodyneRecord { t0: t0[i] as f64, dt, samples, lo_phase: phase[i] as f64 });
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after record store".into()));
    }
    Ok(out)
}

pub fn read_records_file(path: &Path) -> Result<Vec<HomodyneRecord>> {
    read_records(File::open(path)?)
}
