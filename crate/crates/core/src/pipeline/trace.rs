//! Trace container and on-disk format for synthetic homodyne records.
//!
//! File layout (all little-endian):
//!
//! ```text
//! magic "CSQT" | version u16 | header_len u32 | header JSON (TraceMeta)
//! acq_count u32
//! per acquisition:
//!   theta f64 | n_intervals u32 | transmission f64 × n_intervals
//!             | n_samples  u32 | samples i16 × n_samples
//! ```
//!
//! The header records the generator seed, preset, detector model and drift
//! model, so an analysis run is a pure function of the file content.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::DriveConvention;
use crate::params::ExperimentPreset;

use super::detector::DetectorModel;
use super::drift::DriftModel;

const MAGIC: &[u8; 4] = b"CSQT";
const VERSION: u16 = 1;

/// Metadata shared by every acquisition in a trace set. Carries the full
/// generation provenance, so an analysis run is a pure function of the file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceMeta {
    pub preset: ExperimentPreset,
    /// Model phase assigned to the "X" label.
    pub theta0: f64,
    pub convention: DriveConvention,
    /// Fraction of the full experimental data volume.
    pub scale: f64,
    /// False for null (shot-noise-only) traces.
    pub embed_signal: bool,
    pub seed: u64,
    pub detector: DetectorModel,
    pub drift: DriftModel,
    /// Acquisition length, ms.
    pub acquisition_ms: f64,
    /// Gating interval, µs.
    pub interval_us: f64,
    /// Measured mean offset of the unlocked-cavity coherent calibration
    /// state, in ADC counts (⟨X⟩ = √2.0 by construction).
    pub cal_offset_counts: f64,
    /// Optional common-mode technical tone: (frequency MHz, power relative
    /// to shot noise).
    pub tone: Option<(f64, f64)>,
}

/// One 20 ms acquisition: quadrature phase, per-interval transmission
/// (relative to the empty-cavity maximum), and the quantized homodyne record.
#[derive(Debug, Clone)]
pub struct AcquisitionRecord {
    /// Local-oscillator phase of this acquisition (rad): 0 for the "X"
    /// quadrature label, π/2 for "P".
    pub theta: f64,
    pub transmission: Vec<f64>,
    pub samples: Vec<i16>,
}

impl AcquisitionRecord {
    pub fn samples_per_interval(&self) -> usize {
        self.samples.len() / self.transmission.len()
    }
}

/// A fully materialized set of acquisitions.
#[derive(Debug, Clone)]
pub struct TraceSet {
    pub meta: TraceMeta,
    pub acquisitions: Vec<AcquisitionRecord>,
}

pub fn write_trace_file(path: &Path, meta: &TraceMeta, acquisitions: &[AcquisitionRecord]) -> Result<()> {
    let mut w = TraceWriter::create(path, meta, acquisitions.len() as u32)?;
    for acq in acquisitions {
        w.write_acquisition(acq)?;
    }
    w.finish()
}

pub fn read_trace_file(path: &Path) -> Result<TraceSet> {
    let mut r = TraceReader::open(path)?;
    let mut acquisitions = Vec::with_capacity(r.remaining() as usize);
    while let Some(acq) = r.next_acquisition()? {
        acquisitions.push(acq);
    }
    Ok(TraceSet {
        meta: r.into_meta(),
        acquisitions,
    })
}

/// Streaming writer, so a large synthesis never holds the whole set.
pub struct TraceWriter {
    w: BufWriter<File>,
    declared: u32,
    written: u32,
}

impl TraceWriter {
    pub fn create(path: &Path, meta: &TraceMeta, acq_count: u32) -> Result<Self> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        let header = serde_json::to_vec(meta).map_err(|e| Error::Config(e.to_string()))?;
        w.write_all(&(header.len() as u32).to_le_bytes())?;
        w.write_all(&header)?;
        w.write_all(&acq_count.to_le_bytes())?;
        Ok(Self {
            w,
            declared: acq_count,
            written: 0,
        })
    }

    pub fn write_acquisition(&mut self, acq: &AcquisitionRecord) -> Result<()> {
        self.w.write_all(&acq.theta.to_le_bytes())?;
        self.w.write_all(&(acq.transmission.len() as u32).to_le_bytes())?;
        for t in &acq.transmission {
            self.w.write_all(&t.to_le_bytes())?;
        }
        self.w.write_all(&(acq.samples.len() as u32).to_le_bytes())?;
        // Bulk-copy the sample payload.
        let mut buf = Vec::with_capacity(acq.samples.len() * 2);
        for s in &acq.samples {
            buf.extend_from_slice(&s.to_le_bytes());
        }
        self.w.write_all(&buf)?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        if self.written != self.declared {
            return Err(Error::Estimator(format!(
                "trace writer closed after {} of {} acquisitions",
                self.written, self.declared
            )));
        }
        self.w.flush()?;
        Ok(())
    }
}

/// Streaming reader.
pub struct TraceReader {
    r: BufReader<File>,
    meta: TraceMeta,
    remaining: u32,
}

impl TraceReader {
    pub fn open(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Config(format!("{}: not a trace file", path.display())));
        }
        let version = read_u16(&mut r)?;
        if version != VERSION {
            return Err(Error::Config(format!("unsupported trace version {version}")));
        }
        let header_len = read_u32(&mut r)? as usize;
        let mut header = vec![0u8; header_len];
        r.read_exact(&mut header)?;
        let meta: TraceMeta =
            serde_json::from_slice(&header).map_err(|e| Error::Config(e.to_string()))?;
        let remaining = read_u32(&mut r)?;
        Ok(Self { r, meta, remaining })
    }

    pub fn meta(&self) -> &TraceMeta {
        &self.meta
    }

    pub fn remaining(&self) -> u32 {
        self.remaining
    }

    pub fn into_meta(self) -> TraceMeta {
        self.meta
    }

    pub fn next_acquisition(&mut self) -> Result<Option<AcquisitionRecord>> {
        if self.remaining == 0 {
            return Ok(None);
        }
        self.remaining -= 1;
        let mut theta_bytes = [0u8; 8];
        self.r.read_exact(&mut theta_bytes)?;
        let theta = f64::from_le_bytes(theta_bytes);
        let n_int = read_u32(&mut self.r)? as usize;
        let mut transmission = Vec::with_capacity(n_int);
        for _ in 0..n_int {
            let mut b = [0u8; 8];
            self.r.read_exact(&mut b)?;
            transmission.push(f64::from_le_bytes(b));
        }
        let n_samples = read_u32(&mut self.r)? as usize;
        let mut buf = vec![0u8; n_samples * 2];
        self.r.read_exact(&mut buf)?;
        let samples = buf
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]))
            .collect();
        Ok(Some(AcquisitionRecord {
            theta,
            transmission,
            samples,
        }))
    }
}

fn read_u16<R: Read>(r: &mut R) -> Result<u16> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b)?;
    Ok(u16::from_le_bytes(b))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> TraceMeta {
        TraceMeta {
            preset: crate::params::preset(crate::params::PresetName::ConfigA),
            theta0: std::f64::consts::FRAC_PI_2,
            convention: DriveConvention::InputCoupling,
            scale: 0.05,
            embed_signal: true,
            seed: 42,
            detector: DetectorModel::standard(0.55),
            drift: DriftModel::linear_droop(0.002),
            acquisition_ms: 20.0,
            interval_us: 200.0,
            cal_offset_counts: 335.6,
            tone: None,
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = std::env::temp_dir().join("csq_trace_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.csqt");
        let acq = AcquisitionRecord {
            theta: std::f64::consts::FRAC_PI_2,
            transmission: vec![0.02, 0.5, 0.97],
            samples: vec![-3, 0, 7, 8191, -8192, 12],
        };
        write_trace_file(&path, &meta(), std::slice::from_ref(&acq)).unwrap();
        let back = read_trace_file(&path).unwrap();
        assert_eq!(back.meta.seed, 42);
        assert_eq!(back.acquisitions.len(), 1);
        assert_eq!(back.acquisitions[0].samples, acq.samples);
        assert_eq!(back.acquisitions[0].transmission, acq.transmission);
        assert_eq!(back.acquisitions[0].theta, acq.theta);
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn rejects_foreign_files() {
        let dir = std::env::temp_dir().join("csq_trace_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bogus.csqt");
        std::fs::write(&path, b"not a trace").unwrap();
        assert!(TraceReader::open(&path).is_err());
        std::fs::remove_file(&path).unwrap();
    }
}
