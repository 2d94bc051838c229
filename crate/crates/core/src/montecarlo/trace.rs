//! Binary realization traces.
//!
//! Layout, all little-endian: an 8-byte magic `STNDTRC1`, then `n_dofs: u64`,
//! `h: f64`, `n_steps: u64`, `n_realizations: u64`. Each frame is the
//! realization index as `u64` followed by `n_steps × n_dofs` `f64`
//! displacements, step-major.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"STNDTRC1";
const COUNT_OFFSET: u64 = 8 + 8 + 8 + 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceHeader {
    pub n_dofs: usize,
    pub h: f64,
    pub n_steps: usize,
    pub n_realizations: usize,
}

pub struct TraceWriter {
    out: BufWriter<File>,
    n_dofs: usize,
    n_steps: usize,
    written: u64,
}

impl TraceWriter {
    pub fn create(path: &Path, n_dofs: usize, h: f64, n_steps: usize) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        out.write_all(MAGIC)?;
        out.write_all(&(n_dofs as u64).to_le_bytes())?;
        out.write_all(&h.to_le_bytes())?;
        out.write_all(&(n_steps as u64).to_le_bytes())?;
        out.write_all(&0u64.to_le_bytes())?;
        Ok(Self { out, n_dofs, n_steps, written: 0 })
    }

    /// `data` is `n_steps × n_dofs`.
    pub fn write_frame(&mut self, index: u64, data: &DMatrix<f64>) -> Result<()> {
        if data.shape() != (self.n_steps, self.n_dofs) {
            return Err(Error::InvalidRequest(format!("frame shape {:?} does not match the header", data.shape())));
        }
        self.out.write_all(&index.to_le_bytes())?;
        for row in data.row_iter() {
            for v in row.iter() {
                self.out.write_all(&v.to_le_bytes())?;
            }
        }
        self.written += 1;
        Ok(())
    }

    /// Patches the realization count into the header.
    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        let file = self.out.get_mut();
        file.seek(SeekFrom::Start(COUNT_OFFSET))?;
        file.write_all(&self.written.to_le_bytes())?;
        file.flush()?;
        Ok(())
    }
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

/// Reads a whole trace file.
pub fn read_trace(path: &Path) -> Result<(TraceHeader, Vec<(u64, DMatrix<f64>)>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Parse(format!("{} is not a trace file", path.display())));
    }
    let n_dofs = read_u64(&mut r)? as usize;
    let h = f64::from_bits(read_u64(&mut r)?);
    let n_steps = read_u64(&mut r)? as usize;
    let n_realizations = read_u64(&mut r)? as usize;
    let header = TraceHeader { n_dofs, h, n_steps, n_realizations };
    let mut frames = Vec::with_capacity(n_realizations);
    for _ in 0..n_realizations {
        let index = read_u64(&mut r)?;
        let mut m = DMatrix::zeros(n_steps, n_dofs);
        for i in 0..n_steps {
            for j in 0..n_dofs {
                m[(i, j)] = f64::from_bits(read_u64(&mut r)?);
            }
        }
        frames.push((index, m));
    }
    Ok((header, frames))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.bin");
        let mut w = TraceWriter::create(&p, 2, 0.01, 3).unwrap();
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, -6.5]);
        w.write_frame(7, &a).unwrap();
        w.write_frame(8, &(-&a)).unwrap();
        assert!(w.write_frame(9, &DMatrix::zeros(2, 2)).is_err());
        w.finish().unwrap();
        let (h, frames) = read_trace(&p).unwrap();
        assert_eq!(h, TraceHeader { n_dofs: 2, h: 0.01, n_steps: 3, n_realizations: 2 });
        assert_eq!(frames[0], (7, a.clone()));
        assert_eq!(frames[1].1, -a);
    }
}
