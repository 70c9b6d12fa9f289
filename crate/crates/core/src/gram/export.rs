//! Matrix export: CSV rows of interleaved `re, im` values, and a compact
//! little-endian binary layout.
//!
//! Binary layout: a 16-byte header (`b"GRAM"`, `u32` dimension, `u32`
//! flags, `u32` reserved = 0) followed by the matrix in row-major order as
//! `(re, im)` pairs. Flag bit 0 clear means `f32` pairs (complex64), set
//! means `f64` pairs.

use std::io::{BufRead, Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

const MAGIC: &[u8; 4] = b"GRAM";
const FLAG_F64: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryPrecision {
    F32,
    F64,
}

pub fn write_csv<W: Write>(m: &CMatrix, mut w: W) -> Result<()> {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .flat_map(|j| {
                let z = m[(i, j)];
                [format!("{:e}", z.re), format!("{:e}", z.im)]
            })
            .collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(r: R) -> Result<CMatrix> {
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let vals = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::InvalidArgument(format!("bad CSV value: {e}")))?;
        if vals.len() % 2 != 0 {
            return Err(Error::InvalidArgument("CSV row has an odd number of values".into()));
        }
        rows.push(vals.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect());
    }
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidArgument("CSV matrix is not square".into()));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

pub fn write_binary<W: Write>(m: &CMatrix, precision: BinaryPrecision, mut w: W) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidArgument("only square matrices are exported".into()));
    }
    let dim = u32::try_from(m.nrows()).map_err(|_| Error::InvalidArgument("matrix too large".into()))?;
    let flags = match precision {
        BinaryPrecision::F32 => 0,
        BinaryPrecision::F64 => FLAG_F64,
    };
    w.write_all(MAGIC)?;
    w.write_all(&dim.to_le_bytes())?;
    w.write_all(&flags.to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            match precision {
                BinaryPrecision::F32 => {
                    w.write_all(&(z.re as f32).to_le_bytes())?;
                    w.write_all(&(z.im as f32).to_le_bytes())?;
                }
                BinaryPrecision::F64 => {
                    w.write_all(&z.re.to_le_bytes())?;
                    w.write_all(&z.im.to_le_bytes())?;
                }
            }
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_binary<R: Read>(mut r: R) -> Result<(CMatrix, BinaryPrecision)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::InvalidArgument("missing GRAM magic".into()));
    }
    let dim = read_u32(&mut r)? as usize;
    let flags = read_u32(&mut r)?;
    let _reserved = read_u32(&mut r)?;
    let precision = if flags & FLAG_F64 != 0 {
        BinaryPrecision::F64
    } else {
        BinaryPrecision::F32
    };
    let mut m = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            m[(i, j)] = match precision {
                BinaryPrecision::F32 => {
                    let mut b = [0u8; 8];
                    r.read_exact(&mut b)?;
                    let re = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
                    let im = f32::from_le_bytes([b[4], b[5], b[6], b[7]]);
                    Complex64::new(re as f64, im as f64)
                }
                BinaryPrecision::F64 => {
                    let mut b = [0u8; 16];
                    r.read_exact(&mut b)?;
                    let re = f64::from_le_bytes(b[..8].try_into().expect("8 bytes"));
                    let im = f64::from_le_bytes(b[8..].try_into().expect("8 bytes"));
                    Complex64::new(re, im)
                }
            };
        }
    }
    Ok((m, precision))
}
