//! Fixed training corpora.
//!
//! Layout (little-endian): magic, `u32` version, 32-byte config digest,
//! `u32` sample count, `u32` symbols, subcarriers, antennas and bits per
//! symbol, then per sample the received grid and pilot grid as interleaved
//! `f32` real/imaginary pairs, one `u8` data flag per OFDM symbol and the
//! `u8` bit grid.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{PhyError, Result};
use crate::grid::Grid;

pub const DATASET_MAGIC: [u8; 8] = *b"SPKRXDS\0";
const DATASET_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetHeader {
    pub digest: [u8; 32],
    pub count: u32,
    pub symbols: u32,
    pub subcarriers: u32,
    pub antennas: u32,
    pub bits_per_symbol: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSample {
    pub rx: Grid,
    pub pilot: Grid,
    pub data_mask: Vec<bool>,
    pub bit_grid: Vec<u8>,
}

fn write_grid<W: Write>(w: &mut W, g: &Grid) -> Result<()> {
    let mut buf = Vec::with_capacity(g.data().len() * 8);
    for z in g.data() {
        buf.extend_from_slice(&(z.re as f32).to_le_bytes());
        buf.extend_from_slice(&(z.im as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_grid<R: Read>(r: &mut R, m: usize, n: usize, a: usize) -> Result<Grid> {
    let mut g = Grid::zeros(m, n, a);
    let mut buf = vec![0u8; m * n * a * 8];
    r.read_exact(&mut buf).map_err(truncated)?;
    for (z, c) in g.data_mut().iter_mut().zip(buf.chunks_exact(8)) {
        let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
        let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
        *z = Complex64::new(f64::from(re), f64::from(im));
    }
    Ok(g)
}

fn truncated(e: std::io::Error) -> PhyError {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        PhyError::Dataset("file is truncated".into())
    } else {
        PhyError::Io(e)
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

pub fn write_dataset<W: Write>(mut w: W, digest: [u8; 32], samples: &[DatasetSample]) -> Result<()> {
    let first = samples
        .first()
        .ok_or_else(|| PhyError::Dataset("no samples".into()))?;
    let (m, n, a) = (first.rx.symbols(), first.rx.subcarriers(), first.rx.antennas());
    let bits = first.bit_grid.len() / (m * n).max(1);
    w.write_all(&DATASET_MAGIC)?;
    w.write_all(&DATASET_VERSION.to_le_bytes())?;
    w.write_all(&digest)?;
    for v in [samples.len(), m, n, a, bits] {
        w.write_all(&(v as u32).to_le_bytes())?;
    }
    for s in samples {
        if s.rx.symbols() != m
            || s.rx.subcarriers() != n
            || s.rx.antennas() != a
            || s.pilot.symbols() != m
            || s.pilot.subcarriers() != n
            || s.pilot.antennas() != 1
            || s.data_mask.len() != m
            || s.bit_grid.len() != m * n * bits
        {
            return Err(PhyError::Dataset("samples have inconsistent shapes".into()));
        }
        write_grid(&mut w, &s.rx)?;
        write_grid(&mut w, &s.pilot)?;
        let mask: Vec<u8> = s.data_mask.iter().map(|&d| u8::from(d)).collect();
        w.write_all(&mask)?;
        w.write_all(&s.bit_grid)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset<R: Read>(mut r: R) -> Result<(DatasetHeader, Vec<DatasetSample>)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(truncated)?;
    if magic != DATASET_MAGIC {
        return Err(PhyError::Dataset("bad magic bytes".into()));
    }
    let version = read_u32(&mut r)?;
    if version != DATASET_VERSION {
        return Err(PhyError::Dataset(format!("unsupported version {version}")));
    }
    let mut digest = [0u8; 32];
    r.read_exact(&mut digest).map_err(truncated)?;
    let header = DatasetHeader {
        digest,
        count: read_u32(&mut r)?,
        symbols: read_u32(&mut r)?,
        subcarriers: read_u32(&mut r)?,
        antennas: read_u32(&mut r)?,
        bits_per_symbol: read_u32(&mut r)?,
    };
    let (m, n, a, b) = (
        header.symbols as usize,
        header.subcarriers as usize,
        header.antennas as usize,
        header.bits_per_symbol as usize,
    );
    if m * n * a * b == 0 || m * n > 1 << 24 || a > 2 || b > 10 {
        return Err(PhyError::Dataset(format!("implausible dimensions {header:?}")));
    }
    let mut samples = Vec::new();
    for _ in 0..header.count {
        let rx = read_grid(&mut r, m, n, a)?;
        let pilot = read_grid(&mut r, m, n, 1)?;
        let mut mask = vec![0u8; m];
        r.read_exact(&mut mask).map_err(truncated)?;
        let mut bit_grid = vec![0u8; m * n * b];
        r.read_exact(&mut bit_grid).map_err(truncated)?;
        samples.push(DatasetSample {
            rx,
            pilot,
            data_mask: mask.into_iter().map(|v| v != 0).collect(),
            bit_grid,
        });
    }
    Ok((header, samples))
}
