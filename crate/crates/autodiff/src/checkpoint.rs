//! Binary parameter file.
//!
//! Layout: magic, `u32` version, `u32` record count, then per record a
//! `u32` name length, UTF-8 name, `u32` rank, `u64` extents and the
//! little-endian `f32` payload. All integers are little-endian.

use std::io::{Read, Write};

use crate::error::{AutodiffError, Result};
use crate::param::ParamStore;
use crate::tensor::Tensor;

pub const CHECKPOINT_MAGIC: [u8; 8] = *b"SPKRXCK\0";
pub const CHECKPOINT_VERSION: u32 = 1;

const MAX_RANK: u32 = 8;
const MAX_NAME: u32 = 4096;

pub fn write_checkpoint<W: Write>(mut w: W, store: &ParamStore<f32>) -> Result<()> {
    w.write_all(&CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(store.len() as u32).to_le_bytes())?;
    for p in store.iter() {
        let name = p.name.as_bytes();
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name)?;
        let shape = p.tensor.shape();
        w.write_all(&(shape.len() as u32).to_le_bytes())?;
        for &d in shape {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(p.tensor.len() * 4);
        for v in p.tensor.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u64::from_le_bytes(b))
}

fn truncated(e: std::io::Error) -> AutodiffError {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        AutodiffError::Checkpoint("file is truncated".into())
    } else {
        AutodiffError::Io(e)
    }
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Vec<(String, Tensor<f32>)>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(truncated)?;
    if magic != CHECKPOINT_MAGIC {
        return Err(AutodiffError::Checkpoint("bad magic bytes".into()));
    }
    let version = read_u32(&mut r)?;
    if version != CHECKPOINT_VERSION {
        return Err(AutodiffError::Checkpoint(format!(
            "unsupported version {version}, expected {CHECKPOINT_VERSION}"
        )));
    }
    let count = read_u32(&mut r)?;
    let mut out = Vec::new();
    for _ in 0..count {
        let name_len = read_u32(&mut r)?;
        if name_len > MAX_NAME {
            return Err(AutodiffError::Checkpoint(format!(
                "parameter name of {name_len} bytes"
            )));
        }
        let mut name = vec![0u8; name_len as usize];
        r.read_exact(&mut name).map_err(truncated)?;
        let name = String::from_utf8(name)
            .map_err(|_| AutodiffError::Checkpoint("parameter name is not UTF-8".into()))?;
        let rank = read_u32(&mut r)?;
        if rank > MAX_RANK {
            return Err(AutodiffError::Checkpoint(format!(
                "parameter `{name}` has rank {rank}"
            )));
        }
        let mut shape = Vec::with_capacity(rank as usize);
        let mut len: usize = 1;
        for _ in 0..rank {
            let d = usize::try_from(read_u64(&mut r)?)
                .map_err(|_| AutodiffError::Checkpoint("extent overflows usize".into()))?;
            len = len
                .checked_mul(d)
                .filter(|&l| l <= 1 << 31)
                .ok_or_else(|| AutodiffError::Checkpoint(format!("parameter `{name}` too large")))?;
            shape.push(d);
        }
        let mut bytes = vec![0u8; len * 4];
        r.read_exact(&mut bytes).map_err(truncated)?;
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        out.push((name, Tensor::new(shape, data)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ParamStore<f32> {
        let mut s = ParamStore::new();
        s.add("conv.kernel", Tensor::from_fn([2, 1, 3, 3], |i| i as f32 * 0.1 - 0.7), true);
        s.add("bn.running_var", Tensor::new([2], vec![f32::MIN_POSITIVE, -0.0]).unwrap(), false);
        s.add("beta_raw", Tensor::scalar(1.0e-38), true);
        s
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let s = sample();
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &s).unwrap();
        let records = read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(records.len(), 3);
        for ((name, t), p) in records.iter().zip(s.iter()) {
            assert_eq!(name, &p.name);
            assert_eq!(t.shape(), p.tensor.shape());
            let a: Vec<u32> = t.data().iter().map(|x| x.to_bits()).collect();
            let b: Vec<u32> = p.tensor.data().iter().map(|x| x.to_bits()).collect();
            assert_eq!(a, b);
        }
        let mut fresh = sample();
        fresh.iter_mut().for_each(|p| p.tensor.data_mut().fill(0.0));
        fresh.load(records).unwrap();
        assert_eq!(fresh.get(crate::ParamId(0)).tensor, s.get(crate::ParamId(0)).tensor);
    }

    #[test]
    fn rejects_bad_magic_version_and_truncation() {
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &sample()).unwrap();
        let mut bad = buf.clone();
        bad[0] ^= 1;
        assert!(read_checkpoint(bad.as_slice()).is_err());
        let mut bad = buf.clone();
        bad[8] = 9;
        let err = read_checkpoint(bad.as_slice()).unwrap_err().to_string();
        assert!(err.contains("version"), "{err}");
        let err = read_checkpoint(&buf[..buf.len() - 2]).unwrap_err().to_string();
        assert!(err.contains("truncated"), "{err}");
    }
}
