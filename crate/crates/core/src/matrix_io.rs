//! Binary matrix files.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "GEMM"
//! 4       4     dtype code, u32 LE (1 = f32, 2 = f64)
//! 8       4     rows, u32 LE
//! 12      4     cols, u32 LE
//! 16      ...   row-major elements, little-endian
//! ```

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::{MatrixF32, MatrixF64};

pub const MAGIC: &[u8; 4] = b"GEMM";
pub const DTYPE_F32: u32 = 1;
pub const DTYPE_F64: u32 = 2;

fn write_header(w: &mut impl Write, dtype: u32, rows: usize, cols: usize) -> Result<()> {
    let dim = |d: usize| u32::try_from(d).map_err(|_| Error::Format(format!("dimension {d} exceeds u32")));
    w.write_all(MAGIC)?;
    w.write_all(&dtype.to_le_bytes())?;
    w.write_all(&dim(rows)?.to_le_bytes())?;
    w.write_all(&dim(cols)?.to_le_bytes())?;
    Ok(())
}

fn read_header(r: &mut impl Read) -> Result<(u32, usize, usize)> {
    let mut h = [0u8; 16];
    r.read_exact(&mut h)
        .map_err(|e| Error::Format(format!("short header: {e}")))?;
    if &h[0..4] != MAGIC {
        return Err(Error::Format("missing GEMM magic".into()));
    }
    let word = |i: usize| u32::from_le_bytes(h[i..i + 4].try_into().unwrap());
    Ok((word(4), word(8) as usize, word(12) as usize))
}

pub fn write_f32(w: &mut impl Write, m: &MatrixF32) -> Result<()> {
    write_header(w, DTYPE_F32, m.rows(), m.cols())?;
    let mut buf = Vec::with_capacity(m.as_slice().len() * 4);
    for x in m.as_slice() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn write_f64(w: &mut impl Write, m: &MatrixF64) -> Result<()> {
    write_header(w, DTYPE_F64, m.rows(), m.cols())?;
    let mut buf = Vec::with_capacity(m.as_slice().len() * 8);
    for x in m.as_slice() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_body(r: &mut impl Read, len: usize, width: usize) -> Result<Vec<u8>> {
    let bytes = len
        .checked_mul(width)
        .ok_or_else(|| Error::Format("matrix too large".into()))?;
    let mut body = Vec::new();
    r.take(bytes as u64 + 1).read_to_end(&mut body)?;
    if body.len() != bytes {
        return Err(Error::Format(format!(
            "expected {bytes} data bytes, found {}{}",
            body.len().min(bytes),
            if body.len() > bytes { " plus trailing data" } else { "" }
        )));
    }
    Ok(body)
}

/// Read an f32 matrix; f64 files are rejected rather than rounded.
pub fn read_f32(r: &mut impl Read) -> Result<MatrixF32> {
    let (dtype, rows, cols) = read_header(r)?;
    if dtype != DTYPE_F32 {
        return Err(Error::Format(format!("expected f32 data (code 1), found code {dtype}")));
    }
    let body = read_body(r, rows * cols, 4)?;
    let data = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    MatrixF32::from_vec(rows, cols, data)
}

pub fn read_f64(r: &mut impl Read) -> Result<MatrixF64> {
    let (dtype, rows, cols) = read_header(r)?;
    if dtype != DTYPE_F64 {
        return Err(Error::Format(format!("expected f64 data (code 2), found code {dtype}")));
    }
    let body = read_body(r, rows * cols, 8)?;
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    MatrixF64::from_vec(rows, cols, data)
}

pub fn load_f32(path: impl AsRef<Path>) -> Result<MatrixF32> {
    read_f32(&mut std::io::BufReader::new(std::fs::File::open(path)?))
}

pub fn save_f32(path: impl AsRef<Path>, m: &MatrixF32) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_f32(&mut w, m)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let m = MatrixF32::from_vec(1, 2, vec![1.0, f32::from_bits(1)]).unwrap();
        let mut buf = Vec::new();
        write_f32(&mut buf, &m).unwrap();
        assert_eq!(&buf[..4], b"GEMM");
        assert_eq!(&buf[4..16], &[1, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0]);
        assert_eq!(&buf[16..20], &1.0f32.to_le_bytes());
        assert_eq!(&buf[20..], &[1, 0, 0, 0]);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(read_f32(&mut &b"GEM"[..]).is_err());
        assert!(read_f32(&mut &b"XXXX\x01\0\0\0\x01\0\0\0\x01\0\0\0\0\0\x80\x3f"[..]).is_err());
        // Truncated body.
        assert!(read_f32(&mut &b"GEMM\x01\0\0\0\x01\0\0\0\x02\0\0\0\0\0\x80\x3f"[..]).is_err());
        // Wrong dtype.
        let mut buf = Vec::new();
        write_f64(&mut buf, &MatrixF64::zeros(1, 1)).unwrap();
        assert!(read_f32(&mut buf.as_slice()).is_err());
        assert!(read_f64(&mut buf.as_slice()).is_ok());
        // Trailing bytes.
        let mut buf = Vec::new();
        write_f32(&mut buf, &MatrixF32::zeros(1, 1)).unwrap();
        buf.push(0);
        assert!(read_f32(&mut buf.as_slice()).is_err());
    }

    proptest! {
        #[test]
        fn bit_exact_roundtrip(rows in 0usize..5, cols in 0usize..5, bits in proptest::collection::vec(any::<u32>(), 25)) {
            let m = MatrixF32::from_fn(rows, cols, |i, j| f32::from_bits(bits[i * 5 + j]));
            let mut buf = Vec::new();
            write_f32(&mut buf, &m).unwrap();
            prop_assert!(read_f32(&mut buf.as_slice()).unwrap().bits_eq(&m));
        }
    }
}
