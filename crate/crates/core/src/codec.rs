//! Little-endian f32 matrix containers shared by the component, feature and
//! model files.

use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

pub(crate) fn put_u32(buf: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::invalid(format!("{v} exceeds u32 field")))?;
    buf.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

pub(crate) fn get_u32(buf: &[u8], at: usize) -> usize {
    u32::from_le_bytes(buf[at..at + 4].try_into().expect("4 bytes")) as usize
}

pub(crate) fn put_f32s(buf: &mut Vec<u8>, values: impl IntoIterator<Item = f64>) {
    for v in values {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
}

pub(crate) fn get_f32s(buf: &[u8]) -> Vec<f64> {
    buf.chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
        .collect()
}

pub(crate) fn read_with_magic(path: &Path, magic: &[u8; 4], header: usize) -> Result<Vec<u8>> {
    let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if buf.len() < header || &buf[..4] != magic {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            location: "0".into(),
            message: format!("missing {} header", String::from_utf8_lossy(magic)),
        });
    }
    Ok(buf)
}

pub(crate) fn check_payload(path: &Path, buf: &[u8], offset: usize, values: usize) -> Result<()> {
    if buf.len() != offset + 4 * values {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            location: offset.to_string(),
            message: format!(
                "expected {values} f32 values, found {} payload bytes",
                buf.len() - offset
            ),
        });
    }
    Ok(())
}

pub(crate) fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

const FEA_MAGIC: &[u8; 4] = b"FEA1";

/// Writes a feature or sample matrix: `FEA1`, u32 rows, u32 cols, then
/// row-major f32 values.
pub fn write_matrix(path: &Path, m: &Array2<f64>) -> Result<()> {
    let mut buf = Vec::with_capacity(12 + m.len() * 4);
    buf.extend_from_slice(FEA_MAGIC);
    put_u32(&mut buf, m.nrows())?;
    put_u32(&mut buf, m.ncols())?;
    put_f32s(&mut buf, m.iter().copied());
    write(path, &buf)
}

pub fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    let buf = read_with_magic(path, FEA_MAGIC, 12)?;
    let (rows, cols) = (get_u32(&buf, 4), get_u32(&buf, 8));
    check_payload(path, &buf, 12, rows * cols)?;
    Ok(Array2::from_shape_vec((rows, cols), get_f32s(&buf[12..])).expect("checked length"))
}
