//! Spatial / temporal decomposition of an event video.
//!
//! The spatial component is a handful of frames sampled far apart in time;
//! the temporal component is the trajectory of k-means cluster centers over
//! short time slices. [`downsample_frames`] is the low-pass + subsample stage
//! placed in front of the reservoir.

mod downsample;
mod spatial;
mod temporal;

pub use downsample::{downsample_frames, flatten_video, unflatten_video, DownsampleSpec, SmoothingFilter};
pub use spatial::{extract_spatial, sparse_indices, FramePolicy, SpatialComponent};
pub use temporal::{extract_temporal, kmeans, TemporalComponent, TemporalParams};

use std::path::Path;

use crate::codec;
use crate::error::{Error, Result};

const VSC_MAGIC: &[u8; 4] = b"VSC1";
const VTC_MAGIC: &[u8; 4] = b"VTC1";

/// Which component a persisted vector holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentKind {
    Spatial,
    Temporal,
}

impl ComponentKind {
    fn magic(self) -> &'static [u8; 4] {
        match self {
            ComponentKind::Spatial => VSC_MAGIC,
            ComponentKind::Temporal => VTC_MAGIC,
        }
    }
}

/// A flat component vector with its logical `(rows, cols)` shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentBlob {
    pub kind: ComponentKind,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
}

/// 16-byte header: magic, u32 length, u32 rows, u32 cols; then `length`
/// little-endian f32 values.
pub fn write_component(path: &Path, blob: &ComponentBlob) -> Result<()> {
    if blob.rows * blob.cols != blob.data.len() {
        return Err(Error::DimensionMismatch {
            expected: blob.rows * blob.cols,
            got: blob.data.len(),
        });
    }
    let mut buf = Vec::with_capacity(16 + 4 * blob.data.len());
    buf.extend_from_slice(blob.kind.magic());
    codec::put_u32(&mut buf, blob.data.len())?;
    codec::put_u32(&mut buf, blob.rows)?;
    codec::put_u32(&mut buf, blob.cols)?;
    codec::put_f32s(&mut buf, blob.data.iter().map(|&v| f64::from(v)));
    codec::write(path, &buf)
}

pub fn read_component(path: &Path, kind: ComponentKind) -> Result<ComponentBlob> {
    let buf = codec::read_with_magic(path, kind.magic(), 16)?;
    let len = codec::get_u32(&buf, 4);
    let (rows, cols) = (codec::get_u32(&buf, 8), codec::get_u32(&buf, 12));
    codec::check_payload(path, &buf, 16, len)?;
    if rows * cols != len {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            location: "8".into(),
            message: format!("shape {rows}x{cols} does not match length {len}"),
        });
    }
    Ok(ComponentBlob {
        kind,
        rows,
        cols,
        data: codec::get_f32s(&buf[16..]).into_iter().map(|v| v as f32).collect(),
    })
}

impl From<&SpatialComponent> for ComponentBlob {
    fn from(c: &SpatialComponent) -> Self {
        ComponentBlob {
            kind: ComponentKind::Spatial,
            rows: c.frame_indices.len(),
            cols: c.frame_len,
            data: c.data.clone(),
        }
    }
}

impl From<&TemporalComponent> for ComponentBlob {
    fn from(c: &TemporalComponent) -> Self {
        ComponentBlob {
            kind: ComponentKind::Temporal,
            rows: 2 * c.k,
            cols: c.n_slices,
            data: c.data.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn component_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.vtc");
        let blob = ComponentBlob {
            kind: ComponentKind::Temporal,
            rows: 2,
            cols: 3,
            data: vec![1.0, 2.5, -3.0, 4.0, 5.0, 6.0],
        };
        write_component(&p, &blob).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        assert_eq!(&bytes[..8], b"VTC1\x06\0\0\0");
        assert_eq!(bytes.len(), 16 + 24);
        assert_eq!(read_component(&p, ComponentKind::Temporal).unwrap(), blob);
        assert!(read_component(&p, ComponentKind::Spatial).is_err());
    }
}
