use serde::Serialize;

use super::{EventStream, Geometry};
use crate::error::{Error, Result};

/// `D` event frames, each a `(2, H, W)` tensor of per-polarity values.
///
/// Values are event counts straight out of [`aggregate_frames`]; after spatial
/// filtering they are real-valued. Storage is one contiguous buffer in
/// `(frame, polarity, row, col)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    data: Vec<f32>,
    num_frames: usize,
    geometry: Geometry,
    pub window_us: u64,
    pub label: Option<u16>,
    /// The source stream ended before the last window began.
    pub truncated: bool,
    /// Events past the final window.
    pub discarded: usize,
}

impl FrameSequence {
    pub fn from_data(
        data: Vec<f32>,
        num_frames: usize,
        geometry: Geometry,
        window_us: u64,
    ) -> Result<Self> {
        if num_frames == 0 {
            return Err(Error::invalid("frame sequence needs at least one frame"));
        }
        let expected = num_frames * 2 * geometry.pixels();
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: data.len(),
            });
        }
        Ok(Self {
            data,
            num_frames,
            geometry,
            window_us,
            label: None,
            truncated: false,
            discarded: 0,
        })
    }

    pub fn zeros(num_frames: usize, geometry: Geometry, window_us: u64) -> Result<Self> {
        Self::from_data(
            vec![0.0; num_frames * 2 * geometry.pixels()],
            num_frames,
            geometry,
            window_us,
        )
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    /// Length of one flattened `(2, H, W)` frame.
    pub fn frame_len(&self) -> usize {
        2 * self.geometry.pixels()
    }

    pub fn frame(&self, k: usize) -> &[f32] {
        let n = self.frame_len();
        &self.data[k * n..(k + 1) * n]
    }

    pub fn frame_mut(&mut self, k: usize) -> &mut [f32] {
        let n = self.frame_len();
        &mut self.data[k * n..(k + 1) * n]
    }

    pub fn frames(&self) -> impl ExactSizeIterator<Item = &[f32]> {
        self.data.chunks_exact(self.frame_len())
    }

    pub fn get(&self, frame: usize, channel: usize, y: usize, x: usize) -> f32 {
        self.data[self.index(frame, channel, y, x)]
    }

    fn index(&self, frame: usize, channel: usize, y: usize, x: usize) -> usize {
        let w = self.geometry.width as usize;
        let h = self.geometry.height as usize;
        ((frame * 2 + channel) * h + y) * w + x
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn total(&self) -> f64 {
        self.data.iter().map(|&v| f64::from(v)).sum()
    }
}

/// Bins events into `num_frames` windows of `window_us` anchored at the first
/// event's timestamp.
///
/// Frame `k` counts events with `t` in `[t0 + k*window, t0 + (k+1)*window)`.
/// Later events are dropped and tallied in `discarded`.
pub fn aggregate_frames(
    stream: &EventStream,
    window_us: u64,
    num_frames: usize,
) -> Result<FrameSequence> {
    if window_us == 0 {
        return Err(Error::invalid("window_us must be positive"));
    }
    let (t0, t_last) = stream
        .time_span()
        .ok_or(Error::Empty("cannot frame an empty event stream"))?;
    let mut seq = FrameSequence::zeros(num_frames, stream.geometry(), window_us)?;
    let mut discarded = 0usize;
    for e in stream.events() {
        let k = ((e.t - t0) / window_us) as usize;
        if k >= num_frames {
            discarded += 1;
            continue;
        }
        let i = seq.index(k, e.polarity.channel(), e.y as usize, e.x as usize);
        seq.data[i] += 1.0;
    }
    seq.label = stream.label;
    seq.discarded = discarded;
    let last_window_start = t0 + (num_frames as u64 - 1) * window_us;
    seq.truncated = t_last < last_window_start;
    Ok(seq)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameStats {
    /// Sum of all values per frame.
    pub frame_counts: Vec<f64>,
    /// Pixels with a non-zero value in either polarity channel, per frame.
    pub active_pixels: Vec<usize>,
    pub total_count: f64,
    pub total_active_pixels: usize,
}

pub fn frame_stats(seq: &FrameSequence) -> FrameStats {
    let px = seq.geometry().pixels();
    let mut frame_counts = Vec::with_capacity(seq.num_frames());
    let mut active_pixels = Vec::with_capacity(seq.num_frames());
    for frame in seq.frames() {
        let (off, on) = frame.split_at(px);
        frame_counts.push(frame.iter().map(|&v| f64::from(v)).sum());
        active_pixels.push(
            off.iter()
                .zip(on)
                .filter(|(&a, &b)| a != 0.0 || b != 0.0)
                .count(),
        );
    }
    FrameStats {
        total_count: frame_counts.iter().sum(),
        total_active_pixels: active_pixels.iter().sum(),
        frame_counts,
        active_pixels,
    }
}
