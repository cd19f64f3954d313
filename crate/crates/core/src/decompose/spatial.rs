use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::FrameSequence;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FramePolicy {
    /// Evenly spaced frames including the first and last.
    #[default]
    SparseSample,
    /// A seeded random subset of frames.
    Shuffle,
}

/// Frames sampled from a sequence, flattened in `(frame, polarity, row, col)`
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialComponent {
    pub data: Vec<f32>,
    /// Strictly increasing source frame indices.
    pub frame_indices: Vec<usize>,
    /// Length of one flattened frame (`2*H*W`).
    pub frame_len: usize,
    /// Time from the start of the first selected frame to the end of the last.
    pub span_us: u64,
}

/// `round(i*(D-1)/(n-1))` for `i in 0..n`; a single frame is the middle one.
pub fn sparse_indices(total: usize, n: usize) -> Vec<usize> {
    match n {
        0 => Vec::new(),
        1 => vec![((total - 1) as f64 / 2.0).round() as usize],
        _ => (0..n)
            .map(|i| (i as f64 * (total - 1) as f64 / (n - 1) as f64).round() as usize)
            .collect(),
    }
}

pub fn extract_spatial(
    seq: &FrameSequence,
    n_frames: usize,
    policy: FramePolicy,
    seed: u64,
) -> Result<SpatialComponent> {
    let d = seq.num_frames();
    if n_frames == 0 || n_frames > d {
        return Err(Error::invalid(format!(
            "cannot take {n_frames} frames from a {d}-frame sequence"
        )));
    }
    let frame_indices = match policy {
        FramePolicy::SparseSample => sparse_indices(d, n_frames),
        FramePolicy::Shuffle => {
            let mut all: Vec<usize> = (0..d).collect();
            all.shuffle(&mut seed::rng(seed));
            let mut picked = all[..n_frames].to_vec();
            picked.sort_unstable();
            picked
        }
    };
    let mut data = Vec::with_capacity(n_frames * seq.frame_len());
    for &k in &frame_indices {
        data.extend_from_slice(seq.frame(k));
    }
    let first = frame_indices[0] as u64;
    let last = *frame_indices.last().expect("n_frames >= 1") as u64;
    Ok(SpatialComponent {
        data,
        frame_len: seq.frame_len(),
        span_us: (last - first + 1) * seq.window_us,
        frame_indices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::Geometry;

    fn ramp(d: usize) -> FrameSequence {
        let g = Geometry::new(3, 2);
        let data = (0..d * 12).map(|i| i as f32).collect();
        FrameSequence::from_data(data, d, g, 30_000).unwrap()
    }

    #[test]
    fn default_five_of_two_hundred() {
        // 199/4 = 49.75 -> 50, 99.5 -> 100 (round half away from zero), 149.25 -> 149
        assert_eq!(sparse_indices(200, 5), vec![0, 50, 100, 149, 199]);
        assert_eq!(sparse_indices(200, 1), vec![100]);
        assert_eq!(sparse_indices(7, 7), (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn frames_are_bit_equal_copies() {
        let seq = ramp(20);
        let c = extract_spatial(&seq, 4, FramePolicy::SparseSample, 0).unwrap();
        assert_eq!(c.data.len(), 4 * 12);
        for (chunk, &k) in c.data.chunks(12).zip(&c.frame_indices) {
            assert_eq!(chunk, seq.frame(k));
        }
        assert_eq!(c.span_us, 20 * 30_000);
    }

    #[test]
    fn all_frames_is_identity() {
        let seq = ramp(6);
        for policy in [FramePolicy::SparseSample, FramePolicy::Shuffle] {
            let c = extract_spatial(&seq, 6, policy, 9).unwrap();
            assert_eq!(c.frame_indices, (0..6).collect::<Vec<_>>());
            assert_eq!(c.data, seq.as_slice());
        }
    }

    #[test]
    fn shuffle_is_seeded() {
        let seq = ramp(50);
        let a = extract_spatial(&seq, 5, FramePolicy::Shuffle, 11).unwrap();
        let b = extract_spatial(&seq, 5, FramePolicy::Shuffle, 11).unwrap();
        let c = extract_spatial(&seq, 5, FramePolicy::Shuffle, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.frame_indices, c.frame_indices);
        assert!(a.frame_indices.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn too_many_frames() {
        assert!(extract_spatial(&ramp(3), 4, FramePolicy::SparseSample, 0).is_err());
    }
}
