use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{FrameSequence, Geometry};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SmoothingFilter {
    /// Unit-sum box as wide as the sampling stride.
    Box,
    /// Unit-sum Gaussian; `sigma: None` means half the stride.
    Gaussian { sigma: Option<f64> },
}

/// Low-pass filter followed by strided subsampling to `target` resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DownsampleSpec {
    /// Output `(width, height)`.
    pub target: Geometry,
    pub filter: SmoothingFilter,
    /// Smooth before sampling. Off means plain decimation, which aliases.
    #[serde(default = "yes")]
    pub anti_alias: bool,
}

fn yes() -> bool {
    true
}

impl DownsampleSpec {
    pub fn boxed(target: Geometry) -> Self {
        Self {
            target,
            filter: SmoothingFilter::Box,
            anti_alias: true,
        }
    }

    pub fn validate(&self, source: Geometry) -> Result<()> {
        let t = self.target;
        if t.width == 0 || t.height == 0 || t.width > source.width || t.height > source.height {
            return Err(Error::invalid(format!(
                "cannot downsample {source} to {t}"
            )));
        }
        if let SmoothingFilter::Gaussian { sigma: Some(s) } = self.filter {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::invalid(format!("gaussian sigma {s} must be positive")));
            }
        }
        Ok(())
    }
}

/// One separable axis: kernel taps with their offsets from the sample point.
struct Axis {
    stride: usize,
    len: usize,
    taps: Vec<(isize, f64)>,
}

impl Axis {
    fn new(source: usize, target: usize, spec: &DownsampleSpec) -> Self {
        let stride = source / target;
        let taps = if !spec.anti_alias {
            vec![(0, 1.0)]
        } else {
            match spec.filter {
                SmoothingFilter::Box => {
                    let lo = -((stride / 2) as isize);
                    let w = 1.0 / stride as f64;
                    (0..stride as isize).map(|i| (lo + i, w)).collect()
                }
                SmoothingFilter::Gaussian { sigma } => {
                    let sigma = sigma.unwrap_or(stride as f64 / 2.0);
                    let radius = (3.0 * sigma).ceil() as isize;
                    let raw: Vec<(isize, f64)> = (-radius..=radius)
                        .map(|o| (o, (-(o * o) as f64 / (2.0 * sigma * sigma)).exp()))
                        .collect();
                    let total: f64 = raw.iter().map(|t| t.1).sum();
                    raw.into_iter().map(|(o, w)| (o, w / total)).collect()
                }
            }
        };
        Axis {
            stride,
            len: source,
            taps,
        }
    }

    fn center(&self, i: usize) -> isize {
        (i * self.stride + self.stride / 2) as isize
    }

    /// Half-sample symmetric reflection: -1 -> 0, len -> len-1.
    fn reflect(&self, mut p: isize) -> usize {
        let n = self.len as isize;
        let period = 2 * n;
        p = p.rem_euclid(period);
        if p >= n {
            p = period - 1 - p;
        }
        p as usize
    }
}

/// Smooths every polarity channel with the spec's unit-sum kernel (reflective
/// boundary) and keeps one pixel per `stride x stride` block, at offset
/// `stride/2` inside the block. Values stay real.
pub fn downsample_frames(seq: &FrameSequence, spec: &DownsampleSpec) -> Result<FrameSequence> {
    let src = seq.geometry();
    spec.validate(src)?;
    let (w, h) = (src.width as usize, src.height as usize);
    let (rw, rh) = (spec.target.width as usize, spec.target.height as usize);
    let ax = Axis::new(w, rw, spec);
    let ay = Axis::new(h, rh, spec);

    let mut out = Vec::with_capacity(seq.num_frames() * 2 * rw * rh);
    let mut row_pass = vec![0f64; ay.taps.len() * rw];
    for frame in seq.frames() {
        for channel in frame.chunks_exact(w * h) {
            for i in 0..rh {
                let cy = ay.center(i);
                // horizontal pass on the rows this output row needs
                for (r, &(oy, _)) in ay.taps.iter().enumerate() {
                    let y = ay.reflect(cy + oy);
                    let row = &channel[y * w..(y + 1) * w];
                    for j in 0..rw {
                        let cx = ax.center(j);
                        row_pass[r * rw + j] = ax
                            .taps
                            .iter()
                            .map(|&(ox, wx)| wx * f64::from(row[ax.reflect(cx + ox)]))
                            .sum();
                    }
                }
                for j in 0..rw {
                    let v: f64 = ay
                        .taps
                        .iter()
                        .enumerate()
                        .map(|(r, &(_, wy))| wy * row_pass[r * rw + j])
                        .sum();
                    out.push(v as f32);
                }
            }
        }
    }
    let mut res = FrameSequence::from_data(out, seq.num_frames(), spec.target, seq.window_us)?;
    res.label = seq.label;
    res.truncated = seq.truncated;
    res.discarded = seq.discarded;
    Ok(res)
}

/// `(frame, polarity, row, col)` flattening of the whole sequence.
pub fn flatten_video(seq: &FrameSequence) -> Vec<f32> {
    seq.as_slice().to_vec()
}

/// Inverse of [`flatten_video`].
pub fn unflatten_video(
    data: Vec<f32>,
    num_frames: usize,
    geometry: Geometry,
    window_us: u64,
) -> Result<FrameSequence> {
    FrameSequence::from_data(data, num_frames, geometry, window_us)
}
