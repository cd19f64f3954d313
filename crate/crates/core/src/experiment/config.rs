use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::decompose::{FramePolicy, SmoothingFilter, TemporalParams};
use crate::error::{Error, Result};
use crate::events::{EventFormat, Geometry};
use crate::mine::MineConfig;
use crate::reservoir::ReservoirConfig;
use crate::synth::{DatasetSpec, GestureSpec, Motion, NoiseSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub classes: usize,
    pub motions: Option<Vec<Motion>>,
    pub per_class: usize,
    pub test_fraction: f64,
    pub gesture: GestureSpec,
    pub noise: NoiseSpec,
    pub format: EventFormat,
}

impl Default for DataConfig {
    fn default() -> Self {
        let d = DatasetSpec::default();
        Self {
            classes: d.classes,
            motions: d.motions,
            per_class: d.per_class,
            test_fraction: d.test_fraction,
            gesture: d.gesture,
            noise: d.noise,
            format: EventFormat::PackedBinary,
        }
    }
}

impl DataConfig {
    pub fn dataset_spec(&self) -> DatasetSpec {
        DatasetSpec {
            classes: self.classes,
            motions: self.motions.clone(),
            per_class: self.per_class,
            test_fraction: self.test_fraction,
            gesture: self.gesture.clone(),
            noise: self.noise.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecomposeConfig {
    /// Framing window.
    pub window_us: u64,
    /// Frames per observation.
    pub num_frames: usize,
    /// Frames in the spatial component.
    pub spatial_frames: usize,
    pub spatial_policy: FramePolicy,
    pub temporal: TemporalParams,
    /// Resolution of the full-video representation.
    pub video_downsample: Geometry,
    pub filter: SmoothingFilter,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        Self {
            window_us: 30_000,
            num_frames: 200,
            spatial_frames: 5,
            spatial_policy: FramePolicy::SparseSample,
            temporal: TemporalParams::default(),
            video_downsample: Geometry::new(8, 8),
            filter: SmoothingFilter::Box,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReadoutConfig {
    pub lambda: f64,
    /// Frame resolution fed to the reservoir; `null` keeps the sensor
    /// resolution.
    pub downsample: Option<Geometry>,
}

impl Default for ReadoutConfig {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            downsample: Some(Geometry::new(8, 8)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Square output resolutions; values above the sensor size mean full
    /// resolution.
    pub resolutions: Vec<u16>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            resolutions: vec![128, 64, 32, 16, 8, 4],
        }
    }
}

/// Every knob of every command, all defaulted.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub data: DataConfig,
    pub decompose: DecomposeConfig,
    pub mine: MineConfig,
    pub reservoir: ReservoirConfig,
    pub readout: ReadoutConfig,
    pub sweep: SweepConfig,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        self.data.gesture.validate()?;
        self.data.noise.validate()?;
        self.mine.validate()?;
        self.reservoir.validate()?;
        let d = &self.decompose;
        if d.window_us == 0 || d.num_frames == 0 {
            return Err(Error::Config("window_us and num_frames must be positive".into()));
        }
        if d.spatial_frames == 0 || d.spatial_frames > d.num_frames {
            return Err(Error::Config("spatial_frames must lie in 1..=num_frames".into()));
        }
        if !(self.readout.lambda >= 0.0) {
            return Err(Error::Config("readout.lambda must be >= 0".into()));
        }
        if self.sweep.resolutions.contains(&0) {
            return Err(Error::Config("sweep resolutions must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_all_defaults() {
        assert_eq!(ExperimentConfig::from_json("{}").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"mine": {"stepz": 3}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"extra": 1}"#).is_err());
    }

    #[test]
    fn partial_sections_merge_with_defaults() {
        let c = ExperimentConfig::from_json(
            r#"{"seed": 4, "readout": {"downsample": "16x16"}, "data": {"gesture": {"geometry": "32x32"}}}"#,
        )
        .unwrap();
        assert_eq!(c.seed, 4);
        assert_eq!(c.readout.downsample, Some(Geometry::new(16, 16)));
        assert_eq!(c.readout.lambda, 0.1);
        assert_eq!(c.data.gesture.geometry, Geometry::new(32, 32));
    }

    #[test]
    fn semantic_validation() {
        assert!(ExperimentConfig::from_json(r#"{"mine": {"ema_decay": 1.5}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"decompose": {"spatial_frames": 300}}"#).is_err());
    }
}
