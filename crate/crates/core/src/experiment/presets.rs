//! Ready-made configurations for the synthetic studies. All use a 32x32
//! sensor so that a full study runs in minutes on one core.

use super::config::ExperimentConfig;
use crate::events::Geometry;
use crate::synth::Hotspot;

const SMALL: Geometry = Geometry {
    width: 32,
    height: 32,
};

fn small_sensor(seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        seed,
        ..Default::default()
    };
    cfg.data.gesture.geometry = SMALL;
    cfg.data.gesture.blob_radius = 2.0;
    cfg.data.gesture.events_per_ms = 4.0;
    cfg.mine.seed = seed;
    cfg
}

/// Information study: sparse events (a single frame is a noisy snapshot),
/// many recordings, a 4x4 video and a narrow statistics network.
pub fn tsc_study(seed: u64) -> ExperimentConfig {
    let mut cfg = small_sensor(seed);
    cfg.data.gesture.events_per_ms = 0.5;
    cfg.data.per_class = 400;
    cfg.decompose.video_downsample = Geometry::new(4, 4);
    cfg.mine.hidden = vec![32, 32];
    cfg.mine.batch_size = 128;
    cfg.mine.steps = 4000;
    cfg
}

/// Classification with a class-correlated hotspot present only in the
/// training recordings.
pub fn hotspot_overfitting(seed: u64) -> ExperimentConfig {
    let mut cfg = small_sensor(seed);
    cfg.data.per_class = 40;
    cfg.data.noise.hotspot = Some(Hotspot {
        position: None,
        radius: 1.0,
        events_per_ms: 2.0,
        class_correlated: true,
        train_only: true,
    });
    cfg.sweep.resolutions = vec![32, 16, 8, 4, 2];
    cfg
}

/// The clean counterpart of [`hotspot_overfitting`].
pub fn clean_classification(seed: u64) -> ExperimentConfig {
    let mut cfg = hotspot_overfitting(seed);
    cfg.data.noise.hotspot = None;
    cfg
}
