//! End-to-end stages shared by the commands and the examples.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::decompose::{
    downsample_frames, extract_spatial, extract_temporal, flatten_video, DownsampleSpec,
    SpatialComponent, TemporalComponent,
};
use crate::error::{Error, Result};
use crate::events::{aggregate_frames, EventStream, FrameSequence, Geometry};
use crate::mine::{estimate_entropy, estimate_mi, mi_report, MineConfig, MiReport};
use crate::readout::{evaluate, fit_ridge, one_hot, Metrics, RidgeModel};
use crate::reservoir::{DelayLoopReservoir, InputScaler};
use crate::seed;
use crate::synth::{make_dataset, Split};

pub fn frames(stream: &EventStream, cfg: &ExperimentConfig) -> Result<FrameSequence> {
    aggregate_frames(stream, cfg.decompose.window_us, cfg.decompose.num_frames)
}

/// Frames at the requested resolution; `None` or a target at least as large
/// as the sensor leaves the frames untouched.
pub fn resample(seq: FrameSequence, target: Option<Geometry>, cfg: &ExperimentConfig) -> Result<FrameSequence> {
    match target {
        Some(t) if t.width < seq.geometry().width || t.height < seq.geometry().height => {
            let spec = DownsampleSpec {
                target: t,
                filter: cfg.decompose.filter,
                anti_alias: true,
            };
            downsample_frames(&seq, &spec)
        }
        _ => Ok(seq),
    }
}

/// Every representation of one observation used by the information study.
#[derive(Debug, Clone)]
pub struct Components {
    pub spatial: SpatialComponent,
    /// Spatial component reduced to a single frame.
    pub spatial_single: SpatialComponent,
    pub temporal: TemporalComponent,
    /// Flattened low-resolution full video.
    pub video: Vec<f32>,
}

pub fn decompose(stream: &EventStream, cfg: &ExperimentConfig, seed: u64) -> Result<Components> {
    let d = &cfg.decompose;
    let seq = frames(stream, cfg)?;
    let spatial = extract_spatial(&seq, d.spatial_frames, d.spatial_policy, seed::derive_seed(seed, "spatial"))?;
    let spatial_single = extract_spatial(&seq, 1, d.spatial_policy, seed::derive_seed(seed, "spatial"))?;
    let temporal = extract_temporal(stream, d.temporal, seed::derive_seed(seed, "temporal"))?;
    let video = flatten_video(&resample(seq, Some(d.video_downsample), cfg)?);
    Ok(Components {
        spatial,
        spatial_single,
        temporal,
        video,
    })
}

/// Stacks equal-length vectors into a sample matrix.
pub fn stack<'a>(rows: impl IntoIterator<Item = &'a [f32]>) -> Result<Array2<f64>> {
    let mut data = Vec::new();
    let mut n = 0;
    let mut width = None;
    for r in rows {
        match width {
            None => width = Some(r.len()),
            Some(w) if w != r.len() => return Err(Error::DimensionMismatch { expected: w, got: r.len() }),
            _ => {}
        }
        data.extend(r.iter().map(|&v| f64::from(v)));
        n += 1;
    }
    let w = width.ok_or(Error::Empty("no rows to stack"))?;
    Ok(Array2::from_shape_vec((n, w), data).expect("uniform rows"))
}

/// Per-observation components as sample matrices, rows aligned with `labels`.
#[derive(Debug, Clone)]
pub struct ComponentMatrices {
    pub spatial: Array2<f64>,
    pub spatial_single: Array2<f64>,
    pub temporal: Array2<f64>,
    pub video: Array2<f64>,
    pub labels: Array2<f64>,
}

/// Decomposes every stream; observation `i` draws from substream `i`.
pub fn decompose_all(streams: &[EventStream], cfg: &ExperimentConfig) -> Result<Vec<Components>> {
    streams
        .par_iter()
        .enumerate()
        .map(|(i, s)| decompose(s, cfg, seed::derive_indexed(cfg.seed, "decompose", i as u64)))
        .collect()
}

pub fn stack_components(comps: &[Components], labels: &[usize], classes: usize) -> Result<ComponentMatrices> {
    Ok(ComponentMatrices {
        spatial: stack(comps.iter().map(|c| c.spatial.data.as_slice()))?,
        spatial_single: stack(comps.iter().map(|c| c.spatial_single.data.as_slice()))?,
        temporal: stack(comps.iter().map(|c| c.temporal.data.as_slice()))?,
        video: stack(comps.iter().map(|c| c.video.as_slice()))?,
        labels: one_hot(labels, classes)?,
    })
}

pub fn component_matrices(
    streams: &[EventStream],
    labels: &[usize],
    classes: usize,
    cfg: &ExperimentConfig,
) -> Result<ComponentMatrices> {
    stack_components(&decompose_all(streams, cfg)?, labels, classes)
}

/// Label entropy and `I(component; label)` for each component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InformationStudy {
    pub label_entropy: f64,
    pub spatial: f64,
    pub spatial_single: f64,
    pub temporal: f64,
    pub video: f64,
    pub report: MiReport,
}

pub fn information_study(m: &ComponentMatrices, mine: &MineConfig) -> Result<InformationStudy> {
    let run = |x: &Array2<f64>, name: &str| -> Result<f64> {
        let cfg = MineConfig {
            seed: seed::derive_seed(mine.seed, name),
            ..mine.clone()
        };
        Ok(estimate_mi(x, &m.labels, &cfg)?.mi_nats)
    };
    let label_entropy = estimate_entropy(
        &m.labels,
        &MineConfig {
            seed: seed::derive_seed(mine.seed, "label"),
            ..mine.clone()
        },
    )?
    .mi_nats;
    let spatial = run(&m.spatial, "spatial")?;
    let spatial_single = run(&m.spatial_single, "spatial_single")?;
    let temporal = run(&m.temporal, "temporal")?;
    let video = run(&m.video, "video")?;
    let report = mi_report(
        &[
            ("spatial".to_string(), spatial),
            ("spatial_single".to_string(), spatial_single),
            ("temporal".to_string(), temporal),
            ("video".to_string(), video),
            ("label".to_string(), label_entropy),
        ],
        "label",
        label_entropy,
    )?;
    Ok(InformationStudy {
        label_entropy,
        spatial,
        spatial_single,
        temporal,
        video,
        report,
    })
}

/// A trained classifier: reservoir, input scaling and ridge readout.
#[derive(Debug, Clone)]
pub struct Classifier {
    pub reservoir: DelayLoopReservoir,
    pub scaler: InputScaler,
    pub model: RidgeModel,
    pub downsample: Option<Geometry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierRun {
    pub resolution: Geometry,
    pub train: Metrics,
    pub test: Metrics,
}

pub fn prepare(
    streams: &[&EventStream],
    downsample: Option<Geometry>,
    cfg: &ExperimentConfig,
) -> Result<Vec<FrameSequence>> {
    streams
        .par_iter()
        .map(|s| resample(frames(s, cfg)?, downsample, cfg))
        .collect()
}

pub fn train_classifier(
    train: &[FrameSequence],
    labels: &[usize],
    classes: usize,
    downsample: Option<Geometry>,
    cfg: &ExperimentConfig,
) -> Result<Classifier> {
    let first = train.first().ok_or(Error::Empty("no training observations"))?;
    let reservoir = DelayLoopReservoir::new(first.frame_len(), cfg.reservoir.clone())?;
    let scaler = InputScaler::fit(train)?;
    let features = reservoir.featurize_all(train, &scaler)?;
    let model = fit_ridge(features.view(), one_hot(labels, classes)?.view(), cfg.readout.lambda)?;
    Ok(Classifier {
        reservoir,
        scaler,
        model,
        downsample,
    })
}

impl Classifier {
    pub fn features(&self, seqs: &[FrameSequence]) -> Result<Array2<f64>> {
        self.reservoir.featurize_all(seqs, &self.scaler)
    }

    pub fn evaluate(&self, seqs: &[FrameSequence], labels: &[usize]) -> Result<Metrics> {
        evaluate(&self.model, self.features(seqs)?.view(), labels)
    }
}

/// Trains on `train` and scores both splits at one input resolution.
pub fn classify(
    train: (&[&EventStream], &[usize]),
    test: (&[&EventStream], &[usize]),
    classes: usize,
    downsample: Option<Geometry>,
    cfg: &ExperimentConfig,
) -> Result<ClassifierRun> {
    let train_seqs = prepare(train.0, downsample, cfg)?;
    let test_seqs = prepare(test.0, downsample, cfg)?;
    let clf = train_classifier(&train_seqs, train.1, classes, downsample, cfg)?;
    Ok(ClassifierRun {
        resolution: train_seqs[0].geometry(),
        train: clf.evaluate(&train_seqs, train.1)?,
        test: clf.evaluate(&test_seqs, test.1)?,
    })
}

/// Generates the configured dataset and runs the information study on it.
pub fn run_information_study(cfg: &ExperimentConfig) -> Result<InformationStudy> {
    let spec = cfg.data.dataset_spec();
    let ds = make_dataset(&spec, cfg.seed)?;
    let m = component_matrices(&ds.streams, &ds.labels(), spec.classes, cfg)?;
    information_study(&m, &cfg.mine)
}

/// Generates the configured dataset and classifies it at every resolution
/// of the sweep; resolutions at or above the sensor size mean full frames.
pub fn run_resolution_sweep(cfg: &ExperimentConfig) -> Result<Vec<ClassifierRun>> {
    let spec = cfg.data.dataset_spec();
    let ds = make_dataset(&spec, cfg.seed)?;
    let labels = ds.labels();
    let (train, test) = (ds.indices(Split::Train), ds.indices(Split::Test));
    let pick = |idx: &[usize]| -> (Vec<&EventStream>, Vec<usize>) {
        (idx.iter().map(|&i| &ds.streams[i]).collect(), idx.iter().map(|&i| labels[i]).collect())
    };
    let (train_s, train_l) = pick(&train);
    let (test_s, test_l) = pick(&test);
    cfg.sweep
        .resolutions
        .iter()
        .map(|&r| {
            classify(
                (&train_s, &train_l),
                (&test_s, &test_l),
                spec.classes,
                Some(Geometry::new(r, r)),
                cfg,
            )
        })
        .collect()
}
