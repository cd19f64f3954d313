//! Command implementations behind the `event-tsr` binary.
//!
//! Every command returns a [`RunReport`]; apart from `timings`, a report is a
//! pure function of the configuration, the flags and the input files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::ExperimentConfig;
use super::manifest::{Manifest, ManifestEntry, SplitFilter};
use super::pipeline::{self, Classifier};
use crate::codec::{read_matrix, write_matrix};
use crate::decompose::{write_component, ComponentBlob};
use crate::error::{Error, Result};
use crate::events::{
    aggregate_frames, frame_stats, read_events, write_events, write_frames, EventFormat, Geometry,
};
use crate::mine::{estimate_entropy, estimate_mi, MineEstimate, Objective};
use crate::readout::{read_model, write_model, Metrics};
use crate::reservoir::{DelayLoopReservoir, InputScaler, ReservoirConfig};
use crate::synth::{generate_recording, plan_dataset, Hotspot};

pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub metrics: Value,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
    /// Seconds per stage. The only field that differs between identical runs.
    pub timings: BTreeMap<String, f64>,
}

impl RunReport {
    fn new(command: &str, config: &ExperimentConfig) -> Self {
        Self {
            command: command.to_string(),
            version: VERSION.to_string(),
            config: config.clone(),
            metrics: Value::Null,
            outputs: Vec::new(),
            warnings: Vec::new(),
            timings: BTreeMap::new(),
        }
    }

    fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let out = f()?;
        self.timings.insert(stage.to_string(), t.elapsed().as_secs_f64());
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

#[derive(Debug, Parser)]
#[command(name = "event-tsr", version, about = "Temporal-spatial analysis and reservoir classification of event-camera streams")]
pub struct Cli {
    /// Experiment configuration (JSON); flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the run report here instead of stdout.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic gesture dataset and its manifest.
    Synth(SynthArgs),
    /// Validate an event file and convert it between CSV and packed binary.
    Ingest(IngestArgs),
    /// Aggregate an event file into frames.
    Frames(FramesArgs),
    /// Write spatial, temporal and video components for a dataset.
    Decompose(DecomposeArgs),
    /// Estimate mutual information between two sample matrices.
    Mi(MiArgs),
    /// Train the reservoir classifier.
    Train(TrainArgs),
    /// Evaluate a trained classifier.
    Eval(EvalArgs),
    /// Test accuracy as a function of frame resolution.
    SweepDownsample(SweepArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Evt,
}

impl From<FormatArg> for EventFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => EventFormat::Csv,
            FormatArg::Evt => EventFormat::PackedBinary,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SplitArg {
    Train,
    Test,
    All,
}

impl From<SplitArg> for SplitFilter {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => SplitFilter::Train,
            SplitArg::Test => SplitFilter::Test,
            SplitArg::All => SplitFilter::All,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ObjectiveArg {
    Dv,
    Nwj,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub per_class: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub geometry: Option<Geometry>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Add a class-correlated hotspot to the training recordings only.
    #[arg(long)]
    pub hotspot_train_only: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Sensor geometry, required for CSV input.
    #[arg(long)]
    pub geometry: Option<Geometry>,
    /// Converted copy; the format follows the extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FramesArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub geometry: Option<Geometry>,
    #[arg(long)]
    pub window_us: Option<u64>,
    #[arg(long)]
    pub num_frames: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub video_downsample: Option<Geometry>,
    #[arg(long)]
    pub spatial_frames: Option<usize>,
    #[arg(long, value_enum, default_value = "all")]
    pub split: SplitArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MiArgs {
    /// FEA1 sample matrix.
    #[arg(long)]
    pub x: PathBuf,
    /// FEA1 sample matrix, row-aligned with `x`; `x` itself gives H(x).
    #[arg(long)]
    pub y: PathBuf,
    #[arg(long, value_enum)]
    pub objective: Option<ObjectiveArg>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Name recorded in the report; defaults to the file stem of `x`.
    #[arg(long)]
    pub name: Option<String>,
    /// Ceiling for `percent_of_max`; defaults to the estimated entropy of `y`.
    #[arg(long)]
    pub reference_nats: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Frame resolution fed to the reservoir, `WxH` or `full`.
    #[arg(long)]
    pub downsample: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, value_enum, default_value = "train")]
    pub split: SplitArg,
    /// Model file; a `.json` sidecar is written next to it.
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitArg,
    /// Directory for the confusion matrix CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Square resolutions, e.g. `128,64,32,16,8,4`.
    #[arg(long, value_delimiter = ',')]
    pub resolutions: Option<Vec<u16>>,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_resolution(s: &str) -> Result<Option<Geometry>> {
    if s.eq_ignore_ascii_case("full") {
        Ok(None)
    } else {
        s.parse().map(Some)
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads the configuration, applies `EVENT_TSR_THREADS` and runs one command.
pub fn execute(cli: &Cli) -> Result<RunReport> {
    let cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    match &cli.command {
        Command::Synth(a) => synth(cfg, a),
        Command::Ingest(a) => ingest(cfg, a),
        Command::Frames(a) => frames(cfg, a),
        Command::Decompose(a) => decompose(cfg, a),
        Command::Mi(a) => mi(cfg, a),
        Command::Train(a) => train(cfg, a),
        Command::Eval(a) => eval(cfg, a),
        Command::SweepDownsample(a) => sweep(cfg, a),
    }
}

pub fn synth(mut cfg: ExperimentConfig, a: &SynthArgs) -> Result<RunReport> {
    if let Some(c) = a.classes {
        cfg.data.classes = c;
        cfg.data.motions = None;
    }
    if let Some(n) = a.per_class {
        cfg.data.per_class = n;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(g) = a.geometry {
        cfg.data.gesture.geometry = g;
    }
    if let Some(f) = a.format {
        cfg.data.format = f.into();
    }
    if a.hotspot_train_only {
        let h = cfg.data.noise.hotspot.get_or_insert(Hotspot {
            position: None,
            radius: 1.0,
            events_per_ms: 2.0,
            class_correlated: true,
            train_only: true,
        });
        h.train_only = true;
    }
    cfg.validate()?;
    let mut report = RunReport::new("synth", &cfg);
    let spec = cfg.data.dataset_spec();
    let plan = plan_dataset(&spec, cfg.seed)?;
    create_dir(&a.out)?;
    let ext = cfg.data.format.extension();
    let entries = report.time("generate", || {
        use rayon::prelude::*;
        plan.par_iter()
            .enumerate()
            .map(|(i, rec)| {
                let stream = generate_recording(&spec, rec)?;
                let name = format!("rec_{i:04}.{ext}");
                write_events(&stream, &a.out.join(&name), cfg.data.format)?;
                Ok((
                    ManifestEntry {
                        path: name,
                        label: rec.label,
                        split: rec.split,
                        seed: rec.seed,
                        hotspot: rec.hotspot,
                        geometry: (cfg.data.format == EventFormat::Csv).then_some(spec.gesture.geometry),
                    },
                    stream.len(),
                ))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let total_events: usize = entries.iter().map(|(_, n)| n).sum();
    let manifest = Manifest {
        dir: a.out.clone(),
        entries: entries.into_iter().map(|(e, _)| e).collect(),
    };
    let manifest_path = a.out.join("manifest.json");
    manifest.save(&manifest_path)?;
    let count = |f: SplitFilter| manifest.select(f).len();
    report.metrics = json!({
        "recordings": manifest.entries.len(),
        "train": count(SplitFilter::Train),
        "test": count(SplitFilter::Test),
        "with_hotspot": manifest.entries.iter().filter(|e| e.hotspot).count(),
        "total_events": total_events,
    });
    for e in &manifest.entries {
        report.output(&a.out.join(&e.path));
    }
    report.output(&manifest_path);
    Ok(report)
}

pub fn ingest(cfg: ExperimentConfig, a: &IngestArgs) -> Result<RunReport> {
    let mut report = RunReport::new("ingest", &cfg);
    let format = EventFormat::from_path(&a.input);
    let stream = report.time("read", || read_events(&a.input, format, a.geometry))?;
    let span = stream.time_span();
    report.metrics = json!({
        "events": stream.len(),
        "geometry": stream.geometry(),
        "first_us": span.map(|s| s.0),
        "last_us": span.map(|s| s.1),
        "on_events": stream.events().iter().filter(|e| e.polarity.channel() == 1).count(),
    });
    if let Some(out) = &a.out {
        report.time("write", || write_events(&stream, out, EventFormat::from_path(out)))?;
        report.output(out);
    }
    Ok(report)
}

pub fn frames(mut cfg: ExperimentConfig, a: &FramesArgs) -> Result<RunReport> {
    if let Some(w) = a.window_us {
        cfg.decompose.window_us = w;
    }
    if let Some(n) = a.num_frames {
        cfg.decompose.num_frames = n;
    }
    cfg.validate()?;
    let mut report = RunReport::new("frames", &cfg);
    let stream = report.time("read", || read_events(&a.input, EventFormat::from_path(&a.input), a.geometry))?;
    let seq = report.time("aggregate", || {
        aggregate_frames(&stream, cfg.decompose.window_us, cfg.decompose.num_frames)
    })?;
    write_frames(&seq, &a.out)?;
    report.output(&a.out);
    let stats = frame_stats(&seq);
    report.metrics = json!({
        "frames": seq.num_frames(),
        "geometry": seq.geometry(),
        "events": stream.len(),
        "discarded": seq.discarded,
        "truncated": seq.truncated,
        "total_count": stats.total_count,
        "frame_counts": stats.frame_counts,
        "active_pixels": stats.active_pixels,
    });
    Ok(report)
}

pub fn decompose(mut cfg: ExperimentConfig, a: &DecomposeArgs) -> Result<RunReport> {
    if let Some(g) = a.video_downsample {
        cfg.decompose.video_downsample = g;
    }
    if let Some(n) = a.spatial_frames {
        cfg.decompose.spatial_frames = n;
    }
    cfg.validate()?;
    let mut report = RunReport::new("decompose", &cfg);
    let manifest = Manifest::load(&a.manifest)?;
    let classes = manifest.classes();
    let read = report.time("read", || manifest.read(a.split.into(), cfg.data.gesture.geometry))?;
    let (kept, skipped): (Vec<_>, Vec<_>) = read.into_iter().partition(|(_, s)| !s.is_empty());
    for (e, _) in &skipped {
        report.warnings.push(format!("{}: empty stream skipped", e.path));
    }
    let streams: Vec<_> = kept.iter().map(|(_, s)| s.clone()).collect();
    let labels: Vec<usize> = kept.iter().map(|(e, _)| e.label as usize).collect();
    let comps = report.time("decompose", || pipeline::decompose_all(&streams, &cfg))?;
    create_dir(&a.out)?;
    for ((e, _), c) in kept.iter().zip(&comps) {
        let stem = Path::new(&e.path).file_stem().and_then(|s| s.to_str()).unwrap_or("obs").to_string();
        for (ext, blob) in [
            ("vsc", ComponentBlob::from(&c.spatial)),
            ("vtc", ComponentBlob::from(&c.temporal)),
        ] {
            let p = a.out.join(format!("{stem}.{ext}"));
            write_component(&p, &blob)?;
            report.output(&p);
        }
    }
    let m = pipeline::stack_components(&comps, &labels, classes)?;
    for (name, mat) in [
        ("vs", &m.spatial),
        ("vs1", &m.spatial_single),
        ("vt", &m.temporal),
        ("v", &m.video),
        ("labels", &m.labels),
    ] {
        let p = a.out.join(format!("{name}.fea"));
        write_matrix(&p, mat)?;
        report.output(&p);
    }
    report.metrics = json!({
        "observations": comps.len(),
        "skipped": skipped.len(),
        "classes": classes,
        "spatial_dim": m.spatial.ncols(),
        "spatial_single_dim": m.spatial_single.ncols(),
        "temporal_dim": m.temporal.ncols(),
        "video_dim": m.video.ncols(),
    });
    Ok(report)
}

/// The standalone MI report written by `mi --out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiFileReport {
    pub name: String,
    pub mi_nats: f64,
    pub percent_of_max: f64,
    pub reference_nats: f64,
    pub entropy_mode: bool,
    pub objective: Objective,
    pub steps: usize,
    pub seed: u64,
    pub network_checksum: String,
    pub curve: Vec<crate::mine::CurvePoint>,
}

pub fn mi(mut cfg: ExperimentConfig, a: &MiArgs) -> Result<RunReport> {
    if let Some(o) = a.objective {
        cfg.mine.objective = match o {
            ObjectiveArg::Dv => Objective::DonskerVaradhan,
            ObjectiveArg::Nwj => Objective::FDivergence,
        };
    }
    if let Some(s) = a.steps {
        cfg.mine.steps = s;
    }
    if let Some(s) = a.seed {
        cfg.mine.seed = s;
    }
    if let Some(b) = a.batch_size {
        cfg.mine.batch_size = b;
    }
    cfg.validate()?;
    let mut report = RunReport::new("mi", &cfg);
    let x = read_matrix(&a.x)?;
    let entropy_mode = a.x == a.y;
    let est: MineEstimate = if entropy_mode {
        report.time("estimate", || estimate_entropy(&x, &cfg.mine))?
    } else {
        let y = read_matrix(&a.y)?;
        report.time("estimate", || estimate_mi(&x, &y, &cfg.mine))?
    };
    let reference_nats = match a.reference_nats {
        Some(r) => r,
        None if entropy_mode => est.mi_nats,
        None => {
            let y = read_matrix(&a.y)?;
            report.time("reference", || estimate_entropy(&y, &cfg.mine))?.mi_nats
        }
    };
    if !(reference_nats > 0.0) {
        return Err(Error::invalid(format!("reference entropy {reference_nats} is not positive")));
    }
    let name = a.name.clone().unwrap_or_else(|| {
        a.x.file_stem().and_then(|s| s.to_str()).unwrap_or("x").to_string()
    });
    let file = MiFileReport {
        name,
        mi_nats: est.mi_nats,
        percent_of_max: 100.0 * est.mi_nats / reference_nats,
        reference_nats,
        entropy_mode,
        objective: cfg.mine.objective,
        steps: cfg.mine.steps,
        seed: cfg.mine.seed,
        network_checksum: est.network_checksum.clone(),
        curve: est.curve,
    };
    write_text(&a.out, &(serde_json::to_string_pretty(&file).expect("serializes") + "\n"))?;
    report.output(&a.out);
    report.metrics = json!({
        "name": file.name,
        "mi_nats": file.mi_nats,
        "percent_of_max": file.percent_of_max,
        "reference_nats": file.reference_nats,
        "entropy_mode": entropy_mode,
        "network_checksum": file.network_checksum,
    });
    Ok(report)
}

/// Everything besides the ridge weights needed to apply a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSidecar {
    pub version: String,
    pub classes: usize,
    pub downsample: Option<Geometry>,
    pub input_geometry: Geometry,
    pub window_us: u64,
    pub num_frames: usize,
    pub reservoir: ReservoirConfig,
    pub scaler: InputScaler,
    pub lambda: f64,
    /// FNV-1a of the model file, binding the sidecar to its weights.
    pub model_checksum: String,
}

fn file_checksum(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(format!("{:016x}", crate::seed::fnv1a(&bytes)))
}

fn sidecar_path(model: &Path) -> PathBuf {
    let mut s = model.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn labels_of(data: &[(ManifestEntry, crate::events::EventStream)]) -> Vec<usize> {
    data.iter().map(|(e, _)| e.label as usize).collect()
}

pub fn train(mut cfg: ExperimentConfig, a: &TrainArgs) -> Result<RunReport> {
    if let Some(d) = &a.downsample {
        cfg.readout.downsample = parse_resolution(d)?;
    }
    if let Some(l) = a.lambda {
        cfg.readout.lambda = l;
    }
    cfg.validate()?;
    let mut report = RunReport::new("train", &cfg);
    let manifest = Manifest::load(&a.manifest)?;
    let classes = manifest.classes();
    let data = report.time("read", || manifest.read(a.split.into(), cfg.data.gesture.geometry))?;
    let labels = labels_of(&data);
    let streams: Vec<_> = data.iter().map(|(_, s)| s).collect();
    let seqs = report.time("frames", || pipeline::prepare(&streams, cfg.readout.downsample, &cfg))?;
    let clf = report.time("fit", || {
        pipeline::train_classifier(&seqs, &labels, classes, cfg.readout.downsample, &cfg)
    })?;
    let metrics = report.time("score", || clf.evaluate(&seqs, &labels))?;
    write_model(&a.model, &clf.model)?;
    let sidecar = ModelSidecar {
        version: VERSION.to_string(),
        classes,
        downsample: cfg.readout.downsample,
        input_geometry: seqs[0].geometry(),
        window_us: cfg.decompose.window_us,
        num_frames: cfg.decompose.num_frames,
        reservoir: clf.reservoir.config.clone(),
        scaler: clf.scaler.clone(),
        lambda: cfg.readout.lambda,
        model_checksum: file_checksum(&a.model)?,
    };
    let side = sidecar_path(&a.model);
    write_text(&side, &(serde_json::to_string_pretty(&sidecar).expect("serializes") + "\n"))?;
    report.output(&a.model);
    report.output(&side);
    report.metrics = json!({
        "observations": seqs.len(),
        "classes": classes,
        "feature_dim": clf.model.feature_dim(),
        "train": metrics,
    });
    Ok(report)
}

pub fn load_classifier(model: &Path) -> Result<(Classifier, ModelSidecar)> {
    let side = sidecar_path(model);
    let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let sidecar: ModelSidecar = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: side.clone(),
        location: format!("{}:{}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    let weights = read_model(model)?;
    if file_checksum(model)? != sidecar.model_checksum {
        return Err(Error::invalid(format!(
            "{} does not match its sidecar {}",
            model.display(),
            side.display()
        )));
    }
    let reservoir = DelayLoopReservoir::new(sidecar.scaler.max.len(), sidecar.reservoir.clone())?;
    if weights.feature_dim() != reservoir.config.feature_dim() {
        return Err(Error::DimensionMismatch {
            expected: reservoir.config.feature_dim(),
            got: weights.feature_dim(),
        });
    }
    Ok((
        Classifier {
            reservoir,
            scaler: sidecar.scaler.clone(),
            model: weights,
            downsample: sidecar.downsample,
        },
        sidecar,
    ))
}

pub fn eval(mut cfg: ExperimentConfig, a: &EvalArgs) -> Result<RunReport> {
    let (clf, sidecar) = load_classifier(&a.model)?;
    // the frame layout must match what the model was trained on
    cfg.decompose.window_us = sidecar.window_us;
    cfg.decompose.num_frames = sidecar.num_frames;
    cfg.readout.downsample = sidecar.downsample;
    cfg.reservoir = sidecar.reservoir.clone();
    cfg.validate()?;
    let mut report = RunReport::new("eval", &cfg);
    let manifest = Manifest::load(&a.manifest)?;
    let data = report.time("read", || manifest.read(a.split.into(), cfg.data.gesture.geometry))?;
    let labels = labels_of(&data);
    if let Some(&bad) = labels.iter().find(|&&l| l >= sidecar.classes) {
        return Err(Error::invalid(format!(
            "label {bad} unknown to a model trained on {} classes",
            sidecar.classes
        )));
    }
    let streams: Vec<_> = data.iter().map(|(_, s)| s).collect();
    let seqs = report.time("frames", || pipeline::prepare(&streams, clf.downsample, &cfg))?;
    let metrics: Metrics = report.time("score", || clf.evaluate(&seqs, &labels))?;
    create_dir(&a.out)?;
    let csv = a.out.join("confusion.csv");
    write_text(&csv, &metrics.confusion_csv())?;
    report.output(&csv);
    report.metrics = json!({
        "observations": seqs.len(),
        "classes": sidecar.classes,
        "confusion_csv": csv.display().to_string(),
        "test": metrics,
    });
    Ok(report)
}

pub fn sweep(mut cfg: ExperimentConfig, a: &SweepArgs) -> Result<RunReport> {
    if let Some(r) = &a.resolutions {
        cfg.sweep.resolutions = r.clone();
    }
    cfg.validate()?;
    let mut report = RunReport::new("sweep-downsample", &cfg);
    let manifest = Manifest::load(&a.manifest)?;
    let classes = manifest.classes();
    let geometry = cfg.data.gesture.geometry;
    let train = report.time("read", || manifest.read(SplitFilter::Train, geometry))?;
    let test = manifest.read(SplitFilter::Test, geometry)?;
    let (train_labels, test_labels) = (labels_of(&train), labels_of(&test));
    let train_streams: Vec<_> = train.iter().map(|(_, s)| s).collect();
    let test_streams: Vec<_> = test.iter().map(|(_, s)| s).collect();
    let mut csv = String::from("resolution,accuracy\n");
    let mut rows = Vec::new();
    for &r in &cfg.sweep.resolutions {
        let run = report.time(&format!("resolution_{r}"), || {
            pipeline::classify(
                (&train_streams, &train_labels),
                (&test_streams, &test_labels),
                classes,
                Some(Geometry::new(r, r)),
                &cfg,
            )
        })?;
        csv.push_str(&format!("{r},{}\n", run.test.accuracy));
        rows.push(json!({
            "resolution": r,
            "frame_geometry": run.resolution,
            "train_accuracy": run.train.accuracy,
            "test_accuracy": run.test.accuracy,
        }));
    }
    write_text(&a.out, &csv)?;
    report.output(&a.out);
    report.metrics = json!({ "rows": rows });
    Ok(report)
}

fn init_threads() {
    if let Some(n) = std::env::var("EVENT_TSR_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // a second initialization in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Parses `args`, runs the command and returns the process exit code:
/// 0 success, 1 internal failure, 2 usage or input error.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    init_threads();
    let result = execute(&cli).and_then(|report| {
        let text = report.to_json();
        match &cli.report {
            Some(p) => write_text(p, &text),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                2
            } else {
                1
            }
        }
    }
}
