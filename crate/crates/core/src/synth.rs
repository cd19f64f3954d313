//! Synthetic labelled gesture recordings.
//!
//! Each class moves a blob of events along its own trajectory over a shared
//! region of the sensor, so classes differ mostly in *how* the blob moves
//! rather than *where* it is. Background noise and an optional hotspot (a
//! small, very active spot whose position can depend on the class) model the
//! spurious events that a classifier can latch onto.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{Event, EventStream, Geometry, Polarity};
use crate::seed;

/// Trajectory families. The first six are the default class set: three pairs
/// that share their spatial support and differ only in direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Motion {
    CircleClockwise,
    CircleCounterClockwise,
    WaveLeftRight,
    WaveRightLeft,
    WaveUpDown,
    WaveDownUp,
    StaticJitter,
    Clap,
    ArmRoll,
    WaveDiagonal,
}

impl Motion {
    pub const ALL: [Motion; 10] = [
        Motion::CircleClockwise,
        Motion::CircleCounterClockwise,
        Motion::WaveLeftRight,
        Motion::WaveRightLeft,
        Motion::WaveUpDown,
        Motion::WaveDownUp,
        Motion::StaticJitter,
        Motion::Clap,
        Motion::ArmRoll,
        Motion::WaveDiagonal,
    ];

    /// The first `n` families.
    pub fn classes(n: usize) -> Result<Vec<Motion>> {
        if !(2..=Self::ALL.len()).contains(&n) {
            return Err(Error::invalid(format!(
                "class count {n} outside 2..={}",
                Self::ALL.len()
            )));
        }
        Ok(Self::ALL[..n].to_vec())
    }

    /// Blob centers at phase `theta` (radians of the base cycle) and
    /// progress `u` in `[0, 1)`, as offsets in units of the motion amplitude.
    fn centers(self, theta: f64, u: f64) -> ([(f64, f64); 2], usize) {
        let (s, c) = theta.sin_cos();
        let one = |p: (f64, f64)| ([p, p], 1);
        match self {
            Motion::CircleClockwise => one((c, s)),
            Motion::CircleCounterClockwise => one((c, -s)),
            Motion::WaveLeftRight => one((s, 0.0)),
            Motion::WaveRightLeft => one((-s, 0.0)),
            Motion::WaveUpDown => one((0.0, s)),
            Motion::WaveDownUp => one((0.0, -s)),
            Motion::WaveDiagonal => one((s * FRAC_1_SQRT_2, s * FRAC_1_SQRT_2)),
            Motion::Clap => {
                let gap = 0.25 + 0.75 * (0.5 + 0.5 * c);
                ([(-gap, 0.0), (gap, 0.0)], 2)
            }
            Motion::ArmRoll => {
                let r = 0.2 + 0.8 * u;
                let (s2, c2) = (2.0 * theta).sin_cos();
                one((r * c2, r * s2))
            }
            Motion::StaticJitter => one((0.0, 0.0)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GestureSpec {
    pub class_id: u16,
    pub motion: Motion,
    pub geometry: Geometry,
    /// Radius of the event blob in pixels.
    pub blob_radius: f64,
    /// Mean event rate of the gesture, per millisecond.
    pub events_per_ms: f64,
    pub duration_us: u64,
    /// Motion amplitude as a fraction of the smaller sensor side.
    pub amplitude: f64,
    /// Base cycle period.
    pub period_us: u64,
    /// Relative per-recording jitter of amplitude and center.
    pub variability: f64,
    /// Spread of the starting phase as a fraction of a cycle; 1 draws it
    /// uniformly.
    pub phase_spread: f64,
    /// Relative per-recording jitter of the cycle speed.
    pub speed_spread: f64,
}

impl Default for GestureSpec {
    fn default() -> Self {
        Self {
            class_id: 0,
            motion: Motion::CircleClockwise,
            geometry: Geometry::DVS128,
            blob_radius: 6.0,
            events_per_ms: 8.0,
            duration_us: 6_000_000,
            amplitude: 0.4,
            period_us: 1_500_000,
            variability: 0.1,
            phase_spread: 0.05,
            speed_spread: 0.1,
        }
    }
}

impl GestureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.events_per_ms >= 0.0 && self.events_per_ms.is_finite()) {
            return Err(Error::invalid("events_per_ms must be >= 0"));
        }
        let spreads = [self.blob_radius, self.amplitude, self.variability, self.phase_spread];
        if spreads.iter().any(|v| !(*v >= 0.0)) || !(0.0..1.0).contains(&self.speed_spread) {
            return Err(Error::invalid(
                "blob_radius, amplitude, variability and phase_spread must be >= 0, speed_spread in [0, 1)",
            ));
        }
        if self.period_us == 0 || self.geometry.pixels() == 0 {
            return Err(Error::invalid("period_us and geometry must be non-zero"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hotspot {
    /// Fixed position; ignored when `class_correlated`.
    #[serde(default)]
    pub position: Option<(f64, f64)>,
    pub radius: f64,
    pub events_per_ms: f64,
    /// Place the hotspot at a class-specific position.
    pub class_correlated: bool,
    /// Only training recordings carry the hotspot.
    pub train_only: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    /// Uniform background events per millisecond over the whole sensor.
    pub background_rate: f64,
    pub hotspot: Option<Hotspot>,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v >= 0.0 && v.is_finite();
        if !ok(self.background_rate) {
            return Err(Error::invalid("background_rate must be >= 0"));
        }
        if let Some(h) = &self.hotspot {
            if !ok(h.events_per_ms) || !ok(h.radius) {
                return Err(Error::invalid("hotspot rate and radius must be >= 0"));
            }
        }
        Ok(())
    }

    fn without_hotspot(&self) -> NoiseSpec {
        NoiseSpec {
            background_rate: self.background_rate,
            hotspot: None,
        }
    }
}

/// Position of a class-correlated hotspot: evenly spaced on a ring near the
/// sensor border, outside the gestures' common region.
pub fn hotspot_position(class_id: u16, classes: usize, geometry: Geometry) -> (f64, f64) {
    let (cx, cy) = geometry.center();
    let r = 0.42 * f64::from(geometry.width.min(geometry.height));
    let a = TAU * f64::from(class_id) / classes.max(1) as f64 + 0.3;
    (cx + r * a.cos(), cy + r * a.sin())
}

fn poisson_count(rng: &mut impl Rng, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as usize
}

/// Uniform point in a disk.
fn disk(rng: &mut impl Rng, radius: f64) -> (f64, f64) {
    let r = radius * rng.random::<f64>().sqrt();
    let a = TAU * rng.random::<f64>();
    (r * a.cos(), r * a.sin())
}

fn pixel(g: Geometry, x: f64, y: f64) -> Option<(u16, u16)> {
    let (xi, yi) = (x.round(), y.round());
    (xi >= 0.0 && yi >= 0.0 && xi < f64::from(g.width) && yi < f64::from(g.height))
        .then_some((xi as u16, yi as u16))
}

fn random_polarity(rng: &mut impl Rng) -> Polarity {
    if rng.random() {
        Polarity::On
    } else {
        Polarity::Off
    }
}

/// Samples one recording. `classes` is only used to place a class-correlated
/// hotspot.
pub fn generate(spec: &GestureSpec, noise: &NoiseSpec, classes: usize, seed: u64) -> Result<EventStream> {
    spec.validate()?;
    noise.validate()?;
    let mut rng = seed::rng(seed);
    let g = spec.geometry;
    let duration_ms = spec.duration_us as f64 / 1000.0;
    let jitter = |rng: &mut rand_chacha::ChaCha8Rng, spread: f64| 1.0 + spread * rng.random_range(-1.0..1.0);
    let phase0 = spec.phase_spread * rng.random_range(-0.5..0.5) * TAU;
    let speed = jitter(&mut rng, spec.speed_spread);
    let amp = spec.amplitude * f64::from(g.width.min(g.height)) * jitter(&mut rng, spec.variability);
    let (cx, cy) = g.center();
    let shift = spec.variability * 0.1 * f64::from(g.width.min(g.height));
    let (cx, cy) = (
        cx + shift * rng.random_range(-1.0..1.0),
        cy + shift * rng.random_range(-1.0..1.0),
    );

    let mut events = Vec::new();
    let mut push = |t: f64, x: f64, y: f64, p: Polarity| {
        if let Some((px, py)) = pixel(g, x, y) {
            events.push(Event::new(t as u64, px, py, p));
        }
    };
    let uniform_t = |rng: &mut rand_chacha::ChaCha8Rng| rng.random_range(0.0..spec.duration_us as f64);

    for _ in 0..poisson_count(&mut rng, spec.events_per_ms * duration_ms) {
        let t = uniform_t(&mut rng);
        let u = t / spec.duration_us as f64;
        let theta = phase0 + TAU * speed * t / spec.period_us as f64;
        let (centers, n) = spec.motion.centers(theta, u);
        let blob = rng.random_range(0..n);
        let (bx, by) = centers[blob];
        let (ox, oy) = disk(&mut rng, spec.blob_radius);
        // leading edge of the moving blob brightens, trailing edge darkens
        let (ahead, _) = spec.motion.centers(theta + 0.05, u);
        let vel = (ahead[blob].0 - bx, ahead[blob].1 - by);
        let lead = ox * vel.0 + oy * vel.1;
        let pol = if lead.abs() < 1e-12 {
            random_polarity(&mut rng)
        } else if lead > 0.0 {
            Polarity::On
        } else {
            Polarity::Off
        };
        let (jx, jy) = if spec.motion == Motion::StaticJitter {
            disk(&mut rng, 1.5)
        } else {
            (0.0, 0.0)
        };
        push(t, cx + amp * bx + ox + jx, cy + amp * by + oy + jy, pol);
    }

    for _ in 0..poisson_count(&mut rng, noise.background_rate * duration_ms) {
        let t = uniform_t(&mut rng);
        let x = rng.random_range(0..g.width);
        let y = rng.random_range(0..g.height);
        let p = random_polarity(&mut rng);
        push(t, f64::from(x), f64::from(y), p);
    }

    if let Some(h) = &noise.hotspot {
        let (hx, hy) = if h.class_correlated {
            hotspot_position(spec.class_id, classes, g)
        } else {
            h.position.unwrap_or(g.center())
        };
        for _ in 0..poisson_count(&mut rng, h.events_per_ms * duration_ms) {
            let t = uniform_t(&mut rng);
            let (ox, oy) = disk(&mut rng, h.radius);
            let p = random_polarity(&mut rng);
            push(t, hx + ox, hy + oy, p);
        }
    }

    Ok(EventStream::new(events, g)?.with_label(spec.class_id))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

/// One recording of a dataset and how it was made.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recording {
    pub label: u16,
    pub split: Split,
    pub seed: u64,
    /// Whether the hotspot was injected into this recording.
    pub hotspot: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSpec {
    pub classes: usize,
    /// Explicit class list; when absent the first `classes` families are used.
    pub motions: Option<Vec<Motion>>,
    pub per_class: usize,
    pub test_fraction: f64,
    pub gesture: GestureSpec,
    pub noise: NoiseSpec,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            classes: 6,
            motions: None,
            per_class: 20,
            test_fraction: 0.2,
            gesture: GestureSpec::default(),
            noise: NoiseSpec::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub streams: Vec<EventStream>,
    pub recordings: Vec<Recording>,
}

impl Dataset {
    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.recordings.len())
            .filter(|&i| self.recordings[i].split == split)
            .collect()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.recordings.iter().map(|r| r.label as usize).collect()
    }
}

impl DatasetSpec {
    pub fn class_motions(&self) -> Result<Vec<Motion>> {
        match &self.motions {
            None => Motion::classes(self.classes),
            Some(m) if m.len() != self.classes => Err(Error::invalid(format!(
                "{} motions listed for {} classes",
                m.len(),
                self.classes
            ))),
            Some(m) if m.len() < 2 => Err(Error::invalid("need at least two classes")),
            Some(m) => Ok(m.clone()),
        }
    }
}

/// Recording plan: labels, stratified split and per-recording seeds, without
/// generating any events.
pub fn plan_dataset(spec: &DatasetSpec, seed: u64) -> Result<Vec<Recording>> {
    if spec.per_class < 2 {
        return Err(Error::invalid("need at least two recordings per class"));
    }
    if !(0.0..1.0).contains(&spec.test_fraction) {
        return Err(Error::invalid("test_fraction must lie in [0, 1)"));
    }
    spec.class_motions()?;
    let n_test = ((spec.per_class as f64 * spec.test_fraction).round() as usize)
        .clamp(usize::from(spec.test_fraction > 0.0), spec.per_class - 1);
    let mut split_rng = seed::rng(seed::derive_seed(seed, "synth.split"));
    let train_only = spec.noise.hotspot.as_ref().is_some_and(|h| h.train_only);
    let has_hotspot = spec.noise.hotspot.is_some();
    let mut out = Vec::with_capacity(spec.classes * spec.per_class);
    for class in 0..spec.classes {
        let mut order: Vec<usize> = (0..spec.per_class).collect();
        order.shuffle(&mut split_rng);
        let mut is_test = vec![false; spec.per_class];
        for &i in &order[..n_test] {
            is_test[i] = true;
        }
        for (i, &test) in is_test.iter().enumerate() {
            let split = if test { Split::Test } else { Split::Train };
            out.push(Recording {
                label: class as u16,
                split,
                seed: seed::derive_indexed(seed, "synth.stream", (class * spec.per_class + i) as u64),
                hotspot: has_hotspot && !(train_only && split == Split::Test),
            });
        }
    }
    Ok(out)
}

/// Generates one planned recording.
pub fn generate_recording(spec: &DatasetSpec, rec: &Recording) -> Result<EventStream> {
    let motions = spec.class_motions()?;
    let gesture = GestureSpec {
        class_id: rec.label,
        motion: motions[rec.label as usize],
        ..spec.gesture.clone()
    };
    let noise = if rec.hotspot {
        spec.noise.clone()
    } else {
        spec.noise.without_hotspot()
    };
    generate(&gesture, &noise, spec.classes, rec.seed)
}

/// `per_class` recordings of each class with a stratified train/test split.
pub fn make_dataset(spec: &DatasetSpec, seed: u64) -> Result<Dataset> {
    use rayon::prelude::*;
    let recordings = plan_dataset(spec, seed)?;
    let streams = recordings
        .par_iter()
        .map(|r| generate_recording(spec, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        streams,
        recordings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::{extract_temporal, TemporalParams};

    fn small() -> GestureSpec {
        GestureSpec {
            geometry: Geometry::new(32, 32),
            blob_radius: 2.0,
            duration_us: 600_000,
            ..Default::default()
        }
    }

    #[test]
    fn zero_rates_give_empty_stream() {
        let spec = GestureSpec {
            events_per_ms: 0.0,
            ..small()
        };
        let s = generate(&spec, &NoiseSpec::default(), 6, 1).unwrap();
        assert!(s.is_empty());
        assert_eq!(s.label, Some(0));
    }

    #[test]
    fn static_blob_centroid_is_blob_center() {
        let spec = GestureSpec {
            motion: Motion::StaticJitter,
            variability: 0.0,
            ..small()
        };
        let s = generate(&spec, &NoiseSpec::default(), 6, 2).unwrap();
        let tc = extract_temporal(
            &s,
            TemporalParams {
                k: 1,
                slice_us: 600_000,
                n_slices: 1,
            },
            0,
        )
        .unwrap();
        let (x, y) = tc.position(0, 0);
        // sample mean as the independent reference
        let n = s.len() as f64;
        let mx = s.events().iter().map(|e| f64::from(e.x)).sum::<f64>() / n;
        let my = s.events().iter().map(|e| f64::from(e.y)).sum::<f64>() / n;
        assert!((f64::from(x) - mx).abs() < 1e-3 && (f64::from(y) - my).abs() < 1e-3);
        assert!((f64::from(x) - 15.5).abs() < 0.5 && (f64::from(y) - 15.5).abs() < 0.5);
    }

    #[test]
    fn timestamps_within_duration_and_counts_concentrate() {
        let spec = small();
        let noise = NoiseSpec {
            background_rate: 1.0,
            hotspot: None,
        };
        for seed in 0..5 {
            let s = generate(
                &GestureSpec {
                    motion: Motion::WaveUpDown,
                    variability: 0.0,
                    amplitude: 0.2,
                    ..spec.clone()
                },
                &noise,
                6,
                seed,
            )
            .unwrap();
            assert!(s.events().iter().all(|e| e.t < spec.duration_us));
            // nothing is clipped for this motion, so the count is Poisson
            let mean = (spec.events_per_ms + 1.0) * 600.0;
            assert!((s.len() as f64 - mean).abs() < 5.0 * mean.sqrt());
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate(&small(), &NoiseSpec::default(), 6, 9).unwrap();
        let b = generate(&small(), &NoiseSpec::default(), 6, 9).unwrap();
        let c = generate(&small(), &NoiseSpec::default(), 6, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn dataset_split_counts() {
        let spec = DatasetSpec {
            per_class: 10,
            gesture: GestureSpec {
                duration_us: 100_000,
                ..small()
            },
            ..Default::default()
        };
        let d = make_dataset(&spec, 7).unwrap();
        assert_eq!(d.streams.len(), 60);
        assert_eq!(d.indices(Split::Train).len(), 48);
        assert_eq!(d.indices(Split::Test).len(), 12);
        // per-split label histogram
        for split in [Split::Train, Split::Test] {
            let mut hist = [0usize; 6];
            for i in d.indices(split) {
                hist[d.recordings[i].label as usize] += 1;
            }
            let expect = if split == Split::Train { 8 } else { 2 };
            assert!(hist.iter().all(|&h| h == expect));
        }
        let again = make_dataset(&spec, 7).unwrap();
        assert_eq!(again.recordings, d.recordings);
        assert!(again.streams.iter().zip(&d.streams).all(|(a, b)| a == b));
    }

    #[test]
    fn train_only_hotspot() {
        let spec = DatasetSpec {
            per_class: 5,
            gesture: GestureSpec {
                duration_us: 50_000,
                ..small()
            },
            noise: NoiseSpec {
                background_rate: 0.0,
                hotspot: Some(Hotspot {
                    position: None,
                    radius: 0.0,
                    events_per_ms: 2.0,
                    class_correlated: true,
                    train_only: true,
                }),
            },
            ..Default::default()
        };
        let plan = plan_dataset(&spec, 1).unwrap();
        assert!(plan.iter().all(|r| r.hotspot == (r.split == Split::Train)));
        let rec = plan.iter().find(|r| r.split == Split::Train && r.label == 2).unwrap();
        let s = generate_recording(&spec, rec).unwrap();
        let (hx, hy) = hotspot_position(2, 6, Geometry::new(32, 32));
        let at_spot = s
            .events()
            .iter()
            .filter(|e| e.x == hx.round() as u16 && e.y == hy.round() as u16)
            .count();
        assert!(at_spot > 50);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(plan_dataset(&DatasetSpec { per_class: 1, ..Default::default() }, 0).is_err());
        assert!(plan_dataset(&DatasetSpec { classes: 11, ..Default::default() }, 0).is_err());
        let listed = DatasetSpec {
            classes: 3,
            motions: Some(vec![Motion::Clap, Motion::ArmRoll]),
            ..Default::default()
        };
        assert!(plan_dataset(&listed, 0).is_err());
        let bad = GestureSpec {
            events_per_ms: -1.0,
            ..small()
        };
        assert!(generate(&bad, &NoiseSpec::default(), 6, 0).is_err());
    }
}
