//! Generates a small synthetic gesture dataset and summarises each class.
//!
//! ```bash
//! cargo run --release --example synthetic_gestures
//! ```

use event_tsr::events::Geometry;
use event_tsr::synth::{make_dataset, DatasetSpec, Motion};

fn main() -> event_tsr::Result<()> {
    let mut spec = DatasetSpec {
        per_class: 4,
        ..Default::default()
    };
    spec.gesture.geometry = Geometry::new(64, 64);
    spec.gesture.blob_radius = 3.0;
    let ds = make_dataset(&spec, 3)?;
    let motions = Motion::classes(spec.classes)?;
    for (class, motion) in motions.iter().enumerate() {
        let idx: Vec<usize> = (0..ds.recordings.len())
            .filter(|&i| ds.recordings[i].label as usize == class)
            .collect();
        let events: usize = idx.iter().map(|&i| ds.streams[i].len()).sum();
        let on: usize = idx
            .iter()
            .flat_map(|&i| ds.streams[i].events())
            .filter(|e| e.polarity.channel() == 1)
            .count();
        println!(
            "{class} {motion:?}: {} recordings, {:.0} events each, {:.0}% ON",
            idx.len(),
            events as f64 / idx.len() as f64,
            100.0 * on as f64 / events as f64
        );
    }
    Ok(())
}
