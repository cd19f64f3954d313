//! Splits one recording into its spatial and temporal components and a
//! downsampled video, and draws the tracked centroids.

use event_tsr::experiment::{pipeline, ExperimentConfig};
use event_tsr::events::Geometry;
use event_tsr::synth::{generate, Motion};

fn main() -> event_tsr::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.data.gesture.geometry = Geometry::new(48, 48);
    cfg.data.gesture.blob_radius = 2.5;
    cfg.data.gesture.motion = Motion::CircleClockwise;
    let stream = generate(&cfg.data.gesture, &cfg.data.noise, 6, 5)?;
    let c = pipeline::decompose(&stream, &cfg, 5)?;

    println!(
        "spatial: frames {:?}, {} values over {} us",
        c.spatial.frame_indices,
        c.spatial.data.len(),
        c.spatial.span_us
    );
    println!("single frame: {:?}", c.spatial_single.frame_indices);
    println!("video: {} values", c.video.len());

    let t = &c.temporal;
    println!("temporal: {} tracks x {} slices", t.k, t.n_slices);
    let side = 24;
    let mut canvas = vec![vec![' '; side]; side];
    for track in 0..t.k {
        for s in 0..t.n_slices {
            let (x, y) = t.position(track, s);
            let px = ((x / 48.0) * side as f32).clamp(0.0, side as f32 - 1.0) as usize;
            let py = ((y / 48.0) * side as f32).clamp(0.0, side as f32 - 1.0) as usize;
            canvas[py][px] = char::from(b'0' + track as u8);
        }
    }
    for row in canvas {
        println!("|{}|", row.into_iter().collect::<String>());
    }
    Ok(())
}
