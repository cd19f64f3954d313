//! Bins one synthetic recording into fixed windows and prints per-frame
//! event counts as a bar chart.

use event_tsr::events::{aggregate_frames, frame_stats, Geometry};
use event_tsr::synth::{generate, GestureSpec, Motion, NoiseSpec};

fn main() -> event_tsr::Result<()> {
    let spec = GestureSpec {
        motion: Motion::WaveLeftRight,
        geometry: Geometry::new(64, 64),
        blob_radius: 3.0,
        duration_us: 1_500_000,
        ..Default::default()
    };
    let stream = generate(&spec, &NoiseSpec::default(), 6, 11)?;
    let seq = aggregate_frames(&stream, 30_000, 50)?;
    let stats = frame_stats(&seq);
    let peak = stats.frame_counts.iter().cloned().fold(1.0, f64::max);
    for (k, (&c, &px)) in stats.frame_counts.iter().zip(&stats.active_pixels).enumerate() {
        let bar = "#".repeat((40.0 * c / peak).round() as usize);
        println!("{k:3} {c:6.0} ev {px:4} px {bar}");
    }
    println!(
        "{} events, {} past the last window, truncated: {}",
        stream.len(),
        seq.discarded,
        seq.truncated
    );
    Ok(())
}
