//! Runs the information study on synthetic gestures: how much each
//! component of the recordings says about the class label.
//!
//! ```bash
//! cargo run --release --example tsc_mutual_information -- 0
//! ```
//!
//! One seed takes about two minutes.

use event_tsr::experiment::{pipeline, presets};

fn main() -> event_tsr::Result<()> {
    let seed = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0);
    let st = pipeline::run_information_study(&presets::tsc_study(seed))?;
    println!("H(C) = {:.3} nats", st.label_entropy);
    for (name, v) in [
        ("spatial", st.spatial),
        ("spatial, one frame", st.spatial_single),
        ("temporal", st.temporal),
        ("video", st.video),
    ] {
        println!("{name:>20}: {v:.3} nats ({:.0}%)", 100.0 * v / st.label_entropy);
    }
    Ok(())
}
