//! Trains the reservoir classifier at several input resolutions on data
//! whose training half carries a class-correlated hotspot.

use event_tsr::experiment::{pipeline, presets};

fn main() -> event_tsr::Result<()> {
    let seed = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0);
    let cfg = presets::hotspot_overfitting(seed);
    for run in pipeline::run_resolution_sweep(&cfg)? {
        println!(
            "{:>5}: train {:.3} test {:.3}",
            run.resolution.to_string(),
            run.train.accuracy,
            run.test.accuracy
        );
    }
    Ok(())
}
