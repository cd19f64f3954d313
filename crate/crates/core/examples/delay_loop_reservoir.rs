//! Drives a delay-loop reservoir with a short pulse and prints how the
//! state decays, for a few leak and feedback settings.

use std::borrow::Cow;

use event_tsr::reservoir::{make_mask, run_loop, ReservoirConfig};

fn main() -> event_tsr::Result<()> {
    let d = 8;
    let mask = make_mask(d, 128, 0)?;
    let mut inputs = vec![vec![0f32; d]; 60];
    for step in inputs.iter_mut().take(5) {
        step.iter_mut().for_each(|v| *v = 1.0);
    }
    for (a, f) in [(1.0, 0.0), (0.5, 0.5), (0.1, 0.9)] {
        let cfg = ReservoirConfig {
            loop_dim: 128,
            leaky_factor: a,
            feedback_gain: f,
            ..Default::default()
        };
        let st = run_loop(inputs.iter().map(|v| Cow::Borrowed(v.as_slice())), &mask, &cfg)?;
        let norms: Vec<String> = st
            .states
            .iter()
            .step_by(5)
            .map(|s| format!("{:.3}", s.iter().map(|v| v * v).sum::<f64>().sqrt()))
            .collect();
        println!("a={a} f={f} contraction {:.2}: {}", cfg.contraction(), norms.join(" "));
    }
    Ok(())
}
