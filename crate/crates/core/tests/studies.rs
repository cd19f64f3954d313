use event_tsr::experiment::{pipeline, presets};

#[test]
fn clean_gestures_are_separable() {
    let mut correct = 0.0;
    let mut total = 0.0;
    for s in 0..2 {
        let mut cfg = presets::clean_classification(s);
        cfg.sweep.resolutions = vec![8];
        let run = &pipeline::run_resolution_sweep(&cfg).unwrap()[0];
        let n = run.test.total as f64;
        correct += run.test.accuracy * n;
        total += n;
    }
    assert!(correct / total >= 0.95, "pooled test accuracy {}", correct / total);
}

#[test]
fn best_resolution_is_below_the_sensor() {
    let cfg = presets::hotspot_overfitting(0);
    let runs = pipeline::run_resolution_sweep(&cfg).unwrap();
    let best = runs
        .iter()
        .max_by(|a, b| a.test.accuracy.total_cmp(&b.test.accuracy))
        .unwrap();
    assert!(best.resolution.width < 32, "{runs:?}");
    assert_eq!(runs[0].train.accuracy, 1.0);
}
