//! Estimates the entropy of uniformly drawn one-hot labels, which the
//! estimator sees as I(C; C).

use event_tsr::mine::{estimate_entropy, MineConfig};
use event_tsr::seed;
use ndarray::Array2;
use rand::Rng;

fn main() -> event_tsr::Result<()> {
    let n = 20_000;
    for classes in [2usize, 6, 11] {
        let mut rng = seed::rng(classes as u64);
        let mut x = Array2::zeros((n, classes));
        for i in 0..n {
            x[[i, rng.random_range(0..classes)]] = 1.0;
        }
        let est = estimate_entropy(&x, &MineConfig { steps: 3000, ..Default::default() })?;
        println!(
            "{classes:2} classes: {:.3} nats (ln {classes} = {:.3})",
            est.mi_nats,
            (classes as f64).ln()
        );
    }
    Ok(())
}
