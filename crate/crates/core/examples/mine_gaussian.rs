//! Lower-bounds the mutual information of correlated Gaussian pairs and
//! compares it with the closed form `-0.5 ln(1 - rho^2)`.
//!
//! ```bash
//! cargo run --release --example mine_gaussian -- 0.9
//! ```

use std::time::Instant;

use event_tsr::mine::{estimate_mi, MineConfig};
use event_tsr::seed;
use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> event_tsr::Result<()> {
    let rhos: Vec<f64> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let rhos = if rhos.is_empty() { vec![0.3, 0.6, 0.9] } else { rhos };
    let n = 50_000;
    for rho in rhos {
        let mut rng = seed::rng(42);
        let mut x = Array2::zeros((n, 1));
        let mut y = Array2::zeros((n, 1));
        for i in 0..n {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            x[[i, 0]] = a;
            y[[i, 0]] = rho * a + (1.0 - rho * rho).sqrt() * b;
        }
        let start = Instant::now();
        let est = estimate_mi(&x, &y, &MineConfig { seed: 1, ..Default::default() })?;
        let truth = -0.5 * (1.0 - rho * rho).ln();
        println!(
            "rho={rho:.2}  estimate={:.4}  closed form={truth:.4}  ({:.1}s)",
            est.mi_nats,
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
