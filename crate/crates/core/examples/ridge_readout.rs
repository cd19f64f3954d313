//! Fits the ridge readout on three noisy Gaussian clusters and reports
//! accuracy for a range of penalties.

use event_tsr::readout::{evaluate, fit_ridge, one_hot};
use event_tsr::seed;
use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> event_tsr::Result<()> {
    let mut rng = seed::rng(9);
    let (n, d, classes) = (300, 20, 3);
    let centers = Array2::from_shape_fn((classes, d), |_| rng.sample::<f64, _>(StandardNormal));
    let labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
    let x = Array2::from_shape_fn((n, d), |(i, j)| {
        centers[[labels[i], j]] + 2.0 * rng.sample::<f64, _>(StandardNormal)
    });
    let (train, test) = (0..200, 200..n);
    let y = one_hot(&labels[train.clone()], classes)?;
    for lambda in [1e-3, 1e-1, 1e1, 1e3] {
        let model = fit_ridge(x.slice(ndarray::s![train.clone(), ..]), y.view(), lambda)?;
        let m = evaluate(&model, x.slice(ndarray::s![test.clone(), ..]), &labels[test.clone()])?;
        println!("lambda {lambda:>7}: test accuracy {:.3}", m.accuracy);
    }
    Ok(())
}
