//! Ridge-regression readout, the only trained stage of the classifier.

use std::path::Path;

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::codec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeModel {
    /// `(feature_dim + 1) x classes`; the last row is the bias.
    pub weights: Array2<f64>,
    pub lambda: f64,
}

impl RidgeModel {
    pub fn feature_dim(&self) -> usize {
        self.weights.nrows() - 1
    }

    pub fn classes(&self) -> usize {
        self.weights.ncols()
    }

    pub fn bias(&self) -> ndarray::ArrayView1<'_, f64> {
        self.weights.row(self.feature_dim())
    }
}

/// One-hot targets for `labels` over `classes` columns.
pub fn one_hot(labels: &[usize], classes: usize) -> Result<Array2<f64>> {
    let mut y = Array2::zeros((labels.len(), classes));
    for (i, &l) in labels.iter().enumerate() {
        if l >= classes {
            return Err(Error::invalid(format!("label {l} outside 0..{classes}")));
        }
        y[[i, l]] = 1.0;
    }
    Ok(y)
}

fn augment(x: ArrayView2<f64>) -> Array2<f64> {
    let mut a = Array2::ones((x.nrows(), x.ncols() + 1));
    a.slice_mut(s![.., ..x.ncols()]).assign(&x);
    a
}

/// In-place lower Cholesky factor of a symmetric matrix. Fails when a pivot
/// is not safely positive.
fn cholesky(mut a: Array2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    let scale = (0..n).map(|i| a[[i, i]].abs()).fold(0.0, f64::max).max(1.0);
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= a[[j, k]] * a[[j, k]];
        }
        if !(d > 1e-13 * scale) {
            return None;
        }
        let d = d.sqrt();
        a[[j, j]] = d;
        for i in j + 1..n {
            let mut v = a[[i, j]];
            for k in 0..j {
                v -= a[[i, k]] * a[[j, k]];
            }
            a[[i, j]] = v / d;
        }
        for k in j + 1..n {
            a[[j, k]] = 0.0;
        }
    }
    Some(a)
}

/// Solves `L L^T w = b` column by column.
fn cholesky_solve(l: &Array2<f64>, b: &mut Array2<f64>) {
    let n = l.nrows();
    for mut col in b.axis_iter_mut(Axis(1)) {
        for i in 0..n {
            let mut v = col[i];
            for k in 0..i {
                v -= l[[i, k]] * col[k];
            }
            col[i] = v / l[[i, i]];
        }
        for i in (0..n).rev() {
            let mut v = col[i];
            for k in i + 1..n {
                v -= l[[k, i]] * col[k];
            }
            col[i] = v / l[[i, i]];
        }
    }
}

/// `W = (A^T A + lambda I')^-1 A^T Y` with `A = [X 1]` and `I'` the identity
/// with the bias entry zeroed, solved through a Cholesky factorization.
pub fn fit_ridge(x: ArrayView2<f64>, y: ArrayView2<f64>, lambda: f64) -> Result<RidgeModel> {
    if x.nrows() == 0 {
        return Err(Error::Empty("no training rows"));
    }
    if x.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: y.nrows(),
        });
    }
    if y.ncols() < 2 {
        return Err(Error::invalid("ridge readout needs at least two classes"));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("lambda {lambda} must be finite and >= 0")));
    }
    let a = augment(x);
    let d = x.ncols();
    let mut gram = a.t().dot(&a);
    for i in 0..d {
        gram[[i, i]] += lambda;
    }
    let l = cholesky(gram).ok_or_else(|| {
        Error::Singular(format!(
            "normal equations are not positive definite at lambda={lambda}; use lambda > 0"
        ))
    })?;
    let mut w = a.t().dot(&y);
    cholesky_solve(&l, &mut w);
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("ridge solution is not finite".into()));
    }
    Ok(RidgeModel { weights: w, lambda })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub classes: Vec<usize>,
    pub scores: Array2<f64>,
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

pub fn predict(model: &RidgeModel, x: ArrayView2<f64>) -> Result<Prediction> {
    if x.ncols() != model.feature_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.feature_dim(),
            got: x.ncols(),
        });
    }
    let scores = augment(x).dot(&model.weights);
    let classes = scores
        .rows()
        .into_iter()
        .map(|r| argmax(r.as_slice().expect("standard layout")))
        .collect();
    Ok(Prediction { classes, scores })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    /// `None` for classes absent from the labels.
    pub per_class_accuracy: Vec<Option<f64>>,
    /// `confusion[true][predicted]` counts.
    pub confusion: Vec<Vec<usize>>,
    pub total: usize,
}

impl Metrics {
    pub fn from_predictions(predicted: &[usize], labels: &[usize], classes: usize) -> Result<Self> {
        if predicted.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                got: predicted.len(),
            });
        }
        let mut confusion = vec![vec![0usize; classes]; classes];
        for (&p, &l) in predicted.iter().zip(labels) {
            if l >= classes || p >= classes {
                return Err(Error::invalid(format!("class id outside 0..{classes}")));
            }
            confusion[l][p] += 1;
        }
        let correct: usize = (0..classes).map(|c| confusion[c][c]).sum();
        let per_class_accuracy = confusion
            .iter()
            .enumerate()
            .map(|(c, row)| {
                let n: usize = row.iter().sum();
                (n > 0).then(|| row[c] as f64 / n as f64)
            })
            .collect();
        Ok(Metrics {
            accuracy: if labels.is_empty() {
                0.0
            } else {
                correct as f64 / labels.len() as f64
            },
            per_class_accuracy,
            confusion,
            total: labels.len(),
        })
    }

    /// Confusion matrix with each non-empty row divided by its total.
    pub fn normalized_confusion(&self) -> Vec<Vec<f64>> {
        self.confusion
            .iter()
            .map(|row| {
                let n: usize = row.iter().sum();
                row.iter()
                    .map(|&c| if n > 0 { c as f64 / n as f64 } else { 0.0 })
                    .collect()
            })
            .collect()
    }

    /// `true,predicted,...` CSV with a header row.
    pub fn confusion_csv(&self) -> String {
        let c = self.confusion.len();
        let mut out = String::from("true");
        for j in 0..c {
            out.push_str(&format!(",pred_{j}"));
        }
        out.push('\n');
        for (i, row) in self.confusion.iter().enumerate() {
            out.push_str(&i.to_string());
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

pub fn evaluate(model: &RidgeModel, x: ArrayView2<f64>, labels: &[usize]) -> Result<Metrics> {
    let pred = predict(model, x)?;
    Metrics::from_predictions(&pred.classes, labels, model.classes())
}

/// Mean squared training residual `||A W - Y||^2 / n`.
pub fn residual(model: &RidgeModel, x: ArrayView2<f64>, y: ArrayView2<f64>) -> f64 {
    let r = augment(x).dot(&model.weights) - y;
    r.mapv(|v| v * v).sum() / x.nrows() as f64
}

const RDG_MAGIC: &[u8; 4] = b"RDG1";

/// `RDG1`, u32 rows (`d+1`), u32 classes, f64 lambda, then row-major f32
/// weights.
pub fn write_model(path: &Path, model: &RidgeModel) -> Result<()> {
    let mut buf = Vec::with_capacity(20 + 4 * model.weights.len());
    buf.extend_from_slice(RDG_MAGIC);
    codec::put_u32(&mut buf, model.weights.nrows())?;
    codec::put_u32(&mut buf, model.weights.ncols())?;
    buf.extend_from_slice(&model.lambda.to_le_bytes());
    codec::put_f32s(&mut buf, model.weights.iter().copied());
    codec::write(path, &buf)
}

pub fn read_model(path: &Path) -> Result<RidgeModel> {
    let buf = codec::read_with_magic(path, RDG_MAGIC, 20)?;
    let (rows, cols) = (codec::get_u32(&buf, 4), codec::get_u32(&buf, 8));
    let lambda = f64::from_le_bytes(buf[12..20].try_into().expect("8 bytes"));
    codec::check_payload(path, &buf, 20, rows * cols)?;
    if rows < 1 {
        return Err(Error::invalid("model has no bias row"));
    }
    Ok(RidgeModel {
        weights: Array2::from_shape_vec((rows, cols), codec::get_f32s(&buf[20..]))
            .expect("checked length"),
        lambda,
    })
}

/// Gradient of `||A W - Y||^2 + lambda ||W_features||^2` (half of it).
pub fn objective_gradient(model: &RidgeModel, x: ArrayView2<f64>, y: ArrayView2<f64>) -> Array2<f64> {
    let a = augment(x);
    let mut g = a.t().dot(&(a.dot(&model.weights) - y));
    let d = model.feature_dim();
    g.slice_mut(s![..d, ..])
        .zip_mut_with(&model.weights.slice(s![..d, ..]), |gv, &w| *gv += model.lambda * w);
    g
}

/// Column means of `y`, the bias an infinitely regularized model converges to.
pub fn class_means(y: ArrayView2<f64>) -> Array1<f64> {
    y.mean_axis(Axis(0)).expect("non-empty")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::Rng;

    fn random(rows: usize, cols: usize, s: u64) -> Array2<f64> {
        let mut rng = seed::rng(s);
        Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-1.0..1.0))
    }

    #[test]
    fn orthonormal_features_interpolate() {
        // 4 rows, 3 orthonormal feature columns plus the bias: square system
        let x = array![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]];
        let labels = [0, 1, 2, 1];
        let y = one_hot(&labels, 3).unwrap();
        let m = fit_ridge(x.view(), y.view(), 0.0).unwrap();
        assert!(residual(&m, x.view(), y.view()) < 1e-20);
        let metrics = evaluate(&m, x.view(), &labels).unwrap();
        assert_eq!(metrics.accuracy, 1.0);
    }

    #[test]
    fn huge_lambda_leaves_only_the_bias() {
        let x = random(30, 4, 1);
        let labels: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let y = one_hot(&labels, 3).unwrap();
        let m = fit_ridge(x.view(), y.view(), 1e9).unwrap();
        assert!(m.weights.slice(s![..4, ..]).iter().all(|w| w.abs() < 1e-6));
        for (b, mean) in m.bias().iter().zip(class_means(y.view()).iter()) {
            assert!((b - mean).abs() < 1e-6);
        }
    }

    #[test]
    fn singular_without_regularization() {
        let x = array![[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]];
        let y = one_hot(&[0, 1, 0], 2).unwrap();
        assert!(matches!(fit_ridge(x.view(), y.view(), 0.0), Err(Error::Singular(_))));
        assert!(fit_ridge(x.view(), y.view(), 0.1).is_ok());
    }

    #[test]
    fn optimality_and_monotone_residual() {
        let x = random(40, 6, 2);
        let labels: Vec<usize> = (0..40).map(|i| (i * 7) % 4).collect();
        let y = one_hot(&labels, 4).unwrap();
        let xty = x.t().dot(&y).mapv(|v| v * v).sum().sqrt();
        let mut last = 0.0;
        for lambda in [0.01, 0.1, 1.0, 10.0] {
            let m = fit_ridge(x.view(), y.view(), lambda).unwrap();
            let g = objective_gradient(&m, x.view(), y.view());
            assert!(g.mapv(|v| v * v).sum().sqrt() < 1e-6 * (1.0 + xty));
            let r = residual(&m, x.view(), y.view());
            assert!(r >= last - 1e-15);
            last = r;
        }
    }

    #[test]
    fn argmax_ties_to_lower() {
        assert_eq!(argmax(&[0.9, 0.1]), 0);
        assert_eq!(argmax(&[0.2, 0.5, 0.5]), 1);
        assert_eq!(argmax(&[0.0, 0.0]), 0);
    }

    #[test]
    fn metrics_basics() {
        let m = Metrics::from_predictions(&[0, 1, 1, 2], &[0, 1, 2, 2], 3).unwrap();
        assert_eq!(m.accuracy, 0.75);
        assert_eq!(m.confusion, vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 1, 1]]);
        assert_eq!(m.per_class_accuracy, vec![Some(1.0), Some(1.0), Some(0.5)]);
        let diag: usize = (0..3).map(|i| m.confusion[i][i]).sum();
        assert_eq!(diag as f64 / m.total as f64, m.accuracy);
        for row in m.normalized_confusion() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(m.confusion_csv().starts_with("true,pred_0,pred_1,pred_2\n0,1,0,0\n"));
        assert!(Metrics::from_predictions(&[0], &[3], 3).is_err());
    }

    #[test]
    fn predict_checks_dims() {
        let x = random(10, 3, 3);
        let y = one_hot(&[0, 1, 0, 1, 0, 1, 0, 1, 0, 1], 2).unwrap();
        let m = fit_ridge(x.view(), y.view(), 0.1).unwrap();
        assert!(predict(&m, random(2, 4, 4).view()).is_err());
    }

    #[test]
    fn model_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.rdg");
        let m = RidgeModel {
            weights: array![[0.5, -1.0], [2.0, 0.25], [1.0, 0.0]],
            lambda: 0.125,
        };
        write_model(&p, &m).unwrap();
        assert_eq!(read_model(&p).unwrap(), m);
        assert_eq!(&std::fs::read(&p).unwrap()[..12], b"RDG1\x03\0\0\0\x02\0\0\0");
    }

    proptest! {
        #[test]
        fn positive_rescaling_keeps_classes(seed in 0u64..1000, c in 0.01f64..100.0) {
            let x = random(12, 3, seed);
            let labels: Vec<usize> = (0..12).map(|i| i % 3).collect();
            let y = one_hot(&labels, 3).unwrap();
            let m = fit_ridge(x.view(), y.view(), 0.5).unwrap();
            let p = predict(&m, x.view()).unwrap();
            let scaled: Vec<usize> = p.scores.rows().into_iter()
                .map(|r| argmax(&r.mapv(|v| v * c).to_vec()))
                .collect();
            prop_assert_eq!(scaled, p.classes);
        }
    }
}
