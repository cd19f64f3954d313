use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::network::{sample_indices, Adam, Gradients, StatisticsNetwork};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// `E_P[T] - log E_Q[e^T]`.
    #[default]
    #[serde(alias = "dv")]
    DonskerVaradhan,
    /// `E_P[T] - E_Q[e^(T-1)]`, the looser but unbiased-gradient form.
    #[serde(alias = "nwj")]
    FDivergence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MineConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub steps: usize,
    /// Decay of the moving average that replaces the batch denominator
    /// `E_Q[e^T]` in the DV gradient.
    pub ema_decay: f64,
    pub objective: Objective,
    pub hidden: Vec<usize>,
    pub seed: u64,
    /// Evaluate the bound every this many steps.
    pub eval_every: usize,
    /// Rows held out from training and used only to evaluate the bound.
    /// Zero evaluates on the training rows.
    pub eval_fraction: f64,
    /// Minimum number of marginal pairs per evaluation; the evaluation rows
    /// are reshuffled as many times as needed to reach it.
    pub eval_pairs: usize,
    /// Number of trailing evaluations averaged into the reported value.
    pub smoothing: usize,
}

impl Default for MineConfig {
    fn default() -> Self {
        Self {
            batch_size: 256,
            learning_rate: 5e-4,
            steps: 3000,
            ema_decay: 0.99,
            objective: Objective::DonskerVaradhan,
            hidden: vec![256, 256],
            seed: 0,
            eval_every: 100,
            eval_fraction: 0.2,
            eval_pairs: 4096,
            smoothing: 5,
        }
    }
}

impl MineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(Error::invalid("batch_size must be at least 2"));
        }
        if !(self.ema_decay > 0.0 && self.ema_decay < 1.0) {
            return Err(Error::invalid("ema_decay must lie in (0, 1)"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if !(0.0..0.9).contains(&self.eval_fraction) {
            return Err(Error::invalid("eval_fraction must lie in [0, 0.9)"));
        }
        if self.steps == 0 || self.eval_every == 0 || self.smoothing == 0 || self.eval_pairs == 0 {
            return Err(Error::invalid("steps, eval_every, smoothing and eval_pairs must be positive"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::invalid("hidden layer widths must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: usize,
    pub estimate: f64,
    pub smoothed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MineEstimate {
    /// Lower bound in nats: the last smoothed evaluation.
    pub mi_nats: f64,
    pub curve: Vec<CurvePoint>,
    pub config: MineConfig,
    /// Hex FNV-1a of the trained parameters.
    pub network_checksum: String,
}

/// `log(mean(exp(v)))` with max subtraction.
fn log_mean_exp(v: &Array1<f64>) -> f64 {
    let m = v.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if !m.is_finite() {
        return m;
    }
    m + (v.mapv(|t| (t - m).exp()).sum() / v.len() as f64).ln()
}

/// Bound value from statistics evaluated on joint and marginal samples.
pub fn objective_value(objective: Objective, joint: &Array1<f64>, marginal: &Array1<f64>) -> f64 {
    let mean_joint = joint.mean().unwrap_or(0.0);
    match objective {
        Objective::DonskerVaradhan => mean_joint - log_mean_exp(marginal),
        Objective::FDivergence => {
            mean_joint - marginal.mapv(|t| (t - 1.0).exp()).mean().unwrap_or(0.0)
        }
    }
}

/// How the marginal term enters the gradient.
#[derive(Clone, Copy)]
enum Denominator {
    /// Exact gradient of the batch value.
    Batch,
    /// DV gradient with `E_Q[e^T]` replaced by a moving average (log scale).
    Smoothed(f64),
}

struct Pass {
    value: f64,
    log_mean_exp: f64,
    grads: Gradients,
}

/// Evaluates the bound on a batch of rows with marginal pairing `perm`
/// (marginal row `i` is `(x[i], y[perm[i]])`) and backpropagates.
fn pass(
    net: &StatisticsNetwork,
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    perm: &[usize],
    objective: Objective,
    denominator: Denominator,
) -> Result<Pass> {
    let n = x.nrows();
    if n == 0 || perm.len() != n || y.nrows() != n {
        return Err(Error::Empty("joint and marginal batches must be non-empty and aligned"));
    }
    let (xw, yw) = net.project_inputs(x, y);
    let joint_z = &xw + &yw;
    let marg_z = &xw + &yw.select(Axis(0), perm);
    let joint = net.forward_projected(joint_z)?;
    let marg = net.forward_projected(marg_z)?;

    let value = objective_value(objective, &joint.out, &marg.out);
    let lme = log_mean_exp(&marg.out);
    if !value.is_finite() {
        return Err(Error::NonFinite {
            step: 0,
            detail: "objective overflowed at the output layer".into(),
        });
    }
    let inv_n = 1.0 / n as f64;
    let d_joint = Array1::from_elem(n, inv_n);
    let d_marg = match (objective, denominator) {
        (Objective::DonskerVaradhan, Denominator::Batch) => {
            marg.out.mapv(|t| -(t - lme).exp() * inv_n)
        }
        (Objective::DonskerVaradhan, Denominator::Smoothed(log_ema)) => {
            marg.out.mapv(|t| -(t - log_ema).exp() * inv_n)
        }
        (Objective::FDivergence, _) => marg.out.mapv(|t| -(t - 1.0).exp() * inv_n),
    };

    let mut grads = Gradients::zeros_like(net);
    let dz_joint = net.backward_projected(&joint, d_joint.view(), &mut grads);
    let dz_marg = net.backward_projected(&marg, d_marg.view(), &mut grads);
    // y rows enter the marginal batch permuted; route their gradient back
    let mut dz_marg_y = Array2::zeros(dz_marg.raw_dim());
    for (i, &p) in perm.iter().enumerate() {
        let mut row = dz_marg_y.row_mut(p);
        row += &dz_marg.row(i);
    }
    let dz_x = &dz_joint + &dz_marg;
    let dz_y = dz_joint + dz_marg_y;
    net.accumulate_first_layer(x, y, &dz_x, &dz_y, &mut grads);
    Ok(Pass {
        value,
        log_mean_exp: lme,
        grads,
    })
}

/// Bound value on `(joint_x, joint_y)` against `(joint_x, marginal_y)`
/// together with its exact gradient w.r.t. every network parameter.
///
/// `marginal_y` must be a row permutation of `joint_y` given by `perm`, so
/// marginal pair `i` is `(x[i], y[perm[i]])`.
pub fn dv_objective(
    net: &StatisticsNetwork,
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    perm: &[usize],
    objective: Objective,
) -> Result<(f64, Gradients)> {
    let p = pass(net, x, y, perm, objective, Denominator::Batch)?;
    Ok((p.value, p.grads))
}

/// Per-column standardization with statistics from `fit_rows`.
fn standardize(m: &Array2<f64>, fit_rows: &[usize]) -> Array2<f64> {
    let fit = m.select(Axis(0), fit_rows);
    let mean = fit.mean_axis(Axis(0)).expect("non-empty");
    let std = fit.std_axis(Axis(0), 0.0);
    let mut out = m - &mean;
    for (mut col, &s) in out.axis_iter_mut(Axis(1)).zip(std.iter()) {
        if s > 1e-12 {
            col /= s;
        } else {
            col.fill(0.0);
        }
    }
    out
}

fn evaluate(
    net: &StatisticsNetwork,
    x: &Array2<f64>,
    y: &Array2<f64>,
    eval_rows: &[usize],
    perms: &[Vec<usize>],
    objective: Objective,
) -> Result<f64> {
    let xs = x.select(Axis(0), eval_rows);
    let ys = y.select(Axis(0), eval_rows);
    let (xw, yw) = net.project_inputs(xs.view(), ys.view());
    let joint = net.forward_projected(&xw + &yw)?.out;
    let mut marginal = Vec::with_capacity(perms.len() * eval_rows.len());
    for perm in perms {
        let z = &xw + &yw.select(Axis(0), perm);
        marginal.extend(net.forward_projected(z)?.out);
    }
    Ok(objective_value(objective, &joint, &Array1::from(marginal)))
}

/// Trains a statistics network on row-aligned samples `x`, `y` and returns
/// the smoothed lower bound on `I(X; Y)` in nats.
pub fn estimate_mi(x: &Array2<f64>, y: &Array2<f64>, config: &MineConfig) -> Result<MineEstimate> {
    config.validate()?;
    let n = x.nrows();
    if y.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.nrows(),
        });
    }
    let mut rng = seed::rng(seed::derive_seed(config.seed, "mine.split"));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_eval = (n as f64 * config.eval_fraction).round() as usize;
    let (eval_rows, train_rows) = if n_eval == 0 {
        (order.clone(), order)
    } else {
        let (e, t) = order.split_at(n_eval);
        (e.to_vec(), t.to_vec())
    };
    if train_rows.len() < 2 * config.batch_size {
        return Err(Error::invalid(format!(
            "{} training rows; need at least twice the batch size {}",
            train_rows.len(),
            config.batch_size
        )));
    }
    let xs = standardize(x, &train_rows);
    let ys = standardize(y, &train_rows);

    let mut net = StatisticsNetwork::new(
        x.ncols(),
        y.ncols(),
        &config.hidden,
        seed::derive_seed(config.seed, "mine.init"),
    );
    let mut adam = Adam::new(&net, config.learning_rate);
    let mut eval_rng = seed::rng(seed::derive_seed(config.seed, "mine.eval"));
    let mut step_rng = seed::rng(seed::derive_seed(config.seed, "mine.batches"));
    let n_perms = config.eval_pairs.div_ceil(eval_rows.len()).max(1);
    let eval_perms: Vec<Vec<usize>> = (0..n_perms)
        .map(|_| {
            let mut p: Vec<usize> = (0..eval_rows.len()).collect();
            p.shuffle(&mut eval_rng);
            p
        })
        .collect();

    let mut log_ema: Option<f64> = None;
    let mut curve: Vec<CurvePoint> = Vec::new();
    let b = config.batch_size;
    for step in 1..=config.steps {
        let rows: Vec<usize> = sample_indices(&mut step_rng, train_rows.len(), b)
            .into_iter()
            .map(|i| train_rows[i])
            .collect();
        let mut perm: Vec<usize> = (0..b).collect();
        perm.shuffle(&mut step_rng);
        let bx = xs.select(Axis(0), &rows);
        let by = ys.select(Axis(0), &rows);

        let denominator = match (config.objective, log_ema) {
            (Objective::DonskerVaradhan, Some(l)) => Denominator::Smoothed(l),
            _ => Denominator::Batch,
        };
        let p = pass(&net, bx.view(), by.view(), &perm, config.objective, denominator)
            .map_err(|e| at_step(e, step))?;
        // fold the batch into the moving average, then use it next step
        log_ema = Some(match log_ema {
            None => p.log_mean_exp,
            Some(l) => log_add_exp(
                config.ema_decay.ln() + l,
                (1.0 - config.ema_decay).ln() + p.log_mean_exp,
            ),
        });
        adam.ascend(&mut net, &p.grads);
        if net.params().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                step,
                detail: "parameter update diverged".into(),
            });
        }

        if step % config.eval_every == 0 || step == config.steps {
            let estimate = evaluate(&net, &xs, &ys, &eval_rows, &eval_perms, config.objective)
                .map_err(|e| at_step(e, step))?;
            if !estimate.is_finite() {
                return Err(Error::NonFinite {
                    step,
                    detail: "evaluation bound is not finite".into(),
                });
            }
            let tail = curve.len().saturating_sub(config.smoothing - 1);
            let window: Vec<f64> = curve[tail..]
                .iter()
                .map(|c| c.estimate)
                .chain(std::iter::once(estimate))
                .collect();
            let smoothed = window.iter().sum::<f64>() / window.len() as f64;
            curve.push(CurvePoint {
                step,
                estimate,
                smoothed,
            });
        }
    }
    Ok(MineEstimate {
        mi_nats: curve.last().expect("at least one evaluation").smoothed,
        curve,
        config: config.clone(),
        network_checksum: format!("{:016x}", net.checksum()),
    })
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn at_step(e: Error, step: usize) -> Error {
    match e {
        Error::NonFinite { detail, .. } => Error::NonFinite { step, detail },
        other => other,
    }
}

/// `I(X; X)`, which equals the entropy `H(X)` for discrete `X`.
pub fn estimate_entropy(x: &Array2<f64>, config: &MineConfig) -> Result<MineEstimate> {
    estimate_mi(x, x, config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiReportEntry {
    pub name: String,
    pub mi_nats: f64,
    pub percent_of_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiReport {
    pub reference_name: String,
    pub reference_nats: f64,
    pub entries: Vec<MiReportEntry>,
}

/// Expresses each estimate as a percentage of `reference`, the ceiling
/// (usually the label entropy) that every `I(component; label)` is bounded by.
pub fn mi_report(
    estimates: &[(String, f64)],
    reference_name: &str,
    reference_nats: f64,
) -> Result<MiReport> {
    if !(reference_nats > 0.0) {
        return Err(Error::invalid("reference estimate must be positive"));
    }
    Ok(MiReport {
        reference_name: reference_name.to_string(),
        reference_nats,
        entries: estimates
            .iter()
            .map(|(name, mi)| MiReportEntry {
                name: name.clone(),
                mi_nats: *mi,
                percent_of_max: 100.0 * mi / reference_nats,
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn toy_batch(n: usize, dx: usize, dy: usize, seed: u64) -> (Array2<f64>, Array2<f64>, Vec<usize>) {
        let mut rng = seed::rng(seed);
        let x = Array2::from_shape_simple_fn((n, dx), || rng.sample::<f64, _>(StandardNormal));
        let y = Array2::from_shape_simple_fn((n, dy), || rng.sample::<f64, _>(StandardNormal));
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        (x, y, perm)
    }

    fn zero_output(net: &mut StatisticsNetwork, constant: f64) {
        let last = net.layers.last_mut().unwrap();
        last.weight.fill(0.0);
        last.bias.fill(constant);
    }

    #[test]
    fn constant_statistic_gives_zero() {
        let (x, y, perm) = toy_batch(16, 3, 2, 1);
        for c in [0.0, 4.5, -30.0] {
            let mut net = StatisticsNetwork::new(3, 2, &[4], 2);
            zero_output(&mut net, c);
            for obj in [Objective::DonskerVaradhan] {
                let (v, _) = dv_objective(&net, x.view(), y.view(), &perm, obj).unwrap();
                assert!(v.abs() < 1e-12, "c={c}: {v}");
            }
        }
    }

    #[test]
    fn shift_invariance() {
        let (x, y, perm) = toy_batch(32, 3, 3, 3);
        let mut net = StatisticsNetwork::new(3, 3, &[8, 8], 4);
        let (v0, _) = dv_objective(&net, x.view(), y.view(), &perm, Objective::DonskerVaradhan).unwrap();
        net.layers.last_mut().unwrap().bias += 17.25;
        let (v1, _) = dv_objective(&net, x.view(), y.view(), &perm, Objective::DonskerVaradhan).unwrap();
        assert!((v0 - v1).abs() < 1e-9);
    }

    /// Central differences, eps = 1e-5.
    fn check_gradient(objective: Objective) {
        let (x, y, perm) = toy_batch(12, 3, 2, 5);
        let net = StatisticsNetwork::new(3, 2, &[4, 4], 6);
        let (_, grads) = dv_objective(&net, x.view(), y.view(), &perm, objective).unwrap();
        let analytic: Vec<f64> = grads.iter().copied().collect();
        let eps = 1e-5;
        let mut worst = 0.0f64;
        for i in 0..net.num_params() {
            let eval = |delta: f64| {
                let mut n = net.clone();
                *n.params_mut().nth(i).unwrap() += delta;
                dv_objective(&n, x.view(), y.view(), &perm, objective).unwrap().0
            };
            let numeric = (eval(eps) - eval(-eps)) / (2.0 * eps);
            let rel = (numeric - analytic[i]).abs() / numeric.abs().max(analytic[i].abs()).max(1e-6);
            worst = worst.max(rel);
        }
        assert!(worst < 1e-4, "worst relative error {worst}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        check_gradient(Objective::DonskerVaradhan);
        check_gradient(Objective::FDivergence);
    }

    #[test]
    fn report_percentages() {
        let r = mi_report(
            &[("spatial".into(), 2.13), ("temporal".into(), 2.31), ("label".into(), 2.49)],
            "label",
            2.49,
        )
        .unwrap();
        let p: Vec<f64> = r.entries.iter().map(|e| e.percent_of_max).collect();
        assert!((p[0] - 85.542).abs() < 1e-3);
        assert!((p[1] - 92.771).abs() < 1e-3);
        assert!((p[2] - 100.0).abs() < 1e-12);
        assert!(mi_report(&[], "x", 0.0).is_err());
    }

    #[test]
    fn constant_variable_has_zero_entropy() {
        let x = Array2::from_elem((200, 3), 7.0);
        let cfg = MineConfig {
            batch_size: 32,
            steps: 50,
            eval_every: 10,
            hidden: vec![16],
            ..Default::default()
        };
        let est = estimate_entropy(&x, &cfg).unwrap();
        assert!(est.mi_nats.abs() < 1e-9, "{}", est.mi_nats);
    }

    #[test]
    fn config_validation() {
        let bad = [
            MineConfig { batch_size: 1, ..Default::default() },
            MineConfig { ema_decay: 1.0, ..Default::default() },
            MineConfig { ema_decay: 0.0, ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err());
        }
        let x = array![[1.0], [2.0], [3.0]];
        assert!(estimate_mi(&x, &x, &MineConfig::default()).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let (x, y, _) = toy_batch(400, 2, 2, 9);
        let cfg = MineConfig {
            batch_size: 64,
            steps: 60,
            eval_every: 20,
            hidden: vec![16, 16],
            seed: 3,
            ..Default::default()
        };
        let a = estimate_mi(&x, &y, &cfg).unwrap();
        let b = estimate_mi(&x, &y, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.mi_nats, a.curve.last().unwrap().smoothed);
    }
}
