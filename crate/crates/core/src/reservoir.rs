//! Delay-loop reservoir.
//!
//! Each input vector is spread over `N` virtual nodes by a fixed random
//! `±1/sqrt(d)` mask, then the ring of nodes is updated synchronously:
//!
//! ```text
//! s_i(t) = (1 - a) s_i(t-1) + a tanh(g u_i(t) + f s_{i-1}(t-1))
//! ```
//!
//! with leak `a`, input gain `g` and feedback gain `f`; node `-1` is node
//! `N-1`. Nothing in here is trained.

use std::borrow::Cow;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decompose::TemporalComponent;
use crate::error::{Error, Result};
use crate::events::FrameSequence;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    Final,
    Mean,
    #[default]
    MeanPlusFinal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReservoirConfig {
    pub loop_dim: usize,
    pub leaky_factor: f64,
    pub input_gain: f64,
    pub feedback_gain: f64,
    pub mask_seed: u64,
    pub pooling: Pooling,
}

impl Default for ReservoirConfig {
    fn default() -> Self {
        Self {
            loop_dim: 512,
            leaky_factor: 0.1,
            input_gain: 1.0,
            feedback_gain: 0.9,
            mask_seed: 0,
            pooling: Pooling::MeanPlusFinal,
        }
    }
}

impl ReservoirConfig {
    pub fn validate(&self) -> Result<()> {
        if self.loop_dim == 0 {
            return Err(Error::invalid("loop_dim must be at least 1"));
        }
        if !(self.leaky_factor > 0.0 && self.leaky_factor <= 1.0) {
            return Err(Error::invalid("leaky_factor must lie in (0, 1]"));
        }
        if !(0.0..1.0).contains(&self.feedback_gain) {
            return Err(Error::invalid("feedback_gain must lie in [0, 1)"));
        }
        if !self.input_gain.is_finite() {
            return Err(Error::invalid("input_gain must be finite"));
        }
        Ok(())
    }

    /// Per-step contraction of the state difference between two runs with
    /// identical inputs: `(1 - a) + a f`.
    pub fn contraction(&self) -> f64 {
        1.0 - self.leaky_factor * (1.0 - self.feedback_gain)
    }

    pub fn feature_dim(&self) -> usize {
        match self.pooling {
            Pooling::Final | Pooling::Mean => self.loop_dim,
            Pooling::MeanPlusFinal => 2 * self.loop_dim,
        }
    }
}

/// Fixed input weights, `loop_dim x input_dim`. Stored by input column so a
/// sparse input only touches the columns of its non-zero entries.
#[derive(Debug, Clone, PartialEq)]
pub struct InputMask {
    input_dim: usize,
    loop_dim: usize,
    columns: Vec<f64>,
}

impl InputMask {
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn loop_dim(&self) -> usize {
        self.loop_dim
    }

    /// Weight from input `j` to node `i`.
    pub fn get(&self, node: usize, input: usize) -> f64 {
        self.columns[input * self.loop_dim + node]
    }

    fn column(&self, input: usize) -> &[f64] {
        &self.columns[input * self.loop_dim..(input + 1) * self.loop_dim]
    }

    /// `mask * x`, skipping zero entries.
    pub fn project(&self, x: &[f32], out: &mut [f64]) {
        out.fill(0.0);
        for (j, &v) in x.iter().enumerate() {
            if v != 0.0 {
                let v = f64::from(v);
                for (o, &w) in out.iter_mut().zip(self.column(j)) {
                    *o += w * v;
                }
            }
        }
    }
}

/// i.i.d. `±1/sqrt(input_dim)` weights from `seed`.
pub fn make_mask(input_dim: usize, loop_dim: usize, seed: u64) -> Result<InputMask> {
    if input_dim == 0 || loop_dim == 0 {
        return Err(Error::invalid("mask dimensions must be positive"));
    }
    let mut rng = seed::rng(seed);
    let scale = 1.0 / (input_dim as f64).sqrt();
    let columns = (0..input_dim * loop_dim)
        .map(|_| if rng.random::<bool>() { scale } else { -scale })
        .collect();
    Ok(InputMask {
        input_dim,
        loop_dim,
        columns,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirState {
    /// One `loop_dim` vector per input step.
    pub states: Vec<Vec<f64>>,
    pub pooled: Vec<f64>,
}

/// Runs the loop from a zero state over `inputs`.
pub fn run_loop<'a, I>(inputs: I, mask: &InputMask, cfg: &ReservoirConfig) -> Result<ReservoirState>
where
    I: IntoIterator<Item = Cow<'a, [f32]>>,
{
    run_loop_from(inputs, mask, cfg, vec![0.0; mask.loop_dim])
}

/// As [`run_loop`] with an explicit initial state.
pub fn run_loop_from<'a, I>(
    inputs: I,
    mask: &InputMask,
    cfg: &ReservoirConfig,
    initial: Vec<f64>,
) -> Result<ReservoirState>
where
    I: IntoIterator<Item = Cow<'a, [f32]>>,
{
    cfg.validate()?;
    let n = mask.loop_dim;
    if cfg.loop_dim != n || initial.len() != n {
        return Err(Error::DimensionMismatch {
            expected: cfg.loop_dim,
            got: n,
        });
    }
    let (a, g, f) = (cfg.leaky_factor, cfg.input_gain, cfg.feedback_gain);
    let mut s = initial;
    let mut next = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut states = Vec::new();
    for x in inputs {
        if x.len() != mask.input_dim {
            return Err(Error::DimensionMismatch {
                expected: mask.input_dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("reservoir input contains a non-finite value"));
        }
        mask.project(&x, &mut u);
        for i in 0..n {
            let prev = s[if i == 0 { n - 1 } else { i - 1 }];
            next[i] = (1.0 - a) * s[i] + a * (g * u[i] + f * prev).tanh();
        }
        std::mem::swap(&mut s, &mut next);
        states.push(s.clone());
    }
    let pooled = pool(&states, cfg.pooling, n);
    Ok(ReservoirState { states, pooled })
}

fn pool(states: &[Vec<f64>], pooling: Pooling, n: usize) -> Vec<f64> {
    let zeros = vec![0.0; n];
    let last = states.last().unwrap_or(&zeros);
    let mean = || {
        let mut m = vec![0.0; n];
        for s in states {
            for (a, b) in m.iter_mut().zip(s) {
                *a += b;
            }
        }
        let t = states.len().max(1) as f64;
        m.iter_mut().for_each(|v| *v /= t);
        m
    };
    match pooling {
        Pooling::Final => last.clone(),
        Pooling::Mean => mean(),
        Pooling::MeanPlusFinal => {
            let mut m = mean();
            m.extend_from_slice(last);
            m
        }
    }
}

/// Anything the reservoir can consume as a sequence of equal-length vectors.
pub trait StepSequence {
    fn num_steps(&self) -> usize;
    fn step_dim(&self) -> usize;
    fn step(&self, t: usize) -> Cow<'_, [f32]>;
}

impl StepSequence for FrameSequence {
    fn num_steps(&self) -> usize {
        self.num_frames()
    }

    fn step_dim(&self) -> usize {
        self.frame_len()
    }

    fn step(&self, t: usize) -> Cow<'_, [f32]> {
        Cow::Borrowed(self.frame(t))
    }
}

impl StepSequence for TemporalComponent {
    fn num_steps(&self) -> usize {
        self.n_slices
    }

    fn step_dim(&self) -> usize {
        2 * self.k
    }

    fn step(&self, t: usize) -> Cow<'_, [f32]> {
        Cow::Owned(self.slice_vector(t))
    }
}

/// Per-dimension division by the largest absolute training value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputScaler {
    pub max: Vec<f32>,
}

impl InputScaler {
    pub fn fit<S: StepSequence>(train: &[S]) -> Result<Self> {
        let dim = train
            .first()
            .map(|s| s.step_dim())
            .ok_or(Error::Empty("no training sequences to fit the input scaler"))?;
        let mut max = vec![0f32; dim];
        for s in train {
            if s.step_dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: s.step_dim(),
                });
            }
            for t in 0..s.num_steps() {
                for (m, v) in max.iter_mut().zip(s.step(t).iter()) {
                    *m = m.max(v.abs());
                }
            }
        }
        Ok(Self { max })
    }

    pub fn identity(dim: usize) -> Self {
        Self { max: vec![1.0; dim] }
    }

    /// Dimensions never seen non-zero in training map to zero.
    pub fn apply(&self, x: &[f32]) -> Vec<f32> {
        x.iter()
            .zip(&self.max)
            .map(|(&v, &m)| if m > 0.0 { v / m } else { 0.0 })
            .collect()
    }
}

/// A mask bound to its configuration.
#[derive(Debug, Clone)]
pub struct DelayLoopReservoir {
    pub config: ReservoirConfig,
    pub mask: InputMask,
}

impl DelayLoopReservoir {
    pub fn new(input_dim: usize, config: ReservoirConfig) -> Result<Self> {
        config.validate()?;
        let mask = make_mask(input_dim, config.loop_dim, config.mask_seed)?;
        Ok(Self { config, mask })
    }

    pub fn run<S: StepSequence + ?Sized>(&self, seq: &S, scaler: &InputScaler) -> Result<ReservoirState> {
        if seq.num_steps() == 0 {
            return Err(Error::Empty("cannot featurize an empty sequence"));
        }
        if seq.step_dim() != scaler.max.len() {
            return Err(Error::DimensionMismatch {
                expected: scaler.max.len(),
                got: seq.step_dim(),
            });
        }
        run_loop(
            (0..seq.num_steps()).map(|t| Cow::Owned(scaler.apply(&seq.step(t)))),
            &self.mask,
            &self.config,
        )
    }

    /// Pooled feature of one sequence, inputs fed frame by frame.
    pub fn featurize<S: StepSequence + ?Sized>(&self, seq: &S, scaler: &InputScaler) -> Result<Vec<f64>> {
        Ok(self.run(seq, scaler)?.pooled)
    }

    /// Row-per-sequence feature matrix, computed in parallel.
    pub fn featurize_all<S: StepSequence + Sync>(
        &self,
        seqs: &[S],
        scaler: &InputScaler,
    ) -> Result<ndarray::Array2<f64>> {
        let rows: Vec<Vec<f64>> = seqs
            .par_iter()
            .map(|s| self.featurize(s, scaler))
            .collect::<Result<_>>()?;
        let cols = self.config.feature_dim();
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        Ok(ndarray::Array2::from_shape_vec((seqs.len(), cols), flat).expect("uniform rows"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::Geometry;

    fn cfg(n: usize, a: f64, f: f64) -> ReservoirConfig {
        ReservoirConfig {
            loop_dim: n,
            leaky_factor: a,
            feedback_gain: f,
            ..Default::default()
        }
    }

    fn random_inputs(seed: u64, steps: usize, dim: usize) -> Vec<Vec<f32>> {
        let mut rng = seed::rng(seed);
        (0..steps)
            .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect()
    }

    fn feed(v: &[Vec<f32>]) -> impl Iterator<Item = Cow<'_, [f32]>> {
        v.iter().map(|x| Cow::Borrowed(x.as_slice()))
    }

    #[test]
    fn mask_is_seeded_and_scaled() {
        let a = make_mask(1, 4, 3).unwrap();
        assert_eq!(a, make_mask(1, 4, 3).unwrap());
        assert!((0..4).all(|i| a.get(i, 0).abs() == 1.0));
        assert_ne!(make_mask(16, 8, 3).unwrap(), make_mask(16, 8, 4).unwrap());
        assert!(make_mask(0, 4, 0).is_err());
    }

    #[test]
    fn node_weight_vectors_have_unit_norm() {
        for seed in 0..3 {
            let m = make_mask(128, 64, seed).unwrap();
            for i in 0..64 {
                let norm: f64 = (0..128).map(|j| m.get(i, j).powi(2)).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() < 0.2);
            }
        }
    }

    #[test]
    fn zero_input_stays_at_rest() {
        let c = cfg(32, 0.4, 0.7);
        let mask = make_mask(5, 32, 1).unwrap();
        let zeros = vec![vec![0f32; 5]; 50];
        let st = run_loop(feed(&zeros), &mask, &c).unwrap();
        assert!(st.states.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn memoryless_single_step() {
        let c = ReservoirConfig {
            input_gain: 0.7,
            ..cfg(16, 1.0, 0.0)
        };
        let mask = make_mask(6, 16, 2).unwrap();
        let x = random_inputs(3, 1, 6);
        let st = run_loop(feed(&x), &mask, &c).unwrap();
        for i in 0..16 {
            let u: f64 = (0..6).map(|j| mask.get(i, j) * f64::from(x[0][j])).sum();
            assert!((st.states[0][i] - (0.7 * u).tanh()).abs() < 1e-12);
        }
    }

    #[test]
    fn states_are_bounded() {
        let mask = make_mask(4, 20, 5).unwrap();
        let big: Vec<Vec<f32>> = random_inputs(6, 100, 4)
            .into_iter()
            .map(|v| v.into_iter().map(|x| x * 1e4).collect())
            .collect();
        let st = run_loop(feed(&big), &mask, &cfg(20, 0.5, 0.99)).unwrap();
        assert!(st.states.iter().flatten().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn perturbation_decays_within_contraction_bound() {
        for (a, f) in [(0.3, 0.9), (0.8, 0.5), (1.0, 0.6), (0.5, 0.0)] {
            let c = cfg(24, a, f);
            let mask = make_mask(3, 24, 7).unwrap();
            let mut x1 = random_inputs(8, 60, 3);
            let x2 = x1.clone();
            x1[0] = vec![1.0, -1.0, 0.5];
            let s1 = run_loop(feed(&x1), &mask, &c).unwrap();
            let s2 = run_loop(feed(&x2), &mask, &c).unwrap();
            let d0 = linf(&s1.states[0], &s2.states[0]);
            for t in 1..60 {
                let d = linf(&s1.states[t], &s2.states[t]);
                assert!(d <= d0 * c.contraction().powi(t as i32) + 1e-15, "a={a} f={f} t={t}");
            }
        }
    }

    fn linf(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn dimension_errors() {
        let mask = make_mask(3, 8, 0).unwrap();
        let bad = vec![vec![0f32; 4]];
        assert!(run_loop(feed(&bad), &mask, &cfg(8, 0.5, 0.5)).is_err());
        assert!(run_loop(feed(&[vec![0f32; 3]]), &mask, &cfg(9, 0.5, 0.5)).is_err());
        assert!(cfg(8, 0.0, 0.5).validate().is_err());
        assert!(cfg(8, 0.5, 1.0).validate().is_err());
    }

    #[test]
    fn one_frame_feature_is_tanh_of_projection() {
        let g = Geometry::new(2, 2);
        let seq = FrameSequence::from_data(vec![1.0, 0.0, 3.0, 2.0, 0.0, 1.0, 0.0, 4.0], 1, g, 10)
            .unwrap();
        let c = ReservoirConfig {
            pooling: Pooling::Final,
            ..cfg(10, 1.0, 0.0)
        };
        let r = DelayLoopReservoir::new(8, c).unwrap();
        let scaler = InputScaler::fit(std::slice::from_ref(&seq)).unwrap();
        let f = r.featurize(&seq, &scaler).unwrap();
        let x = scaler.apply(seq.frame(0));
        for i in 0..10 {
            let u: f64 = (0..8).map(|j| r.mask.get(i, j) * f64::from(x[j])).sum();
            assert!((f[i] - u.tanh()).abs() < 1e-12);
        }
        assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn frame_order_matters() {
        let g = Geometry::new(4, 4);
        let mut rng = seed::rng(4);
        let data: Vec<f32> = (0..10 * 32).map(|_| rng.random_range(0..3) as f32).collect();
        let seq = FrameSequence::from_data(data.clone(), 10, g, 10).unwrap();
        let mut permuted = Vec::new();
        for k in [3, 1, 4, 0, 9, 2, 6, 5, 8, 7] {
            permuted.extend_from_slice(&data[k * 32..(k + 1) * 32]);
        }
        let seq2 = FrameSequence::from_data(permuted, 10, g, 10).unwrap();
        let r = DelayLoopReservoir::new(32, cfg(50, 0.5, 0.8)).unwrap();
        let scaler = InputScaler::fit(std::slice::from_ref(&seq)).unwrap();
        let a = r.featurize(&seq, &scaler).unwrap();
        let b = r.featurize(&seq2, &scaler).unwrap();
        assert!(linf(&a, &b) > 1e-6);
    }

    #[test]
    fn dlr_input_shape_for_downsampled_video() {
        let g = Geometry::new(8, 8);
        let seq = FrameSequence::zeros(200, g, 30_000).unwrap();
        assert_eq!(seq.step_dim(), 128);
        assert_eq!(seq.num_steps(), 200);
        let r = DelayLoopReservoir::new(128, cfg(16, 0.5, 0.5)).unwrap();
        let st = r.run(&seq, &InputScaler::identity(128)).unwrap();
        assert_eq!(st.states.len(), 200);
        assert!(r.featurize(&FrameSequence::zeros(1, g, 1).unwrap(), &InputScaler::identity(3)).is_err());
    }

    #[test]
    fn loop_is_not_modified_by_running() {
        let r = DelayLoopReservoir::new(6, cfg(12, 0.5, 0.5)).unwrap();
        let before = r.mask.clone();
        let x = random_inputs(1, 30, 6);
        run_loop(feed(&x), &r.mask, &r.config).unwrap();
        run_loop(feed(&x), &r.mask, &r.config).unwrap();
        assert_eq!(before, r.mask);
    }
}
