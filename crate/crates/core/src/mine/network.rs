use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::{Distribution, Uniform};

use crate::error::{Error, Result};
use crate::seed;

pub const LEAKY_SLOPE: f64 = 0.01;

fn leaky(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        LEAKY_SLOPE * v
    }
}

fn leaky_grad(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `(fan_in, fan_out)`.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Feed-forward scalar function `T(x, y)` on concatenated inputs, with
/// leaky-ReLU hidden layers and a linear output unit.
#[derive(Debug, Clone, PartialEq)]
pub struct StatisticsNetwork {
    x_dim: usize,
    y_dim: usize,
    pub layers: Vec<Dense>,
}

/// Parameter-shaped container for gradients and optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    pub fn zeros_like(net: &StatisticsNetwork) -> Self {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| Dense {
                    weight: Array2::zeros(l.weight.raw_dim()),
                    bias: Array1::zeros(l.bias.raw_dim()),
                })
                .collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weight.iter().chain(l.bias.iter()))
    }
}

/// Per-batch forward state kept for backpropagation.
pub(crate) struct Trace {
    /// Pre-activations of every hidden layer, first layer included.
    pre: Vec<Array2<f64>>,
    /// Outputs of every hidden layer after the nonlinearity.
    post: Vec<Array2<f64>>,
    pub(crate) out: Array1<f64>,
}

impl StatisticsNetwork {
    /// Layer widths `x_dim + y_dim -> hidden... -> 1`, uniform
    /// `±1/sqrt(fan_in)` init.
    pub fn new(x_dim: usize, y_dim: usize, hidden: &[usize], seed: u64) -> Self {
        let mut rng = seed::rng(seed);
        let mut widths = vec![x_dim + y_dim];
        widths.extend_from_slice(hidden);
        widths.push(1);
        let layers = widths
            .windows(2)
            .map(|w| {
                let bound = 1.0 / (w[0].max(1) as f64).sqrt();
                let u = Uniform::new_inclusive(-bound, bound).expect("finite bound");
                Dense {
                    weight: Array2::from_shape_simple_fn((w[0], w[1]), || u.sample(&mut rng)),
                    bias: Array1::from_shape_simple_fn(w[1], || u.sample(&mut rng)),
                }
            })
            .collect();
        Self {
            x_dim,
            y_dim,
            layers,
        }
    }

    pub fn x_dim(&self) -> usize {
        self.x_dim
    }

    pub fn y_dim(&self) -> usize {
        self.y_dim
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weight.iter().chain(l.bias.iter()))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weight.iter_mut().chain(l.bias.iter_mut()))
    }

    /// FNV-1a over the little-endian parameter bytes.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for p in self.params() {
            for b in p.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }

    /// Splits the first layer's input projection into its x and y parts:
    /// returns `(x W_x, y W_y)`. Pairings of the same rows can then be formed
    /// by adding rows, which is how marginal batches reuse the joint work.
    pub(crate) fn project_inputs(
        &self,
        x: ArrayView2<f64>,
        y: ArrayView2<f64>,
    ) -> (Array2<f64>, Array2<f64>) {
        let w = &self.layers[0].weight;
        (
            x.dot(&w.slice(s![..self.x_dim, ..])),
            y.dot(&w.slice(s![self.x_dim.., ..])),
        )
    }

    /// Runs the network given the first layer's pre-activation minus bias.
    pub(crate) fn forward_projected(&self, mut z: Array2<f64>) -> Result<Trace> {
        let mut pre = Vec::with_capacity(self.layers.len() - 1);
        let mut post = Vec::with_capacity(self.layers.len() - 1);
        z += &self.layers[0].bias;
        for (li, layer) in self.layers.iter().enumerate() {
            if li > 0 {
                let h: &Array2<f64> = post.last().expect("previous layer");
                z = h.dot(&layer.weight) + &layer.bias;
            }
            if z.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    step: 0,
                    detail: format!("layer {li} produced a non-finite activation"),
                });
            }
            if li + 1 < self.layers.len() {
                post.push(z.mapv(leaky));
                pre.push(z.clone());
            }
        }
        let out = z.index_axis_move(Axis(1), 0);
        Ok(Trace { pre, post, out })
    }

    /// `T` on explicit `(x, y)` row pairs.
    pub fn forward(&self, x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<Array1<f64>> {
        let (xw, yw) = self.project_inputs(x, y);
        Ok(self.forward_projected(xw + yw)?.out)
    }

    /// Backpropagates `d value / d out` through everything but the first
    /// layer's weights; accumulates into `grads` and returns `d value / d z1`.
    pub(crate) fn backward_projected(
        &self,
        trace: &Trace,
        dout: ArrayView1<f64>,
        grads: &mut Gradients,
    ) -> Array2<f64> {
        let n_layers = self.layers.len();
        let mut delta = dout.to_owned().insert_axis(Axis(1));
        for li in (1..n_layers).rev() {
            let input = &trace.post[li - 1];
            grads.layers[li].weight += &input.t().dot(&delta);
            grads.layers[li].bias += &delta.sum_axis(Axis(0));
            let mut back = delta.dot(&self.layers[li].weight.t());
            Zip::from(&mut back)
                .and(&trace.pre[li - 1])
                .for_each(|b, &z| *b *= leaky_grad(z));
            delta = back;
        }
        grads.layers[0].bias += &delta.sum_axis(Axis(0));
        delta
    }

    /// Adds `x^T dz` and `y^T dz` into the first-layer weight gradient.
    pub(crate) fn accumulate_first_layer(
        &self,
        x: ArrayView2<f64>,
        y: ArrayView2<f64>,
        dz_x: &Array2<f64>,
        dz_y: &Array2<f64>,
        grads: &mut Gradients,
    ) {
        let g = &mut grads.layers[0].weight;
        let gx = x.t().dot(dz_x);
        let gy = y.t().dot(dz_y);
        g.slice_mut(s![..self.x_dim, ..]).zip_mut_with(&gx, |a, b| *a += b);
        g.slice_mut(s![self.x_dim.., ..]).zip_mut_with(&gy, |a, b| *a += b);
    }
}

/// Adam on an ascent direction.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m: Gradients,
    v: Gradients,
}

impl Adam {
    pub fn new(net: &StatisticsNetwork, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: Gradients::zeros_like(net),
            v: Gradients::zeros_like(net),
        }
    }

    /// Moves `net` along `grads` (maximization).
    pub fn ascend(&mut self, net: &mut StatisticsNetwork, grads: &Gradients) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let step = self.lr * c2.sqrt() / c1;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        for (((layer, g), m), v) in net
            .layers
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut self.m.layers)
            .zip(&mut self.v.layers)
        {
            Zip::from(&mut layer.weight)
                .and(&g.weight)
                .and(&mut m.weight)
                .and(&mut v.weight)
                .for_each(|p, &g, m, v| {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *p += step * *m / (v.sqrt() + eps * c2.sqrt());
                });
            Zip::from(&mut layer.bias)
                .and(&g.bias)
                .and(&mut m.bias)
                .and(&mut v.bias)
                .for_each(|p, &g, m, v| {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *p += step * *m / (v.sqrt() + eps * c2.sqrt());
                });
        }
    }
}

/// Draws `n` distinct indices from `0..len`.
pub(crate) fn sample_indices(rng: &mut impl Rng, len: usize, n: usize) -> Vec<usize> {
    rand::seq::index::sample(rng, len, n).into_vec()
}
