//! Dense autoencoder over terrain height vectors.
//!
//! Heights are divided by [`MAX_HEIGHT`] before entering the network. Hidden
//! layers use ReLU, the output layer is linear. Training minimizes the mean
//! squared reconstruction error with Adam; the novelty signal exposed to the
//! search is the mean absolute error measured back in height units.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::terrain::{Terrain, MAX_HEIGHT};

pub const LAYER_SIZES: [usize; 5] = [200, 64, 32, 64, 200];

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPSILON: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainParams {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 32,
            learning_rate: 1e-3,
        }
    }
}

/// Per-layer gradients (or Adam moments), same shapes as the network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl LayerParams {
    fn zeros_like(weights: &[Array2<f64>], biases: &[Array1<f64>]) -> Self {
        Self {
            weights: weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            biases: biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub step: u64,
    pub first: LayerParams,
    pub second: LayerParams,
}

/// Multi-layer perceptron; `weights[l]` has shape `(sizes[l + 1], sizes[l])`.
///
/// The checkpoint format is the serde JSON encoding of this struct:
/// `sizes`, `weights` and `biases` per layer (ndarray's `{v, dim, data}`
/// layout, row-major), and the Adam `step` counter with first and second
/// moment accumulators of identical shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
    adam: AdamState,
}

impl Mlp {
    /// The 200-64-32-64-200 terrain autoencoder.
    pub fn new<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::with_sizes(&LAYER_SIZES, rng)
    }

    /// He-uniform weights, zero biases, zeroed optimizer state.
    pub fn with_sizes<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        let weights: Vec<Array2<f64>> = sizes
            .windows(2)
            .map(|w| {
                let limit = (6.0 / w[0] as f64).sqrt();
                Array2::from_shape_simple_fn((w[1], w[0]), || rng.random_range(-limit..limit))
            })
            .collect();
        let biases = sizes[1..].iter().map(|&n| Array1::zeros(n)).collect();
        Self::from_parts(weights, biases).expect("shapes built consistently")
    }

    pub fn from_parts(weights: Vec<Array2<f64>>, biases: Vec<Array1<f64>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(Error::Shape("need one bias vector per weight matrix".into()));
        }
        let mut sizes = vec![weights[0].ncols()];
        for (l, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if w.ncols() != *sizes.last().unwrap() || b.len() != w.nrows() {
                return Err(Error::Shape(format!("layer {l} does not chain")));
            }
            sizes.push(w.nrows());
        }
        let zeros = LayerParams::zeros_like(&weights, &biases);
        Ok(Self {
            sizes,
            adam: AdamState {
                step: 0,
                first: zeros.clone(),
                second: zeros,
            },
            weights,
            biases,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Array1<f64>] {
        &self.biases
    }

    pub fn adam(&self) -> &AdamState {
        &self.adam
    }

    pub fn weights_mut(&mut self) -> &mut [Array2<f64>] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [Array1<f64>] {
        &mut self.biases
    }

    /// Checks that layer shapes chain and match the recorded sizes.
    pub fn validate(&self) -> Result<()> {
        let rebuilt = Self::from_parts(self.weights.clone(), self.biases.clone())?;
        if rebuilt.sizes != self.sizes {
            return Err(Error::Shape("recorded sizes disagree with weights".into()));
        }
        let same = |a: &LayerParams| {
            a.weights.iter().zip(&self.weights).all(|(x, y)| x.dim() == y.dim())
                && a.biases.iter().zip(&self.biases).all(|(x, y)| x.dim() == y.dim())
                && a.weights.len() == self.weights.len()
                && a.biases.len() == self.biases.len()
        };
        if !same(&self.adam.first) || !same(&self.adam.second) {
            return Err(Error::Shape("optimizer state does not match layers".into()));
        }
        Ok(())
    }

    /// Forward pass on a batch of rows. Returns pre-activations and
    /// activations of every layer (activations[0] is the input).
    fn forward_all(&self, x: ArrayView2<f64>) -> (Vec<Array2<f64>>, Vec<Array2<f64>>) {
        let last = self.weights.len() - 1;
        let mut pre = Vec::with_capacity(self.weights.len());
        let mut act = vec![x.to_owned()];
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let z = act[l].dot(&w.t()) + b;
            let a = if l == last { z.clone() } else { z.mapv(|v| v.max(0.0)) };
            pre.push(z);
            act.push(a);
        }
        (pre, act)
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        self.forward_all(x).1.pop().unwrap()
    }

    /// Mean squared error over all entries of the batch and its gradient.
    pub fn loss_and_gradients(&self, x: ArrayView2<f64>) -> (f64, LayerParams) {
        let (pre, act) = self.forward_all(x);
        let out = act.last().unwrap();
        let diff = out - &x;
        let n = diff.len() as f64;
        let loss = diff.mapv(|d| d * d).sum() / n;

        let mut grads = LayerParams::zeros_like(&self.weights, &self.biases);
        let mut delta = diff * (2.0 / n);
        for l in (0..self.weights.len()).rev() {
            grads.weights[l] = delta.t().dot(&act[l]);
            grads.biases[l] = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut back = delta.dot(&self.weights[l]);
                back.zip_mut_with(&pre[l - 1], |g, &z| {
                    if z <= 0.0 {
                        *g = 0.0
                    }
                });
                delta = back;
            }
        }
        (loss, grads)
    }

    pub fn loss(&self, x: ArrayView2<f64>) -> f64 {
        let out = self.forward(x);
        let diff = out - x;
        diff.mapv(|d| d * d).sum() / diff.len() as f64
    }

    fn adam_step(&mut self, grads: &LayerParams, lr: f64) {
        self.adam.step += 1;
        let t = self.adam.step as i32;
        let c1 = 1.0 - BETA1.powi(t);
        let c2 = 1.0 - BETA2.powi(t);
        let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + EPSILON);
        };
        let AdamState { first, second, .. } = &mut self.adam;
        for l in 0..self.weights.len() {
            ndarray::Zip::from(&mut self.weights[l])
                .and(&grads.weights[l])
                .and(&mut first.weights[l])
                .and(&mut second.weights[l])
                .for_each(|p, &g, m, v| update(p, g, m, v));
            ndarray::Zip::from(&mut self.biases[l])
                .and(&grads.biases[l])
                .and(&mut first.biases[l])
                .and(&mut second.biases[l])
                .for_each(|p, &g, m, v| update(p, g, m, v));
        }
    }

    /// Runs Adam on shuffled mini-batches of normalized inputs, continuing
    /// from the current weights and optimizer state. Returns the mean
    /// training loss after the last epoch.
    pub fn train_rows<R: Rng + ?Sized>(
        &mut self,
        data: ArrayView2<f64>,
        params: &TrainParams,
        rng: &mut R,
    ) -> Result<f64> {
        if data.nrows() == 0 {
            return Err(Error::EmptyTrainingSet);
        }
        let batch = params.batch_size.max(1);
        let mut order: Vec<usize> = (0..data.nrows()).collect();
        for _ in 0..params.epochs {
            order.shuffle(rng);
            for chunk in order.chunks(batch) {
                let x = data.select(Axis(0), chunk);
                let (_, grads) = self.loss_and_gradients(x.view());
                self.adam_step(&grads, params.learning_rate);
            }
        }
        Ok(self.loss(data))
    }

    pub fn train<R: Rng + ?Sized>(
        &mut self,
        terrains: &[Terrain],
        params: &TrainParams,
        rng: &mut R,
    ) -> Result<f64> {
        let data = normalize(terrains);
        self.train_rows(data.view(), params, rng)
    }

    /// Mean training loss (normalized MSE) on a set of terrains.
    pub fn mse(&self, terrains: &[Terrain]) -> f64 {
        self.loss(normalize(terrains).view())
    }

    /// Reconstruction in height units.
    pub fn reconstruct(&self, heights: &[f64]) -> Vec<f64> {
        let x = Array2::from_shape_fn((1, heights.len()), |(_, j)| heights[j] / MAX_HEIGHT);
        self.forward(x.view())
            .slice(s![0, ..])
            .iter()
            .map(|v| v * MAX_HEIGHT)
            .collect()
    }

    /// Mean absolute reconstruction error in height units.
    pub fn reconstruction_mae(&self, heights: &[f64]) -> f64 {
        let rec = self.reconstruct(heights);
        heights
            .iter()
            .zip(&rec)
            .map(|(h, r)| (h - r).abs())
            .sum::<f64>()
            / heights.len() as f64
    }

    pub fn reconstruction_error(&self, terrain: &Terrain) -> f64 {
        self.reconstruction_mae(terrain.heights())
    }
}

/// Stacks terrains into rows scaled to `[0, 1]`.
pub fn normalize(terrains: &[Terrain]) -> Array2<f64> {
    let cols = terrains.first().map_or(0, |t| t.heights().len());
    Array2::from_shape_fn((terrains.len(), cols), |(i, j)| {
        terrains[i].heights()[j] / MAX_HEIGHT
    })
}
