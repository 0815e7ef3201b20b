//! The classifier: adaptive average pooling followed by a one-hidden-layer
//! ReLU network with `C` output logits.
//!
//! ```text
//! x = flatten(pool(image))            (grid_h * grid_w * 3)
//! z = W1ᵀ x + b1,  a = relu(z)        (hidden)
//! s = W2ᵀ a + b2                      (classes)
//! ```
//!
//! `W1` and `b1` form the "body" parameter group, `W2` and `b2` the "head".

pub mod checkpoint;
pub mod loss;
pub mod pool;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::RngState;
use crate::types::{Image, LabelVector, CHANNELS};

pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use loss::{bce_grad, bce_loss, sigmoid};
pub use pool::adaptive_avg_pool;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub pool_grid: (usize, usize),
    pub hidden: usize,
    pub classes: usize,
    /// `inputs × hidden`, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// `hidden × classes`, row-major.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Same layout as [`ModelParams`].
pub type Gradients = ModelParams;

impl ModelParams {
    pub fn zeros(pool_grid: (usize, usize), hidden: usize, classes: usize) -> Result<Self> {
        let inputs = pool_grid.0 * pool_grid.1 * CHANNELS;
        Self::from_parts(
            pool_grid,
            hidden,
            classes,
            vec![0.0; inputs * hidden],
            vec![0.0; hidden],
            vec![0.0; hidden * classes],
            vec![0.0; classes],
        )
    }

    /// Uniform in `±1/sqrt(fan_in)` for weights and biases of each layer.
    pub fn init(
        pool_grid: (usize, usize),
        hidden: usize,
        classes: usize,
        rng: &mut RngState,
    ) -> Result<Self> {
        let mut p = Self::zeros(pool_grid, hidden, classes)?;
        let bound1 = 1.0 / (p.inputs() as f64).sqrt();
        let bound2 = 1.0 / (hidden as f64).sqrt();
        for v in p.w1.iter_mut().chain(p.b1.iter_mut()) {
            *v = rng.random_range(-bound1..bound1);
        }
        for v in p.w2.iter_mut().chain(p.b2.iter_mut()) {
            *v = rng.random_range(-bound2..bound2);
        }
        Ok(p)
    }

    pub fn from_parts(
        pool_grid: (usize, usize),
        hidden: usize,
        classes: usize,
        w1: Vec<f64>,
        b1: Vec<f64>,
        w2: Vec<f64>,
        b2: Vec<f64>,
    ) -> Result<Self> {
        if pool_grid.0 == 0 || pool_grid.1 == 0 || hidden == 0 || classes == 0 {
            return Err(Error::InvalidDimensions(format!(
                "pool grid {pool_grid:?}, hidden {hidden} and classes {classes} must be positive"
            )));
        }
        let inputs = pool_grid.0 * pool_grid.1 * CHANNELS;
        let checks = [
            ("w1", w1.len(), inputs * hidden),
            ("b1", b1.len(), hidden),
            ("w2", w2.len(), hidden * classes),
            ("b2", b2.len(), classes),
        ];
        for (name, got, want) in checks {
            if got != want {
                return Err(Error::InvalidDimensions(format!(
                    "{name} has {got} entries, expected {want}"
                )));
            }
        }
        let p = Self {
            pool_grid,
            hidden,
            classes,
            w1,
            b1,
            w2,
            b2,
        };
        if let Some(index) = p.values().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(p)
    }

    pub fn inputs(&self) -> usize {
        self.pool_grid.0 * self.pool_grid.1 * CHANNELS
    }

    pub fn num_values(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    /// All values in `w1, b1, w2, b2` order.
    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.w1
            .iter()
            .chain(&self.b1)
            .chain(&self.w2)
            .chain(&self.b2)
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(self.b2.iter_mut())
    }

    /// Zeroed gradient buffer with this shape.
    pub fn zeros_like(&self) -> Gradients {
        Self::zeros(self.pool_grid, self.hidden, self.classes).expect("valid shape")
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        debug_assert_eq!(self.num_values(), other.num_values());
        for (a, b) in self.values_mut().zip(other.values()) {
            *a += b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.values_mut().for_each(|v| *v *= factor);
    }

    /// One SGD step with separate rates for the body (`w1`, `b1`) and the
    /// head (`w2`, `b2`).
    pub fn sgd_step(&mut self, grads: &Gradients, lr_body: f64, lr_head: f64) {
        let step = |p: &mut [f64], g: &[f64], lr: f64| {
            for (p, g) in p.iter_mut().zip(g) {
                *p -= lr * g;
            }
        };
        step(&mut self.w1, &grads.w1, lr_body);
        step(&mut self.b1, &grads.b1, lr_body);
        step(&mut self.w2, &grads.w2, lr_head);
        step(&mut self.b2, &grads.b2, lr_head);
    }
}

/// Intermediate values kept for the backward pass.
struct Activations {
    input: Vec<f64>,
    pre: Vec<f64>,
    hidden: Vec<f64>,
    logits: Vec<f64>,
}

fn forward_pooled(params: &ModelParams, input: Vec<f64>) -> Activations {
    let h = params.hidden;
    let mut pre = params.b1.clone();
    for (k, &x) in input.iter().enumerate() {
        if x != 0.0 {
            let row = &params.w1[k * h..(k + 1) * h];
            for (z, &w) in pre.iter_mut().zip(row) {
                *z += w * x;
            }
        }
    }
    let hidden: Vec<f64> = pre.iter().map(|&z| if z > 0.0 { z } else { 0.0 }).collect();
    let c = params.classes;
    let mut logits = params.b2.clone();
    for (j, &a) in hidden.iter().enumerate() {
        if a != 0.0 {
            let row = &params.w2[j * c..(j + 1) * c];
            for (s, &w) in logits.iter_mut().zip(row) {
                *s += w * a;
            }
        }
    }
    Activations {
        input,
        pre,
        hidden,
        logits,
    }
}

/// Class logits for one image.
pub fn forward(params: &ModelParams, image: &Image) -> Result<Vec<f64>> {
    let pooled = adaptive_avg_pool(image, params.pool_grid.0, params.pool_grid.1)?;
    Ok(forward_pooled(params, pooled).logits)
}

/// Loss and parameter gradients for one example. `relu'(0)` is taken as 0.
pub fn backward(
    params: &ModelParams,
    image: &Image,
    labels: &LabelVector,
) -> Result<(f64, Gradients)> {
    if labels.num_classes() != params.classes {
        return Err(Error::ShapeMismatch {
            expected: (1, params.classes),
            actual: (1, labels.num_classes()),
        });
    }
    let pooled = adaptive_avg_pool(image, params.pool_grid.0, params.pool_grid.1)?;
    let act = forward_pooled(params, pooled);
    let loss = bce_loss(&act.logits, labels);
    let d_logits = bce_grad(&act.logits, labels);

    let (h, c) = (params.hidden, params.classes);
    let mut g = params.zeros_like();
    g.b2.copy_from_slice(&d_logits);
    let mut d_pre = vec![0.0; h];
    for (j, dp) in d_pre.iter_mut().enumerate() {
        let row = &params.w2[j * c..(j + 1) * c];
        let g_row = &mut g.w2[j * c..(j + 1) * c];
        let a = act.hidden[j];
        let mut d_hidden = 0.0;
        for ((gw, &w), &ds) in g_row.iter_mut().zip(row).zip(&d_logits) {
            *gw = a * ds;
            d_hidden += w * ds;
        }
        if act.pre[j] > 0.0 {
            *dp = d_hidden;
        }
    }
    g.b1.copy_from_slice(&d_pre);
    for (k, &x) in act.input.iter().enumerate() {
        let g_row = &mut g.w1[k * h..(k + 1) * h];
        for (gw, &dz) in g_row.iter_mut().zip(&d_pre) {
            *gw = x * dz;
        }
    }
    Ok((loss, g))
}
