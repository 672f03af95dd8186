use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation's output. ReLU uses the
    /// subgradient 0 at a zero pre-activation.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layer {
    pub fan_in: usize,
    pub fan_out: usize,
    pub activation: Activation,
}

impl Layer {
    pub fn param_count(&self) -> usize {
        self.fan_in * self.fan_out + self.fan_out
    }
}

/// Dense feed-forward network whose parameters live in one flat vector.
///
/// Layer `l` occupies a contiguous block: its `fan_in x fan_out` weight
/// matrix in row-major order followed by its `fan_out` biases. Inputs are
/// rows, so a layer computes `act(x W + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<Layer>,
    params: Vec<f64>,
}

/// Per-layer outputs of a batched forward pass, kept for the backward pass.
/// `activations[0]` is the input batch.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    activations: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.activations.last().expect("cache holds at least the input")
    }
}

impl Mlp {
    /// Zero-initialised network with layer widths `sizes`; `hidden` applies to
    /// every layer but the last, which uses `output`.
    pub fn new(sizes: &[usize], hidden: Activation, output: Activation) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::validation("layer sizes", "need at least two non-zero widths"));
        }
        let layers: Vec<Layer> = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| Layer {
                fan_in: w[0],
                fan_out: w[1],
                activation: if i + 2 == sizes.len() { output } else { hidden },
            })
            .collect();
        let n = layers.iter().map(Layer::param_count).sum();
        Ok(Self {
            layers,
            params: vec![0.0; n],
        })
    }

    pub fn from_parts(layers: Vec<Layer>, params: Vec<f64>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::validation("layers", "network needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[0].fan_out != pair[1].fan_in {
                return Err(Error::Dimension {
                    context: "layer chaining",
                    expected: pair[0].fan_out,
                    actual: pair[1].fan_in,
                });
            }
        }
        let expected: usize = layers.iter().map(Layer::param_count).sum();
        if params.len() != expected {
            return Err(Error::Dimension {
                context: "parameter vector",
                expected,
                actual: params.len(),
            });
        }
        Ok(Self { layers, params })
    }

    /// Uniform `+-1/sqrt(fan_in)` for weights and biases; the last layer is
    /// additionally multiplied by `final_scale`.
    pub fn init_uniform<R: Rng + ?Sized>(&mut self, rng: &mut R, final_scale: f64) {
        let last = self.layers.len() - 1;
        let mut offset = 0;
        for (i, layer) in self.layers.iter().enumerate() {
            let bound = 1.0 / (layer.fan_in as f64).sqrt();
            let scale = if i == last { final_scale } else { 1.0 };
            for p in &mut self.params[offset..offset + layer.param_count()] {
                *p = rng.gen_range(-bound..bound) * scale;
            }
            offset += layer.param_count();
        }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::Dimension {
                context: "set_params",
                expected: self.params.len(),
                actual: params.len(),
            });
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].fan_out
    }

    pub fn same_architecture(&self, other: &Mlp) -> bool {
        self.layers == other.layers
    }

    fn layer_views(&self, offset: usize, layer: &Layer) -> (ArrayView2<'_, f64>, ArrayView1<'_, f64>) {
        let nw = layer.fan_in * layer.fan_out;
        let w = ArrayView2::from_shape((layer.fan_in, layer.fan_out), &self.params[offset..offset + nw])
            .expect("layout matches layer shape");
        let b = ArrayView1::from(&self.params[offset + nw..offset + nw + layer.fan_out]);
        (w, b)
    }

    fn check_input(&self, cols: usize) -> Result<()> {
        if cols != self.input_dim() {
            return Err(Error::Dimension {
                context: "network input",
                expected: self.input_dim(),
                actual: cols,
            });
        }
        Ok(())
    }

    /// Forward pass of a single input vector.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let x = ArrayView2::from_shape((1, input.len()), input).expect("row vector");
        Ok(self.forward_batch(x)?.into_raw_vec_and_offset().0)
    }

    /// Forward pass over a batch of row inputs.
    pub fn forward_batch(&self, input: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_input(input.ncols())?;
        let mut x = input.to_owned();
        let mut offset = 0;
        for layer in &self.layers {
            x = self.apply_layer(offset, layer, x.view());
            offset += layer.param_count();
        }
        Ok(x)
    }

    /// Forward pass that keeps every layer output for [`backward_batch`](Self::backward_batch).
    pub fn forward_cached(&self, input: ArrayView2<'_, f64>) -> Result<ForwardCache> {
        self.check_input(input.ncols())?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.to_owned());
        let mut offset = 0;
        for layer in &self.layers {
            let next = self.apply_layer(offset, layer, activations.last().unwrap().view());
            activations.push(next);
            offset += layer.param_count();
        }
        Ok(ForwardCache { activations })
    }

    fn apply_layer(&self, offset: usize, layer: &Layer, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let (w, b) = self.layer_views(offset, layer);
        let mut z = Array2::from_shape_fn((x.nrows(), layer.fan_out), |(_, j)| b[j]);
        general_mat_mul(1.0, &x, &w, 1.0, &mut z);
        if layer.activation != Activation::Identity {
            z.mapv_inplace(|v| layer.activation.apply(v));
        }
        z
    }

    /// Reverse pass for the scalar `sum(output * output_grad)`.
    ///
    /// Parameter gradients are added into `param_grad` (summed over the
    /// batch); the gradient with respect to the input batch is returned when
    /// `want_input_grad` is set.
    pub fn backward_batch(
        &self,
        cache: &ForwardCache,
        output_grad: ArrayView2<'_, f64>,
        param_grad: &mut [f64],
        want_input_grad: bool,
    ) -> Result<Option<Array2<f64>>> {
        if param_grad.len() != self.params.len() {
            return Err(Error::Dimension {
                context: "parameter gradient buffer",
                expected: self.params.len(),
                actual: param_grad.len(),
            });
        }
        let out = cache.output();
        if output_grad.dim() != out.dim() {
            return Err(Error::Dimension {
                context: "output gradient",
                expected: out.ncols(),
                actual: output_grad.ncols(),
            });
        }

        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut acc = 0;
        for layer in &self.layers {
            offsets.push(acc);
            acc += layer.param_count();
        }

        let mut grad = output_grad.to_owned();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let y = &cache.activations[l + 1];
            let x = &cache.activations[l];
            if layer.activation != Activation::Identity {
                grad.zip_mut_with(y, |g, &yv| *g *= layer.activation.derivative_from_output(yv));
            }

            let offset = offsets[l];
            let nw = layer.fan_in * layer.fan_out;
            let (dw_slice, rest) = param_grad[offset..offset + layer.param_count()].split_at_mut(nw);
            let mut dw = ArrayViewMut2::from_shape((layer.fan_in, layer.fan_out), dw_slice).expect("shape");
            general_mat_mul(1.0, &x.t(), &grad, 1.0, &mut dw);
            let mut db = ArrayViewMut1::from(rest);
            db += &grad.sum_axis(Axis(0));

            if l > 0 || want_input_grad {
                let (w, _) = self.layer_views(offset, layer);
                let mut next = Array2::zeros((grad.nrows(), layer.fan_in));
                general_mat_mul(1.0, &grad, &w.t(), 0.0, &mut next);
                grad = next;
            }
        }
        Ok(want_input_grad.then_some(grad))
    }

    /// Single-sample reverse pass: `(param_grad, input_grad)` of
    /// `output . output_grad`.
    pub fn backward(&self, input: &[f64], output_grad: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let x = ArrayView2::from_shape((1, input.len()), input).expect("row vector");
        let cache = self.forward_cached(x)?;
        if output_grad.len() != self.output_dim() {
            return Err(Error::Dimension {
                context: "output gradient",
                expected: self.output_dim(),
                actual: output_grad.len(),
            });
        }
        let g = ArrayView2::from_shape((1, output_grad.len()), output_grad).expect("row vector");
        let mut param_grad = vec![0.0; self.params.len()];
        let input_grad = self
            .backward_batch(&cache, g, &mut param_grad, true)?
            .expect("requested");
        Ok((param_grad, input_grad.into_raw_vec_and_offset().0))
    }
}

/// Blends `online` into `target`: `target <- tau * online + (1 - tau) * target`.
pub fn soft_update(target: &mut Mlp, online: &Mlp, tau: f64) -> Result<()> {
    if !target.same_architecture(online) {
        return Err(Error::validation("soft_update", "target and online architectures differ"));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::validation("tau", format!("must lie in [0, 1], got {tau}")));
    }
    for (t, &o) in target.params.iter_mut().zip(&online.params) {
        // equal entries are already the blend; skipping them avoids rounding drift
        if *t != o {
            *t = tau * o + (1.0 - tau) * *t;
        }
    }
    Ok(())
}
