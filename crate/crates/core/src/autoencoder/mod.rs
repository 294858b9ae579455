//! Per-view auto-encoders with hand-written forward and backward passes.
//!
//! Image views go through three strided 3x3 convolutions and come back
//! through three transposed convolutions; flat feature views use the same
//! three-plus-three layout with dense layers. Every layer is followed by a
//! ReLU except the last decoder layer. There is no pooling and no bias.

mod conv;
mod dense;

pub use conv::{same_output, same_padding, ConvLayer, MapShape, KERNEL};
pub use dense::DenseLayer;

use ndarray::{Array2, Zip};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::ViewLayout;
use crate::{Error, Result};

/// Input geometry of an auto-encoder; identical to a view's layout.
pub type InputShape = ViewLayout;

pub const DEFAULT_CHANNELS: [usize; 3] = [64, 32, 16];
pub const DEFAULT_STRIDE: usize = 2;

/// Encoder widths (channels for image views, units for flat views) and, for
/// image views, one stride per encoder layer. The decoder mirrors both.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub widths: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub strides: Vec<usize>,
}

impl Architecture {
    pub fn conv(channels: &[usize], strides: &[usize]) -> Self {
        Self {
            widths: channels.to_vec(),
            strides: strides.to_vec(),
        }
    }

    pub fn dense(widths: &[usize]) -> Self {
        Self {
            widths: widths.to_vec(),
            strides: Vec::new(),
        }
    }

    /// `[64, 32, 16]` stride-2 convolutions for images; dense widths
    /// `[min(d,64), min(d,32), min(d,16)]` for flat views.
    pub fn default_for(layout: ViewLayout) -> Self {
        match layout {
            ViewLayout::Image { .. } => Self::conv(&DEFAULT_CHANNELS, &[DEFAULT_STRIDE; 3]),
            ViewLayout::Flat { features } => Self::dense(&DEFAULT_CHANNELS.map(|w| w.min(features))),
        }
    }

    /// Keeps the widths but fills in default strides for image views when
    /// none were given.
    fn resolved(&self, layout: ViewLayout) -> Self {
        let mut arch = self.clone();
        if matches!(layout, ViewLayout::Image { .. }) && arch.strides.is_empty() {
            arch.strides = vec![DEFAULT_STRIDE; arch.widths.len()];
        }
        arch
    }

    fn validate(&self, layout: ViewLayout) -> Result<()> {
        if self.widths.is_empty() || self.widths.contains(&0) {
            return Err(Error::InvalidConfig(format!(
                "encoder widths must be non-empty and positive, got {:?}",
                self.widths
            )));
        }
        if let ViewLayout::Image { .. } = layout {
            if self.strides.len() != self.widths.len() || self.strides.contains(&0) {
                return Err(Error::InvalidConfig(format!(
                    "need one positive stride per conv layer, got {:?} for {} layers",
                    self.strides,
                    self.widths.len()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Layer {
    Conv(ConvLayer),
    Dense(DenseLayer),
}

impl Layer {
    fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        match self {
            Layer::Conv(l) => l.forward(x),
            Layer::Dense(l) => l.forward(x),
        }
    }

    /// `(flattened dL/dweights, dL/dinput)`.
    fn backward(&self, x: &Array2<f64>, g: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
        match self {
            Layer::Conv(l) => {
                let (gw, gx) = l.backward(x, g);
                (gw.into_raw_vec_and_offset().0, gx)
            }
            Layer::Dense(l) => {
                let (gw, gx) = l.backward(x, g);
                (gw.as_standard_layout().into_owned().into_raw_vec_and_offset().0, gx)
            }
        }
    }

    pub fn weights(&self) -> &[f64] {
        match self {
            Layer::Conv(l) => l.kernels.as_slice(),
            Layer::Dense(l) => l.weights.as_slice(),
        }
        .expect("weights are kept in standard layout")
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        match self {
            Layer::Conv(l) => l.kernels.as_slice_mut(),
            Layer::Dense(l) => l.weights.as_slice_mut(),
        }
        .expect("weights are kept in standard layout")
    }

    pub fn weight_shape(&self) -> Vec<usize> {
        match self {
            Layer::Conv(l) => l.kernels.shape().to_vec(),
            Layer::Dense(l) => l.weights.shape().to_vec(),
        }
    }

    pub fn fan_in(&self) -> usize {
        match self {
            Layer::Conv(l) => l.fan_in(),
            Layer::Dense(l) => l.in_dim(),
        }
    }

    fn out_dim(&self) -> usize {
        match self {
            Layer::Conv(l) => l.out_shape.0 * l.out_shape.1 * l.out_shape.2,
            Layer::Dense(l) => l.out_dim(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AutoencoderParams {
    input: InputShape,
    architecture: Architecture,
    pub encoder: Vec<Layer>,
    pub decoder: Vec<Layer>,
}

/// Activations retained by one forward pass through a layer stack.
#[derive(Clone, Debug, Default)]
pub struct ForwardCache {
    /// Input to each layer (the previous layer's post-activation).
    pub inputs: Vec<Array2<f64>>,
    /// Each layer's output before its activation.
    pub pre_activations: Vec<Array2<f64>>,
}

/// Gradients of a scalar loss, ordered like [`AutoencoderParams::tensors`].
#[derive(Clone, Debug)]
pub struct Gradients {
    pub layers: Vec<Vec<f64>>,
    pub input: Array2<f64>,
}

impl AutoencoderParams {
    /// Builds the layer stack with every weight set to zero.
    pub fn zeros(input: InputShape, architecture: &Architecture) -> Result<Self> {
        let architecture = architecture.resolved(input);
        architecture.validate(input)?;
        let (encoder, decoder) = match input {
            ViewLayout::Flat { features } => {
                let mut dims = vec![features];
                dims.extend(&architecture.widths);
                let encoder = dims
                    .windows(2)
                    .map(|w| Layer::Dense(DenseLayer::new(w[0], w[1])))
                    .collect();
                let decoder = dims
                    .windows(2)
                    .rev()
                    .map(|w| Layer::Dense(DenseLayer::new(w[1], w[0])))
                    .collect();
                (encoder, decoder)
            }
            ViewLayout::Image {
                channels,
                height,
                width,
            } => {
                let mut shapes = vec![(channels, height, width)];
                let mut encoder = Vec::new();
                for (&c, &s) in architecture.widths.iter().zip(&architecture.strides) {
                    let layer = ConvLayer::conv(*shapes.last().unwrap(), c, s);
                    shapes.push(layer.out_shape);
                    encoder.push(Layer::Conv(layer));
                }
                let decoder = (0..encoder.len())
                    .rev()
                    .map(|l| Layer::Conv(ConvLayer::transposed(shapes[l + 1], shapes[l], architecture.strides[l])))
                    .collect();
                (encoder, decoder)
            }
        };
        Ok(Self {
            input,
            architecture,
            encoder,
            decoder,
        })
    }

    pub fn input_shape(&self) -> InputShape {
        self.input
    }

    pub fn architecture(&self) -> &Architecture {
        &self.architecture
    }

    pub fn input_dim(&self) -> usize {
        self.input.feature_dim()
    }

    /// Rows of the latent matrix `F`.
    pub fn latent_dim(&self) -> usize {
        self.encoder.last().map_or(0, Layer::out_dim)
    }

    pub fn layers(&self) -> impl Iterator<Item = &Layer> {
        self.encoder.iter().chain(&self.decoder)
    }

    /// Weight tensors, encoder first, as flat standard-layout slices.
    pub fn tensors(&self) -> Vec<&[f64]> {
        self.layers().map(Layer::weights).collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.encoder
            .iter_mut()
            .chain(self.decoder.iter_mut())
            .map(Layer::weights_mut)
            .collect()
    }

    pub fn tensor_shapes(&self) -> Vec<Vec<usize>> {
        self.layers().map(Layer::weight_shape).collect()
    }

    pub fn n_params(&self) -> usize {
        self.layers().map(|l| l.weights().len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers().all(|l| l.weights().iter().all(|v| v.is_finite()))
    }
}

/// He-initialized parameters: every weight drawn from `N(0, 2 / fan_in)`.
pub fn init_params(input: InputShape, architecture: &Architecture, seed: u64) -> Result<AutoencoderParams> {
    let mut params = AutoencoderParams::zeros(input, architecture)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for layer in params.encoder.iter_mut().chain(params.decoder.iter_mut()) {
        let std = (2.0 / layer.fan_in() as f64).sqrt();
        let normal = Normal::new(0.0, std).expect("positive std");
        for w in layer.weights_mut() {
            *w = normal.sample(&mut rng);
        }
    }
    Ok(params)
}

fn relu(x: &Array2<f64>) -> Array2<f64> {
    x.mapv(|v| if v > 0.0 { v } else { 0.0 })
}

fn run_stack(layers: &[Layer], x: &Array2<f64>, relu_last: bool) -> (Array2<f64>, ForwardCache) {
    let mut cache = ForwardCache::default();
    let mut current = x.clone();
    for (i, layer) in layers.iter().enumerate() {
        let pre = layer.forward(&current);
        let activate = relu_last || i + 1 < layers.len();
        let next = if activate { relu(&pre) } else { pre.clone() };
        cache.inputs.push(current);
        cache.pre_activations.push(pre);
        current = next;
    }
    (current, cache)
}

fn backprop_stack(
    layers: &[Layer],
    cache: &ForwardCache,
    grad_out: Array2<f64>,
    relu_last: bool,
) -> (Vec<Vec<f64>>, Array2<f64>) {
    let mut grads = vec![Vec::new(); layers.len()];
    let mut g = grad_out;
    for i in (0..layers.len()).rev() {
        if relu_last || i + 1 < layers.len() {
            // Subgradient 0 at 0.
            Zip::from(&mut g).and(&cache.pre_activations[i]).for_each(|g, &p| {
                if p <= 0.0 {
                    *g = 0.0;
                }
            });
        }
        let (gw, gx) = layers[i].backward(&cache.inputs[i], &g);
        grads[i] = gw;
        g = gx;
    }
    (grads, g)
}

fn check_rows(context: &'static str, expected: usize, m: &Array2<f64>) -> Result<()> {
    if m.nrows() != expected {
        return Err(Error::dims(context, expected, m.nrows()));
    }
    Ok(())
}

/// Encodes a `d x n` batch into the `d_lat x n` latent matrix `F`.
pub fn encode(params: &AutoencoderParams, x: &Array2<f64>) -> Result<(Array2<f64>, ForwardCache)> {
    check_rows("encoder input", params.input_dim(), x)?;
    Ok(run_stack(&params.encoder, x, true))
}

/// Decodes a `d_lat x n` latent matrix back to input space.
pub fn decode(params: &AutoencoderParams, f: &Array2<f64>) -> Result<(Array2<f64>, ForwardCache)> {
    check_rows("decoder input", params.latent_dim(), f)?;
    Ok(run_stack(&params.decoder, f, false))
}

/// Backpropagates `dL/dX_hat` through the decoder, adds `dL/dF` (for
/// instance the self-expression gradient) at the latent, and continues
/// through the encoder. Pass `None` for `grad_latent` during pretraining.
pub fn backward(
    params: &AutoencoderParams,
    encode_cache: &ForwardCache,
    decode_cache: &ForwardCache,
    grad_recon: &Array2<f64>,
    grad_latent: Option<&Array2<f64>>,
) -> Result<Gradients> {
    let n_enc = params.encoder.len();
    let n_dec = params.decoder.len();
    if encode_cache.inputs.len() != n_enc || decode_cache.inputs.len() != n_dec {
        return Err(Error::dims(
            "forward cache layers",
            (n_enc, n_dec),
            (encode_cache.inputs.len(), decode_cache.inputs.len()),
        ));
    }
    let expected = decode_cache.pre_activations[n_dec - 1].dim();
    if grad_recon.dim() != expected {
        return Err(Error::dims("reconstruction gradient", expected, grad_recon.dim()));
    }
    let (dec_grads, mut g_latent) = backprop_stack(&params.decoder, decode_cache, grad_recon.clone(), false);
    if let Some(gf) = grad_latent {
        if gf.dim() != g_latent.dim() {
            return Err(Error::dims("latent gradient", g_latent.dim(), gf.dim()));
        }
        g_latent += gf;
    }
    let (mut layers, input) = backprop_stack(&params.encoder, encode_cache, g_latent, true);
    layers.extend(dec_grads);
    Ok(Gradients { layers, input })
}

/// `||X - X_hat||_F^2` and its gradient `2 (X_hat - X)`.
pub fn reconstruction_loss(x: &Array2<f64>, x_hat: &Array2<f64>) -> (f64, Array2<f64>) {
    let diff = x_hat - x;
    let loss = diff.iter().map(|v| v * v).sum();
    (loss, diff * 2.0)
}
