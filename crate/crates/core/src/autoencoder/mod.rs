//! Dense autoencoders trained from scratch: simple, deep, denoising and
//! variational variants sharing one fully connected core.

mod persist;
mod train;

pub use persist::{load_model, save_model, FORMAT_VERSION};
pub use train::{corrupt, reconstruction_gradients, train, NoiseKind, NoiseSpec, Optimizer, TrainConfig, TrainOutcome};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Frame;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Simple,
    Deep,
    Denoising,
    Variational,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Simple => "simple",
            Variant::Deep => "deep",
            Variant::Denoising => "denoising",
            Variant::Variational => "variational",
        }
    }

    /// Default layer widths for an `input`-dimensional frame.
    pub fn default_dims(self, input: usize) -> Vec<usize> {
        match self {
            Variant::Simple => vec![input, 256, input],
            Variant::Deep | Variant::Denoising => vec![input, 256, 64, 256, input],
            Variant::Variational => vec![input, 256, 32, 256, input],
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simple" => Ok(Variant::Simple),
            "deep" => Ok(Variant::Deep),
            "denoising" => Ok(Variant::Denoising),
            "variational" => Ok(Variant::Variational),
            other => Err(Error::Config(format!("unknown autoencoder variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sigmoid,
    Relu,
    Linear,
}

impl Activation {
    fn apply(self, z: &mut Array2<f64>) {
        match self {
            Activation::Sigmoid => z.mapv_inplace(sigmoid),
            Activation::Relu => z.mapv_inplace(|v| v.max(0.0)),
            Activation::Linear => {}
        }
    }

    /// Multiplies `grad` in place by the activation derivative, expressed
    /// through the activation output `a`.
    fn backprop(self, grad: &mut Array2<f64>, a: &Array2<f64>) {
        match self {
            Activation::Sigmoid => grad.zip_mut_with(a, |g, &a| *g *= a * (1.0 - a)),
            Activation::Relu => grad.zip_mut_with(a, |g, &a| {
                if a <= 0.0 {
                    *g = 0.0
                }
            }),
            Activation::Linear => {}
        }
    }
}

#[inline]
fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// One fully connected layer. `weights` is `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl Layer {
    fn glorot(fan_in: usize, fan_out: usize, activation: Activation, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let weights = Array2::from_shape_simple_fn((fan_out, fan_in), || rng.random_range(-limit..=limit));
        Self {
            weights,
            bias: Array1::zeros(fan_out),
            activation,
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weights.ncols()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.nrows()
    }

    /// Pre-activation `input · Wᵀ + b` for a batch of row vectors.
    fn affine(&self, input: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut z = input.dot(&self.weights.t());
        z += &self.bias;
        z
    }

    fn forward(&self, input: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut z = self.affine(input);
        self.activation.apply(&mut z);
        z
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderModel {
    variant: Variant,
    layer_dims: Vec<usize>,
    layers: Vec<Layer>,
    /// Variational only: log-variance head parallel to the innermost layer,
    /// which then acts as the mean head.
    logvar_head: Option<Layer>,
}

impl AutoencoderModel {
    /// Glorot-uniform weights in ±√(6/(fan_in+fan_out)), zero biases, sigmoid
    /// everywhere except the linear variational heads.
    pub fn init(variant: Variant, layer_dims: &[usize], seed: u64) -> Result<Self> {
        validate_dims(variant, layer_dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let code = code_layer(layer_dims);
        let mut layers = Vec::with_capacity(layer_dims.len() - 1);
        let mut logvar_head = None;
        for (i, pair) in layer_dims.windows(2).enumerate() {
            let act = if variant == Variant::Variational && i == code {
                Activation::Linear
            } else {
                Activation::Sigmoid
            };
            layers.push(Layer::glorot(pair[0], pair[1], act, &mut rng));
            if variant == Variant::Variational && i == code {
                logvar_head = Some(Layer::glorot(pair[0], pair[1], Activation::Linear, &mut rng));
            }
        }
        Ok(Self {
            variant,
            layer_dims: layer_dims.to_vec(),
            layers,
            logvar_head,
        })
    }

    /// Assembles a model from explicit layers, checking every shape.
    pub fn from_parts(
        variant: Variant,
        layer_dims: Vec<usize>,
        layers: Vec<Layer>,
        logvar_head: Option<Layer>,
    ) -> Result<Self> {
        validate_dims(variant, &layer_dims)?;
        if layers.len() != layer_dims.len() - 1 {
            return Err(Error::Config(format!(
                "{} layers given for {} layer dims",
                layers.len(),
                layer_dims.len()
            )));
        }
        for (i, layer) in layers.iter().enumerate() {
            check_layer_shape(layer, layer_dims[i], layer_dims[i + 1])?;
        }
        let code = code_layer(&layer_dims);
        match (variant, &logvar_head) {
            (Variant::Variational, Some(head)) => {
                check_layer_shape(head, layer_dims[code], layer_dims[code + 1])?
            }
            (Variant::Variational, None) => {
                return Err(Error::Config("variational model needs a log-variance head".into()))
            }
            (_, Some(_)) => {
                return Err(Error::Config(
                    "only the variational variant carries a log-variance head".into(),
                ))
            }
            (_, None) => {}
        }
        Ok(Self {
            variant,
            layer_dims,
            layers,
            logvar_head,
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn logvar_head(&self) -> Option<&Layer> {
        self.logvar_head.as_ref()
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    #[cfg(test)]
    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    #[cfg(test)]
    pub(crate) fn logvar_head_mut(&mut self) -> Option<&mut Layer> {
        self.logvar_head.as_mut()
    }

    pub(crate) fn code_layer(&self) -> usize {
        code_layer(&self.layer_dims)
    }

    /// Total number of trainable scalars.
    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .chain(self.logvar_head.iter())
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Reconstructs a batch of flattened frames (one per row). The variational
    /// variant decodes its mean code, without sampling.
    pub fn reconstruct_batch(&self, batch: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if batch.ncols() != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                actual: batch.ncols(),
            });
        }
        let mut layers = self.layers.iter();
        let first = layers.next().expect("validated: at least two layers");
        let mut a = first.forward(batch);
        for layer in layers {
            a = layer.forward(a.view());
        }
        Ok(a)
    }

    pub fn forward(&self, frame: &Frame) -> Result<Frame> {
        let input = ArrayView2::from_shape((1, frame.len()), frame.pixels()).map_err(|_| {
            Error::Dimension {
                expected: self.input_dim(),
                actual: frame.len(),
            }
        })?;
        let out = self.reconstruct_batch(input)?;
        Frame::from_clamped(frame.shape(), out.into_raw_vec_and_offset().0)
    }
}

/// Index of the layer producing the innermost code.
fn code_layer(dims: &[usize]) -> usize {
    (dims.len() - 1) / 2 - 1
}

fn check_layer_shape(layer: &Layer, fan_in: usize, fan_out: usize) -> Result<()> {
    if layer.weights.dim() != (fan_out, fan_in) || layer.bias.len() != fan_out {
        return Err(Error::Config(format!(
            "layer shape {:?} / bias {} inconsistent with dims {fan_in}->{fan_out}",
            layer.weights.dim(),
            layer.bias.len()
        )));
    }
    Ok(())
}

fn validate_dims(variant: Variant, dims: &[usize]) -> Result<()> {
    if dims.len() < 3 {
        return Err(Error::Config(format!(
            "layer dims {dims:?} need input, at least one hidden layer, and output"
        )));
    }
    if dims.contains(&0) {
        return Err(Error::Config(format!("layer dims {dims:?} contain a zero width")));
    }
    if dims[0] != dims[dims.len() - 1] {
        return Err(Error::Config(format!(
            "first and last layer dims differ: {} vs {}",
            dims[0],
            dims[dims.len() - 1]
        )));
    }
    if dims.len() % 2 == 0 || dims.iter().ne(dims.iter().rev()) {
        return Err(Error::Config(format!(
            "layer dims {dims:?} are not a symmetric encoder/decoder"
        )));
    }
    let hidden = dims.len() - 2;
    match variant {
        Variant::Simple if hidden != 1 => Err(Error::Config(format!(
            "simple variant has exactly one hidden layer, got {hidden}"
        ))),
        Variant::Deep | Variant::Denoising if hidden < 2 => Err(Error::Config(format!(
            "{} variant needs at least two hidden layers, got {hidden}",
            variant.name()
        ))),
        _ => Ok(()),
    }
}

/// Mean squared error over all elements.
pub fn mse_loss(x: &Frame, reconstruction: &Frame) -> Result<f64> {
    mean_squared_difference(x.pixels(), reconstruction.pixels())
}

pub(crate) fn mean_squared_difference(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sum / a.len() as f64)
}

/// KL divergence of `N(mean, exp(log_variance))` from the standard normal.
pub fn vae_kl(mean: &[f64], log_variance: &[f64]) -> Result<f64> {
    if mean.len() != log_variance.len() {
        return Err(Error::Dimension {
            expected: mean.len(),
            actual: log_variance.len(),
        });
    }
    let sum: f64 = mean
        .iter()
        .zip(log_variance)
        .map(|(m, lv)| 1.0 + lv - m * m - lv.exp())
        .sum();
    Ok((-0.5 * sum).max(0.0))
}

/// Mean per-sample reconstruction loss of `model` over `frames`.
pub fn mean_loss(model: &AutoencoderModel, frames: &[Frame]) -> Result<f64> {
    if frames.is_empty() {
        return Err(Error::Data("no frames to evaluate".into()));
    }
    let batch = stack_frames(frames, model.input_dim())?;
    let recon = model.reconstruct_batch(batch.view())?;
    let diff = &recon - &batch;
    Ok(diff.mapv(|d| d * d).sum() / diff.len() as f64)
}

/// Per-frame reconstruction errors for a slice of frames.
pub fn reconstruction_errors(model: &AutoencoderModel, frames: &[Frame]) -> Result<Vec<f64>> {
    let mut errors = Vec::with_capacity(frames.len());
    for chunk in frames.chunks(256) {
        let batch = stack_frames(chunk, model.input_dim())?;
        let recon = model.reconstruct_batch(batch.view())?;
        let diff = recon - &batch;
        errors.extend(
            diff.axis_iter(Axis(0))
                .map(|row| row.mapv(|d| d * d).sum() / row.len() as f64),
        );
    }
    Ok(errors)
}

pub(crate) fn stack_frames(frames: &[Frame], dim: usize) -> Result<Array2<f64>> {
    let mut batch = Array2::zeros((frames.len(), dim));
    for (mut row, frame) in batch.axis_iter_mut(Axis(0)).zip(frames) {
        if frame.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                actual: frame.len(),
            });
        }
        row.assign(&ndarray::ArrayView1::from(frame.pixels()));
    }
    Ok(batch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::FrameShape;

    fn all_weights(model: &AutoencoderModel) -> Vec<f64> {
        model
            .layers()
            .iter()
            .flat_map(|l| l.weights.iter().copied())
            .collect()
    }

    #[test]
    fn init_is_deterministic_by_seed() {
        let a = AutoencoderModel::init(Variant::Simple, &[4, 2, 4], 7).unwrap();
        let b = AutoencoderModel::init(Variant::Simple, &[4, 2, 4], 7).unwrap();
        let c = AutoencoderModel::init(Variant::Simple, &[4, 2, 4], 8).unwrap();
        assert_eq!(all_weights(&a), all_weights(&b));
        assert_ne!(all_weights(&a), all_weights(&c));
    }

    #[test]
    fn init_respects_glorot_bound() {
        let m = AutoencoderModel::init(Variant::Simple, &[4, 2, 4], 7).unwrap();
        assert!(all_weights(&m).iter().all(|w| w.abs() <= 1.0));
        let m = AutoencoderModel::init(Variant::Deep, &[100, 20, 10, 20, 100], 1).unwrap();
        for layer in m.layers() {
            let limit = (6.0 / (layer.fan_in() + layer.fan_out()) as f64).sqrt();
            assert!(layer.weights.iter().all(|w| w.abs() <= limit));
        }
    }

    #[test]
    fn init_rejects_inconsistent_dims() {
        for (variant, dims) in [
            (Variant::Deep, vec![4, 2]),
            (Variant::Simple, vec![4, 2, 3]),
            (Variant::Simple, vec![4, 2, 2, 2, 4]),
            (Variant::Deep, vec![4, 2, 4]),
            (Variant::Deep, vec![4, 3, 2, 1, 4]),
            (Variant::Denoising, vec![4, 0, 4]),
        ] {
            assert!(
                matches!(AutoencoderModel::init(variant, &dims, 0), Err(Error::Config(_))),
                "{variant:?} {dims:?}"
            );
        }
    }

    #[test]
    fn variational_has_linear_heads_of_equal_width() {
        let m = AutoencoderModel::init(Variant::Variational, &[16, 8, 4, 8, 16], 3).unwrap();
        let head = m.logvar_head().unwrap();
        let mean = &m.layers()[m.code_layer()];
        assert_eq!(head.weights.dim(), mean.weights.dim());
        assert_eq!(head.activation, Activation::Linear);
        assert_eq!(mean.activation, Activation::Linear);
    }

    #[test]
    fn zero_network_outputs_half() {
        let shape = FrameShape::new(1, 2, 3);
        let layers = vec![
            Layer {
                weights: Array2::zeros((2, 6)),
                bias: Array1::zeros(2),
                activation: Activation::Sigmoid,
            },
            Layer {
                weights: Array2::zeros((6, 2)),
                bias: Array1::zeros(6),
                activation: Activation::Sigmoid,
            },
        ];
        let m = AutoencoderModel::from_parts(Variant::Simple, vec![6, 2, 6], layers, None).unwrap();
        let out = m.forward(&Frame::filled(shape, 0.8)).unwrap();
        assert!(out.pixels().iter().all(|&p| p == 0.5));
    }

    #[test]
    fn identity_capable_one_unit_network() {
        let unit = |act| Layer {
            weights: Array2::from_elem((1, 1), 1.0),
            bias: Array1::zeros(1),
            activation: act,
        };
        let m = AutoencoderModel::from_parts(
            Variant::Simple,
            vec![1, 1, 1],
            vec![unit(Activation::Linear), unit(Activation::Sigmoid)],
            None,
        )
        .unwrap();
        let out = m.forward(&Frame::filled(FrameShape::new(1, 1, 1), 0.0)).unwrap();
        assert_eq!(out.pixels(), &[0.5]);
    }

    #[test]
    fn forward_checks_shape_and_is_pure() {
        let m = AutoencoderModel::init(Variant::Deep, &[6, 4, 2, 4, 6], 11).unwrap();
        let bad = Frame::filled(FrameShape::new(1, 1, 5), 0.1);
        assert!(matches!(m.forward(&bad), Err(Error::Dimension { .. })));
        let f = Frame::new(FrameShape::new(1, 2, 3), vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap();
        let a = m.forward(&f).unwrap();
        let b = m.forward(&f).unwrap();
        assert_eq!(a.shape(), f.shape());
        assert_eq!(a.pixels(), b.pixels());
        assert!(a.pixels().iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn mse_examples() {
        let s1 = FrameShape::new(1, 1, 1);
        let s2 = FrameShape::new(1, 1, 2);
        let x = Frame::new(s1, vec![0.5]).unwrap();
        let y = Frame::new(s1, vec![0.25]).unwrap();
        assert_eq!(mse_loss(&x, &x).unwrap(), 0.0);
        assert!((mse_loss(&x, &y).unwrap() - 0.0625).abs() < 1e-15);
        let a = Frame::new(s2, vec![1.0, 0.0]).unwrap();
        let b = Frame::new(s2, vec![0.0, 1.0]).unwrap();
        assert_eq!(mse_loss(&a, &b).unwrap(), 1.0);
        assert!(matches!(mse_loss(&x, &a), Err(Error::Dimension { .. })));
    }

    #[test]
    fn kl_examples() {
        assert_eq!(vae_kl(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert!((vae_kl(&[1.0], &[0.0]).unwrap() - 0.5).abs() < 1e-15);
        // −½(1 + ln 4 − 0 − 4)
        let expected = -0.5 * (1.0 + 4f64.ln() - 4.0);
        assert!((vae_kl(&[0.0], &[4f64.ln()]).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.806853).abs() < 1e-6);
        assert!(vae_kl(&[0.0], &[0.0, 1.0]).is_err());
    }
}
