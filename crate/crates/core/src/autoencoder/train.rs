use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{stack_frames, AutoencoderModel, Variant};
use crate::error::{Error, Result};
use crate::frame::Frame;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Gaussian,
    SaltPepper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub magnitude: f64,
}

impl NoiseSpec {
    pub fn gaussian(magnitude: f64) -> Self {
        Self {
            kind: NoiseKind::Gaussian,
            magnitude,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    /// Plain minibatch gradient descent.
    Sgd,
    /// Adam with β₁ = 0.9, β₂ = 0.999, ε = 1e-8.
    #[default]
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub seed: u64,
    /// Input corruption, used by the denoising variant.
    pub noise: Option<NoiseSpec>,
    /// Weight of the KL term, used by the variational variant.
    pub kl_weight: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 64,
            optimizer: Optimizer::Adam,
            learning_rate: 1e-3,
            seed: 0,
            noise: None,
            kl_weight: 1.0,
        }
    }
}

impl TrainConfig {
    /// Defaults for `variant`: gaussian input noise 0.1 for denoising.
    pub fn for_variant(variant: Variant) -> Self {
        let mut cfg = Self::default();
        if variant == Variant::Denoising {
            cfg.noise = Some(NoiseSpec::gaussian(0.1));
        }
        cfg
    }

    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.kl_weight >= 0.0) {
            return Err(Error::Config("kl_weight must be non-negative".into()));
        }
        if let Some(noise) = self.noise {
            if !(noise.magnitude >= 0.0) {
                return Err(Error::Config("noise magnitude must be non-negative".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: AutoencoderModel,
    /// Mean per-sample loss of each epoch.
    pub loss_history: Vec<f64>,
}

/// Returns a corrupted copy of `frame`: additive gaussian noise clamped to
/// `[0, 1]`, or salt-and-pepper with probability `magnitude / 2` per extreme.
pub fn corrupt(frame: &Frame, noise: NoiseSpec, rng: &mut impl Rng) -> Frame {
    let mut out = frame.clone();
    corrupt_in_place(out.pixels_mut(), noise, rng);
    out
}

pub(crate) fn corrupt_in_place<'a>(
    pixels: impl IntoIterator<Item = &'a mut f64>,
    noise: NoiseSpec,
    rng: &mut impl Rng,
) {
    if noise.magnitude == 0.0 {
        return;
    }
    match noise.kind {
        NoiseKind::Gaussian => {
            let normal = Normal::new(0.0, noise.magnitude).expect("magnitude is finite and positive");
            for p in pixels {
                *p = (*p + normal.sample(rng)).clamp(0.0, 1.0);
            }
        }
        NoiseKind::SaltPepper => {
            let half = (noise.magnitude / 2.0).min(0.5);
            for p in pixels {
                let u: f64 = rng.random();
                if u < half {
                    *p = 0.0;
                } else if u < 2.0 * half {
                    *p = 1.0;
                }
            }
        }
    }
}

/// Parameter gradients, laid out like the model.
#[derive(Debug, Clone)]
pub(crate) struct Gradients {
    pub layers: Vec<(Array2<f64>, Array1<f64>)>,
    pub logvar_head: Option<(Array2<f64>, Array1<f64>)>,
}

/// Mean batch loss and its gradient. `input` and `target` hold one sample per
/// row; `eps` supplies the reparameterisation noise for the variational
/// variant (one row per sample, code width columns).
pub(crate) fn loss_and_gradients(
    model: &AutoencoderModel,
    input: ArrayView2<'_, f64>,
    target: ArrayView2<'_, f64>,
    eps: Option<ArrayView2<'_, f64>>,
    kl_weight: f64,
) -> (f64, Gradients) {
    let batch = input.nrows() as f64;
    let m = input.ncols() as f64;
    let layers = model.layers();
    let code = model.code_layer();
    let variational = model.variant() == Variant::Variational;

    // activations[l] is the input of layer l
    let mut activations: Vec<Array2<f64>> = Vec::with_capacity(layers.len() + 1);
    activations.push(input.to_owned());
    let mut vae_cache = None;
    for (l, layer) in layers.iter().enumerate() {
        let prev = activations[l].view();
        if variational && l == code {
            let head = model.logvar_head().expect("variational model has a log-variance head");
            let mean = layer.affine(prev);
            let logvar = head.affine(prev);
            let eps = eps.expect("variational training needs eps").to_owned();
            let std = logvar.mapv(|v| (0.5 * v).exp());
            let z = &mean + &(&std * &eps);
            vae_cache = Some((mean, logvar, std, eps));
            activations.push(z);
        } else {
            activations.push(layer.forward(prev));
        }
    }

    let output = activations.last().expect("at least one layer");
    let diff = output - &target;
    let mut loss = diff.mapv(|d| d * d).sum() / (batch * m);
    let mut grad = diff * (2.0 / (batch * m));

    if let Some((mean, logvar, _, _)) = &vae_cache {
        let kl: f64 = ndarray::Zip::from(mean)
            .and(logvar)
            .fold(0.0, |acc, &mu, &lv| acc - 0.5 * (1.0 + lv - mu * mu - lv.exp()));
        loss += kl_weight * kl / (batch * m);
    }

    let mut layer_grads = vec![None; layers.len()];
    let mut logvar_grad = None;
    for l in (0..layers.len()).rev() {
        let layer = &layers[l];
        let prev = &activations[l];
        if let (true, Some((mean, logvar, std, eps))) = (variational && l == code, &vae_cache) {
            let scale = kl_weight / (batch * m);
            let g_mean = &grad + &(mean * scale);
            let mut g_logvar = &grad * eps;
            g_logvar.zip_mut_with(std, |g, &s| *g *= 0.5 * s);
            g_logvar.zip_mut_with(logvar, |g, &lv| *g += scale * 0.5 * (lv.exp() - 1.0));
            let head = model.logvar_head().expect("checked above");
            layer_grads[l] = Some((g_mean.t().dot(prev), g_mean.sum_axis(Axis(0))));
            logvar_grad = Some((g_logvar.t().dot(prev), g_logvar.sum_axis(Axis(0))));
            if l > 0 {
                grad = g_mean.dot(&layer.weights) + g_logvar.dot(&head.weights);
            }
        } else {
            layer.activation.backprop(&mut grad, &activations[l + 1]);
            layer_grads[l] = Some((grad.t().dot(prev), grad.sum_axis(Axis(0))));
            if l > 0 {
                grad = grad.dot(&layer.weights);
            }
        }
    }

    let grads = Gradients {
        layers: layer_grads.into_iter().map(|g| g.expect("every layer visited")).collect(),
        logvar_head: logvar_grad,
    };
    (loss, grads)
}

/// Mean reconstruction loss of `frames` and its gradient with respect to each
/// layer's `(weights, bias)`. Deterministic variants only.
pub fn reconstruction_gradients(
    model: &AutoencoderModel,
    frames: &[Frame],
) -> Result<(f64, Vec<(Array2<f64>, Array1<f64>)>)> {
    if model.variant() == Variant::Variational {
        return Err(Error::Config("the variational loss is stochastic".into()));
    }
    if frames.is_empty() {
        return Err(Error::Data("no frames to differentiate".into()));
    }
    let x = stack_frames(frames, model.input_dim())?;
    let (loss, grads) = loss_and_gradients(model, x.view(), x.view(), None, 0.0);
    Ok((loss, grads.layers))
}

/// Builds the `(input, target)` pair for one batch; corruption only ever
/// touches the input.
fn training_pair(clean: Array2<f64>, noise: Option<NoiseSpec>, rng: &mut impl Rng) -> (Array2<f64>, Array2<f64>) {
    let mut input = clean.clone();
    if let Some(spec) = noise {
        corrupt_in_place(input.iter_mut(), spec, rng);
    }
    (input, clean)
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPSILON: f64 = 1e-8;

/// Per-parameter update rule, with whatever running state it needs.
enum Stepper {
    Sgd,
    Adam {
        step: i32,
        first: Vec<(Array2<f64>, Array1<f64>)>,
        second: Vec<(Array2<f64>, Array1<f64>)>,
    },
}

impl Stepper {
    fn new(optimizer: Optimizer, model: &AutoencoderModel) -> Self {
        match optimizer {
            Optimizer::Sgd => Stepper::Sgd,
            Optimizer::Adam => {
                let zeros: Vec<_> = model
                    .layers()
                    .iter()
                    .chain(model.logvar_head())
                    .map(|l| (Array2::zeros(l.weights.raw_dim()), Array1::zeros(l.bias.len())))
                    .collect();
                Stepper::Adam {
                    step: 0,
                    first: zeros.clone(),
                    second: zeros,
                }
            }
        }
    }

    fn apply(&mut self, model: &mut AutoencoderModel, grads: &Gradients, lr: f64) {
        let targets = model.layers.iter_mut().chain(model.logvar_head.as_mut());
        let grads = grads.layers.iter().chain(grads.logvar_head.as_ref());
        match self {
            Stepper::Sgd => {
                for (layer, g) in targets.zip(grads) {
                    layer.weights.scaled_add(-lr, &g.0);
                    layer.bias.scaled_add(-lr, &g.1);
                }
            }
            Stepper::Adam { step, first, second } => {
                *step += 1;
                let c1 = 1.0 - ADAM_BETA1.powi(*step);
                let c2 = 1.0 - ADAM_BETA2.powi(*step);
                let alpha = lr * c2.sqrt() / c1;
                let eps = ADAM_EPSILON * c2.sqrt();
                let update = |w: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
                    for (((w, &g), m), v) in w.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                        *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                        *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                        *w -= alpha * *m / (v.sqrt() + eps);
                    }
                };
                for (((layer, g), m), v) in targets.zip(grads).zip(first.iter_mut()).zip(second.iter_mut()) {
                    update(
                        layer.weights.as_slice_mut().expect("standard layout"),
                        g.0.as_slice().expect("standard layout"),
                        m.0.as_slice_mut().expect("standard layout"),
                        v.0.as_slice_mut().expect("standard layout"),
                    );
                    update(
                        layer.bias.as_slice_mut().expect("contiguous"),
                        g.1.as_slice().expect("contiguous"),
                        m.1.as_slice_mut().expect("contiguous"),
                        v.1.as_slice_mut().expect("contiguous"),
                    );
                }
            }
        }
    }
}

/// Minibatch training on the reconstruction loss.
///
/// Denoising models see `corrupt(x)` as input and the clean `x` as target;
/// variational models add `kl_weight · KL / m` per sample. The shuffle order
/// and all noise come from `config.seed`.
pub fn train(model: &AutoencoderModel, dataset: &[Frame], config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Data("training dataset is empty".into()));
    }
    let mut model = model.clone();
    let mut history = Vec::with_capacity(config.epochs);
    if config.epochs == 0 {
        return Ok(TrainOutcome {
            model,
            loss_history: history,
        });
    }

    let data = stack_frames(dataset, model.input_dim())?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let code_width = model.layer_dims()[model.code_layer() + 1];
    let mut stepper = Stepper::new(config.optimizer, &model);
    let noise = if model.variant() == Variant::Denoising {
        config.noise
    } else {
        None
    };

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for idx in order.chunks(config.batch_size) {
            let (input, target) = training_pair(data.select(Axis(0), idx), noise, &mut rng);
            let eps = (model.variant() == Variant::Variational).then(|| {
                Array2::from_shape_simple_fn((idx.len(), code_width), || rng.sample::<f64, _>(StandardNormal))
            });
            let (loss, grads) = loss_and_gradients(
                &model,
                input.view(),
                target.view(),
                eps.as_ref().map(|e| e.view()),
                config.kl_weight,
            );
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, loss });
            }
            total += loss * idx.len() as f64;
            stepper.apply(&mut model, &grads, config.learning_rate);
        }
        history.push(total / dataset.len() as f64);
    }

    Ok(TrainOutcome {
        model,
        loss_history: history,
    })
}
