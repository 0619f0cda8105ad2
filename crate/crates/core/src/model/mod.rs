//! A one-hidden-layer detector on a fixed high-pass view of the image.
//!
//! Preprocessing (no weights): luma, centre crop to at most 64×64, residual
//! `luma − box3(luma)` with zero padding, bilinear resample to 32×32, times a
//! fixed gain. The network is `h = tanh(W1·x + b1)` (32 features, the tap
//! point of the feature loss) followed by `z = w2·h + b2`.
//!
//! Parameters live in one flat `f64` vector laid out as `W1` (row-major,
//! 32×1024), `b1`, `w2`, `b2`.

mod train;

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use train::{train, EpochRecord, StopReason, TrainConfig, TrainHistory};

use crate::augment::resize_plane;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::rng::Rng;

pub const INPUT_SIDE: usize = 32;
pub const INPUTS: usize = INPUT_SIDE * INPUT_SIDE;
pub const HIDDEN: usize = 32;
/// Larger inputs are centre-cropped to this side before resampling.
pub const CROP_SIDE: usize = 64;
/// Smallest accepted width and height.
pub const MIN_SIDE: usize = INPUT_SIDE;
/// Scales the residual so typical inputs are of order one.
pub const INPUT_GAIN: f64 = 10.0;

const B1: usize = HIDDEN * INPUTS;
const W2: usize = B1 + HIDDEN;
const B2: usize = W2 + HIDDEN;
pub const PARAM_COUNT: usize = B2 + 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    params: Vec<f64>,
}

/// Output of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub features: Vec<f64>,
    pub logit: f64,
}

impl Forward {
    pub fn probability(&self) -> f64 {
        sigmoid(self.logit)
    }
}

impl Model {
    pub fn zeros() -> Self {
        Self { params: vec![0.0; PARAM_COUNT] }
    }

    /// Xavier-uniform weights, zero biases.
    pub fn init(rng: &mut Rng) -> Self {
        let mut m = Self::zeros();
        let a1 = libm::sqrt(6.0 / (INPUTS + HIDDEN) as f64);
        for w in &mut m.params[..B1] {
            *w = rng.uniform_unchecked(-a1, a1);
        }
        let a2 = libm::sqrt(6.0 / (HIDDEN + 1) as f64);
        for w in &mut m.params[W2..B2] {
            *w = rng.uniform_unchecked(-a2, a2);
        }
        m
    }

    pub fn from_params(params: Vec<f64>) -> Result<Self> {
        if params.len() != PARAM_COUNT {
            return Err(Error::shape(alloc::format!("expected {PARAM_COUNT} parameters, got {}", params.len())));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::param("model parameters must be finite"));
        }
        Ok(Self { params })
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn forward(&self, image: &Image) -> Result<Forward> {
        Ok(self.forward_input(&preprocess(image)?))
    }

    /// Forward pass on an already preprocessed input of length [`INPUTS`].
    pub fn forward_input(&self, x: &[f64]) -> Forward {
        debug_assert_eq!(x.len(), INPUTS);
        let p = &self.params;
        let features: Vec<f64> =
            (0..HIDDEN).map(|j| libm::tanh(dot(&p[j * INPUTS..(j + 1) * INPUTS], x) + p[B1 + j])).collect();
        let logit = dot(&p[W2..B2], &features) + p[B2];
        Forward { features, logit }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The fixed high-pass view fed to the network.
pub fn preprocess(image: &Image) -> Result<Vec<f64>> {
    let (w, h) = (image.width(), image.height());
    if w < MIN_SIDE || h < MIN_SIDE {
        return Err(Error::param(alloc::format!("model input {w}x{h} is smaller than {MIN_SIDE}x{MIN_SIDE}")));
    }
    let luma = image.luma();
    let (cw, ch) = (w.min(CROP_SIDE), h.min(CROP_SIDE));
    let (x0, y0) = ((w - cw) / 2, (h - ch) / 2);
    let at = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= cw as isize || y >= ch as isize {
            0.0
        } else {
            luma[(y0 + y as usize) * w + x0 + x as usize]
        }
    };
    let mut residual = Vec::with_capacity(cw * ch);
    for y in 0..ch as isize {
        for x in 0..cw as isize {
            let mut box_sum = 0.0;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    box_sum += at(x + dx, y + dy);
                }
            }
            residual.push(at(x, y) - box_sum / 9.0);
        }
    }
    let mut x = resize_plane(&residual, cw, ch, INPUT_SIDE, INPUT_SIDE);
    x.iter_mut().for_each(|v| *v *= INPUT_GAIN);
    Ok(x)
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// `log(1 + e^z) − y·z`, evaluated without overflow.
pub fn bce_loss(logit: f64, label: u8) -> f64 {
    let softplus = logit.max(0.0) + libm::log1p(libm::exp(-libm::fabs(logit)));
    softplus - if label == 1 { logit } else { 0.0 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FtKind {
    #[default]
    None,
    Mse,
    Cosine,
}

/// Norms at or below this count as zero for the cosine loss.
const COSINE_EPS: f64 = 1e-12;

pub fn feature_loss(a: &[f64], b: &[f64], kind: FtKind) -> Result<f64> {
    Ok(feature_loss_grad(a, b, kind)?.0)
}

/// Loss and its gradients with respect to both arguments.
fn feature_loss_grad(a: &[f64], b: &[f64], kind: FtKind) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    if a.len() != b.len() {
        return Err(Error::shape(alloc::format!("feature lengths {} and {} differ", a.len(), b.len())));
    }
    let n = a.len();
    match kind {
        FtKind::None => Ok((0.0, vec![0.0; n], vec![0.0; n])),
        FtKind::Mse => {
            let inv = 1.0 / n.max(1) as f64;
            let loss = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() * inv;
            let ga: Vec<f64> = a.iter().zip(b).map(|(x, y)| 2.0 * (x - y) * inv).collect();
            let gb = ga.iter().map(|g| -g).collect();
            Ok((loss, ga, gb))
        }
        FtKind::Cosine => {
            let na = libm::sqrt(dot(a, a));
            let nb = libm::sqrt(dot(b, b));
            if na <= COSINE_EPS && nb <= COSINE_EPS {
                return Ok((0.0, vec![0.0; n], vec![0.0; n]));
            }
            if na <= COSINE_EPS || nb <= COSINE_EPS {
                return Ok((1.0, vec![0.0; n], vec![0.0; n]));
            }
            let c = dot(a, b) / (na * nb);
            let ga = a.iter().zip(b).map(|(x, y)| -(y / (na * nb) - c * x / (na * na))).collect();
            let gb = a.iter().zip(b).map(|(x, y)| -(x / (na * nb) - c * y / (nb * nb))).collect();
            Ok((1.0 - c, ga, gb))
        }
    }
}

/// Weights of the two loss terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub ft_kind: FtKind,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { lambda1: 1.0, lambda2: 0.0, ft_kind: FtKind::None }
    }
}

impl LossConfig {
    pub fn dual(lambda2: f64, ft_kind: FtKind) -> Self {
        Self { lambda1: 1.0, lambda2, ft_kind }
    }

    /// `λ2` must be zero without a feature loss; a feature loss with `λ2 = 0`
    /// is allowed and behaves exactly like none.
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda1 >= 0.0) || !(self.lambda2 >= 0.0) || !self.lambda1.is_finite() || !self.lambda2.is_finite() {
            return Err(Error::param("loss weights must be finite and >= 0"));
        }
        if self.ft_kind == FtKind::None && self.lambda2 != 0.0 {
            return Err(Error::param("lambda2 > 0 needs a feature loss kind"));
        }
        Ok(())
    }

    fn uses_twins(&self) -> bool {
        self.ft_kind != FtKind::None
    }
}

pub fn total_loss(l_cls: f64, l_ft: f64, cfg: &LossConfig) -> f64 {
    cfg.lambda1 * l_cls + cfg.lambda2 * l_ft
}

/// One preprocessed training example and, when a feature loss is active, its
/// preprocessed perturbed twin.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchItem {
    pub input: Vec<f64>,
    pub label: u8,
    pub twin: Option<Vec<f64>>,
}

/// Batch means of the loss terms.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub cls: f64,
    pub ft: f64,
}

/// Gradient of the batch-mean total loss with respect to every parameter.
///
/// The feature loss is differentiated through both the original and the
/// twin forward pass. With `λ2 = 0` the twin is only used to report `L_ft`,
/// so the gradient is bit-identical to the classification-only one.
pub fn backward(model: &Model, batch: &[BatchItem], cfg: &LossConfig) -> Result<(Vec<f64>, LossBreakdown)> {
    cfg.validate()?;
    if batch.is_empty() {
        return Err(Error::param("empty batch"));
    }
    let p = model.params();
    let mut grad = vec![0.0; PARAM_COUNT];
    let mut sums = LossBreakdown::default();
    let scale = 1.0 / batch.len() as f64;
    for item in batch {
        if item.input.len() != INPUTS {
            return Err(Error::shape(alloc::format!("input length {} != {INPUTS}", item.input.len())));
        }
        let fwd = model.forward_input(&item.input);
        let l_cls = bce_loss(fwd.logit, item.label);
        let dz = cfg.lambda1 * (sigmoid(fwd.logit) - item.label as f64) * scale;
        let mut dh: Vec<f64> = p[W2..B2].iter().map(|w| w * dz).collect();
        for (g, h) in grad[W2..B2].iter_mut().zip(&fwd.features) {
            *g += dz * h;
        }
        grad[B2] += dz;

        let mut l_ft = 0.0;
        if cfg.uses_twins() {
            let twin = item.twin.as_ref().ok_or_else(|| Error::param("feature loss needs a twin per item"))?;
            if twin.len() != INPUTS {
                return Err(Error::shape(alloc::format!("twin length {} != {INPUTS}", twin.len())));
            }
            let twin_fwd = model.forward_input(twin);
            let (loss, ga, gb) = feature_loss_grad(&fwd.features, &twin_fwd.features, cfg.ft_kind)?;
            l_ft = loss;
            if cfg.lambda2 != 0.0 {
                let k = cfg.lambda2 * scale;
                for (d, g) in dh.iter_mut().zip(&ga) {
                    *d += k * g;
                }
                let dh_twin: Vec<f64> = gb.iter().map(|g| k * g).collect();
                accumulate_hidden(&mut grad, &dh_twin, &twin_fwd.features, twin);
            }
        }
        accumulate_hidden(&mut grad, &dh, &fwd.features, &item.input);

        sums.cls += l_cls;
        sums.ft += l_ft;
        sums.total += total_loss(l_cls, l_ft, cfg);
    }
    let n = batch.len() as f64;
    Ok((grad, LossBreakdown { total: sums.total / n, cls: sums.cls / n, ft: sums.ft / n }))
}

/// Push `dL/dh` back through the tanh layer into `W1` and `b1`.
fn accumulate_hidden(grad: &mut [f64], dh: &[f64], h: &[f64], x: &[f64]) {
    for j in 0..HIDDEN {
        let da = dh[j] * (1.0 - h[j] * h[j]);
        if da == 0.0 {
            continue;
        }
        for (g, xi) in grad[j * INPUTS..(j + 1) * INPUTS].iter_mut().zip(x) {
            *g += da * xi;
        }
        grad[B1 + j] += da;
    }
}
