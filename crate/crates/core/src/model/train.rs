//! Mini-batch Adam training with step decay and early stopping.
//!
//! Random streams are all split from `TrainConfig::seed`: `init` for the
//! weights, `order` then the epoch for the shuffle, and `augment` then the
//! epoch then the dataset index for each sample's augmentation. The twin for
//! the feature loss is the augmented image run through the perturbation
//! scenario with an epoch-specific salt, keyed by the dataset index.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{backward, preprocess, BatchItem, LossConfig, Model, PARAM_COUNT};
use crate::augment::{apply_pipeline, AugmentationSet};
use crate::corpus::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::{mix64, Rng};
use crate::scenarios::{apply_scenario, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub lr0: f64,
    pub lr_decay_factor: f64,
    pub lr_decay_every: usize,
    pub early_stop_patience: usize,
    pub lr_floor: f64,
    pub train_augmentations: AugmentationSet,
    pub perturbation_for_ft: Scenario,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 25,
            batch_size: 64,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            lr0: 0.001,
            lr_decay_factor: 0.1,
            lr_decay_every: 10,
            early_stop_patience: 7,
            lr_floor: 1e-6,
            train_augmentations: AugmentationSet::baseline(),
            perturbation_for_ft: Scenario::builtin("combined").expect("built-in scenario"),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.lr_decay_every == 0 || self.early_stop_patience == 0 {
            return Err(Error::param("epochs, batch size, decay interval and patience must be positive"));
        }
        let unit_open = |b: f64| b > 0.0 && b < 1.0;
        if !unit_open(self.adam_beta1) || !unit_open(self.adam_beta2) {
            return Err(Error::param("Adam betas must lie in (0, 1)"));
        }
        if !(self.adam_eps > 0.0) || !(self.lr0 > 0.0) || !(self.lr_floor >= 0.0) {
            return Err(Error::param("eps and lr0 must be > 0, lr_floor >= 0"));
        }
        if !(self.lr_decay_factor > 0.0 && self.lr_decay_factor <= 1.0) {
            return Err(Error::param("lr decay factor must lie in (0, 1]"));
        }
        self.train_augmentations.check_executable()?;
        self.perturbation_for_ft.validate()
    }

    /// Step-decayed learning rate for a zero-based epoch.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        self.lr0 * libm::pow(self.lr_decay_factor, (epoch / self.lr_decay_every) as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EpochsExhausted,
    EarlyStop,
    LrFloor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// One-based.
    pub epoch: usize,
    pub lr: f64,
    pub mean_total: f64,
    pub mean_cls: f64,
    pub mean_ft: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub stop_reason: StopReason,
    /// One-based epoch whose weights were returned.
    pub best_epoch: usize,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new() -> Self {
        Self { m: vec![0.0; PARAM_COUNT], v: vec![0.0; PARAM_COUNT], t: 0 }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64, cfg: &TrainConfig) {
        self.t += 1;
        let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
        let c1 = 1.0 - libm::pow(b1, self.t as f64);
        let c2 = 1.0 - libm::pow(b2, self.t as f64);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= lr * (*m / c1) / (libm::sqrt(*v / c2) + cfg.adam_eps);
        }
    }
}

/// Fraction of `set` classified correctly (probability > 0.5 means synthetic).
pub(crate) fn dataset_accuracy(model: &Model, set: &LabeledDataset) -> Result<f64> {
    let mut correct = 0usize;
    for (img, &l) in set.images().iter().zip(set.labels()) {
        let positive = model.forward(img)?.logit > 0.0;
        correct += (positive == (l == 1)) as usize;
    }
    Ok(correct as f64 / set.len() as f64)
}

/// Train from scratch and return the weights of the best validation epoch.
///
/// An epoch improves on the best when its validation accuracy is strictly
/// higher; training stops after `early_stop_patience` epochs in a row without
/// improvement. Among epochs tied at the best accuracy the latest one's
/// weights are kept.
pub fn train(
    train_set: &LabeledDataset,
    val_set: &LabeledDataset,
    cfg: &TrainConfig,
    loss_cfg: &LossConfig,
) -> Result<(Model, TrainHistory)> {
    cfg.validate()?;
    loss_cfg.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::param("training and validation sets must be nonempty"));
    }
    let root = Rng::new(cfg.seed);
    let mut model = Model::init(&mut root.split_str("init"));
    let order_root = root.split_str("order");
    let aug_root = root.split_str("augment");
    let twins = loss_cfg.ft_kind != super::FtKind::None;

    let mut adam = Adam::new();
    let mut records = Vec::new();
    let mut best = (f64::NEG_INFINITY, model.clone(), 0usize);
    let mut stale = 0usize;
    let mut stop_reason = StopReason::EpochsExhausted;

    for epoch in 0..cfg.epochs {
        let lr = cfg.lr_at(epoch);
        if lr <= cfg.lr_floor {
            stop_reason = StopReason::LrFloor;
            break;
        }
        let mut order: Vec<usize> = (0..train_set.len()).collect();
        order_root.split(epoch as u64).shuffle(&mut order);
        let epoch_aug = aug_root.split(epoch as u64);
        let mut twin_scenario = cfg.perturbation_for_ft.clone();
        twin_scenario.seed_salt = mix64(cfg.perturbation_for_ft.seed_salt ^ mix64(cfg.seed ^ (epoch as u64 + 1)));

        let (mut tot, mut cls, mut ft) = (0.0, 0.0, 0.0);
        for chunk in order.chunks(cfg.batch_size) {
            let items = chunk
                .iter()
                .map(|&i| {
                    let mut rng = epoch_aug.split(i as u64);
                    let view = apply_pipeline(&cfg.train_augmentations, &train_set.images()[i], &mut rng)?;
                    let twin =
                        if twins { Some(preprocess(&apply_scenario(&twin_scenario, &view, i as u64)?)?) } else { None };
                    Ok(BatchItem { input: preprocess(&view)?, label: train_set.labels()[i], twin })
                })
                .collect::<Result<Vec<_>>>()?;
            let (grad, loss) = backward(&model, &items, loss_cfg)?;
            adam.step(model.params_mut(), &grad, lr, cfg);
            let w = chunk.len() as f64;
            tot += loss.total * w;
            cls += loss.cls * w;
            ft += loss.ft * w;
        }
        let n = train_set.len() as f64;
        let val_accuracy = dataset_accuracy(&model, val_set)?;
        records.push(EpochRecord {
            epoch: epoch + 1,
            lr,
            mean_total: tot / n,
            mean_cls: cls / n,
            mean_ft: ft / n,
            val_accuracy,
        });
        if val_accuracy > best.0 {
            best = (val_accuracy, model.clone(), epoch + 1);
            stale = 0;
        } else {
            if val_accuracy == best.0 {
                best = (val_accuracy, model.clone(), epoch + 1);
            }
            stale += 1;
        }
        if stale >= cfg.early_stop_patience {
            stop_reason = StopReason::EarlyStop;
            break;
        }
    }
    if records.is_empty() {
        return Ok((model, TrainHistory { epochs: records, stop_reason, best_epoch: 0 }));
    }
    Ok((best.1, TrainHistory { epochs: records, stop_reason, best_epoch: best.2 }))
}
