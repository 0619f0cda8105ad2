use alloc::vec::Vec;

use super::Fitness;
use crate::augment::{AugmentationSet, OperatorKind};
use crate::corpus::{generate_corpus, CorpusConfig, LabeledDataset};
use crate::error::{Error, Result};
use crate::model::{train, LossConfig, TrainConfig};
use crate::rng::Rng;
use crate::scenarios::{evaluate_model, Scenario};

/// Epoch budget of one fitness evaluation.
pub const SEARCH_EPOCHS: usize = 12;

/// Sum of the weights of the enabled operators.
#[derive(Debug, Clone, PartialEq)]
pub struct AdditiveFitness {
    pub weights: Vec<f64>,
}

impl AdditiveFitness {
    pub fn new(weights: Vec<f64>) -> Self {
        Self { weights }
    }
}

impl Fitness for AdditiveFitness {
    fn pool_size(&self) -> usize {
        self.weights.len()
    }

    fn evaluate(&self, bits: &[bool]) -> Result<f64> {
        Ok(bits.iter().zip(&self.weights).filter(|(&b, _)| b).map(|(_, w)| w).sum())
    }
}

/// Training seed for `set`, a function of the master seed and which pool
/// operators are enabled only.
pub fn fitness_seed(master_seed: u64, set: &AugmentationSet) -> u64 {
    let mask = set.bits().iter().enumerate().fold(0u64, |m, (i, &b)| m | (b as u64) << i);
    Rng::new(master_seed).split_str("fitness").split(mask).key()
}

/// Train with `set` (no feature loss, seed from [`fitness_seed`]) and return
/// the mAP under the `combined` scenario.
pub fn subset_fitness_map(
    set: &AugmentationSet,
    train_set: &LabeledDataset,
    val_set: &LabeledDataset,
    eval_sets: &[LabeledDataset],
    train_cfg: &TrainConfig,
    master_seed: u64,
) -> Result<f64> {
    set.check_executable()?;
    let cfg =
        TrainConfig { train_augmentations: set.clone(), seed: fitness_seed(master_seed, set), ..train_cfg.clone() };
    let (model, _) = train(train_set, val_set, &cfg, &LossConfig::default())?;
    let combined = Scenario::builtin("combined").expect("built-in scenario");
    Ok(evaluate_model(&model, eval_sets, &combined)?.map)
}

/// The production fitness: bits select operators from `pool`, and each
/// candidate is trained on a half-size corpus for a reduced epoch budget.
#[derive(Debug, Clone)]
pub struct MapFitness {
    pool: Vec<OperatorKind>,
    base: AugmentationSet,
    train_set: LabeledDataset,
    val_set: LabeledDataset,
    eval_sets: Vec<LabeledDataset>,
    train_cfg: TrainConfig,
    master_seed: u64,
}

impl MapFitness {
    /// Over [`OperatorKind::EXECUTABLE`], with `train_cfg` shortened to
    /// `epochs`. Operator parameters come from `train_cfg.train_augmentations`.
    pub fn new(corpus: &CorpusConfig, train_cfg: &TrainConfig, epochs: usize, master_seed: u64) -> Result<Self> {
        Self::with_pool(&OperatorKind::EXECUTABLE, corpus, train_cfg, epochs, master_seed)
    }

    pub fn with_pool(
        pool: &[OperatorKind],
        corpus: &CorpusConfig,
        train_cfg: &TrainConfig,
        epochs: usize,
        master_seed: u64,
    ) -> Result<Self> {
        if pool.is_empty() || pool.iter().any(|k| k.pool_index().is_none()) {
            return Err(Error::param("the fitness pool must be a nonempty set of searchable operators"));
        }
        let half = CorpusConfig {
            n_train_per_class: corpus.n_train_per_class.div_ceil(2),
            n_eval_per_class: corpus.n_eval_per_class.div_ceil(2),
            ..*corpus
        };
        let data = generate_corpus(&half)?;
        let (train_set, val_set) = data.train_val()?;
        let train_cfg = TrainConfig { epochs, ..train_cfg.clone() };
        train_cfg.validate()?;
        let mut base = train_cfg.train_augmentations.clone();
        for &k in pool {
            base.set_enabled(k, false)?;
        }
        Ok(Self { pool: pool.to_vec(), base, train_set, val_set, eval_sets: data.eval_sets, train_cfg, master_seed })
    }

    pub fn pool(&self) -> &[OperatorKind] {
        &self.pool
    }

    /// The augmentation set a chromosome stands for.
    pub fn set_for(&self, bits: &[bool]) -> Result<AugmentationSet> {
        if bits.len() != self.pool.len() {
            return Err(Error::param(alloc::format!("{} bits for a pool of {}", bits.len(), self.pool.len())));
        }
        let mut set = self.base.clone();
        for (&k, &on) in self.pool.iter().zip(bits) {
            set.set_enabled(k, on)?;
        }
        Ok(set)
    }
}

impl Fitness for MapFitness {
    fn pool_size(&self) -> usize {
        self.pool.len()
    }

    fn evaluate(&self, bits: &[bool]) -> Result<f64> {
        let set = self.set_for(bits)?;
        subset_fitness_map(&set, &self.train_set, &self.val_set, &self.eval_sets, &self.train_cfg, self.master_seed)
    }
}
