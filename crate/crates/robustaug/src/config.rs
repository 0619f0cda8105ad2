//! Experiment configuration: one TOML file, unknown keys rejected.
//!
//! Every random stream derives from `master_seed`. The `seed` fields inside
//! `[corpus]`, `[train]` and `[search.ga]` are overwritten by
//! [`ExperimentConfig::resolved`] from labelled splits of it.

use std::fs;
use std::path::{Path, PathBuf};

use robustaug_core::corpus::CorpusConfig;
use robustaug_core::model::{LossConfig, TrainConfig};
use robustaug_core::scenarios::{builtin_scenarios, Scenario};
use robustaug_core::search::{GaConfig, SEARCH_EPOCHS};
use robustaug_core::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub ga: GaConfig,
    /// Greedy rounds after the first one.
    pub max_rounds: usize,
    /// Epoch budget of each fitness evaluation.
    pub fitness_epochs: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { ga: GaConfig::default(), max_rounds: 10, fitness_epochs: SEARCH_EPOCHS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub corpus: CorpusConfig,
    pub train: TrainConfig,
    pub loss: LossConfig,
    /// Added to the built-in scenarios; an entry named like a built-in
    /// replaces it.
    pub scenarios: Vec<Scenario>,
    pub search: SearchConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            master_seed: 0,
            output_dir: PathBuf::from("runs"),
            corpus: CorpusConfig::default(),
            train: TrainConfig::default(),
            loss: LossConfig::default(),
            scenarios: Vec::new(),
            search: SearchConfig::default(),
        }
    }
}

/// The hashed part of a config: everything except where outputs go.
#[derive(Serialize)]
struct Hashed<'a> {
    master_seed: u64,
    corpus: &'a CorpusConfig,
    train: &'a TrainConfig,
    loss: &'a LossConfig,
    scenarios: &'a [Scenario],
    search: &'a SearchConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        // toml messages span several lines; keep the first for one-line errors
        toml::from_str(text).map_err(|e| Error::Config(e.message().replace('\n', " ")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Copy with every nested seed derived from `master_seed`.
    pub fn resolved(&self) -> Self {
        let root = Rng::new(self.master_seed);
        let mut out = self.clone();
        out.corpus.seed = root.split_str("corpus").key();
        out.train.seed = root.split_str("train").key();
        out.search.ga.seed = root.split_str("ga").key();
        out
    }

    pub fn validate(&self) -> Result<()> {
        self.corpus.validate()?;
        self.train.validate()?;
        self.loss.validate()?;
        self.search.ga.validate()?;
        if self.search.fitness_epochs == 0 {
            return Err(Error::Config("search.fitness_epochs must be positive".into()));
        }
        let mut names: Vec<&str> = Vec::new();
        for s in &self.scenarios {
            s.validate()?;
            if names.contains(&s.name.as_str()) {
                return Err(Error::Config(format!("scenario {} is defined twice", s.name)));
            }
            names.push(&s.name);
        }
        Ok(())
    }

    /// Built-ins in their usual order with overrides applied, then the
    /// configured scenarios that are not built-ins, in file order.
    pub fn scenario_list(&self) -> Vec<Scenario> {
        let mut list = builtin_scenarios();
        for s in &self.scenarios {
            match list.iter_mut().find(|b| b.name == s.name) {
                Some(slot) => *slot = s.clone(),
                None => list.push(s.clone()),
            }
        }
        list
    }

    /// SHA-256 over the canonical JSON of the resolved config, without
    /// `output_dir`, as lowercase hex.
    pub fn hash(&self) -> String {
        let r = self.resolved();
        let view = Hashed {
            master_seed: r.master_seed,
            corpus: &r.corpus,
            train: &r.train,
            loss: &r.loss,
            scenarios: &r.scenarios,
            search: &r.search,
        };
        let json = serde_json::to_vec(&view).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}
