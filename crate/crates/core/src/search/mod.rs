//! Subset search over a pool of optional operators.
//!
//! A candidate is a bit vector over the pool. Both strategies ask an
//! [`Evaluator`] for fitness values one batch at a time (a greedy round or a
//! GA generation), memoize them by chromosome, and record every lookup in a
//! [`SearchTrace`] in candidate order, so the trace never depends on how the
//! evaluator schedules its work.

mod fitness;
mod ga;
mod greedy;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use fitness::{fitness_seed, subset_fitness_map, AdditiveFitness, MapFitness, SEARCH_EPOCHS};
pub use ga::{ga_search, ga_search_from, GaConfig};
pub use greedy::{exhaustive_search, greedy_call_count, greedy_search};

pub type Chromosome = Vec<bool>;

/// Maps a chromosome to a score, higher is better. Must be deterministic.
pub trait Fitness: Sync {
    fn pool_size(&self) -> usize;
    fn evaluate(&self, bits: &[bool]) -> Result<f64>;
}

/// Scores a batch of distinct chromosomes, returning values in batch order.
pub trait Evaluator {
    fn evaluate_batch(&self, fitness: &dyn Fitness, batch: &[Chromosome]) -> Result<Vec<f64>>;
}

/// One candidate after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Evaluator for Sequential {
    fn evaluate_batch(&self, fitness: &dyn Fitness, batch: &[Chromosome]) -> Result<Vec<f64>> {
        batch.iter().map(|c| fitness.evaluate(c)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Evaluated,
    /// Became (or stayed) the greedy incumbent.
    Selected,
    /// Carried unchanged into the next GA generation.
    Elite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    /// Greedy round or GA generation.
    pub round: usize,
    pub candidate: Chromosome,
    pub fitness: f64,
    /// Whether the value came from the memo instead of a fitness call.
    pub cached: bool,
    pub decision: Decision,
    pub best_so_far: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub strategy: String,
    pub records: Vec<TraceRecord>,
    pub best: Chromosome,
    pub best_fitness: f64,
    pub fitness_calls: usize,
}

impl SearchTrace {
    fn new(strategy: &str) -> Self {
        Self {
            strategy: strategy.into(),
            records: Vec::new(),
            best: Chromosome::new(),
            best_fitness: f64::NEG_INFINITY,
            fitness_calls: 0,
        }
    }

    /// Append one round; the first of several equal values stays best.
    fn push_round(&mut self, round: usize, scored: &[Scored], decisions: &[Decision]) {
        for (s, &decision) in scored.iter().zip(decisions) {
            if s.fitness > self.best_fitness {
                self.best_fitness = s.fitness;
                self.best = s.bits.clone();
            }
            self.records.push(TraceRecord {
                step: self.records.len(),
                round,
                candidate: s.bits.clone(),
                fitness: s.fitness,
                cached: s.cached,
                decision,
                best_so_far: self.best_fitness,
            });
        }
    }
}

#[derive(Debug, Clone)]
struct Scored {
    bits: Chromosome,
    fitness: f64,
    cached: bool,
}

/// Fitness values by chromosome; only unseen chromosomes reach the evaluator.
struct Memo<'a, E: ?Sized> {
    fitness: &'a dyn Fitness,
    evaluator: &'a E,
    cache: BTreeMap<Chromosome, f64>,
    calls: usize,
}

impl<'a, E: Evaluator + ?Sized> Memo<'a, E> {
    fn new(fitness: &'a dyn Fitness, evaluator: &'a E) -> Self {
        Self { fitness, evaluator, cache: BTreeMap::new(), calls: 0 }
    }

    fn score(&mut self, batch: &[Chromosome]) -> Result<Vec<Scored>> {
        let n = self.fitness.pool_size();
        if let Some(bad) = batch.iter().find(|c| c.len() != n) {
            return Err(Error::param(alloc::format!("chromosome of length {} for a pool of {n}", bad.len())));
        }
        let mut fresh: Vec<Chromosome> = Vec::new();
        for c in batch {
            if !self.cache.contains_key(c) && !fresh.contains(c) {
                fresh.push(c.clone());
            }
        }
        let values = self.evaluator.evaluate_batch(self.fitness, &fresh)?;
        if values.len() != fresh.len() {
            return Err(Error::shape(alloc::format!("evaluator returned {} values for {}", values.len(), fresh.len())));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::param("fitness returned NaN"));
        }
        self.calls += fresh.len();
        let mut first_use: Vec<Chromosome> = Vec::new();
        for (c, v) in fresh.into_iter().zip(values) {
            self.cache.insert(c.clone(), v);
            first_use.push(c);
        }
        Ok(batch
            .iter()
            .map(|c| {
                let cached = match first_use.iter().position(|f| f == c) {
                    Some(i) => {
                        first_use.swap_remove(i);
                        false
                    }
                    None => true,
                };
                Scored { bits: c.clone(), fitness: self.cache[c], cached }
            })
            .collect())
    }
}

/// Index of the largest value; the earliest wins ties.
fn argmax(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}
