//! Work spread over a rayon pool. Results are always collected in input
//! order, so they do not depend on the number of workers.

use rayon::prelude::*;
use robustaug_core::corpus::LabeledDataset;
use robustaug_core::metrics::MetricsReport;
use robustaug_core::model::Model;
use robustaug_core::scenarios::{evaluate_model, Scenario};
use robustaug_core::search::{Chromosome, Evaluator, Fitness};

use crate::error::{Error, Result};

/// A pool with `jobs` workers (at least one).
pub fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} workers: {e}")))
}

/// Scores a batch on whatever rayon pool is current.
#[derive(Debug, Clone, Copy, Default)]
pub struct RayonEvaluator;

impl Evaluator for RayonEvaluator {
    fn evaluate_batch(&self, fitness: &dyn Fitness, batch: &[Chromosome]) -> robustaug_core::Result<Vec<f64>> {
        batch.par_iter().map(|c| fitness.evaluate(c)).collect()
    }
}

/// One report per scenario, in scenario order.
pub fn evaluate_scenarios(
    model: &Model,
    eval_sets: &[LabeledDataset],
    scenarios: &[Scenario],
) -> Result<Vec<MetricsReport>> {
    Ok(scenarios.par_iter().map(|s| evaluate_model(model, eval_sets, s)).collect::<robustaug_core::Result<_>>()?)
}
