use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{argmax, Chromosome, Decision, Evaluator, Fitness, Memo, SearchTrace};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Probability that a gene starts enabled in a random initial population.
const INIT_GENE_PROB: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub mutation_prob_per_gene: f64,
    pub tournament_size: usize,
    pub elitism: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 5,
            generations: 8,
            mutation_prob_per_gene: 0.1,
            tournament_size: 3,
            elitism: 1,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::param("population must hold at least 2 chromosomes"));
        }
        if self.generations == 0 {
            return Err(Error::param("at least one generation is needed"));
        }
        if self.tournament_size == 0 || self.tournament_size > self.population_size {
            return Err(Error::param(alloc::format!(
                "tournament size {} outside 1..={}",
                self.tournament_size,
                self.population_size
            )));
        }
        if self.elitism > self.population_size {
            return Err(Error::param("elitism exceeds the population"));
        }
        if !(0.0..=1.0).contains(&self.mutation_prob_per_gene) {
            return Err(Error::param(alloc::format!(
                "mutation probability {} outside [0, 1]",
                self.mutation_prob_per_gene
            )));
        }
        Ok(())
    }
}

/// GA from a random initial population drawn from `cfg.seed`.
pub fn ga_search<E: Evaluator + ?Sized>(
    fitness: &dyn Fitness,
    cfg: &GaConfig,
    evaluator: &E,
) -> Result<(Chromosome, SearchTrace)> {
    cfg.validate()?;
    let n = fitness.pool_size();
    let mut rng = Rng::new(cfg.seed).split_str("init");
    let initial = (0..cfg.population_size).map(|_| (0..n).map(|_| rng.bernoulli(INIT_GENE_PROB)).collect()).collect();
    ga_search_from(fitness, cfg, initial, evaluator)
}

/// GA from a given initial population.
///
/// Every generation is scored, its `elitism` best (earliest on ties) pass
/// unchanged, and the rest is refilled by two tournaments, a single-point
/// crossover and per-gene flips. Returns the best chromosome ever scored.
pub fn ga_search_from<E: Evaluator + ?Sized>(
    fitness: &dyn Fitness,
    cfg: &GaConfig,
    initial: Vec<Chromosome>,
    evaluator: &E,
) -> Result<(Chromosome, SearchTrace)> {
    cfg.validate()?;
    let n = fitness.pool_size();
    if n == 0 {
        return Err(Error::param("the pool is empty"));
    }
    if initial.len() != cfg.population_size {
        return Err(Error::param(alloc::format!(
            "initial population has {} chromosomes, expected {}",
            initial.len(),
            cfg.population_size
        )));
    }
    let breed_root = Rng::new(cfg.seed).split_str("breed");
    let mut memo = Memo::new(fitness, evaluator);
    let mut trace = SearchTrace::new("ga");
    let mut population = initial;

    for generation in 0..cfg.generations {
        let scored = memo.score(&population)?;
        let values: Vec<f64> = scored.iter().map(|s| s.fitness).collect();
        let elites = ranked(&values, cfg.elitism);
        let last = generation + 1 == cfg.generations;
        let decisions: Vec<Decision> = (0..values.len())
            .map(|i| if !last && elites.contains(&i) { Decision::Elite } else { Decision::Evaluated })
            .collect();
        trace.push_round(generation, &scored, &decisions);
        if last {
            break;
        }
        let mut rng = breed_root.split(generation as u64);
        let mut next: Vec<Chromosome> = elites.iter().map(|&i| population[i].clone()).collect();
        while next.len() < cfg.population_size {
            let a = &population[tournament(&values, cfg.tournament_size, &mut rng)];
            let b = &population[tournament(&values, cfg.tournament_size, &mut rng)];
            let mut child = crossover(a, b, &mut rng);
            for gene in child.iter_mut() {
                if rng.bernoulli(cfg.mutation_prob_per_gene) {
                    *gene = !*gene;
                }
            }
            next.push(child);
        }
        population = next;
    }
    trace.fitness_calls = memo.calls;
    Ok((trace.best.clone(), trace))
}

/// Indices of the `k` largest values, best first, earliest first on ties.
fn ranked(values: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
    order.truncate(k);
    order
}

/// `size` draws with replacement; the fittest draw wins, the first on ties.
fn tournament(values: &[f64], size: usize, rng: &mut Rng) -> usize {
    let picks: Vec<usize> = (0..size).map(|_| rng.below_usize(values.len())).collect();
    picks[argmax(picks.iter().map(|&i| values[i])).expect("tournament size >= 1")]
}

/// Head of `a` and tail of `b`, cut at a point uniform in `1..len`.
fn crossover(a: &[bool], b: &[bool], rng: &mut Rng) -> Chromosome {
    if a.len() < 2 {
        return a.to_vec();
    }
    let cut = 1 + rng.below_usize(a.len() - 1);
    a[..cut].iter().chain(&b[cut..]).copied().collect()
}
