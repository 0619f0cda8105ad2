use alloc::vec;
use alloc::vec::Vec;

use super::{argmax, Chromosome, Decision, Evaluator, Fitness, Memo, SearchTrace};
use crate::error::{Error, Result};

/// Forward selection. Round 0 scores the empty set and every singleton and
/// keeps the best (the empty set wins ties, then the lowest index). Each later
/// round scores every one-operator extension of the incumbent and moves to the
/// best one if it is strictly better; otherwise the search stops. At most
/// `max_rounds` rounds follow round 0.
pub fn greedy_search<E: Evaluator + ?Sized>(
    fitness: &dyn Fitness,
    max_rounds: usize,
    evaluator: &E,
) -> Result<(Chromosome, SearchTrace)> {
    let n = fitness.pool_size();
    if n == 0 {
        return Err(Error::param("the pool is empty"));
    }
    let mut memo = Memo::new(fitness, evaluator);
    let mut trace = SearchTrace::new("greedy");

    let mut batch = vec![vec![false; n]];
    batch.extend((0..n).map(|i| single(n, i)));
    let scored = memo.score(&batch)?;
    let win = argmax(scored.iter().map(|s| s.fitness)).expect("nonempty round");
    trace.push_round(0, &scored, &decisions(scored.len(), Some(win)));
    let mut incumbent = scored[win].bits.clone();
    let mut current = scored[win].fitness;

    let mut round = 1;
    while win != 0 && round <= max_rounds && incumbent.iter().any(|b| !b) {
        let batch: Vec<Chromosome> = (0..n)
            .filter(|&i| !incumbent[i])
            .map(|i| {
                let mut c = incumbent.clone();
                c[i] = true;
                c
            })
            .collect();
        let scored = memo.score(&batch)?;
        let top = argmax(scored.iter().map(|s| s.fitness)).expect("nonempty round");
        let improved = scored[top].fitness > current;
        trace.push_round(round, &scored, &decisions(scored.len(), improved.then_some(top)));
        if !improved {
            break;
        }
        incumbent = scored[top].bits.clone();
        current = scored[top].fitness;
        round += 1;
    }
    trace.fitness_calls = memo.calls;
    trace.best = incumbent.clone();
    trace.best_fitness = current;
    Ok((incumbent, trace))
}

/// Fitness calls made by a greedy search over `pool_size` operators that ran
/// `later_rounds` rounds after round 0 (including a final non-improving one).
pub fn greedy_call_count(pool_size: usize, later_rounds: usize) -> usize {
    1 + pool_size + (1..=later_rounds).map(|r| pool_size - r).sum::<usize>()
}

/// The best of all `2^n` subsets, the first in counting order on ties.
/// Intended as an oracle for small pools.
pub fn exhaustive_search(fitness: &dyn Fitness) -> Result<(Chromosome, f64)> {
    let n = fitness.pool_size();
    if n > 20 {
        return Err(Error::param(alloc::format!("exhaustive search over {n} operators is too large")));
    }
    let mut best = (vec![false; n], f64::NEG_INFINITY);
    for mask in 0u32..1 << n {
        let bits: Chromosome = (0..n).map(|i| mask >> i & 1 == 1).collect();
        let f = fitness.evaluate(&bits)?;
        if f > best.1 {
            best = (bits, f);
        }
    }
    Ok(best)
}

fn single(n: usize, i: usize) -> Chromosome {
    let mut c = vec![false; n];
    c[i] = true;
    c
}

fn decisions(len: usize, selected: Option<usize>) -> Vec<Decision> {
    (0..len).map(|i| if Some(i) == selected { Decision::Selected } else { Decision::Evaluated }).collect()
}
