//! Round-robin parallel evaluation of a genome batch.

use crate::encoding::{Evaluator, Genome, Individual};
use crate::error::{Error, Result};
use crate::expander::Expander;

/// Worker that evaluates individual `j` when `workers` workers are available.
pub fn assign_worker(j: usize, workers: usize) -> Result<usize> {
    if workers == 0 {
        return Err(Error::ZeroWorkers);
    }
    Ok(j % workers)
}

/// Indices handled by each worker, in order.
pub fn worker_batches(count: usize, workers: usize) -> Result<Vec<Vec<usize>>> {
    if workers == 0 {
        return Err(Error::ZeroWorkers);
    }
    let mut batches = vec![Vec::new(); workers];
    for j in 0..count {
        batches[assign_worker(j, workers)?].push(j);
    }
    Ok(batches)
}

/// Evaluates every genome; output order matches input order and is identical
/// to sequential evaluation for any worker count.
pub fn parallel_evaluate<E: Expander>(
    genomes: Vec<Genome>,
    evaluator: &Evaluator<'_, E>,
    workers: usize,
) -> Result<Vec<Individual>> {
    let batches = worker_batches(genomes.len(), workers)?;
    if workers == 1 || genomes.len() <= 1 {
        return Ok(genomes.into_iter().map(|g| evaluator.evaluate(g)).collect());
    }
    let genomes = &genomes;
    let mut slots: Vec<Option<Individual>> = vec![None; genomes.len()];
    std::thread::scope(|scope| {
        let handles: Vec<_> = batches
            .into_iter()
            .filter(|b| !b.is_empty())
            .map(|batch| {
                scope.spawn(move || {
                    batch
                        .into_iter()
                        .map(|j| (j, evaluator.evaluate(genomes[j].clone())))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for handle in handles {
            for (j, ind) in handle.join().expect("evaluation worker panicked") {
                slots[j] = Some(ind);
            }
        }
    });
    Ok(slots
        .into_iter()
        .map(|s| s.expect("every index is assigned to a worker"))
        .collect())
}
