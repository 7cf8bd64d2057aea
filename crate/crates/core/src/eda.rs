//! Histogram estimation-of-distribution operator and the evolutionary search loop.
//!
//! Each generation fits a per-dimension histogram to the current population,
//! samples the same number of offspring from it, evaluates them, and keeps
//! the best `N` of parents plus offspring.
//!
//! Per dimension the histogram has `M` bins. The outer two bins span from 0
//! to just below the population minimum and from just above the maximum to 1
//! (half the gap to the second extreme), and carry a small fixed weight so the
//! whole unit interval stays reachable. The `M - 2` middle bins split the
//! remaining range evenly and are weighted by how many individuals they hold.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chem::{BuildingBlockSet, Molecule};
use crate::encoding::{Evaluator, Genome, Individual, Objective};
use crate::error::{Error, Result};
use crate::expander::Expander;
use crate::parallel::parallel_evaluate;
use crate::report::{Archive, SearchReport, Snapshot};

/// Weight of a non-empty outer bin.
pub const EDGE_BIN_WEIGHT: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct DimensionModel {
    /// `M + 1` non-decreasing boundaries from 0 to 1.
    pub bounds: Vec<f64>,
    /// `M` bin probabilities summing to 1.
    pub probs: Vec<f64>,
}

impl DimensionModel {
    fn uniform(bins: usize) -> Self {
        DimensionModel {
            bounds: (0..=bins).map(|m| m as f64 / bins as f64).collect(),
            probs: vec![1.0 / bins as f64; bins],
        }
    }

    pub fn bins(&self) -> usize {
        self.probs.len()
    }

    /// Bin index of `value` under the sampling intervals: `[a_{m-1}, a_m)`
    /// for every bin but the last, which is `[a_{M-1}, a_M]`.
    pub fn sampling_bin(&self, value: f64) -> usize {
        let last = self.bins() - 1;
        if value >= self.bounds[last] {
            return last;
        }
        // first boundary strictly greater than value, minus one
        self.bounds[1..=last].partition_point(|&b| b <= value)
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut chosen = None;
        for (m, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                chosen = Some(m);
                break;
            }
        }
        // Rounding can leave the cumulative sum a hair under 1.
        let m = chosen.unwrap_or_else(|| {
            self.probs
                .iter()
                .rposition(|&p| p > 0.0)
                .expect("a model always has a positive bin")
        });
        let (lo, hi) = (self.bounds[m], self.bounds[m + 1]);
        let value = if m + 1 == self.bins() {
            rng.gen_range(lo..=hi)
        } else {
            rng.gen_range(lo..hi)
        };
        value.clamp(0.0, 1.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HistogramModel {
    pub dims: Vec<DimensionModel>,
}

impl HistogramModel {
    pub fn dimensions(&self) -> usize {
        self.dims.len()
    }
}

fn build_dimension(values: &mut [f64], bins: usize) -> DimensionModel {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    let (min1, min2) = (values[0], values[1]);
    let (max1, max2) = (values[n - 1], values[n - 2]);
    let lo = (min1 - 0.5 * (min2 - min1)).max(0.0);
    let hi = (max1 + 0.5 * (max1 - max2)).min(1.0);
    if lo >= hi {
        return DimensionModel::uniform(bins);
    }

    let middle = bins - 2;
    let width = (hi - lo) / middle as f64;
    let mut bounds = Vec::with_capacity(bins + 1);
    bounds.push(0.0);
    for m in 0..middle {
        bounds.push(lo + m as f64 * width);
    }
    bounds.push(hi);
    bounds.push(1.0);

    let mut counts = vec![0.0; bins];
    for &v in values.iter() {
        // Interior bins are [a_{m-1}, a_m) except the last one, which also takes hi.
        let mut j = (((v - lo) / width).floor().max(0.0) as usize).min(middle - 1);
        while j > 0 && v < bounds[1 + j] {
            j -= 1;
        }
        while j + 1 < middle && v >= bounds[2 + j] {
            j += 1;
        }
        counts[1 + j] += 1.0;
    }
    if bounds[1] > bounds[0] {
        counts[0] = EDGE_BIN_WEIGHT;
    }
    if bounds[bins] > bounds[bins - 1] {
        counts[bins - 1] = EDGE_BIN_WEIGHT;
    }
    let total: f64 = counts.iter().sum();
    DimensionModel {
        bounds,
        probs: counts.iter().map(|c| c / total).collect(),
    }
}

/// Fits one histogram per gene position. Needs at least two individuals and three bins.
pub fn build_model(population: &[Genome], bins: usize) -> Result<HistogramModel> {
    if bins < 3 {
        return Err(Error::DegenerateConfig(format!(
            "histogram needs at least 3 bins, got {bins}"
        )));
    }
    if population.len() < 2 {
        return Err(Error::DegenerateConfig(format!(
            "histogram needs at least 2 individuals, got {}",
            population.len()
        )));
    }
    let dims = population[0].len();
    let mut column = vec![0.0; population.len()];
    let dims = (0..dims)
        .map(|i| {
            for (slot, g) in column.iter_mut().zip(population) {
                *slot = g.genes()[i];
            }
            build_dimension(&mut column, bins)
        })
        .collect();
    Ok(HistogramModel { dims })
}

pub fn sample_one<R: Rng + ?Sized>(model: &HistogramModel, rng: &mut R) -> Genome {
    let genes = model.dims.iter().map(|d| d.draw(rng)).collect();
    Genome::new(genes).expect("samples are clamped to [0, 1]")
}

pub fn sample<R: Rng + ?Sized>(model: &HistogramModel, count: usize, rng: &mut R) -> Vec<Genome> {
    (0..count).map(|_| sample_one(model, rng)).collect()
}

/// Roulette selection probabilities f_i / Σf, or uniform when Σf = 0.
pub fn roulette_weights(fs: &[f64]) -> Vec<f64> {
    let total: f64 = fs.iter().sum();
    if total > 0.0 {
        fs.iter().map(|f| f / total).collect()
    } else {
        vec![1.0 / fs.len() as f64; fs.len()]
    }
}

/// Order in which star/hash selection ranks the pool: ascending objective,
/// equal objectives by larger f, then by position.
pub fn selection_order(fs: &[f64], variant: Objective) -> Vec<usize> {
    let keys: Vec<f64> = fs.iter().map(|&f| variant.value(f)).collect();
    let mut order: Vec<usize> = (0..fs.len()).collect();
    order.sort_by(|&a, &b| {
        keys[a]
            .total_cmp(&keys[b])
            .then_with(|| fs[b].total_cmp(&fs[a]))
    });
    order
}

/// Draws `n` distinct indices with probability proportional to `fs`.
pub fn roulette_draw<R: Rng + ?Sized>(fs: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..fs.len()).collect();
    let mut picked = Vec::with_capacity(n);
    while picked.len() < n && !remaining.is_empty() {
        let total: f64 = remaining.iter().map(|&i| fs[i]).sum();
        let pos = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            remaining
                .iter()
                .position(|&i| {
                    acc += fs[i];
                    fs[i] > 0.0 && target < acc
                })
                .unwrap_or_else(|| {
                    remaining
                        .iter()
                        .rposition(|&i| fs[i] > 0.0)
                        .expect("positive total implies a positive weight")
                })
        } else {
            rng.gen_range(0..remaining.len())
        };
        picked.push(remaining.remove(pos));
    }
    picked
}

/// Keeps `n` individuals out of the merged pool.
pub fn select<R: Rng + ?Sized>(
    pool: Vec<Individual>,
    n: usize,
    variant: Objective,
    rng: &mut R,
) -> Vec<Individual> {
    let fs: Vec<f64> = pool.iter().map(|i| i.fit.f).collect();
    let chosen = match variant {
        Objective::Star | Objective::Hash => {
            let mut order = selection_order(&fs, variant);
            order.truncate(n);
            order
        }
        Objective::Roulette => roulette_draw(&fs, n, rng),
    };
    let mut slots: Vec<Option<Individual>> = pool.into_iter().map(Some).collect();
    chosen
        .into_iter()
        .map(|i| slots[i].take().expect("indices are distinct"))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct EaConfig {
    pub population_size: usize,
    pub bins: usize,
    pub k: usize,
    pub max_depth: usize,
    pub max_iterations: usize,
    pub objective: Objective,
    pub stop_after_solutions: Option<usize>,
    pub seed: u64,
    pub workers: usize,
    /// Record population snapshots every this many iterations.
    pub snapshot_every: Option<usize>,
}

impl Default for EaConfig {
    fn default() -> Self {
        EaConfig {
            population_size: 42,
            bins: 10,
            k: 10,
            max_depth: 4,
            max_iterations: 200,
            objective: Objective::Star,
            stop_after_solutions: None,
            seed: 0,
            workers: 1,
            snapshot_every: None,
        }
    }
}

impl EaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::DegenerateConfig(format!(
                "population size {} < 2",
                self.population_size
            )));
        }
        if self.bins < 3 {
            return Err(Error::DegenerateConfig(format!("bins {} < 3", self.bins)));
        }
        if self.k == 0 {
            return Err(Error::DegenerateConfig("beam width k = 0".into()));
        }
        if self.workers == 0 {
            return Err(Error::ZeroWorkers);
        }
        Ok(())
    }
}

const SELECTION_STREAM: u64 = u64::MAX;

/// Seed for the random stream of individual `j` in generation `generation`.
pub fn stream_seed(run_seed: u64, generation: u64, j: u64) -> u64 {
    let mut h = run_seed ^ 0x9e37_79b9_7f4a_7c15;
    for word in [generation, j] {
        h = h.rotate_left(23) ^ word;
        h = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
        h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h ^= h >> 31;
    }
    h
}

fn stream(run_seed: u64, generation: u64, j: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(run_seed, generation, j))
}

fn best_f(pop: &[Individual]) -> f64 {
    pop.iter().map(|i| i.fit.f).fold(0.0, f64::max)
}

fn gene_rows(genomes: impl Iterator<Item = Vec<f64>>) -> Vec<Vec<f64>> {
    genomes.collect()
}

/// Runs the evolutionary search. The report depends only on `(cfg, world)`.
pub fn ea_search<E: Expander>(
    target: &Molecule,
    cfg: &EaConfig,
    expander: E,
    blocks: &BuildingBlockSet,
) -> Result<SearchReport> {
    cfg.validate()?;
    let evaluator = Evaluator::new(target.clone(), expander, blocks, cfg.k, cfg.max_depth);
    let n = cfg.population_size;
    let done = |archive: &Archive| cfg.stop_after_solutions.is_some_and(|s| archive.len() >= s);

    let initial: Vec<Genome> = (0..n)
        .map(|j| {
            let mut rng = stream(cfg.seed, 0, j as u64);
            let genes = (0..cfg.max_depth).map(|_| rng.gen_range(0.0..=1.0)).collect();
            Genome::new(genes).expect("uniform genes lie in [0, 1]")
        })
        .collect();
    let mut population = parallel_evaluate(initial, &evaluator, cfg.workers)?;
    let mut archive = Archive::new();
    for ind in &population {
        archive.offer(&ind.route, &ind.fit);
    }
    let mut best_f_series = vec![best_f(&population)];
    let mut snapshots = Vec::new();
    let mut iterations_run = 0;

    while iterations_run < cfg.max_iterations && !done(&archive) {
        let generation = iterations_run as u64 + 1;
        let parents: Vec<Genome> = population.iter().map(|i| i.genome.clone()).collect();
        let model = build_model(&parents, cfg.bins)?;
        let offspring: Vec<Genome> = (0..n)
            .map(|j| sample_one(&model, &mut stream(cfg.seed, generation, j as u64)))
            .collect();
        if cfg
            .snapshot_every
            .is_some_and(|every| every > 0 && (generation as usize - 1).is_multiple_of(every))
        {
            snapshots.push(Snapshot {
                iteration: generation as usize,
                population: gene_rows(parents.iter().map(|g| g.genes().to_vec())),
                offspring: gene_rows(offspring.iter().map(|g| g.genes().to_vec())),
            });
        }
        let offspring = parallel_evaluate(offspring, &evaluator, cfg.workers)?;
        for ind in &offspring {
            archive.offer(&ind.route, &ind.fit);
        }
        let mut pool = population;
        pool.extend(offspring);
        let mut rng = stream(cfg.seed, generation, SELECTION_STREAM);
        population = select(pool, n, cfg.objective, &mut rng);
        iterations_run += 1;
        best_f_series.push(best_f(&population));
    }

    Ok(SearchReport {
        algo: "ea".into(),
        seed: cfg.seed,
        archive: archive.into_routes(),
        expander_calls: evaluator.expander_calls(),
        iterations_run,
        best_f_series,
        snapshots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn genomes(rows: &[&[f64]]) -> Vec<Genome> {
        rows.iter().map(|r| Genome::new(r.to_vec()).unwrap()).collect()
    }

    #[test]
    fn hand_computed_model() {
        let pop = genomes(&[&[0.2], &[0.4], &[0.6], &[0.8]]);
        let model = build_model(&pop, 4).unwrap();
        let d = &model.dims[0];
        assert!((d.bounds[1] - 0.1).abs() < 1e-12);
        assert!((d.bounds[3] - 0.9).abs() < 1e-12);
        assert!((d.bounds[2] - 0.5).abs() < 1e-12);
        let expected = [0.1 / 4.2, 2.0 / 4.2, 2.0 / 4.2, 0.1 / 4.2];
        for (p, e) in d.probs.iter().zip(expected) {
            assert!((p - e).abs() < 1e-12, "{p} vs {e}");
        }
    }

    #[test]
    fn converged_dimension_falls_back_to_uniform() {
        let pop = genomes(&[&[0.3, 0.1], &[0.3, 0.9], &[0.3, 0.5]]);
        let model = build_model(&pop, 5).unwrap();
        assert_eq!(model.dims[0].probs, vec![0.2; 5]);
        assert!((model.dims[0].bounds[2] - 0.4).abs() < 1e-15);
        assert_ne!(model.dims[1].probs, vec![0.2; 5]);
    }

    #[test]
    fn zero_width_edge_bin_gets_no_mass() {
        // min 0 with a duplicate: lower boundary sits at 0.
        let pop = genomes(&[&[0.0], &[0.0], &[0.5], &[0.6]]);
        let d = &build_model(&pop, 4).unwrap().dims[0];
        assert_eq!(d.bounds[1], 0.0);
        assert_eq!(d.probs[0], 0.0);
        assert!(d.probs[3] > 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2000 {
            let v = d.draw(&mut rng);
            assert_ne!(d.sampling_bin(v), 0);
        }
    }

    #[test]
    fn degenerate_configs_are_rejected() {
        let pop = genomes(&[&[0.2], &[0.4]]);
        assert!(matches!(build_model(&pop, 2), Err(Error::DegenerateConfig(_))));
        assert!(matches!(
            build_model(&pop[..1], 10),
            Err(Error::DegenerateConfig(_))
        ));
    }

    #[test]
    fn single_bin_model_samples_inside_it() {
        let model = HistogramModel {
            dims: vec![DimensionModel {
                bounds: vec![0.0, 0.25, 0.5, 1.0],
                probs: vec![0.0, 1.0, 0.0],
            }],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for g in sample(&model, 1000, &mut rng) {
            assert!((0.25..0.5).contains(&g.genes()[0]));
        }
    }

    #[test]
    fn uniform_model_bin_frequencies() {
        let bins = 10;
        let model = HistogramModel {
            dims: vec![DimensionModel::uniform(bins)],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let draws = 10_000;
        let mut counts = vec![0usize; bins];
        for g in sample(&model, draws, &mut rng) {
            counts[model.dims[0].sampling_bin(g.genes()[0])] += 1;
        }
        // Binomial(10000, 0.1): mean 1000, sigma = sqrt(10000 * 0.1 * 0.9) = 30.
        for c in counts {
            assert!((c as f64 - 1000.0).abs() <= 90.0, "count {c}");
        }
    }

    #[test]
    fn sampling_bin_edges() {
        let d = DimensionModel::uniform(4);
        assert_eq!(d.sampling_bin(0.0), 0);
        assert_eq!(d.sampling_bin(0.25), 1);
        assert_eq!(d.sampling_bin(0.7499), 2);
        assert_eq!(d.sampling_bin(0.75), 3);
        assert_eq!(d.sampling_bin(1.0), 3);
    }

    #[test]
    fn roulette_helpers() {
        assert_eq!(roulette_weights(&[1.0, 3.0]), vec![0.25, 0.75]);
        assert_eq!(roulette_weights(&[0.0, 0.0]), vec![0.5, 0.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert_eq!(roulette_draw(&[1.0, 0.0, 0.0], 1, &mut rng), vec![0]);
        }
        let mut picked = roulette_draw(&[0.5, 0.0, 0.2, 0.0], 4, &mut rng);
        picked.sort_unstable();
        assert_eq!(picked, vec![0, 1, 2, 3]);
    }

    #[test]
    fn star_and_hash_orders_agree() {
        let fs = [0.9, 0.1, 0.5, 0.5, 0.0];
        assert_eq!(selection_order(&fs, Objective::Star), vec![0, 2, 3, 1, 4]);
        assert_eq!(
            selection_order(&fs, Objective::Star),
            selection_order(&fs, Objective::Hash)
        );
    }

    #[test]
    fn stream_seeds_differ() {
        let a = stream_seed(1, 0, 0);
        assert_ne!(a, stream_seed(1, 0, 1));
        assert_ne!(a, stream_seed(1, 1, 0));
        assert_ne!(a, stream_seed(2, 0, 0));
        assert_eq!(a, stream_seed(1, 0, 0));
    }
}
