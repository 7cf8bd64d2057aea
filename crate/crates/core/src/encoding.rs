//! Genome representation, gene-to-rank mapping, route decoding and fitness.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::sync::RwLock;

use crate::chem::{BuildingBlockSet, Molecule};
use crate::error::{Error, Result};
use crate::expander::{join_molecules, CachedExpander, Candidate, Expander};

/// Maps a gene in [0, 1] to a rank in 1..=k: rank λ covers [(λ-1)/k, λ/k), and 1.0 maps to k.
pub fn map_gene(gene: f64, k: usize) -> Result<usize> {
    if !(0.0..=1.0).contains(&gene) {
        return Err(Error::GeneOutOfRange(gene));
    }
    assert!(k >= 1, "beam width must be positive");
    // floor(gene * k) can land one bin off for values a rounding error away
    // from a breakpoint, so verify against the interval bounds.
    let mut idx = ((gene * k as f64).floor() as usize).min(k - 1);
    while idx > 0 && gene < idx as f64 / k as f64 {
        idx -= 1;
    }
    while idx + 1 < k && gene >= (idx + 1) as f64 / k as f64 {
        idx += 1;
    }
    Ok(idx + 1)
}

/// The midpoint gene of a rank's interval.
pub fn rank_midpoint(rank: usize, k: usize) -> f64 {
    (rank as f64 - 0.5) / k as f64
}

/// A real-coded route: one gene per step, each in [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct Genome {
    genes: Vec<f64>,
}

impl Genome {
    pub fn new(genes: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = genes.iter().find(|g| !(0.0..=1.0).contains(*g)) {
            return Err(Error::GeneOutOfRange(bad));
        }
        Ok(Genome { genes })
    }

    pub fn genes(&self) -> &[f64] {
        &self.genes
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    pub fn ranks(&self, k: usize) -> Vec<usize> {
        self.genes
            .iter()
            .map(|&g| map_gene(g, k).expect("genome genes are validated"))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RouteStatus {
    /// Every off-chain reactant and the final frontier are building blocks.
    Feasible,
    /// A frontier molecule had no expansion candidates.
    Truncated,
    /// The depth limit was reached with a non-member frontier.
    DepthExhausted,
    /// The chain closed but an earlier step left extra non-member reactants.
    Infeasible,
}

impl RouteStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RouteStatus::Feasible => "feasible",
            RouteStatus::Truncated => "truncated",
            RouteStatus::DepthExhausted => "depth_exhausted",
            RouteStatus::Infeasible => "infeasible",
        }
    }
}

impl fmt::Display for RouteStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    /// Rank actually used after clamping to the available candidates.
    pub rank_used: usize,
    pub candidate: Candidate,
    pub frontier_after: Option<Molecule>,
    pub offchain: Vec<Molecule>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Route {
    /// Decoded ranks, one per genome position.
    pub genes: Vec<usize>,
    pub steps: Vec<Step>,
    pub status: RouteStatus,
    /// Last non-member frontier, when the route ended on one.
    pub final_frontier: Option<Molecule>,
    /// Non-member reactants that were not carried forward.
    pub extra_nonmembers: Vec<Molecule>,
}

impl Route {
    pub fn steps_used(&self) -> usize {
        self.steps.len()
    }

    pub fn betas(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.candidate.beta).collect()
    }

    pub fn ranks_used(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.rank_used).collect()
    }

    pub fn is_feasible(&self) -> bool {
        self.status == RouteStatus::Feasible
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitnessRecord {
    pub g_value: f64,
    pub beta_product: f64,
    pub f: f64,
}

/// f = g × ∏β. Feasible routes score g = 1; others score the similarity of
/// their final frontier times that of every extra non-member reactant.
pub fn fitness(route: &Route, blocks: &BuildingBlockSet) -> FitnessRecord {
    fitness_with(route, |m| blocks.similarity_score(m))
}

fn fitness_with(route: &Route, mut score: impl FnMut(&Molecule) -> f64) -> FitnessRecord {
    let g_value = if route.is_feasible() {
        1.0
    } else {
        let base = route.final_frontier.as_ref().map_or(1.0, &mut score);
        route
            .extra_nonmembers
            .iter()
            .fold(base, |acc, m| acc * score(m))
    };
    let beta_product = route
        .steps
        .iter()
        .fold(1.0, |acc, s| acc * s.candidate.beta);
    FitnessRecord {
        g_value,
        beta_product,
        f: g_value * beta_product,
    }
}

/// Selection-side transforms of f.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Objective {
    /// −f, sorted ascending.
    Star,
    /// −e^f, sorted ascending.
    Hash,
    /// Roulette wheel with weights proportional to f.
    Roulette,
}

impl Objective {
    pub fn value(self, f: f64) -> f64 {
        match self {
            Objective::Star => -f,
            Objective::Hash => -f.exp(),
            Objective::Roulette => f,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Objective::Star => "star",
            Objective::Hash => "hash",
            Objective::Roulette => "roulette",
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "star" => Ok(Objective::Star),
            "hash" => Ok(Objective::Hash),
            "roulette" | "roulette-weight" => Ok(Objective::Roulette),
            other => Err(Error::Config(format!("unknown objective {other:?}"))),
        }
    }
}

pub fn objective(f: f64, variant: Objective) -> f64 {
    variant.value(f)
}

/// A genome together with its decoded route and fitness.
#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    pub genome: Genome,
    pub route: Route,
    pub fit: FitnessRecord,
}

/// Decodes genomes against one target, sharing the expansion cache and a
/// similarity memo across every evaluation of a run.
pub struct Evaluator<'w, E> {
    target: Molecule,
    expander: CachedExpander<E>,
    blocks: &'w BuildingBlockSet,
    max_depth: usize,
    similarity: RwLock<HashMap<Molecule, f64>>,
}

impl<'w, E: Expander> Evaluator<'w, E> {
    pub fn new(
        target: Molecule,
        expander: E,
        blocks: &'w BuildingBlockSet,
        k: usize,
        max_depth: usize,
    ) -> Self {
        Evaluator {
            target,
            expander: CachedExpander::new(expander, k),
            blocks,
            max_depth,
            similarity: RwLock::new(HashMap::new()),
        }
    }

    pub fn k(&self) -> usize {
        self.expander.k()
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn target(&self) -> &Molecule {
        &self.target
    }

    pub fn blocks(&self) -> &BuildingBlockSet {
        self.blocks
    }

    pub fn expander(&self) -> &CachedExpander<E> {
        &self.expander
    }

    /// Expander calls made so far (cache misses).
    pub fn expander_calls(&self) -> u64 {
        self.expander.calls()
    }

    pub fn similarity(&self, m: &Molecule) -> f64 {
        if let Some(&g) = self.similarity.read().expect("memo lock poisoned").get(m) {
            return g;
        }
        let g = self.blocks.similarity_score(m);
        self.similarity
            .write()
            .expect("memo lock poisoned")
            .insert(m.clone(), g);
        g
    }

    /// Walks the chain from the target using one rank per step (at most
    /// `ranks.len()` steps), clamping each rank to the candidates available.
    pub fn decode_ranks(&self, ranks: &[usize]) -> Route {
        let mut route = Route {
            genes: ranks.to_vec(),
            steps: Vec::new(),
            status: RouteStatus::DepthExhausted,
            final_frontier: None,
            extra_nonmembers: Vec::new(),
        };
        let mut frontier = self.target.clone();
        if self.blocks.contains(&frontier) {
            route.status = RouteStatus::Feasible;
            return route;
        }
        for &wanted in ranks {
            let expansion = self.expander.get(&frontier);
            if expansion.is_empty() {
                route.status = RouteStatus::Truncated;
                route.final_frontier = Some(frontier);
                return route;
            }
            let rank_used = wanted.clamp(1, expansion.len());
            let candidate = expansion.candidates[rank_used - 1].clone();
            let next = candidate
                .reactants
                .iter()
                .filter(|r| !self.blocks.contains(r))
                .max_by(|a, b| a.len().cmp(&b.len()).then_with(|| b.cmp(a)))
                .cloned();
            let Some(next) = next else {
                route.status = if route.extra_nonmembers.is_empty() {
                    RouteStatus::Feasible
                } else {
                    RouteStatus::Infeasible
                };
                route.steps.push(Step {
                    rank_used,
                    offchain: candidate.reactants.clone(),
                    candidate,
                    frontier_after: None,
                });
                return route;
            };
            let mut offchain = Vec::with_capacity(candidate.reactants.len() - 1);
            let mut skipped = false;
            for r in &candidate.reactants {
                if !skipped && *r == next {
                    skipped = true;
                    continue;
                }
                if !self.blocks.contains(r) {
                    route.extra_nonmembers.push(r.clone());
                }
                offchain.push(r.clone());
            }
            route.steps.push(Step {
                rank_used,
                candidate,
                frontier_after: Some(next.clone()),
                offchain,
            });
            frontier = next;
        }
        route.final_frontier = Some(frontier);
        route
    }

    pub fn decode(&self, genome: &Genome) -> Route {
        assert_eq!(
            genome.len(),
            self.max_depth,
            "genome length must equal the configured max depth"
        );
        self.decode_ranks(&genome.ranks(self.k()))
    }

    pub fn fitness(&self, route: &Route) -> FitnessRecord {
        fitness_with(route, |m| self.similarity(m))
    }

    pub fn evaluate(&self, genome: Genome) -> Individual {
        let route = self.decode(&genome);
        let fit = self.fitness(&route);
        Individual { genome, route, fit }
    }
}

/// One tab-separated route record line (without trailing newline).
pub fn route_record(route: &Route, fit: &FitnessRecord) -> String {
    let ranks: Vec<String> = route.ranks_used().iter().map(usize::to_string).collect();
    let mut line = format!(
        "{}\t{}\t{}\t{}\t{}\t{}",
        route.status,
        route.steps_used(),
        fit.f,
        fit.beta_product,
        fit.g_value,
        ranks.join(",")
    );
    for step in &route.steps {
        let frontier = step
            .frontier_after
            .as_ref()
            .map(Molecule::as_str)
            .unwrap_or("");
        let _ = write!(
            line,
            "\t{}:{}:{}",
            step.rank_used,
            frontier,
            join_molecules(&step.offchain)
        );
    }
    line
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expander::ReactionTable;

    fn mol(s: &str) -> Molecule {
        Molecule::canonicalize(s).unwrap()
    }

    fn cand(rs: &[&str], beta: f64) -> Candidate {
        Candidate::new(rs.iter().map(|s| mol(s)).collect(), beta).unwrap()
    }

    #[test]
    fn map_gene_examples() {
        assert_eq!(map_gene(0.35, 10).unwrap(), 4);
        assert_eq!(map_gene(0.0, 10).unwrap(), 1);
        assert_eq!(map_gene(1.0, 10).unwrap(), 10);
        assert_eq!(map_gene(0.3, 10).unwrap(), 4);
        assert_eq!(map_gene(0.7, 10).unwrap(), 8);
        assert!(matches!(map_gene(1.01, 10), Err(Error::GeneOutOfRange(_))));
        assert!(matches!(map_gene(-0.1, 10), Err(Error::GeneOutOfRange(_))));
        assert!(map_gene(f64::NAN, 10).is_err());
    }

    #[test]
    fn objective_examples() {
        assert_eq!(objective(0.504, Objective::Star), -0.504);
        assert_eq!(objective(0.0, Objective::Hash), -1.0);
        assert_eq!(objective(0.3, Objective::Roulette), 0.3);
        for (a, b) in [(0.0, 0.1), (0.2, 0.9), (0.5, 0.5000001)] {
            assert!(objective(a, Objective::Star) > objective(b, Objective::Star));
            assert!(objective(a, Objective::Hash) > objective(b, Objective::Hash));
        }
    }

    /// T -> [I, b1] (0.8) | [D] (0.6); I -> [J, b2] (0.9); J -> [b3] (0.7)
    fn small_world() -> (ReactionTable, BuildingBlockSet) {
        let mut t = ReactionTable::new();
        t.insert(mol("TTTT"), vec![cand(&["III", "b1"], 0.8), cand(&["D"], 0.6)]);
        t.insert(mol("III"), vec![cand(&["JJ", "b2"], 0.9)]);
        t.insert(mol("JJ"), vec![cand(&["b3"], 0.7)]);
        let blocks = BuildingBlockSet::new(["b1", "b2", "b3"].map(mol)).unwrap();
        (t, blocks)
    }

    #[test]
    fn worked_example_fitness() {
        let (t, blocks) = small_world();
        let ev = Evaluator::new(mol("TTTT"), &t, &blocks, 2, 3);
        let route = ev.decode_ranks(&[1, 1, 1]);
        assert_eq!(route.status, RouteStatus::Feasible);
        assert_eq!(route.betas(), vec![0.8, 0.9, 0.7]);
        let fit = fitness(&route, &blocks);
        assert_eq!(fit.g_value, 1.0);
        assert_eq!(fit.f, 0.504);
        assert_eq!(ev.fitness(&route), fit);
    }

    #[test]
    fn dead_end_truncates() {
        let (t, blocks) = small_world();
        let ev = Evaluator::new(mol("TTTT"), &t, &blocks, 2, 3);
        let route = ev.decode_ranks(&[2, 1, 1]);
        assert_eq!(route.status, RouteStatus::Truncated);
        assert_eq!(route.steps_used(), 1);
        assert_eq!(route.final_frontier, Some(mol("D")));
        // rank clamp: asking for rank 2 where only one candidate exists
        let clamped = ev.decode_ranks(&[1, 2, 2]);
        assert_eq!(clamped.ranks_used(), vec![1, 1, 1]);
        assert!(clamped.is_feasible());
    }

    #[test]
    fn empty_target_expansion() {
        let (t, blocks) = small_world();
        let ev = Evaluator::new(mol("unknown"), &t, &blocks, 2, 3);
        let route = ev.decode_ranks(&[1, 1, 1]);
        assert_eq!(route.status, RouteStatus::Truncated);
        assert_eq!(route.steps_used(), 0);
        assert_eq!(route.final_frontier, Some(mol("unknown")));
        assert_eq!(ev.fitness(&route).beta_product, 1.0);
    }

    #[test]
    fn target_in_blocks_is_trivially_feasible() {
        let (t, blocks) = small_world();
        let ev = Evaluator::new(mol("b1"), &t, &blocks, 2, 3);
        let route = ev.decode_ranks(&[1, 1, 1]);
        assert!(route.is_feasible());
        assert_eq!(route.steps_used(), 0);
        assert_eq!(ev.fitness(&route).f, 1.0);
        assert_eq!(ev.expander_calls(), 0);
    }

    #[test]
    fn depth_exhausted_with_disjoint_frontier_scores_zero() {
        // Frontier "Q" shares no n-gram bits with any block.
        let mut t = ReactionTable::new();
        t.insert(mol("P"), vec![cand(&["Q", "A"], 0.5)]);
        let blocks = BuildingBlockSet::new([mol("A")]).unwrap();
        assert_eq!(
            mol("Q").fingerprint().tanimoto(&mol("A").fingerprint()),
            0.0
        );
        let ev = Evaluator::new(mol("P"), &t, &blocks, 1, 1);
        let route = ev.decode_ranks(&[1]);
        assert_eq!(route.status, RouteStatus::DepthExhausted);
        let fit = ev.fitness(&route);
        assert_eq!(fit.beta_product, 0.5);
        assert_eq!(fit.f, 0.0);
    }

    #[test]
    fn extra_nonmembers_block_feasibility_and_scale_g() {
        // P -> [LONGER, XY, A]: LONGER is carried, XY is an extra non-member.
        let mut t = ReactionTable::new();
        t.insert(mol("P"), vec![cand(&["XY", "LONGER", "A"], 0.5)]);
        t.insert(mol("LONGER"), vec![cand(&["A"], 0.5)]);
        let blocks = BuildingBlockSet::new([mol("A"), mol("XYZ")]).unwrap();
        let ev = Evaluator::new(mol("P"), &t, &blocks, 1, 3);
        let route = ev.decode_ranks(&[1, 1, 1]);
        assert_eq!(route.status, RouteStatus::Infeasible);
        assert_eq!(route.steps[0].frontier_after, Some(mol("LONGER")));
        assert_eq!(route.steps[0].offchain, vec![mol("XY"), mol("A")]);
        assert_eq!(route.extra_nonmembers, vec![mol("XY")]);
        let fit = ev.fitness(&route);
        let g_xy = blocks.similarity_score(&mol("XY"));
        assert!(g_xy > 0.0 && g_xy < 1.0);
        assert_eq!(fit.g_value, g_xy);
        assert_eq!(fit.f, g_xy * 0.25);
    }

    #[test]
    fn frontier_tie_breaks_lexicographically() {
        let mut t = ReactionTable::new();
        t.insert(mol("P"), vec![cand(&["BB", "AA"], 0.5)]);
        let blocks = BuildingBlockSet::new([mol("A")]).unwrap();
        let ev = Evaluator::new(mol("P"), &t, &blocks, 1, 1);
        let route = ev.decode_ranks(&[1]);
        assert_eq!(route.steps[0].frontier_after, Some(mol("AA")));
    }

    #[test]
    fn route_record_format() {
        let (t, blocks) = small_world();
        let ev = Evaluator::new(mol("TTTT"), &t, &blocks, 2, 3);
        let route = ev.decode_ranks(&[1, 1, 1]);
        let line = route_record(&route, &ev.fitness(&route));
        assert_eq!(
            line,
            "feasible\t3\t0.504\t0.504\t1\t1,1,1\t1:III:b1\t1:JJ:b2\t1::b3"
        );
    }
}
