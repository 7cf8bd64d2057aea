//! UCT tree search baseline over the same expander and objective as the
//! evolutionary search.
//!
//! A tree node is a prefix of ranks. Each iteration descends by UCT, adds at
//! most one new child (lowest untried rank first), and scores it with a
//! greedy rollout that follows rank 1 to the depth limit. The reward is the
//! route fitness, so both searches optimize the same quantity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chem::{BuildingBlockSet, Molecule};
use crate::encoding::Evaluator;
use crate::error::{Error, Result};
use crate::expander::Expander;
use crate::report::{Archive, SearchReport};

#[derive(Clone, Debug, PartialEq)]
pub struct MctsConfig {
    pub exploration: f64,
    /// Number of selection/expansion/rollout/backpropagation rounds.
    pub budget: usize,
    pub max_depth: usize,
    pub k: usize,
    pub seed: u64,
    pub stop_after_solutions: Option<usize>,
}

impl Default for MctsConfig {
    fn default() -> Self {
        MctsConfig {
            exploration: std::f64::consts::SQRT_2,
            budget: 2000,
            max_depth: 4,
            k: 10,
            seed: 0,
            stop_after_solutions: None,
        }
    }
}

impl MctsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.exploration.is_nan() || self.exploration <= 0.0 {
            return Err(Error::DegenerateConfig(format!(
                "exploration constant {} must be positive",
                self.exploration
            )));
        }
        if self.k == 0 {
            return Err(Error::DegenerateConfig("beam width k = 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
struct Node {
    ranks: Vec<usize>,
    parent: Option<usize>,
    children: Vec<usize>,
    /// Ranks this node can branch into; 0 once the route has ended here.
    available: usize,
    /// Rollout reward for terminal nodes.
    reward: f64,
    visits: u64,
    value_sum: f64,
}

impl Node {
    fn mean(&self) -> f64 {
        if self.visits == 0 {
            0.0
        } else {
            self.value_sum / self.visits as f64
        }
    }
}

struct Tree<'a, 'w, E> {
    evaluator: &'a Evaluator<'w, E>,
    nodes: Vec<Node>,
    archive: Archive,
    best: f64,
}

impl<E: Expander> Tree<'_, '_, E> {
    /// Adds a node for `ranks`, scores its rollout and returns (index, reward).
    fn add_node(&mut self, ranks: Vec<usize>, parent: Option<usize>) -> (usize, f64) {
        let depth = ranks.len();
        let max_depth = self.evaluator.max_depth();
        let mut rollout = ranks.clone();
        rollout.resize(max_depth.max(depth), 1);
        let route = self.evaluator.decode_ranks(&rollout);
        let fit = self.evaluator.fitness(&route);
        self.archive.offer(&route, &fit);
        self.best = self.best.max(fit.f);

        let available = if route.steps_used() > depth {
            let frontier: Molecule = if depth == 0 {
                self.evaluator.target().clone()
            } else {
                route.steps[depth - 1]
                    .frontier_after
                    .clone()
                    .expect("route continued past this step")
            };
            self.evaluator
                .expander()
                .get(&frontier)
                .len()
                .min(self.evaluator.k())
        } else {
            0
        };
        let idx = self.nodes.len();
        self.nodes.push(Node {
            ranks,
            parent,
            children: Vec::new(),
            available,
            reward: fit.f,
            visits: 0,
            value_sum: 0.0,
        });
        if let Some(p) = parent {
            self.nodes[p].children.push(idx);
        }
        (idx, fit.f)
    }

    fn uct_child<R: Rng>(&self, idx: usize, c: f64, rng: &mut R) -> usize {
        let node = &self.nodes[idx];
        let ln_parent = (node.visits.max(1) as f64).ln();
        let mut best = f64::NEG_INFINITY;
        let mut ties: Vec<usize> = Vec::new();
        for &child in &node.children {
            let ch = &self.nodes[child];
            let score = ch.mean() + c * (ln_parent / ch.visits as f64).sqrt();
            if score > best {
                best = score;
                ties.clear();
                ties.push(child);
            } else if score == best {
                ties.push(child);
            }
        }
        if ties.len() == 1 {
            ties[0]
        } else {
            ties[rng.gen_range(0..ties.len())]
        }
    }

    fn backpropagate(&mut self, mut idx: usize, reward: f64) {
        loop {
            let node = &mut self.nodes[idx];
            node.visits += 1;
            node.value_sum += reward;
            match node.parent {
                Some(p) => idx = p,
                None => break,
            }
        }
    }
}

pub fn mcts_search<E: Expander>(
    target: &Molecule,
    cfg: &MctsConfig,
    expander: E,
    blocks: &BuildingBlockSet,
) -> Result<SearchReport> {
    cfg.validate()?;
    let evaluator = Evaluator::new(target.clone(), expander, blocks, cfg.k, cfg.max_depth);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut tree = Tree {
        evaluator: &evaluator,
        nodes: Vec::new(),
        archive: Archive::new(),
        best: 0.0,
    };
    let mut best_f_series = Vec::with_capacity(cfg.budget);
    let mut iterations_run = 0;

    while iterations_run < cfg.budget
        && !cfg
            .stop_after_solutions
            .is_some_and(|s| tree.archive.len() >= s)
    {
        let (leaf, reward) = if tree.nodes.is_empty() {
            tree.add_node(Vec::new(), None)
        } else {
            let mut idx = 0;
            loop {
                let node = &tree.nodes[idx];
                if node.available == 0 {
                    break (idx, node.reward);
                }
                if node.children.len() < node.available {
                    let mut ranks = node.ranks.clone();
                    ranks.push(node.children.len() + 1);
                    break tree.add_node(ranks, Some(idx));
                }
                idx = tree.uct_child(idx, cfg.exploration, &mut rng);
            }
        };
        tree.backpropagate(leaf, reward);
        iterations_run += 1;
        best_f_series.push(tree.best);
    }

    let expander_calls = evaluator.expander_calls();
    Ok(SearchReport {
        algo: "mcts".into(),
        seed: cfg.seed,
        archive: tree.archive.into_routes(),
        expander_calls,
        iterations_run,
        best_f_series,
        snapshots: Vec::new(),
    })
}
