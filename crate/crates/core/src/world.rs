//! Synthetic worlds: a reaction table, a building-block set and a target with
//! a planted route of known length, plus the on-disk world layout.
//!
//! Building blocks and the planted chain are spelled with SMILES-like atom
//! tokens; every planted intermediate is the concatenation of the blocks it
//! still has to shed. Decoy molecules are a block stem diluted with tokens from
//! a disjoint alphabet until their similarity to the block set falls under a
//! ceiling. The ceiling keeps every other route below the planted one whenever
//! the beta range allows it, and it grows with the step at which a decoy
//! leaves the chain, so partial planted routes score better than early misses.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chem::{BuildingBlockSet, Molecule};
use crate::expander::{Candidate, ReactionTable};
use crate::error::{Error, Result};

const BLOCK_TOKENS: &[&str] = &[
    "C", "N", "O", "S", "F", "Cl", "Br", "c", "n", "o", "(", ")", "=", "1", "2",
];
const DECOY_TOKENS: &[&str] = &[
    "X", "Y", "Z", "Q", "V", "W", "x", "y", "z", "q", "v", "w", "@", "%", "&",
];
const DEAD_END_RATE: f64 = 0.25;
const SPLIT_RATE: f64 = 0.1;
/// Fraction of a decoy's similarity target lost at the largest rank distance from the planted candidate.
const RANK_FALLOFF: f64 = 0.5;
const NAME_ATTEMPTS: usize = 32;
const MAX_DILUTION: usize = 24;
/// Keeps every off-planted route strictly below the planted score despite rounding.
const OPTIMALITY_MARGIN: f64 = 0.999;

pub const TABLE_FILE: &str = "table.tsv";
pub const BLOCKS_FILE: &str = "blocks.txt";
pub const MANIFEST_FILE: &str = "manifest.tsv";

#[derive(Clone, Debug, PartialEq)]
pub struct WorldSpec {
    pub seed: u64,
    /// Candidates per expandable molecule.
    pub k: usize,
    /// Length of the planted route.
    pub depth: usize,
    pub block_count: usize,
    /// Maximum depth of a decoy subtree below the planted chain.
    pub decoy_depth: usize,
    pub beta_min: f64,
    pub beta_max: f64,
    /// Probability that a candidate below the first decoy level consists only
    /// of building blocks, which opens an alternative feasible route.
    pub alt_route_rate: f64,
}

impl Default for WorldSpec {
    fn default() -> Self {
        WorldSpec {
            seed: 0,
            k: 4,
            depth: 3,
            block_count: 40,
            decoy_depth: 2,
            beta_min: 0.5,
            beta_max: 1.0,
            alt_route_rate: 0.05,
        }
    }
}

impl WorldSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidWorldSpec(msg));
        if !(2..=64).contains(&self.k) {
            return bad(format!("k = {} not in [2, 64]", self.k));
        }
        if !(1..=16).contains(&self.depth) {
            return bad(format!("depth = {} not in [1, 16]", self.depth));
        }
        if self.block_count < 2 {
            return bad(format!("block_count = {} must be at least 2", self.block_count));
        }
        if !(self.beta_min > 0.0 && self.beta_min <= self.beta_max && self.beta_max <= 1.0) {
            return bad(format!(
                "beta range [{}, {}] not within (0, 1]",
                self.beta_min, self.beta_max
            ));
        }
        if !(0.0..=1.0).contains(&self.alt_route_rate) {
            return bad(format!("alt_route_rate = {} not in [0, 1]", self.alt_route_rate));
        }
        Ok(())
    }
}

/// A searchable world: expander table, terminal set and target.
#[derive(Clone, Debug)]
pub struct World {
    pub table: ReactionTable,
    pub blocks: BuildingBlockSet,
    pub target: Molecule,
    /// Planted route ranks when the world came from the generator.
    pub planted_genes: Option<Vec<usize>>,
}

#[derive(Clone, Debug)]
pub struct GeneratedWorld {
    pub table: ReactionTable,
    pub blocks: BuildingBlockSet,
    pub target: Molecule,
    pub planted_genes: Vec<usize>,
    pub planted_betas: Vec<f64>,
}

impl GeneratedWorld {
    pub fn planted_beta_product(&self) -> f64 {
        self.planted_betas.iter().product()
    }

    pub fn to_world(&self) -> World {
        World {
            table: self.table.clone(),
            blocks: self.blocks.clone(),
            target: self.target.clone(),
            planted_genes: Some(self.planted_genes.clone()),
        }
    }

    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        self.to_world().write_dir(dir)
    }
}

impl World {
    pub fn manifest_line(&self) -> String {
        let genes = self.planted_genes.as_deref().unwrap_or(&[]);
        let csv: Vec<String> = genes.iter().map(usize::to_string).collect();
        format!("{}\t{}\t{}\n", self.target, genes.len(), csv.join(","))
    }

    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, body: String| {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| Error::io(path, e))
        };
        write(TABLE_FILE, self.table.to_text())?;
        write(BLOCKS_FILE, self.blocks.to_text())?;
        write(MANIFEST_FILE, self.manifest_line())
    }

    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let table = ReactionTable::load(dir.join(TABLE_FILE))?;
        let blocks = BuildingBlockSet::load(dir.join(BLOCKS_FILE))?;
        let manifest_path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&manifest_path)
            .map_err(|e| Error::io(&manifest_path, e))?;
        let (target, planted_genes) =
            parse_manifest(&text, &manifest_path.display().to_string())?;
        Ok(World {
            table,
            blocks,
            target,
            planted_genes,
        })
    }
}

/// Parses `target<TAB>depth<TAB>genes-csv`. A bare target line is accepted too.
pub fn parse_manifest(text: &str, origin: &str) -> Result<(Molecule, Option<Vec<usize>>)> {
    let (lineno, line) = text
        .lines()
        .enumerate()
        .find(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .ok_or_else(|| Error::Parse {
            path: origin.to_owned(),
            line: 1,
            message: "manifest has no target line".into(),
        })?;
    let err = |message: String| Error::Parse {
        path: origin.to_owned(),
        line: lineno + 1,
        message,
    };
    let fields: Vec<&str> = line.split('\t').collect();
    let target = Molecule::canonicalize(fields[0]).map_err(|e| err(e.to_string()))?;
    if fields.len() == 1 {
        return Ok((target, None));
    }
    if fields.len() != 3 {
        return Err(err(format!("expected 3 fields, found {}", fields.len())));
    }
    let depth: usize = fields[1]
        .trim()
        .parse()
        .map_err(|_| err(format!("bad depth {:?}", fields[1])))?;
    let genes: Vec<usize> = if fields[2].trim().is_empty() {
        Vec::new()
    } else {
        fields[2]
            .split(',')
            .map(|g| g.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err(format!("bad gene list {:?}", fields[2])))?
    };
    if genes.len() != depth || genes.contains(&0) {
        return Err(err(format!(
            "planted genes {:?} do not match depth {depth}",
            fields[2]
        )));
    }
    Ok((target, Some(genes)))
}

/// Budget for a decoy subtree hanging below planted step `j`.
#[derive(Clone, Copy)]
struct Branch {
    /// Product of the planted betas from step `j` on. Every route leaving the
    /// chain at step `j` must score below the planted route, which holds when
    /// `similarity * path < suffix`.
    suffix: f64,
    /// Beta product from the chain molecule down to the current decoy.
    path: f64,
    /// Soft target for `similarity * path`; shrinks with every decoy level.
    ceiling: f64,
}

struct Generator<'a> {
    spec: &'a WorldSpec,
    rng: ChaCha8Rng,
    used: HashSet<String>,
    blocks: Vec<Molecule>,
    psi: BuildingBlockSet,
    table: ReactionTable,
}

impl Generator<'_> {
    fn random_block(&mut self) -> Molecule {
        self.blocks[self.rng.gen_range(0..self.blocks.len())].clone()
    }

    fn betas(&mut self, count: usize) -> Vec<f64> {
        let (lo, hi) = (self.spec.beta_min, self.spec.beta_max);
        let mut betas: Vec<f64> = (0..count)
            .map(|_| if lo < hi { self.rng.gen_range(lo..=hi) } else { lo })
            .collect();
        betas.sort_by(|a, b| b.total_cmp(a));
        betas
    }

    /// A fresh name of foreign tokens, optionally after a block stem, whose
    /// similarity to the block set is as close to `ceiling` as the attempts
    /// allow without reaching it. Falls back to the least similar name tried
    /// when the ceiling is under the hashing noise floor.
    fn decoy_name(&mut self, ceiling: f64) -> Molecule {
        let mut under: Option<(f64, String)> = None;
        let mut lowest: Option<(f64, String)> = None;
        for attempt in 0..NAME_ATTEMPTS {
            // Odd attempts drop the stem, which reaches lower ceilings.
            let mut s = if attempt % 2 == 0 {
                self.random_block().as_str().to_owned()
            } else {
                String::new()
            };
            for added in 0..MAX_DILUTION {
                s.push_str(DECOY_TOKENS[self.rng.gen_range(0..DECOY_TOKENS.len())]);
                if added < 2 || self.used.contains(&s) {
                    continue;
                }
                let m = Molecule::canonicalize(&s).expect("generated names are non-empty");
                let sim = self.psi.similarity_score(&m);
                if sim < ceiling {
                    if under.as_ref().is_none_or(|(b, _)| sim > *b) {
                        under = Some((sim, s.clone()));
                    }
                    break;
                }
                if lowest.as_ref().is_none_or(|(b, _)| sim < *b) {
                    lowest = Some((sim, s.clone()));
                }
            }
        }
        let (_, s) = under.or(lowest).expect("at least one name was tried");
        self.used.insert(s.clone());
        Molecule::canonicalize(&s).expect("non-empty")
    }

    /// Reactants for a non-planted candidate with confidence `beta` below a molecule at decoy level `level - 1`.
    fn decoy_reactants(&mut self, level: usize, branch: Branch, beta: f64) -> Vec<Molecule> {
        let branch = Branch {
            path: branch.path * beta,
            ..branch
        };
        let roll: f64 = self.rng.gen();
        let mut reactants = Vec::new();
        // All-block candidates open alternative feasible routes. They sit below
        // the first decoy level and score `path` relative to the planted suffix.
        if roll < self.spec.alt_route_rate
            && level >= 2
            && branch.path < branch.suffix * OPTIMALITY_MARGIN
        {
            reactants.push(self.random_block());
            if self.rng.gen_bool(0.5) {
                reactants.push(self.random_block());
            }
            return reactants;
        }
        reactants.push(self.decoy(level, branch));
        if roll < self.spec.alt_route_rate + SPLIT_RATE {
            reactants.push(self.decoy(level, branch));
        }
        reactants.push(self.random_block());
        reactants
    }

    /// Creates a decoy molecule at `level` (1 = child of the planted chain) and its subtree.
    fn decoy(&mut self, level: usize, branch: Branch) -> Molecule {
        // Dividing by the path makes a route's score independent of which decoy
        // ranks it took, so only the exit step and decoy depth matter.
        let hard = branch.suffix / branch.path * OPTIMALITY_MARGIN;
        let m = self.decoy_name((branch.ceiling / branch.path).min(hard));
        if level >= self.spec.decoy_depth || self.rng.gen_bool(DEAD_END_RATE) {
            return m;
        }
        let below = Branch {
            ceiling: branch.ceiling * 0.5,
            ..branch
        };
        let betas = self.betas(self.spec.k);
        let mut candidates = Vec::with_capacity(self.spec.k);
        for beta in betas {
            let reactants = self.decoy_reactants(level + 1, below, beta);
            candidates.push(Candidate { reactants, beta });
        }
        self.table.insert(m.clone(), candidates);
        m
    }
}

pub fn generate_world(spec: &WorldSpec) -> Result<GeneratedWorld> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut used = HashSet::new();
    let mut blocks = Vec::with_capacity(spec.block_count);
    while blocks.len() < spec.block_count {
        let len = rng.gen_range(3..=7);
        let s: String = (0..len)
            .map(|_| BLOCK_TOKENS[rng.gen_range(0..BLOCK_TOKENS.len())])
            .collect();
        if used.insert(s.clone()) {
            blocks.push(Molecule::canonicalize(&s).expect("non-empty"));
        }
    }
    let mut gen = Generator {
        spec,
        rng,
        used,
        psi: BuildingBlockSet::new(blocks.clone())?,
        blocks,
        table: ReactionTable::new(),
    };

    // chain[0] is the target, chain[depth] a building block; chain[i-1] = chain[i] + shed[i-1].
    let mut shed: Vec<Molecule> = (0..spec.depth).map(|_| gen.random_block()).collect();
    shed.shuffle(&mut gen.rng);
    let mut chain = vec![gen.random_block()];
    for w in shed.iter().rev() {
        let mut name = format!("{}{}", chain[0], w);
        while !gen.used.insert(name.clone()) {
            // A concatenation collided with an existing name; pad with a ring-closure token.
            name.push('1');
        }
        chain.insert(0, Molecule::canonicalize(&name).expect("non-empty"));
    }

    // Planted ranks and betas come first so every decoy subtree knows its budget.
    let mut steps = Vec::with_capacity(spec.depth);
    for _ in 0..spec.depth {
        let wanted_rank = gen.rng.gen_range(1..=spec.k);
        let betas = gen.betas(spec.k);
        steps.push((wanted_rank, betas));
    }
    let planted_betas: Vec<f64> = steps.iter().map(|(r, b)| b[r - 1]).collect();

    let mut planted_genes = Vec::with_capacity(spec.depth);
    for (step, (wanted_rank, betas)) in steps.into_iter().enumerate() {
        let suffix: f64 = planted_betas[step..].iter().product();
        // Decoys that leave the chain later, or at a rank nearer the planted
        // one, may look more like blocks, so near misses outscore far ones.
        let stage = suffix * (step + 1) as f64 / (spec.depth + 1) as f64;
        let planted = Candidate {
            reactants: vec![chain[step + 1].clone(), shed[step].clone()],
            beta: planted_betas[step],
        };
        let mut candidates = Vec::with_capacity(spec.k);
        for (i, &beta) in betas.iter().enumerate() {
            if i + 1 == wanted_rank {
                candidates.push(planted.clone());
            } else {
                let distance = (i + 1).abs_diff(wanted_rank) as f64 / (spec.k - 1) as f64;
                let branch = Branch {
                    suffix,
                    path: 1.0,
                    ceiling: stage * (1.0 - RANK_FALLOFF * distance),
                };
                let reactants = gen.decoy_reactants(1, branch, beta);
                candidates.push(Candidate { reactants, beta });
            }
        }
        gen.table.insert(chain[step].clone(), candidates);
        let list = gen.table.get(&chain[step]).expect("just inserted");
        let rank = list
            .iter()
            .position(|c| *c == planted)
            .expect("planted candidate present")
            + 1;
        planted_genes.push(rank);
    }

    Ok(GeneratedWorld {
        table: gen.table,
        blocks: gen.psi,
        target: chain[0].clone(),
        planted_genes,
        planted_betas,
    })
}

/// Renders a spec as flat `key=value` lines.
pub fn spec_to_text(spec: &WorldSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "world_seed={}", spec.seed);
    let _ = writeln!(out, "k={}", spec.k);
    let _ = writeln!(out, "depth={}", spec.depth);
    let _ = writeln!(out, "block_count={}", spec.block_count);
    let _ = writeln!(out, "decoy_depth={}", spec.decoy_depth);
    let _ = writeln!(out, "beta_min={}", spec.beta_min);
    let _ = writeln!(out, "beta_max={}", spec.beta_max);
    let _ = writeln!(out, "alt_route_rate={}", spec.alt_route_rate);
    out
}
