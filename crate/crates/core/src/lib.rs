//! Evolutionary multi-step retrosynthetic route search.
//!
//! A route from a target molecule down to purchasable building blocks is
//! encoded as a fixed-length real genome; gene `i` picks which of the top-k
//! single-step expansions to follow at step `i`. A histogram
//! estimation-of-distribution algorithm evolves the genomes, scored by the
//! product of step confidences times the similarity of the last open
//! molecule to the building-block set. A UCT tree search over the same
//! objective serves as the baseline, and an exhaustive enumerator verifies
//! both on small synthetic worlds.
//!
//! - [`chem`]: molecules, fingerprints, Tanimoto similarity, building blocks
//! - [`expander`]: the single-step expansion trait, a table-driven expander, caching
//! - [`world`]: synthetic worlds with planted routes
//! - [`encoding`]: gene mapping, route decoding, fitness and objective variants
//! - [`eda`]: histogram model, sampling, selection and the search loop
//! - [`mcts`]: the UCT baseline
//! - [`parallel`], [`oracle`], [`config`], [`runner`]: evaluation workers,
//!   brute force, configuration, benchmarking and file output

pub mod chem;
pub mod config;
pub mod eda;
pub mod encoding;
pub mod error;
pub mod expander;
pub mod mcts;
pub mod oracle;
pub mod parallel;
pub mod report;
pub mod runner;
pub mod world;

pub use chem::{BuildingBlockSet, Fingerprint, Molecule};
pub use config::{Algo, RunConfig};
pub use eda::{build_model, ea_search, sample, select, EaConfig, HistogramModel};
pub use encoding::{
    fitness, map_gene, objective, Evaluator, FitnessRecord, Genome, Individual, Objective, Route,
    RouteStatus,
};
pub use error::{Error, Result};
pub use expander::{Candidate, Expander, ExpansionResult, ReactionTable};
pub use mcts::{mcts_search, MctsConfig};
pub use oracle::{brute_force, BruteForceResult};
pub use parallel::{assign_worker, parallel_evaluate};
pub use report::SearchReport;
pub use world::{generate_world, GeneratedWorld, World, WorldSpec};
