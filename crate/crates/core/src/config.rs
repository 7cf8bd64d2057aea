//! Flat `key=value` run configuration.
//!
//! Lines are `key = value`; blank lines and lines starting with `#` are
//! ignored. Later assignments override earlier ones, which is how command
//! line flags are layered over a config file over the defaults.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use crate::eda::EaConfig;
use crate::encoding::Objective;
use crate::error::{Error, Result};
use crate::mcts::MctsConfig;
use crate::oracle::DEFAULT_SPACE_CAP;
use crate::world::WorldSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algo {
    Ea,
    Mcts,
}

impl Algo {
    pub fn as_str(self) -> &'static str {
        match self {
            Algo::Ea => "ea",
            Algo::Mcts => "mcts",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ea" => Ok(Algo::Ea),
            "mcts" => Ok(Algo::Mcts),
            other => Err(Error::Config(format!("unknown algorithm {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub algo: Algo,
    /// Directory holding `table.tsv`, `blocks.txt` and `manifest.tsv`.
    /// When absent the world is generated from `world_spec`.
    pub world_dir: Option<PathBuf>,
    pub world_spec: WorldSpec,
    pub k: usize,
    pub max_depth: usize,
    pub seed: u64,
    pub stop_after_solutions: Option<usize>,
    pub population_size: usize,
    pub bins: usize,
    pub max_iterations: usize,
    pub objective: Objective,
    pub snapshot_every: Option<usize>,
    pub budget: usize,
    pub exploration: f64,
    pub workers: usize,
    pub out_dir: PathBuf,
    /// When false, wall-clock columns are written as 0 so outputs are reproducible byte for byte.
    pub wall_clock: bool,
    pub brute_cap: u128,
}

impl Default for RunConfig {
    fn default() -> Self {
        let ea = EaConfig::default();
        let mcts = MctsConfig::default();
        RunConfig {
            algo: Algo::Ea,
            world_dir: None,
            world_spec: WorldSpec {
                k: ea.k,
                depth: ea.max_depth,
                ..WorldSpec::default()
            },
            k: ea.k,
            max_depth: ea.max_depth,
            seed: 0,
            stop_after_solutions: None,
            population_size: ea.population_size,
            bins: ea.bins,
            max_iterations: ea.max_iterations,
            objective: ea.objective,
            snapshot_every: None,
            budget: mcts.budget,
            exploration: mcts.exploration,
            workers: 1,
            out_dir: PathBuf::from("out"),
            wall_clock: true,
            brute_cap: DEFAULT_SPACE_CAP,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
}

fn parse_optional(key: &str, value: &str) -> Result<Option<usize>> {
    match value.trim() {
        "" | "none" | "0" => Ok(None),
        v => parse(key, v).map(Some),
    }
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        v => Err(Error::Config(format!("bad boolean {v:?} for {key}"))),
    }
}

/// Splits `key=value` text into pairs, rejecting malformed lines.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected key=value, got {line:?}", idx + 1))
        })?;
        pairs.push((key.trim().to_owned(), value.trim().to_owned()));
    }
    Ok(pairs)
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "algo" => self.algo = parse(key, value)?,
            "world" | "world_dir" => {
                self.world_dir = match value.trim() {
                    "" => None,
                    v => Some(PathBuf::from(v)),
                }
            }
            "world_seed" => self.world_spec.seed = parse(key, value)?,
            "world_k" => self.world_spec.k = parse(key, value)?,
            "depth" | "world_depth" => self.world_spec.depth = parse(key, value)?,
            "block_count" => self.world_spec.block_count = parse(key, value)?,
            "decoy_depth" => self.world_spec.decoy_depth = parse(key, value)?,
            "beta_min" => self.world_spec.beta_min = parse(key, value)?,
            "beta_max" => self.world_spec.beta_max = parse(key, value)?,
            "alt_route_rate" => self.world_spec.alt_route_rate = parse(key, value)?,
            "k" => self.k = parse(key, value)?,
            "max_depth" => self.max_depth = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "stop_after" | "stop_after_solutions" => {
                self.stop_after_solutions = parse_optional(key, value)?
            }
            "population" | "population_size" => self.population_size = parse(key, value)?,
            "bins" => self.bins = parse(key, value)?,
            "iterations" | "max_iterations" => self.max_iterations = parse(key, value)?,
            "objective" => self.objective = value.parse()?,
            "snapshot_every" => self.snapshot_every = parse_optional(key, value)?,
            "budget" => self.budget = parse(key, value)?,
            "exploration" => self.exploration = parse(key, value)?,
            "workers" => self.workers = parse(key, value)?,
            "out" | "out_dir" => self.out_dir = PathBuf::from(value.trim()),
            "wall_clock" => self.wall_clock = parse_bool(key, value)?,
            "brute_cap" => self.brute_cap = parse(key, value)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (key, value) in parse_pairs(text)? {
            self.set(&key, &value)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.world_dir.is_none() {
            self.world_spec
                .validate()
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        self.ea_config()
            .validate()
            .and_then(|_| self.mcts_config().validate())
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn ea_config(&self) -> EaConfig {
        EaConfig {
            population_size: self.population_size,
            bins: self.bins,
            k: self.k,
            max_depth: self.max_depth,
            max_iterations: self.max_iterations,
            objective: self.objective,
            stop_after_solutions: self.stop_after_solutions,
            seed: self.seed,
            workers: self.workers,
            snapshot_every: self.snapshot_every,
        }
    }

    pub fn mcts_config(&self) -> MctsConfig {
        MctsConfig {
            exploration: self.exploration,
            budget: self.budget,
            max_depth: self.max_depth,
            k: self.k,
            seed: self.seed,
            stop_after_solutions: self.stop_after_solutions,
        }
    }

    /// Serializes every field; `from_text(to_text())` reproduces the config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let opt = |v: Option<usize>| v.map_or_else(|| "none".to_owned(), |v| v.to_string());
        let w = &self.world_spec;
        let _ = writeln!(out, "algo={}", self.algo);
        let _ = writeln!(
            out,
            "world={}",
            self.world_dir
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default()
        );
        let _ = writeln!(out, "world_seed={}", w.seed);
        let _ = writeln!(out, "world_k={}", w.k);
        let _ = writeln!(out, "depth={}", w.depth);
        let _ = writeln!(out, "block_count={}", w.block_count);
        let _ = writeln!(out, "decoy_depth={}", w.decoy_depth);
        let _ = writeln!(out, "beta_min={}", w.beta_min);
        let _ = writeln!(out, "beta_max={}", w.beta_max);
        let _ = writeln!(out, "alt_route_rate={}", w.alt_route_rate);
        let _ = writeln!(out, "k={}", self.k);
        let _ = writeln!(out, "max_depth={}", self.max_depth);
        let _ = writeln!(out, "seed={}", self.seed);
        let _ = writeln!(out, "stop_after={}", opt(self.stop_after_solutions));
        let _ = writeln!(out, "population={}", self.population_size);
        let _ = writeln!(out, "bins={}", self.bins);
        let _ = writeln!(out, "iterations={}", self.max_iterations);
        let _ = writeln!(out, "objective={}", self.objective);
        let _ = writeln!(out, "snapshot_every={}", opt(self.snapshot_every));
        let _ = writeln!(out, "budget={}", self.budget);
        let _ = writeln!(out, "exploration={}", self.exploration);
        let _ = writeln!(out, "workers={}", self.workers);
        let _ = writeln!(out, "out={}", self.out_dir.display());
        let _ = writeln!(out, "wall_clock={}", self.wall_clock);
        let _ = writeln!(out, "brute_cap={}", self.brute_cap);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn later_values_override() {
        let cfg = RunConfig::from_text("k = 4\n# comment\n\nk=6\nalgo=mcts\nstop_after=3\n").unwrap();
        assert_eq!(cfg.k, 6);
        assert_eq!(cfg.algo, Algo::Mcts);
        assert_eq!(cfg.stop_after_solutions, Some(3));
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.set("world", "worlds/a").unwrap();
        cfg.set("objective", "hash").unwrap();
        cfg.set("exploration", "0.7").unwrap();
        cfg.set("snapshot_every", "5").unwrap();
        cfg.set("wall_clock", "false").unwrap();
        assert_eq!(RunConfig::from_text(&cfg.to_text()).unwrap(), cfg);
        let d = RunConfig::default();
        assert_eq!(RunConfig::from_text(&d.to_text()).unwrap(), d);
    }

    #[test]
    fn errors() {
        assert!(RunConfig::from_text("nonsense\n").is_err());
        assert!(RunConfig::from_text("bogus=1\n").is_err());
        assert!(RunConfig::from_text("k=abc\n").is_err());
        assert!(RunConfig::from_text("objective=best\n").is_err());
        let cfg = RunConfig::from_text("bins=2\n").unwrap();
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let cfg = RunConfig::from_text("workers=0\n").unwrap();
        assert!(cfg.validate().is_err());
    }
}
