//! Running searches from a [`RunConfig`], benchmark matrices, and writing
//! every artifact to disk.
//!
//! Output files are UTF-8 and tab-separated. Header lines start with `#`
//! and name the columns.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::{parse_pairs, Algo, RunConfig};
use crate::eda::ea_search;
use crate::error::{Error, Result};
use crate::mcts::mcts_search;
use crate::oracle::{brute_force, BruteForceResult};
use crate::report::{matrix_text, SearchReport};
use crate::world::{generate_world, spec_to_text, World, WorldSpec};

pub const METRICS_HEADER: &str =
    "# algo\tseed\texpander_calls\titerations\tarchive_size\twall_ms";
pub const ROUTES_HEADER: &str =
    "# status\tsteps_used\tf\tbeta_product\tg_value\tranks\tsteps(rank:frontier:offchain)...";
pub const BENCH_METRICS_HEADER: &str =
    "# world\talgo\tseed\texpander_calls\titerations\tarchive_size\twall_ms\tstatus";
pub const BENCH_AGGREGATE_HEADER: &str = "# world\talgo\truns\tfailures\texpander_calls_mean\texpander_calls_std\texpander_calls_median\twall_ms_mean\twall_ms_std\tarchive_size_mean\tarchive_size_std";

/// Loads the configured world directory, or generates the world from the spec.
pub fn load_world(cfg: &RunConfig) -> Result<World> {
    match &cfg.world_dir {
        Some(dir) => World::load_dir(dir),
        None => Ok(generate_world(&cfg.world_spec)?.to_world()),
    }
}

/// Runs one search and returns the report with its wall time in milliseconds.
pub fn run_search(cfg: &RunConfig, algo: Algo, world: &World) -> Result<(SearchReport, u128)> {
    let start = Instant::now();
    let report = match algo {
        Algo::Ea => ea_search(&world.target, &cfg.ea_config(), &world.table, &world.blocks)?,
        Algo::Mcts => mcts_search(&world.target, &cfg.mcts_config(), &world.table, &world.blocks)?,
    };
    let wall_ms = if cfg.wall_clock {
        start.elapsed().as_millis()
    } else {
        0
    };
    Ok((report, wall_ms))
}

pub fn run_brute(cfg: &RunConfig, world: &World) -> Result<BruteForceResult> {
    brute_force(
        &world.target,
        &world.table,
        &world.blocks,
        cfg.k,
        cfg.max_depth,
        cfg.brute_cap,
    )
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn write_snapshots(report: &SearchReport, dir: &Path) -> Result<()> {
    for snap in &report.snapshots {
        write_file(
            &dir.join(format!("iter_{:04}_pop.tsv", snap.iteration)),
            &matrix_text(&snap.population),
        )?;
        write_file(
            &dir.join(format!("iter_{:04}_new.tsv", snap.iteration)),
            &matrix_text(&snap.offspring),
        )?;
    }
    Ok(())
}

/// Writes `metrics.tsv`, `best_f.csv`, `routes.tsv`, `config.txt` and any snapshots.
pub fn write_search_outputs(
    cfg: &RunConfig,
    report: &SearchReport,
    wall_ms: u128,
    dir: &Path,
) -> Result<()> {
    write_file(
        &dir.join("metrics.tsv"),
        &format!("{METRICS_HEADER}\n{}\n", report.metrics_line(wall_ms)),
    )?;
    write_file(&dir.join("best_f.csv"), &report.best_f_csv())?;
    write_file(
        &dir.join("routes.tsv"),
        &format!("{ROUTES_HEADER}\n{}", report.routes_text()),
    )?;
    write_file(&dir.join("config.txt"), &cfg.to_text())?;
    write_snapshots(report, &dir.join("snapshots"))
}

pub fn write_world(world: &World, spec: Option<&WorldSpec>, dir: &Path) -> Result<()> {
    world.write_dir(dir)?;
    if let Some(spec) = spec {
        write_file(&dir.join("world.cfg"), &spec_to_text(spec))?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub enum WorldSource {
    Dir(PathBuf),
    Generated(WorldSpec),
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorldEntry {
    pub name: String,
    pub source: WorldSource,
}

/// worlds × algorithms × seeds, sharing one base configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchSpec {
    pub worlds: Vec<WorldEntry>,
    pub algos: Vec<Algo>,
    pub seeds: Vec<u64>,
    pub base: RunConfig,
}

fn csv_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::Config(format!("bad entry {s:?} in {key}")))
        })
        .collect()
}

impl BenchSpec {
    /// Parses a matrix file. Besides every [`RunConfig`] key it accepts
    /// `worlds` (directories), `world_seeds` (generated worlds), `algos`,
    /// `seeds`, and `runs` (shorthand for seeds 0..runs).
    pub fn from_text(text: &str) -> Result<Self> {
        let mut base = RunConfig::default();
        let mut dirs: Vec<PathBuf> = Vec::new();
        let mut world_seeds: Vec<u64> = Vec::new();
        let mut algos = vec![Algo::Ea, Algo::Mcts];
        let mut seeds: Vec<u64> = (0..30).collect();
        for (key, value) in parse_pairs(text)? {
            match key.as_str() {
                "worlds" => dirs = csv_list::<String>(&key, &value)?.into_iter().map(PathBuf::from).collect(),
                "world_seeds" => world_seeds = csv_list(&key, &value)?,
                "algos" => algos = csv_list(&key, &value)?,
                "seeds" => seeds = csv_list(&key, &value)?,
                "runs" => {
                    let runs: u64 = value
                        .parse()
                        .map_err(|_| Error::Config(format!("bad runs {value:?}")))?;
                    seeds = (0..runs).collect();
                }
                _ => base.set(&key, &value)?,
            }
        }
        let mut worlds: Vec<WorldEntry> = dirs
            .into_iter()
            .map(|dir| WorldEntry {
                name: dir
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_else(|| dir.display().to_string()),
                source: WorldSource::Dir(dir),
            })
            .collect();
        for seed in world_seeds {
            worlds.push(WorldEntry {
                name: format!("world_seed{seed}"),
                source: WorldSource::Generated(WorldSpec {
                    seed,
                    ..base.world_spec.clone()
                }),
            });
        }
        if worlds.is_empty() {
            return Err(Error::Config("bench matrix lists no worlds".into()));
        }
        if algos.is_empty() || seeds.is_empty() {
            return Err(Error::Config("bench matrix needs algos and seeds".into()));
        }
        Ok(BenchSpec {
            worlds,
            algos,
            seeds,
            base,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub expander_calls: u64,
    pub iterations: usize,
    pub archive_size: usize,
    pub wall_ms: u128,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub world: String,
    pub algo: Algo,
    pub seed: u64,
    pub outcome: std::result::Result<Metrics, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub world: String,
    pub algo: Algo,
    pub runs: usize,
    pub failures: usize,
    pub calls: Stats,
    pub wall_ms: Stats,
    pub archive_size: Stats,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stats {
    pub mean: f64,
    /// Sample standard deviation; 0 for fewer than two values.
    pub std: f64,
    pub median: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Stats {
                mean: f64::NAN,
                std: f64::NAN,
                median: f64::NAN,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Stats {
            mean,
            std,
            median: median(values),
        }
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchMatrix {
    pub cells: Vec<Cell>,
    pub aggregates: Vec<Aggregate>,
}

impl BenchMatrix {
    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.outcome.is_err()).count()
    }

    pub fn metrics_text(&self) -> String {
        let mut out = format!("{BENCH_METRICS_HEADER}\n");
        for c in &self.cells {
            let _ = match &c.outcome {
                Ok(m) => writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\tok",
                    c.world, c.algo, c.seed, m.expander_calls, m.iterations, m.archive_size, m.wall_ms
                ),
                Err(e) => writeln!(
                    out,
                    "{}\t{}\t{}\tNA\tNA\tNA\tNA\terror: {}",
                    c.world,
                    c.algo,
                    c.seed,
                    e.replace(['\t', '\n'], " ")
                ),
            };
        }
        out
    }

    pub fn aggregate_text(&self) -> String {
        let mut out = format!("{BENCH_AGGREGATE_HEADER}\n");
        for a in &self.aggregates {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{:.6e}\t{:.6e}\t{}\t{:.6e}\t{:.6e}\t{:.6e}\t{:.6e}",
                a.world,
                a.algo,
                a.runs,
                a.failures,
                a.calls.mean,
                a.calls.std,
                a.calls.median,
                a.wall_ms.mean,
                a.wall_ms.std,
                a.archive_size.mean,
                a.archive_size.std
            );
        }
        out
    }
}

fn cell_stem(world: &str, algo: Algo, seed: u64) -> String {
    format!("{world}__{algo}__seed{seed}")
}

/// Runs every cell, continuing past failures, and writes all outputs under `out_dir`.
pub fn run_bench(spec: &BenchSpec, out_dir: &Path) -> Result<BenchMatrix> {
    let mut cells = Vec::new();
    for entry in &spec.worlds {
        let world = match &entry.source {
            WorldSource::Dir(dir) => World::load_dir(dir),
            WorldSource::Generated(ws) => generate_world(ws).map(|g| g.to_world()),
        };
        for &algo in &spec.algos {
            for &seed in &spec.seeds {
                let mut cfg = spec.base.clone();
                cfg.seed = seed;
                cfg.algo = algo;
                let outcome = match &world {
                    Err(e) => Err(format!("world load failed: {e}")),
                    Ok(world) => run_search(&cfg, algo, world)
                        .and_then(|(report, wall_ms)| {
                            let stem = cell_stem(&entry.name, algo, seed);
                            write_file(
                                &out_dir.join("best_f").join(format!("{stem}.csv")),
                                &report.best_f_csv(),
                            )?;
                            write_file(
                                &out_dir.join("routes").join(format!("{stem}.tsv")),
                                &format!("{ROUTES_HEADER}\n{}", report.routes_text()),
                            )?;
                            write_snapshots(&report, &out_dir.join("snapshots").join(&stem))?;
                            Ok(Metrics {
                                expander_calls: report.expander_calls,
                                iterations: report.iterations_run,
                                archive_size: report.archive.len(),
                                wall_ms,
                            })
                        })
                        .map_err(|e| e.to_string()),
                };
                cells.push(Cell {
                    world: entry.name.clone(),
                    algo,
                    seed,
                    outcome,
                });
            }
        }
    }

    let mut aggregates = Vec::new();
    for entry in &spec.worlds {
        for &algo in &spec.algos {
            let group: Vec<&Cell> = cells
                .iter()
                .filter(|c| c.world == entry.name && c.algo == algo)
                .collect();
            let ok: Vec<Metrics> = group.iter().filter_map(|c| c.outcome.clone().ok()).collect();
            let col = |f: fn(&Metrics) -> f64| Stats::of(&ok.iter().map(f).collect::<Vec<_>>());
            aggregates.push(Aggregate {
                world: entry.name.clone(),
                algo,
                runs: group.len(),
                failures: group.len() - ok.len(),
                calls: col(|m| m.expander_calls as f64),
                wall_ms: col(|m| m.wall_ms as f64),
                archive_size: col(|m| m.archive_size as f64),
            });
        }
    }

    let matrix = BenchMatrix { cells, aggregates };
    write_file(&out_dir.join("metrics.tsv"), &matrix.metrics_text())?;
    write_file(&out_dir.join("aggregate.tsv"), &matrix.aggregate_text())?;
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_basics() {
        let s = Stats::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert_eq!(s.median, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(Stats::of(&[7.0]).std, 0.0);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
    }

    #[test]
    fn bench_spec_parsing() {
        let spec = BenchSpec::from_text(
            "world_seeds = 1, 2\nalgos = ea,mcts\nseeds = 0,1,2\niterations = 5\nbudget = 50\n",
        )
        .unwrap();
        assert_eq!(spec.worlds.len(), 2);
        assert_eq!(spec.worlds[1].name, "world_seed2");
        assert_eq!(spec.seeds, vec![0, 1, 2]);
        assert_eq!(spec.base.max_iterations, 5);
        let runs = BenchSpec::from_text("world_seeds=1\nruns=4\n").unwrap();
        assert_eq!(runs.seeds, vec![0, 1, 2, 3]);
        assert!(BenchSpec::from_text("algos=ea\n").is_err());
        assert!(BenchSpec::from_text("world_seeds=1\nalgos=ga\n").is_err());
    }
}
