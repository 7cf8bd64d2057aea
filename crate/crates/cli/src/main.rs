//! `retroevo` command-line front end.
//!
//! Settings resolve as defaults, then `--config` file, then named flags,
//! then `--set key=value` pairs in the order given. Exit codes: 0 success,
//! 1 runtime failure, 2 configuration error, 3 at least one failed bench cell.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use retroevo_core::runner::{
    load_world, run_bench, run_brute, run_search, write_search_outputs, write_world, BenchSpec,
};
use retroevo_core::{generate_world, Algo, Error, RunConfig};

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_BENCH_FAILURES: u8 = 3;

#[derive(Parser)]
#[command(name = "retroevo", version, about = "Evolutionary retrosynthetic route search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic world with a planted route and write it to a directory.
    GenWorld(Common),
    /// Run the EA or the MCTS baseline on one world.
    Search {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_algo)]
        algo: Option<Algo>,
    },
    /// Enumerate every genome and report the exact optimum.
    Brute(Common),
    /// Run a worlds x algorithms x seeds matrix described by a file.
    Bench {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Extra `key=value` settings appended to the matrix file.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// World directory; a world is generated from the settings when omitted.
    #[arg(long)]
    world: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    world_seed: Option<u64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

fn parse_algo(s: &str) -> Result<Algo, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn split_set(pair: &str) -> Result<(&str, &str), Error> {
    pair.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .ok_or_else(|| Error::Config(format!("--set expects key=value, got {pair:?}")))
}

fn read_config(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

impl Common {
    fn resolve(&self, algo: Option<Algo>) -> Result<RunConfig, Error> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_text(&read_config(path)?)?;
        }
        if let Some(a) = algo {
            cfg.algo = a;
        }
        if let Some(w) = &self.world {
            cfg.world_dir = Some(w.clone());
        }
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(s) = self.world_seed {
            cfg.world_spec.seed = s;
        }
        if let Some(k) = self.k {
            cfg.k = k;
            cfg.world_spec.k = k;
        }
        if let Some(d) = self.max_depth {
            cfg.max_depth = d;
            cfg.world_spec.depth = d;
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        for pair in &self.sets {
            let (key, value) = split_set(pair)?;
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_)
        | Error::DegenerateConfig(_)
        | Error::InvalidWorldSpec(_)
        | Error::ZeroWorkers
        | Error::SpaceTooLarge { .. } => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

fn gen_world(common: &Common) -> Result<u8, Error> {
    let cfg = common.resolve(None)?;
    let world = generate_world(&cfg.world_spec)?;
    write_world(&world.to_world(), Some(&cfg.world_spec), &cfg.out_dir)?;
    println!(
        "world written to {}: target {} planted {:?} f {}",
        cfg.out_dir.display(),
        world.target,
        world.planted_genes,
        world.planted_beta_product()
    );
    Ok(0)
}

fn search(common: &Common, algo: Option<Algo>) -> Result<u8, Error> {
    let cfg = common.resolve(algo)?;
    let world = load_world(&cfg)?;
    let (report, wall_ms) = run_search(&cfg, cfg.algo, &world)?;
    write_search_outputs(&cfg, &report, wall_ms, &cfg.out_dir)?;
    println!(
        "{}: {} routes, best f {}, {} expander calls, {} iterations, {} ms",
        cfg.algo,
        report.archive.len(),
        report.best_archived_f().map_or_else(|| "none".into(), |f| f.to_string()),
        report.expander_calls,
        report.iterations_run,
        wall_ms
    );
    if let Some(planted) = &world.planted_genes {
        println!("planted route found: {}", report.contains_ranks(planted));
    }
    Ok(0)
}

fn brute(common: &Common) -> Result<u8, Error> {
    let cfg = common.resolve(None)?;
    let world = load_world(&cfg)?;
    let result = run_brute(&cfg, &world)?;
    let path = cfg.out_dir.join("brute.tsv");
    std::fs::create_dir_all(&cfg.out_dir)
        .and_then(|_| std::fs::write(&path, result.to_text()))
        .map_err(|e| Error::Io { path, source: e })?;
    println!(
        "max f {} at {:?}; {} feasible of {} evaluated",
        result.max_f,
        result.argmax,
        result.feasible.len(),
        result.evaluated
    );
    Ok(0)
}

fn bench(matrix: &Path, out: Option<&Path>, sets: &[String]) -> Result<u8, Error> {
    let mut text = read_config(matrix)?;
    for pair in sets {
        let (key, value) = split_set(pair)?;
        text.push_str(&format!("\n{key}={value}"));
    }
    let spec = BenchSpec::from_text(&text)?;
    spec.base.validate()?;
    let out = out.map_or_else(|| spec.base.out_dir.clone(), Path::to_path_buf);
    let result = run_bench(&spec, &out)?;
    let failures = result.failures();
    println!(
        "{} cells, {} failed; results in {}",
        result.cells.len(),
        failures,
        out.display()
    );
    Ok(if failures > 0 { EXIT_BENCH_FAILURES } else { 0 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::GenWorld(c) => gen_world(c),
        Command::Search { common, algo } => search(common, *algo),
        Command::Brute(c) => brute(c),
        Command::Bench { matrix, out, sets } => bench(matrix, out.as_deref(), sets),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
