use std::path::Path;
use std::process::{Command, Output};

fn retroevo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_retroevo"))
        .args(args)
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_world_then_search_and_brute() {
    let tmp = tempfile::tempdir().unwrap();
    let world = tmp.path().join("w");
    let out = retroevo(&["gen-world", "--world-seed", "1", "--k", "4", "--max-depth", "3", "--out", path(&world)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["table.tsv", "blocks.txt", "manifest.tsv", "world.cfg"] {
        assert!(world.join(f).exists(), "{f}");
    }

    let run = tmp.path().join("run");
    let out = retroevo(&[
        "search", "--algo", "ea", "--world", path(&world), "--k", "4", "--max-depth", "3",
        "--seed", "7", "--set", "population=16", "--set", "iterations=50", "--out", path(&run),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("planted route found: true"));
    for f in ["metrics.tsv", "best_f.csv", "routes.tsv", "config.txt"] {
        assert!(run.join(f).exists(), "{f}");
    }
    let config = std::fs::read_to_string(run.join("config.txt")).unwrap();
    assert!(config.contains("population=16\n") && config.contains("seed=7\n"));

    let brute = tmp.path().join("brute");
    let out = retroevo(&["brute", "--world", path(&world), "--k", "4", "--max-depth", "3", "--out", path(&brute)]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(brute.join("brute.tsv")).unwrap();
    assert!(text.starts_with("max_f\t"));
}

#[test]
fn flags_override_config_file_and_set_overrides_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    std::fs::write(&cfg, "k=4\nmax_depth=3\nworld_k=4\ndepth=3\nseed=1\nbudget=40\nalgo=mcts\n").unwrap();
    let run = tmp.path().join("run");
    let out = retroevo(&[
        "search", "--config", path(&cfg), "--seed", "5", "--set", "budget=30", "--out", path(&run),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let written = std::fs::read_to_string(run.join("config.txt")).unwrap();
    assert!(written.contains("algo=mcts\n"));
    assert!(written.contains("seed=5\n"));
    assert!(written.contains("budget=30\n"));
}

#[test]
fn configuration_errors_exit_with_two() {
    assert_eq!(retroevo(&["search", "--set", "bins=2"]).status.code(), Some(2));
    assert_eq!(retroevo(&["search", "--set", "nonsense"]).status.code(), Some(2));
    assert_eq!(retroevo(&["search", "--config", "/nonexistent/run.cfg"]).status.code(), Some(2));
    assert_eq!(retroevo(&["search", "--algo", "ga"]).status.code(), Some(2));
}

#[test]
fn missing_world_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = retroevo(&["search", "--world", path(&tmp.path().join("nope")), "--out", path(tmp.path())]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bench_exit_code_reflects_failed_cells() {
    let tmp = tempfile::tempdir().unwrap();
    let matrix = tmp.path().join("m.cfg");
    let small = "world_k=4\ndepth=3\nk=4\nmax_depth=3\niterations=3\nbudget=30\nalgos=ea,mcts\nseeds=0,1\n";
    std::fs::write(&matrix, format!("{small}world_seeds=1\n")).unwrap();
    let out = retroevo(&["bench", "--matrix", path(&matrix), "--out", path(&tmp.path().join("ok"))]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("ok/aggregate.tsv").exists());

    let missing = tmp.path().join("missing");
    let out = retroevo(&[
        "bench", "--matrix", path(&matrix), "--set", &format!("worlds={}", missing.display()),
        "--out", path(&tmp.path().join("bad")),
    ]);
    assert_eq!(out.status.code(), Some(3));
}
