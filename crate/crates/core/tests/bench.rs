use retroevo_core::runner::{run_bench, BenchSpec};
use retroevo_core::Algo;

const SMALL: &str = "world_k=4\ndepth=3\nk=4\nmax_depth=3\niterations=5\nbudget=60\nwall_clock=false\n";

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn two_worlds_two_algos_three_seeds() {
    let spec = BenchSpec::from_text(&format!("{SMALL}world_seeds=1,2\nalgos=ea,mcts\nseeds=0,1,2\n")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let m = run_bench(&spec, dir.path()).unwrap();
    assert_eq!(m.cells.len(), 12);
    assert_eq!(m.aggregates.len(), 4);
    assert_eq!(m.failures(), 0);
    let metrics = std::fs::read_to_string(dir.path().join("metrics.tsv")).unwrap();
    let aggregate = std::fs::read_to_string(dir.path().join("aggregate.tsv")).unwrap();
    assert_eq!(data_lines(&metrics).len(), 12);
    assert_eq!(data_lines(&aggregate).len(), 4);
    assert!(data_lines(&metrics).iter().all(|l| l.ends_with("\tok")));
    assert!(aggregate.lines().nth(1).unwrap().starts_with("world_seed1\tea\t3\t0\t"));
    let curves = std::fs::read_dir(dir.path().join("best_f")).unwrap().count();
    assert_eq!(curves, 12);
}

#[test]
fn missing_world_is_recorded_and_the_rest_still_runs() {
    let missing = tempfile::tempdir().unwrap().path().join("nowhere");
    let spec = BenchSpec::from_text(&format!(
        "{SMALL}worlds={}\nworld_seeds=3\nalgos=ea\nseeds=0,1\n",
        missing.display()
    ))
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let m = run_bench(&spec, dir.path()).unwrap();
    assert_eq!(m.cells.len(), 4);
    assert_eq!(m.failures(), 2);
    assert!(m.cells.iter().filter(|c| c.world == "nowhere").all(|c| c.outcome.is_err()));
    let bad = &m.aggregates[0];
    assert_eq!((bad.algo, bad.runs, bad.failures), (Algo::Ea, 2, 2));
    let metrics = std::fs::read_to_string(dir.path().join("metrics.tsv")).unwrap();
    assert_eq!(metrics.matches("\terror: ").count(), 2);
    assert_eq!(metrics.matches("\tok\n").count(), 2);
}
