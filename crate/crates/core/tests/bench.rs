use cuboid_inspect::bench::{run_bench, table_csv, trial_seed, BenchError, BenchSpec, TABLE_HEADER};
use cuboid_inspect::scenario::{ScenarioFile, REDUCED_SCENARIO};

fn base() -> ScenarioFile {
    let mut f = ScenarioFile::parse(REDUCED_SCENARIO).unwrap();
    f.t_max = 30;
    f
}

#[test]
fn single_cell_gives_one_row() {
    let spec = BenchSpec { points: vec![4], horizons: vec![2], trials: 1, seed: 1 };
    let mut calls = 0;
    let rows = run_bench(&base(), &spec, |_, _, _| calls += 1).unwrap();
    assert_eq!(calls, 1);
    assert_eq!(rows.len(), 1);
    assert_eq!((rows[0].points, rows[0].horizon, rows[0].trials), (4, 2, 1));
    let table = table_csv(&rows);
    let lines: Vec<_> = table.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], TABLE_HEADER.join(","));
}

#[test]
fn fixed_seed_gives_identical_tables() {
    let spec = BenchSpec { points: vec![4, 8], horizons: vec![1, 2], trials: 2, seed: 9 };
    let a = run_bench(&base(), &spec, |_, _, _| {}).unwrap();
    let b = run_bench(&base(), &spec, |_, _, _| {}).unwrap();
    assert_eq!(a.len(), 4);
    let det = |rows: &[cuboid_inspect::bench::BenchRow]| rows.iter().map(|r| r.deterministic()).collect::<Vec<_>>();
    assert_eq!(det(&a), det(&b));
    for (x, y) in a.iter().zip(&b) {
        let steps = |r: &cuboid_inspect::bench::BenchRow| r.outcomes.iter().map(|o| (o.seed, o.status, o.steps, o.nodes)).collect::<Vec<_>>();
        assert_eq!(steps(x), steps(y));
    }
}

#[test]
fn trial_seeds_are_distinct() {
    let mut seen = std::collections::BTreeSet::new();
    for n in [4, 8, 12] {
        for h in [1, 2, 3] {
            for k in 0..5 {
                assert!(seen.insert(trial_seed(7, n, h, k)));
            }
        }
    }
}

#[test]
fn uneven_and_empty_specs_are_rejected() {
    let spec = BenchSpec { points: vec![6], horizons: vec![2], trials: 1, seed: 0 };
    assert_eq!(run_bench(&base(), &spec, |_, _, _| {}).unwrap_err(), BenchError::UnevenPoints { points: 6, faces: 4 });
    let spec = BenchSpec { points: vec![4], horizons: vec![], trials: 1, seed: 0 };
    assert_eq!(run_bench(&base(), &spec, |_, _, _| {}).unwrap_err(), BenchError::Empty);
}
