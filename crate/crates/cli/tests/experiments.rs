use regionex_cli::config::{Combination, Config, ExperimentSpec};
use regionex_cli::experiments::{run_experiments, Row, CSV_HEADER};
use regionex_core::baselines::Strategy;
use regionex_core::simulator::ScenarioConfig;
use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

/// 16 m × 10 m room split by a wall with a gap.
fn write_room(dir: &Path) -> String {
    let (w, h) = (160, 100);
    let mut text = String::new();
    for y in 0..h {
        for x in 0..w {
            let wall = x == 0 || y == 0 || x == w - 1 || y == h - 1 || (x == 80 && y > 30);
            text.push(if wall { '#' } else { '.' });
        }
        text.push('\n');
    }
    let path = dir.join("room.map");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn spec(map: &str, strategies: &[Strategy], robots: &[usize], seeds: &[u64]) -> ExperimentSpec {
    let mut combinations = Vec::new();
    for &r in robots {
        for &s in strategies {
            combinations.push(Combination { map: map.into(), robots: r, strategy: s, seeds: seeds.to_vec() });
        }
    }
    ExperimentSpec { combinations, output: "unused".into(), scenario: ScenarioConfig { max_time: 400.0, ..ScenarioConfig::default() } }
}

#[test]
fn one_combination_one_seed_gives_a_run_row_and_a_mean_row() {
    let dir = tempfile::tempdir().unwrap();
    let map = write_room(dir.path());
    let s = run_experiments(&spec(&map, &[Strategy::Gre], &[1], &[3]), 1, &|_| {}).unwrap();
    let csv = s.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], CSV_HEADER);
    assert!(lines[1].starts_with("run,"));
    assert!(lines[2].starts_with("mean,"));
    assert!(s.all_completed());
}

#[test]
fn full_benchmark_grid_has_480_runs() {
    let text = "[experiment]\nmaps = empty, grid, random, campus\nrobots = 1, 2, 4\nstrategies = hierarchical, ctr, mtsp, gre\nseeds = 0..10\n";
    let spec = ExperimentSpec::from_config(&Config::parse(text).unwrap(), "o".into()).unwrap();
    assert_eq!(spec.run_count(), 480);
}

/// Recompute means from the CSV run rows alone.
fn aggregate(csv: &str) -> BTreeMap<(String, String, String), Vec<f64>> {
    let mut sums: BTreeMap<(String, String, String), (Vec<f64>, f64)> = BTreeMap::new();
    for line in csv.lines().skip(1).filter(|l| l.starts_with("run,")) {
        let f: Vec<&str> = line.split(',').collect();
        let key = (f[1].to_string(), f[2].to_string(), f[3].to_string());
        let vals: Vec<f64> = f[7..11].iter().map(|v| v.parse().unwrap()).collect();
        let e = sums.entry(key).or_insert((vec![0.0; 4], 0.0));
        e.0.iter_mut().zip(&vals).for_each(|(s, v)| *s += v);
        e.1 += 1.0;
    }
    sums.into_iter().map(|(k, (s, n))| (k, s.into_iter().map(|x| x / n).collect())).collect()
}

#[test]
fn aggregates_match_an_independent_pass_over_the_rows() {
    let dir = tempfile::tempdir().unwrap();
    let map = write_room(dir.path());
    let seen = AtomicUsize::new(0);
    let s = run_experiments(&spec(&map, &[Strategy::Hierarchical, Strategy::Gre], &[2], &[0, 1]), 2, &|_| {
        seen.fetch_add(1, Ordering::Relaxed);
    })
    .unwrap();
    assert_eq!(seen.into_inner(), 4);
    let csv = s.to_csv();
    let oracle = aggregate(&csv);
    let mut means = 0;
    for line in csv.lines().filter(|l| l.starts_with("mean,")) {
        let f: Vec<&str> = line.split(',').collect();
        let want = &oracle[&(f[1].to_string(), f[2].to_string(), f[3].to_string())];
        for (i, w) in want.iter().enumerate() {
            let got: f64 = f[7 + i].parse().unwrap();
            assert!((got - w).abs() < 2e-6, "{line}: column {} {got} vs {w}", 7 + i);
        }
        means += 1;
    }
    assert_eq!(means, 2);
    let delta = csv.lines().find(|l| l.starts_with("delta,")).unwrap();
    let f: Vec<&str> = delta.split(',').collect();
    let (h, g) = (&oracle[&(f[1].into(), f[2].into(), "hierarchical".into())], &oracle[&(f[1].into(), f[2].into(), "gre".into())]);
    let pct: f64 = f[7].parse().unwrap();
    assert!((pct - 100.0 * (h[0] - g[0]) / g[0]).abs() < 1e-3);
}

#[test]
fn missing_map_fails_before_any_run() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_room(dir.path());
    let mut s = spec(&good, &[Strategy::Gre], &[1], &[0]);
    s.combinations.push(Combination { map: dir.path().join("absent.map").to_string_lossy().into(), robots: 1, strategy: Strategy::Gre, seeds: vec![0] });
    let ran = AtomicUsize::new(0);
    let r = run_experiments(&s, 1, &|_: &Row| {
        ran.fetch_add(1, Ordering::Relaxed);
    });
    assert!(r.is_err());
    assert_eq!(ran.into_inner(), 0);
}

#[test]
fn rows_keep_spec_order_with_several_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let map = write_room(dir.path());
    let sp = spec(&map, &[Strategy::Ctr, Strategy::Mtsp], &[1], &[5, 2]);
    let a = run_experiments(&sp, 3, &|_| {}).unwrap();
    let b = run_experiments(&sp, 1, &|_| {}).unwrap();
    assert_eq!(a, b);
    let order: Vec<(String, Option<u64>)> = a.runs.iter().map(|r| (r.strategy.clone(), r.seed)).collect();
    assert_eq!(order, [("ctr".into(), Some(5)), ("ctr".into(), Some(2)), ("mtsp".into(), Some(5)), ("mtsp".into(), Some(2))]);
}
