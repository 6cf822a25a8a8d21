//! Batch runs, CSV rows and aggregates.
//!
//! CSV columns, in order:
//!
//! | column | meaning |
//! |---|---|
//! | `kind` | `run`, `mean` (per combination) or `delta` |
//! | `map`, `robots`, `strategy` | the combination |
//! | `seed` | run seed; empty on `mean` and `delta` rows |
//! | `runs` | 1 on `run` rows, seed count otherwise |
//! | `completed` | completed runs among `runs` |
//! | `aet`, `adt`, `aor` | exploration time (s), distance per robot (m), overlap ratio |
//! | `coverage` | reachable free cells known at the end, fraction |
//! | `plans`, `idle` | planning rounds, idle-while-planning records |
//!
//! A `delta` row compares Hierarchical with the strategy named in its
//! `strategy` column for the same map and robot count: `aet`, `adt` and
//! `aor` hold `100 · (hierarchical − other) / other`, so negative values
//! mean Hierarchical is lower.

use crate::config::{Combination, ExperimentSpec};
use crate::maps::{start_positions, MapKind};
use regionex_core::baselines::Strategy;
use regionex_core::framework::analyze_log;
use regionex_core::gridmap::{parse_map, parse_pgm, GroundTruth, OccupancyGrid};
use regionex_core::simulator::{run, RunOutput, ScenarioConfig};
use regionex_core::{Error, Result};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

pub const CSV_HEADER: &str = "kind,map,robots,strategy,seed,runs,completed,aet,adt,aor,coverage,plans,idle";

/// Load a bundled map by name or a `.map`/`.pgm` file.
pub fn load_grid(map: &str, resolution: f64) -> Result<OccupancyGrid> {
    if let Ok(kind) = map.parse::<MapKind>() {
        return parse_map(kind.bundled(), crate::maps::RESOLUTION);
    }
    let path = Path::new(map);
    if !path.exists() {
        return Err(Error::Config(format!("map `{map}` is neither a bundled map nor an existing file")));
    }
    if path.extension().is_some_and(|e| e == "pgm") {
        parse_pgm(&std::fs::read(path)?, resolution)
    } else {
        parse_map(&std::fs::read_to_string(path)?, resolution)
    }
}

/// Ground truth with `robots` robots in the start corner.
pub fn ground_truth(grid: OccupancyGrid, robots: usize) -> Result<(GroundTruth, Vec<regionex_core::Point>)> {
    let starts = start_positions(robots);
    let cells = starts
        .iter()
        .map(|&p| grid.cell_at(p).filter(|&c| grid.is_free(c)).ok_or(Error::Config(format!("start {p:?} is not free"))))
        .collect::<Result<Vec<_>>>()?;
    Ok((GroundTruth::new(grid, &cells)?, starts))
}

/// Scenario for one run of a combination.
pub fn scenario(base: &ScenarioConfig, map: &str, starts: Vec<regionex_core::Point>, strategy: Strategy, seed: u64) -> ScenarioConfig {
    ScenarioConfig { map_name: map.to_string(), starts, strategy, seed, ..base.clone() }
}

pub fn run_one(grid: &OccupancyGrid, map: &str, robots: usize, strategy: Strategy, seed: u64, base: &ScenarioConfig) -> Result<RunOutput> {
    let (truth, starts) = ground_truth(grid.clone(), robots)?;
    run(truth, &scenario(base, map, starts, strategy, seed))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub kind: &'static str,
    pub map: String,
    pub robots: usize,
    pub strategy: String,
    pub seed: Option<u64>,
    pub runs: usize,
    pub completed: usize,
    pub aet: f64,
    pub adt: f64,
    pub aor: f64,
    pub coverage: f64,
    pub plans: f64,
    pub idle: f64,
}

impl Row {
    pub fn from_run(c: &Combination, seed: u64, out: &RunOutput) -> Self {
        let summary = analyze_log(out.log.text());
        let m = &out.metrics;
        Row {
            kind: "run",
            map: c.map.clone(),
            robots: c.robots,
            strategy: c.strategy.to_string(),
            seed: Some(seed),
            runs: 1,
            completed: usize::from(m.completed),
            aet: m.aet,
            adt: m.adt,
            aor: m.aor,
            coverage: m.coverage,
            plans: summary.plans as f64,
            idle: summary.idle_while_planning as f64,
        }
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{},{}",
            self.kind,
            self.map,
            self.robots,
            self.strategy,
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
            self.runs,
            self.completed,
            self.aet,
            self.adt,
            self.aor,
            self.coverage,
            trim(self.plans),
            trim(self.idle),
        )
    }
}

fn trim(x: f64) -> String {
    if x.fract() == 0.0 {
        format!("{x:.0}")
    } else {
        format!("{x:.6}")
    }
}

/// Mean of every metric over a combination's run rows.
pub fn mean_row(rows: &[&Row]) -> Row {
    let n = rows.len() as f64;
    let avg = |f: fn(&Row) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / n;
    let first = rows[0];
    Row {
        kind: "mean",
        map: first.map.clone(),
        robots: first.robots,
        strategy: first.strategy.clone(),
        seed: None,
        runs: rows.len(),
        completed: rows.iter().map(|r| r.completed).sum(),
        aet: avg(|r| r.aet),
        adt: avg(|r| r.adt),
        aor: avg(|r| r.aor),
        coverage: avg(|r| r.coverage),
        plans: avg(|r| r.plans),
        idle: avg(|r| r.idle),
    }
}

fn pct(ours: f64, theirs: f64) -> f64 {
    if theirs == 0.0 {
        0.0
    } else {
        100.0 * (ours - theirs) / theirs
    }
}

/// Delta rows for every (map, robots) that has a Hierarchical mean.
pub fn delta_rows(means: &[Row]) -> Vec<Row> {
    let hier = Strategy::Hierarchical.to_string();
    let mut out = Vec::new();
    for h in means.iter().filter(|r| r.strategy == hier) {
        for o in means.iter().filter(|o| o.strategy != hier && o.map == h.map && o.robots == h.robots) {
            out.push(Row {
                kind: "delta",
                map: h.map.clone(),
                robots: h.robots,
                strategy: o.strategy.clone(),
                seed: None,
                runs: h.runs.min(o.runs),
                completed: h.completed.min(o.completed),
                aet: pct(h.aet, o.aet),
                adt: pct(h.adt, o.adt),
                aor: pct(h.aor, o.aor),
                coverage: h.coverage - o.coverage,
                plans: h.plans - o.plans,
                idle: h.idle - o.idle,
            });
        }
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Summary {
    pub runs: Vec<Row>,
    pub means: Vec<Row>,
    pub deltas: Vec<Row>,
}

impl Summary {
    pub fn from_runs(runs: Vec<Row>) -> Self {
        let mut groups: BTreeMap<(String, usize, String), Vec<&Row>> = BTreeMap::new();
        let mut order = Vec::new();
        for r in &runs {
            let key = (r.map.clone(), r.robots, r.strategy.clone());
            if !groups.contains_key(&key) {
                order.push(key.clone());
            }
            groups.entry(key).or_default().push(r);
        }
        let means: Vec<Row> = order.iter().map(|k| mean_row(&groups[k])).collect();
        let deltas = delta_rows(&means);
        Self { runs, means, deltas }
    }

    pub fn all_completed(&self) -> bool {
        self.runs.iter().all(|r| r.completed == 1)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{CSV_HEADER}").unwrap();
        for r in self.runs.iter().chain(&self.means).chain(&self.deltas) {
            writeln!(s, "{}", r.to_csv()).unwrap();
        }
        s
    }
}

/// Run every (combination, seed) on up to `jobs` threads. Rows come back in
/// spec order regardless of scheduling. `progress` sees each finished row.
pub fn run_experiments(spec: &ExperimentSpec, jobs: usize, progress: &(dyn Fn(&Row) + Sync)) -> Result<Summary> {
    spec.validate()?;
    let mut grids = BTreeMap::new();
    for c in &spec.combinations {
        if !grids.contains_key(&c.map) {
            grids.insert(c.map.clone(), load_grid(&c.map, crate::maps::RESOLUTION)?);
        }
    }
    let tasks: Vec<(&Combination, u64)> = spec.combinations.iter().flat_map(|c| c.seeds.iter().map(move |&s| (c, s))).collect();
    let results: Mutex<Vec<Option<Result<Row>>>> = Mutex::new((0..tasks.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, tasks.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(c, seed)) = tasks.get(i) else { break };
                let row = run_one(&grids[&c.map], &c.map, c.robots, c.strategy, seed, &spec.scenario).map(|out| Row::from_run(c, seed, &out));
                if let Ok(r) = &row {
                    progress(r);
                }
                results.lock().expect("result lock")[i] = Some(row);
            });
        }
    });
    let runs = results.into_inner().expect("result lock").into_iter().map(|r| r.expect("every task ran")).collect::<Result<Vec<_>>>()?;
    Ok(Summary::from_runs(runs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(strategy: &str, seed: u64, aet: f64, aor: f64) -> Row {
        Row {
            kind: "run",
            map: "grid".into(),
            robots: 2,
            strategy: strategy.into(),
            seed: Some(seed),
            runs: 1,
            completed: 1,
            aet,
            adt: aet,
            aor,
            coverage: 1.0,
            plans: 3.0,
            idle: 0.0,
        }
    }

    #[test]
    fn deltas_are_relative_to_the_other_strategy() {
        let s = Summary::from_runs(vec![row("hierarchical", 0, 80.0, 1.2), row("gre", 0, 100.0, 1.5)]);
        assert_eq!(s.means.len(), 2);
        assert_eq!(s.deltas.len(), 1);
        assert!((s.deltas[0].aet + 20.0).abs() < 1e-12);
        assert!((s.deltas[0].aor + 20.0).abs() < 1e-12);
        assert_eq!(s.deltas[0].strategy, "gre");
    }

    #[test]
    fn csv_has_header_and_one_line_per_row() {
        let s = Summary::from_runs(vec![row("gre", 0, 1.0, 1.0), row("gre", 1, 3.0, 1.0)]);
        let csv = s.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 4);
        assert!(lines[3].starts_with("mean,grid,2,gre,,2,2,2.000000"));
    }

    #[test]
    fn unknown_map_is_a_config_error() {
        assert!(matches!(load_grid("/nonexistent/x.map", 0.1), Err(Error::Config(_))));
    }
}
