//! The work behind each CLI verb. Every function returns `Ok(true)` when
//! all runs completed, `Ok(false)` when some hit the time cap.

use crate::config::{apply_scenario, Config, ExperimentSpec};
use crate::experiments::{ground_truth, load_grid, run_experiments, scenario, Row, Summary};
use crate::maps::{generate_text, MapKind, RESOLUTION};
use crate::render::{render_snapshot, Snapshot};
use regionex_core::baselines::Strategy;
use regionex_core::simulator::{RunOutput, ScenarioConfig, Simulation};
use regionex_core::{Error, Result};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "REGIONEX_OUT";

pub fn default_output() -> PathBuf {
    std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"))
}

/// `[scenario]` overrides from an optional config file.
pub fn load_scenario(config: Option<&Path>) -> Result<ScenarioConfig> {
    let base = ScenarioConfig::default();
    let Some(path) = config else { return Ok(base) };
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    match Config::parse(&text)?.section("scenario") {
        Some(s) => apply_scenario(&base, s),
        None => Ok(base),
    }
}

/// Step a simulation to the end, writing an SVG every `every` seconds and
/// one of the final state.
pub fn simulate(sim: &mut Simulation, every: Option<f64>, frames: Option<&Path>) -> Result<()> {
    let period = every.map(|s| ((s / sim.world.dt).round() as u64).max(1));
    let write_frame = |sim: &Simulation| -> Result<()> {
        if let Some(dir) = frames {
            let robots = sim.world.positions();
            let svg = render_snapshot(&Snapshot::of(&sim.world, sim.controller().last_plan(), &robots));
            fs::write(dir.join(format!("frame_{:06}.svg", sim.world.tick)), svg)?;
        }
        Ok(())
    };
    if period.is_some() {
        write_frame(sim)?;
    }
    while sim.step()? {
        if period.is_some_and(|p| sim.world.tick % p == 0) {
            write_frame(sim)?;
        }
    }
    if period.is_some_and(|p| sim.world.tick % p != 0) {
        write_frame(sim)?;
    }
    Ok(())
}

pub struct ExploreArgs {
    pub map: String,
    pub robots: usize,
    pub strategy: Strategy,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub snapshot_every: Option<f64>,
    pub config: Option<PathBuf>,
}

/// Single run. Writes `log.txt`, `metrics.csv`, `curve.csv` and, with
/// snapshots enabled, `snapshots/frame_<tick>.svg`.
pub fn explore(a: &ExploreArgs) -> Result<bool> {
    if a.robots == 0 {
        return Err(Error::Config("robot count must be positive".into()));
    }
    let base = load_scenario(a.config.as_deref())?;
    let grid = load_grid(&a.map, RESOLUTION)?;
    let (truth, starts) = ground_truth(grid, a.robots)?;
    let cfg = scenario(&base, &a.map, starts, a.strategy, a.seed);
    let out = a.out.clone().unwrap_or_else(|| {
        let stem = Path::new(&a.map).file_stem().map_or_else(|| a.map.clone(), |s| s.to_string_lossy().into_owned());
        default_output().join(format!("{stem}-{}-{}-{}", a.robots, a.strategy, a.seed))
    });
    fs::create_dir_all(&out)?;
    let frames = out.join("snapshots");
    if a.snapshot_every.is_some() {
        fs::create_dir_all(&frames)?;
    }
    let mut sim = Simulation::new(truth, &cfg)?;
    simulate(&mut sim, a.snapshot_every, Some(&frames))?;
    let output = sim.into_output();
    write_run(&out, &cfg, &output)?;
    Ok(output.metrics.completed)
}

fn write_run(dir: &Path, cfg: &ScenarioConfig, out: &RunOutput) -> Result<()> {
    fs::write(dir.join("log.txt"), out.log.text())?;
    let combo = crate::config::Combination { map: cfg.map_name.clone(), robots: cfg.starts.len(), strategy: cfg.strategy, seeds: vec![cfg.seed] };
    let summary = Summary::from_runs(vec![Row::from_run(&combo, cfg.seed, out)]);
    fs::write(dir.join("metrics.csv"), summary.to_csv())?;
    let mut curve = String::from("time,explored_area\n");
    for (t, a) in out.metrics.curve.iter().enumerate() {
        let _ = writeln!(curve, "{:.3},{a:.4}", t as f64 * cfg.tick);
    }
    fs::write(dir.join("curve.csv"), curve)?;
    Ok(())
}

/// Run an experiment file; writes `summary.csv` into its output directory.
pub fn bench(spec_path: &Path, jobs: usize, out: Option<PathBuf>, verbose: bool) -> Result<bool> {
    let text = fs::read_to_string(spec_path).map_err(|e| Error::Config(format!("{}: {e}", spec_path.display())))?;
    let mut spec = ExperimentSpec::from_config(&Config::parse(&text)?, default_output())?;
    if let Some(o) = out {
        spec.output = o;
    }
    let summary = run_experiments(&spec, jobs, &|r: &Row| {
        if verbose {
            eprintln!("{} {} robots {} seed {}: aet={:.1} completed={}", r.map, r.robots, r.strategy, r.seed.unwrap_or(0), r.aet, r.completed);
        }
    })?;
    fs::create_dir_all(&spec.output)?;
    fs::write(spec.output.join("summary.csv"), summary.to_csv())?;
    Ok(summary.all_completed())
}

pub fn genmap(kind: MapKind, seed: u64, out: Option<&Path>) -> Result<String> {
    let text = generate_text(kind, seed)?;
    if let Some(path) = out {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, &text)?;
    }
    Ok(text)
}

/// Fields of a log's `sim start` record.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogHeader {
    pub map: String,
    pub robots: usize,
    pub strategy: Strategy,
    pub seed: u64,
}

pub fn parse_header(log: &str) -> Result<LogHeader> {
    let bad = || Error::Config("log does not start with a `sim start` record".into());
    let first = log.lines().next().ok_or_else(bad)?;
    let rest = first.split_once(" sim start ").ok_or_else(bad)?.1;
    let mut fields = std::collections::BTreeMap::new();
    for kv in rest.split_whitespace() {
        let (k, v) = kv.split_once('=').ok_or_else(bad)?;
        fields.insert(k, v);
    }
    let get = |k: &str| fields.get(k).copied().ok_or_else(|| Error::Config(format!("log header lacks `{k}`")));
    let num = |k: &str| get(k)?.parse::<u64>().map_err(|_| Error::Config(format!("log header: bad `{k}`")));
    Ok(LogHeader { map: get("map")?.to_string(), robots: num("robots")? as usize, strategy: get("strategy")?.parse()?, seed: num("seed")? })
}

/// Replay the run recorded in `log_path` and write SVG frames every
/// `every` seconds. Fails when the replay diverges from the log, which
/// happens if the run used a different `--config`.
pub fn render(log_path: &Path, out: &Path, every: f64, config: Option<&Path>) -> Result<bool> {
    let log = fs::read_to_string(log_path).map_err(|e| Error::Config(format!("{}: {e}", log_path.display())))?;
    let h = parse_header(&log)?;
    let base = load_scenario(config)?;
    let (truth, starts) = ground_truth(load_grid(&h.map, RESOLUTION)?, h.robots)?;
    let cfg = scenario(&base, &h.map, starts, h.strategy, h.seed);
    fs::create_dir_all(out)?;
    let mut sim = Simulation::new(truth, &cfg)?;
    simulate(&mut sim, Some(every), Some(out))?;
    if sim.log.text() != log {
        return Err(Error::Config("replay diverged from the log; pass the config used for the run".into()));
    }
    Ok(sim.world.is_complete())
}
