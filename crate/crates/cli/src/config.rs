//! Line-oriented `key = value` configuration with `[section]` headers.
//!
//! ```text
//! # comment
//! [scenario]
//! planning_latency = 0.3
//!
//! [experiment]
//! maps = grid, random
//! robots = 2, 4
//! strategies = hierarchical, gre
//! seeds = 0..10
//! output = out/bench
//! ```
//!
//! Keys before the first header belong to the section `""`. Later
//! duplicates override earlier ones.

use regionex_core::baselines::Strategy;
use regionex_core::routing::Objective;
use regionex_core::simulator::ScenarioConfig;
use regionex_core::{Error, Result};
use std::collections::BTreeMap;
use std::path::PathBuf;

pub type Section = BTreeMap<String, String>;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Config {
    pub sections: BTreeMap<String, Section>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, Section> = BTreeMap::new();
        let mut current = String::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Config(format!("line {}: unterminated section header", n + 1)))?;
                current = name.trim().to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", n + 1)));
            }
            sections.entry(current.clone()).or_default().insert(key.to_string(), value.trim().to_string());
        }
        Ok(Self { sections })
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.get(name)
    }
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

/// Overlay the keys of a `[scenario]` section onto `base`.
pub fn apply_scenario(base: &ScenarioConfig, section: &Section) -> Result<ScenarioConfig> {
    let mut cfg = base.clone();
    for (key, value) in section {
        let v = value.as_str();
        match key.as_str() {
            "robot_speed" => cfg.robot_speed = number(key, v)?,
            "sensor_radius" => cfg.sensor_radius = number(key, v)?,
            "tick" => cfg.tick = number(key, v)?,
            "planning_latency" => cfg.planning_latency = number(key, v)?,
            "message_latency" => cfg.message_latency = number(key, v)?,
            "solver_budget_ms" => cfg.solver_budget_ms = Some(number(key, v)?),
            "solver_evaluations" => cfg.solver_evaluations = number(key, v)?,
            "objective" => {
                cfg.objective = match v {
                    "min-max" | "minmax" => Objective::MinMax,
                    "min-total" | "mintotal" => Objective::MinTotal,
                    _ => return Err(Error::Config(format!("`objective`: expected min-max or min-total, got `{v}`"))),
                }
            }
            "w_threshold" => cfg.w_threshold = number(key, v)?,
            "progress_period" => cfg.progress_period = number(key, v)?,
            "max_time" => cfg.max_time = number(key, v)?,
            "breadcrumb_spacing" => cfg.breadcrumb_spacing = number(key, v)?,
            _ => return Err(Error::Config(format!("unknown scenario key `{key}`"))),
        }
    }
    Ok(cfg)
}

/// One (map, robot count, strategy) cell of an experiment and its seeds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Combination {
    /// Bundled map name or path to a map file.
    pub map: String,
    pub robots: usize,
    pub strategy: Strategy,
    pub seeds: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub combinations: Vec<Combination>,
    pub output: PathBuf,
    pub scenario: ScenarioConfig,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.combinations.is_empty() {
            return Err(Error::Config("experiment has no combinations".into()));
        }
        for c in &self.combinations {
            if c.robots == 0 {
                return Err(Error::Config(format!("{}: robot count must be positive", c.map)));
            }
            if c.seeds.is_empty() {
                return Err(Error::Config(format!("{} {} robots {}: no seeds", c.map, c.robots, c.strategy)));
            }
            let mut s = c.seeds.clone();
            s.sort_unstable();
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Config(format!("{} {} robots {}: duplicate seeds", c.map, c.robots, c.strategy)));
            }
        }
        Ok(())
    }

    pub fn run_count(&self) -> usize {
        self.combinations.iter().map(|c| c.seeds.len()).sum()
    }

    /// Build from `[experiment]` (cartesian product of maps, robots and
    /// strategies) and optional `[scenario]` overrides. `output` falls
    /// back to `default_output`.
    pub fn from_config(cfg: &Config, default_output: PathBuf) -> Result<Self> {
        let exp = cfg.section("experiment").ok_or_else(|| Error::Config("missing [experiment] section".into()))?;
        for key in exp.keys() {
            if !matches!(key.as_str(), "maps" | "robots" | "strategies" | "seeds" | "output") {
                return Err(Error::Config(format!("unknown experiment key `{key}`")));
            }
        }
        let get = |k: &str| exp.get(k).ok_or_else(|| Error::Config(format!("[experiment] is missing `{k}`")));
        let maps = list(get("maps")?);
        let robots = list(get("robots")?).iter().map(|r| number::<usize>("robots", r)).collect::<Result<Vec<_>>>()?;
        let strategies = list(get("strategies")?).iter().map(|s| s.parse()).collect::<Result<Vec<Strategy>>>()?;
        let seeds = parse_seeds(get("seeds")?)?;
        let mut combinations = Vec::new();
        for map in &maps {
            for &r in &robots {
                for &strategy in &strategies {
                    combinations.push(Combination { map: map.clone(), robots: r, strategy, seeds: seeds.clone() });
                }
            }
        }
        let scenario = match cfg.section("scenario") {
            Some(s) => apply_scenario(&ScenarioConfig::default(), s)?,
            None => ScenarioConfig::default(),
        };
        let output = exp.get("output").map(PathBuf::from).unwrap_or(default_output);
        let spec = Self { combinations, output, scenario };
        spec.validate()?;
        Ok(spec)
    }
}

fn list(value: &str) -> Vec<String> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

/// `a..b` (half-open), or a comma list of integers and ranges.
pub fn parse_seeds(value: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for item in list(value) {
        match item.split_once("..") {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (number("seeds", a.trim())?, number("seeds", b.trim())?);
                if a >= b {
                    return Err(Error::Config(format!("`seeds`: empty range `{item}`")));
                }
                out.extend(a..b);
            }
            None => out.push(number("seeds", &item)?),
        }
    }
    Ok(out)
}
