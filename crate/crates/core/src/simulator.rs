//! Deterministic discrete-time multi-robot world.
//!
//! Robots are point agents moving along polylines at constant speed. Each
//! keeps its own map of what its sensor has seen; the global map is the
//! union. Strategies plug in through [`Controller`].

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use crate::baselines::{Centralized, Strategy};
use crate::error::{Error, Result};
use crate::framework::{EventLog, Hierarchical};
use crate::geometry::Point;
use crate::gridmap::{CellState, GroundTruth, OccupancyGrid, Pose, RevealKernel};
use crate::perception::{rrg_connect, Rrg};
use crate::planner::{PlannerConfig, RoutePlan};
use crate::regiongraph::WorkloadStats;
use crate::routing::{Objective, SolveOptions, SolverMode};

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub map_name: String,
    pub starts: Vec<Point>,
    /// m/s
    pub robot_speed: f64,
    /// m
    pub sensor_radius: f64,
    /// s
    pub tick: f64,
    pub strategy: Strategy,
    pub seed: u64,
    /// Simulated time the center spends planning, s.
    pub planning_latency: f64,
    /// Transport delay of every message, s.
    pub message_latency: f64,
    /// Wall-clock budget for the heuristic VRP solver. Unset keeps runs
    /// reproducible through the evaluation budget alone.
    pub solver_budget_ms: Option<u64>,
    pub solver_evaluations: u64,
    pub objective: Objective,
    /// Progress deviation that triggers a replan, m.
    pub w_threshold: f64,
    /// Interval between client progress reports, s.
    pub progress_period: f64,
    /// Simulated time cap, s.
    pub max_time: f64,
    /// Spacing of roadmap breadcrumbs along traveled paths, m.
    pub breadcrumb_spacing: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            map_name: String::new(),
            starts: Vec::new(),
            robot_speed: 1.0,
            sensor_radius: 6.0,
            tick: 0.1,
            strategy: Strategy::Hierarchical,
            seed: 0,
            planning_latency: 0.3,
            message_latency: 0.0,
            solver_budget_ms: None,
            solver_evaluations: SolveOptions::default().max_evaluations,
            objective: Objective::MinMax,
            w_threshold: 120.0,
            progress_period: 1.0,
            max_time: 3000.0,
            breadcrumb_spacing: 1.0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self, truth: &GroundTruth) -> Result<()> {
        let positive = [
            ("robot_speed", self.robot_speed),
            ("sensor_radius", self.sensor_radius),
            ("tick", self.tick),
            ("progress_period", self.progress_period),
            ("max_time", self.max_time),
            ("breadcrumb_spacing", self.breadcrumb_spacing),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("planning_latency", self.planning_latency), ("message_latency", self.message_latency)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.w_threshold.is_nan() {
            return Err(Error::Config("w_threshold must be a number".into()));
        }
        if self.starts.is_empty() {
            return Err(Error::Config("at least one robot start is required".into()));
        }
        for &s in &self.starts {
            let cell = truth.grid().cell_at(s).ok_or(Error::OutOfBounds { x: s.x, y: s.y })?;
            if !truth.grid().is_free(cell) {
                return Err(Error::Config(format!("start ({:.2}, {:.2}) is not in free space", s.x, s.y)));
            }
        }
        Ok(())
    }

    pub fn planner_config(&self) -> PlannerConfig {
        let base = PlannerConfig::default();
        PlannerConfig {
            sensor_radius: self.sensor_radius,
            frontier_diameter: self.sensor_radius,
            solver: SolveOptions {
                mode: SolverMode::Auto,
                objective: self.objective,
                max_evaluations: self.solver_evaluations,
                deadline: None,
            },
            ..base
        }
    }

    /// Whole ticks, rounded, at least `min`.
    pub fn ticks(&self, seconds: f64, min: u64) -> u64 {
        ((seconds / self.tick).round() as u64).max(min)
    }
}

#[derive(Clone, Debug)]
pub struct RobotSim {
    pub id: usize,
    pub pose: Pose,
    /// Remaining waypoints.
    pub path: VecDeque<Point>,
    /// Distance traveled, m.
    pub odometer: f64,
    /// Cells this robot's own sensor has revealed.
    pub revealed: usize,
    /// Roadmap vertex the robot last passed.
    pub anchor: usize,
    /// Set for the tick in which the path was completed.
    pub arrived: bool,
    /// Held robots do not move.
    pub held: bool,
}

impl RobotSim {
    pub fn position(&self) -> Point {
        self.pose.position()
    }

    pub fn is_moving(&self) -> bool {
        !self.path.is_empty() && !self.held
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Metrics {
    pub completed: bool,
    /// Completion time (or the cap), s.
    pub aet: f64,
    /// Mean distance traveled, m.
    pub adt: f64,
    /// Sum of per-robot explored areas over the explored union.
    pub aor: f64,
    /// Known fraction of reachable Free cells.
    pub coverage: f64,
    /// Explored area after every tick, m².
    pub curve: Vec<f64>,
    pub odometers: Vec<f64>,
}

/// The simulated environment: ground truth, maps, roadmap and robots.
#[derive(Clone, Debug)]
pub struct World {
    pub truth: GroundTruth,
    pub global: OccupancyGrid,
    pub locals: Vec<OccupancyGrid>,
    pub rrg: Rrg,
    pub robots: Vec<RobotSim>,
    pub tick: u64,
    pub dt: f64,
    pub speed: f64,
    /// Cells each robot newly revealed in its own map this tick.
    pub fresh: Vec<Vec<usize>>,
    kernel: RevealKernel,
    reachable: Vec<bool>,
    reachable_known: usize,
    reachable_total: usize,
    breadcrumb: f64,
    connect_radius: f64,
}

impl World {
    pub fn new(truth: GroundTruth, cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate(&truth)?;
        let g = truth.grid();
        let global = OccupancyGrid::unknown(g.width(), g.height(), g.resolution())?;
        let kernel = RevealKernel::new(cfg.sensor_radius, g.resolution(), g.width());
        let reachable = truth.reachable_mask();
        let reachable_total = truth.reachable_free_count();
        let connect_radius = cfg.planner_config().sampling.connect_radius;
        let mut world = Self {
            locals: vec![global.clone(); cfg.starts.len()],
            global,
            rrg: Rrg::new(),
            robots: Vec::new(),
            tick: 0,
            dt: cfg.tick,
            speed: cfg.robot_speed,
            fresh: vec![Vec::new(); cfg.starts.len()],
            kernel,
            reachable,
            reachable_known: 0,
            reachable_total,
            breadcrumb: cfg.breadcrumb_spacing,
            connect_radius,
            truth,
        };
        for (id, &p) in cfg.starts.iter().enumerate() {
            world.robots.push(RobotSim {
                id,
                pose: Pose::at(p),
                path: VecDeque::new(),
                odometer: 0.0,
                revealed: 0,
                anchor: 0,
                arrived: false,
                held: false,
            });
        }
        world.sense()?;
        for id in 0..world.robots.len() {
            let p = world.robots[id].position();
            let v = match rrg_connect(&mut world.rrg, p, &world.global, connect_radius)? {
                Some(v) => v,
                None => world.rrg.add_vertex(p),
            };
            world.robots[id].anchor = v;
        }
        Ok(world)
    }

    pub fn time(&self) -> f64 {
        self.tick as f64 * self.dt
    }

    pub fn positions(&self) -> Vec<Point> {
        self.robots.iter().map(|r| r.position()).collect()
    }

    pub fn explored_area(&self) -> f64 {
        (self.global.len() - self.global.count(CellState::Unknown)) as f64 * self.global.cell_area()
    }

    pub fn stats(&self) -> WorkloadStats {
        WorkloadStats { distances: self.robots.iter().map(|r| r.odometer).collect(), explored_area: self.explored_area() }
    }

    pub fn is_complete(&self) -> bool {
        self.reachable_known == self.reachable_total
    }

    pub fn coverage(&self) -> f64 {
        if self.reachable_total == 0 {
            1.0
        } else {
            self.reachable_known as f64 / self.reachable_total as f64
        }
    }

    /// Sum of per-robot revealed cells over the union.
    pub fn overlap_ratio(&self) -> f64 {
        let union = self.global.len() - self.global.count(CellState::Unknown);
        if union == 0 {
            return 1.0;
        }
        self.robots.iter().map(|r| r.revealed).sum::<usize>() as f64 / union as f64
    }

    /// Replace a robot's path with an A* route to `goal` over the global
    /// map.
    pub fn navigate(&mut self, robot: usize, goal: Point) -> Result<()> {
        let path = astar_path(&self.global, self.robots[robot].position(), goal)?;
        self.robots[robot].path = path.into_iter().skip(1).collect();
        Ok(())
    }

    /// Follow a polyline, bridging blocked legs with A*.
    pub fn follow(&mut self, robot: usize, waypoints: &[Point]) -> Result<()> {
        let mut path = VecDeque::new();
        let mut at = self.robots[robot].position();
        for &wp in waypoints {
            if self.global.segment_free(at, wp) {
                path.push_back(wp);
            } else {
                path.extend(astar_path(&self.global, at, wp)?.into_iter().skip(1));
            }
            at = wp;
        }
        self.robots[robot].path = path;
        Ok(())
    }

    /// Advance unheld robots along their paths by one tick.
    fn advance(&mut self) {
        let step = self.speed * self.dt;
        for r in &mut self.robots {
            r.arrived = false;
            if r.held || r.path.is_empty() {
                continue;
            }
            let mut budget = step;
            let mut pos = r.position();
            let mut heading = r.pose.theta();
            while budget > 0.0 {
                let Some(&next) = r.path.front() else { break };
                let d = pos.distance(next);
                if d > 0.0 {
                    heading = (next.y - pos.y).atan2(next.x - pos.x);
                }
                if d <= budget {
                    pos = next;
                    budget -= d;
                    r.odometer += d;
                    r.path.pop_front();
                } else {
                    pos = pos.lerp(next, budget / d);
                    r.odometer += budget;
                    budget = 0.0;
                }
            }
            r.pose = Pose::new(pos.x, pos.y, heading);
            r.arrived = r.path.is_empty();
        }
    }

    /// Reveal from every pose into the robot's map and the global map.
    fn sense(&mut self) -> Result<()> {
        let truth = self.truth.grid();
        for (i, r) in self.robots.iter_mut().enumerate() {
            let fresh = &mut self.fresh[i];
            fresh.clear();
            self.kernel.reveal_into(&mut self.locals[i], &self.truth, r.position(), fresh)?;
            r.revealed += fresh.len();
            for &c in fresh.iter() {
                if self.global.get(c) == CellState::Unknown {
                    self.global.set(c, truth.get(c));
                    if self.reachable[c] {
                        self.reachable_known += 1;
                    }
                }
            }
        }
        Ok(())
    }

    /// Drop roadmap breadcrumbs so traveled space stays connected.
    fn breadcrumbs(&mut self, previous: &[Point]) -> Result<()> {
        for (i, &prev) in previous.iter().enumerate() {
            let pos = self.robots[i].position();
            let anchor = self.robots[i].anchor;
            let a = self.rrg.vertex(anchor);
            if a.distance(pos) <= self.breadcrumb && self.global.segment_free(a, pos) {
                continue;
            }
            if let Some(v) = self.rrg.nearest_visible(pos, &self.global, 0.5 * self.breadcrumb) {
                self.robots[i].anchor = v;
                continue;
            }
            if prev == a || !self.global.is_free_at(prev) {
                continue;
            }
            let v = match rrg_connect(&mut self.rrg, prev, &self.global, self.connect_radius)? {
                Some(v) => v,
                None => {
                    let v = self.rrg.add_vertex(prev);
                    self.rrg.add_edge(anchor, v);
                    v
                }
            };
            self.robots[i].anchor = v;
        }
        Ok(())
    }
}

/// Strategy hook, called once per tick after motion and sensing.
pub trait Controller {
    fn on_tick(&mut self, world: &mut World, log: &mut EventLog) -> Result<()>;
    /// Most recent plan, for rendering.
    fn last_plan(&self) -> Option<&RoutePlan>;
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub metrics: Metrics,
    pub log: EventLog,
}

/// A run in progress; [`run`] drives it to the end.
pub struct Simulation {
    pub world: World,
    pub log: EventLog,
    controller: Box<dyn Controller>,
    curve: Vec<f64>,
    cap: u64,
    done: bool,
}

impl Simulation {
    pub fn new(truth: GroundTruth, cfg: &ScenarioConfig) -> Result<Self> {
        let world = World::new(truth, cfg)?;
        let controller: Box<dyn Controller> = match cfg.strategy {
            Strategy::Hierarchical => Box::new(Hierarchical::new(cfg, world.robots.len())),
            other => Box::new(Centralized::new(other, cfg, world.robots.len())),
        };
        let mut sim = Self {
            curve: vec![world.explored_area()],
            cap: cfg.ticks(cfg.max_time, 1),
            world,
            log: EventLog::new(cfg.tick),
            controller,
            done: false,
        };
        sim.log.record(0, "sim", "start", format!("map={} robots={} strategy={} seed={}", cfg.map_name, cfg.starts.len(), cfg.strategy, cfg.seed));
        if sim.world.is_complete() {
            sim.finish_log();
        } else {
            sim.controller.on_tick(&mut sim.world, &mut sim.log)?;
        }
        Ok(sim)
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn controller(&self) -> &dyn Controller {
        self.controller.as_ref()
    }

    fn finish_log(&mut self) {
        self.done = true;
        let w = &self.world;
        let kind = if w.is_complete() { "complete" } else { "incomplete" };
        self.log.record(w.tick, "sim", kind, format!("coverage={:.6}", w.coverage()));
    }

    /// Advance one tick. Returns false once the run has ended.
    pub fn step(&mut self) -> Result<bool> {
        if self.done {
            return Ok(false);
        }
        let w = &mut self.world;
        w.tick += 1;
        let previous = w.positions();
        w.advance();
        w.sense()?;
        w.breadcrumbs(&previous)?;
        self.curve.push(w.explored_area());
        if w.is_complete() || w.tick >= self.cap {
            self.finish_log();
            return Ok(false);
        }
        self.controller.on_tick(&mut self.world, &mut self.log)?;
        Ok(true)
    }

    pub fn metrics(&self) -> Metrics {
        let w = &self.world;
        let odometers: Vec<f64> = w.robots.iter().map(|r| r.odometer).collect();
        Metrics {
            completed: w.is_complete(),
            aet: w.time(),
            adt: odometers.iter().sum::<f64>() / odometers.len() as f64,
            aor: w.overlap_ratio(),
            coverage: w.coverage(),
            curve: self.curve.clone(),
            odometers,
        }
    }

    pub fn into_output(self) -> RunOutput {
        RunOutput { metrics: self.metrics(), log: self.log }
    }
}

/// Run a scenario to completion or the time cap.
pub fn run(truth: GroundTruth, cfg: &ScenarioConfig) -> Result<RunOutput> {
    let mut sim = Simulation::new(truth, cfg)?;
    while sim.step()? {}
    Ok(sim.into_output())
}

#[derive(Clone, Copy, PartialEq)]
struct Open {
    f: f64,
    cell: usize,
}

impl Eq for Open {}

impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        other.f.total_cmp(&self.f).then(other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest 8-connected path over Free cells, never cutting an obstacle
/// or Unknown corner. Returns cell indices from `from` to `to`.
pub fn astar_cells(grid: &OccupancyGrid, from: usize, to: usize) -> Result<Vec<usize>> {
    let no_path = || Error::NoPath { from: grid.coords(from), to: grid.coords(to) };
    if from >= grid.len() || to >= grid.len() || !grid.is_free(from) || !grid.is_free(to) {
        return Err(no_path());
    }
    let (w, h) = (grid.width() as i64, grid.height() as i64);
    let (tx, ty) = grid.coords(to);
    let octile = |c: usize| {
        let (x, y) = grid.coords(c);
        let (dx, dy) = ((x as f64 - tx as f64).abs(), (y as f64 - ty as f64).abs());
        dx.max(dy) + (std::f64::consts::SQRT_2 - 1.0) * dx.min(dy)
    };
    let mut g = vec![f64::INFINITY; grid.len()];
    let mut parent = vec![u32::MAX; grid.len()];
    let mut closed = vec![false; grid.len()];
    let mut open = BinaryHeap::new();
    g[from] = 0.0;
    open.push(Open { f: octile(from), cell: from });
    while let Some(Open { cell, .. }) = open.pop() {
        if closed[cell] {
            continue;
        }
        if cell == to {
            let mut path = vec![to];
            let mut c = to;
            while c != from {
                c = parent[c] as usize;
                path.push(c);
            }
            path.reverse();
            return Ok(path);
        }
        closed[cell] = true;
        let (x, y) = grid.coords(cell);
        let (x, y) = (x as i64, y as i64);
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)] {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx >= w || ny >= h {
                continue;
            }
            let n = (ny * w + nx) as usize;
            if closed[n] || !grid.is_free(n) {
                continue;
            }
            let cost = if dx != 0 && dy != 0 {
                if !grid.is_free((y * w + nx) as usize) || !grid.is_free((ny * w + x) as usize) {
                    continue;
                }
                std::f64::consts::SQRT_2
            } else {
                1.0
            };
            let ng = g[cell] + cost;
            if ng < g[n] {
                g[n] = ng;
                parent[n] = cell as u32;
                open.push(Open { f: ng + octile(n), cell: n });
            }
        }
    }
    Err(no_path())
}

/// A* between two positions: starts at `from`, passes through the centers
/// of intermediate cells and ends exactly at `to`.
pub fn astar_path(grid: &OccupancyGrid, from: Point, to: Point) -> Result<Vec<Point>> {
    let a = grid.cell_at(from).ok_or(Error::OutOfBounds { x: from.x, y: from.y })?;
    let b = grid.cell_at(to).ok_or(Error::OutOfBounds { x: to.x, y: to.y })?;
    let cells = astar_cells(grid, a, b)?;
    let mut path = vec![from];
    if cells.len() > 2 {
        path.extend(cells[1..cells.len() - 1].iter().map(|&c| grid.cell_center(c)));
    }
    if to != from {
        path.push(to);
    }
    Ok(path)
}

/// Length of a polyline.
pub fn path_length(path: &[Point]) -> f64 {
    path.windows(2).map(|w| w[0].distance(w[1])).sum()
}
