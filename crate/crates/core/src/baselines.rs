//! Centralized comparison strategies sharing the perception stack.

use std::fmt::{self, Display};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::framework::{derive_seed, CenterState, EventLog, NodeId};
use crate::geometry::Point;
use crate::gridmap::{CellState, OccupancyGrid, RoiMask};
use crate::perception::{Distances, Rrg};
use crate::planner::{build_context, plan, region_goal, GraphContext, PlanOutcome, PlannerConfig, RoutePlan};
use crate::regiongraph::WorkloadStats;
use crate::routing::{build_matrix, solve_tsp};
use crate::simulator::{Controller, ScenarioConfig, World};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Strategy {
    Hierarchical,
    Ctr,
    Mtsp,
    Gre,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Hierarchical, Strategy::Ctr, Strategy::Mtsp, Strategy::Gre];
}

impl Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Hierarchical => "hierarchical",
            Strategy::Ctr => "ctr",
            Strategy::Mtsp => "mtsp",
            Strategy::Gre => "gre",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hierarchical" | "hier" => Ok(Strategy::Hierarchical),
            "ctr" => Ok(Strategy::Ctr),
            "mtsp" => Ok(Strategy::Mtsp),
            "gre" | "greedy" => Ok(Strategy::Gre),
            other => Err(Error::Config(format!("unknown strategy {other:?}"))),
        }
    }
}

/// Greedy utility constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreConfig {
    /// Utility per m² of Unknown area around a point.
    pub alpha: f64,
    /// Utility lost per meter of travel.
    pub beta: f64,
    /// Fraction of utility kept by points near an assigned one.
    pub gamma: f64,
    /// m
    pub discount_radius: f64,
}

impl Default for GreConfig {
    fn default() -> Self {
        Self { alpha: 1.0, beta: 1.0, gamma: 0.3, discount_radius: 6.0 }
    }
}

/// A navigation goal and the roadmap path leading to it.
#[derive(Clone, Debug, PartialEq)]
pub struct Goal {
    pub position: Point,
    pub path: Vec<Point>,
}

/// Per-robot goals, or `None` when nothing is left to explore.
pub type GoalSet = Option<Vec<Option<Goal>>>;

fn goal_for(ctx: &GraphContext, rrg: &Rrg, grid: &OccupancyGrid, robot: usize, region: usize) -> Result<Goal> {
    let v = &ctx.graph.vertices[region];
    let anchor = &ctx.anchors[robot];
    let mut path = ctx.paths.path(rrg, anchor.vertex, v.viewpoint.rrg_vertex)?;
    let position = region_goal(grid, v, anchor.position);
    if position != v.viewpoint.position {
        path = vec![position];
    }
    Ok(Goal { position, path })
}

/// Full region-graph and VRP pipeline; each robot gets its first region.
pub fn ctr_plan(
    grid: &OccupancyGrid,
    rrg: &mut Rrg,
    robots: &[Point],
    stats: &WorkloadStats,
    cfg: &PlannerConfig,
    seed: u64,
) -> Result<(GoalSet, Option<RoutePlan>)> {
    let roi = RoiMask::for_grid(grid);
    let p = match plan(grid, &roi, rrg, robots, stats, cfg, seed)? {
        PlanOutcome::Complete => return Ok((None, None)),
        PlanOutcome::Plan(p) => p,
    };
    let goals = p
        .sequences
        .iter()
        .enumerate()
        .map(|(k, seq)| {
            seq.first().map(|&j| {
                let v = &p.graph.vertices[j];
                let position = region_goal(grid, v, robots[k]);
                let path = if position == v.viewpoint.position { p.guide_paths[k].clone() } else { vec![position] };
                Goal { position, path }
            })
        })
        .collect();
    Ok((Some(goals), Some(p)))
}

/// Nearest robot for each cell center; ties go to the lowest robot id.
pub fn voronoi_owner(grid: &OccupancyGrid, cells: &[usize], robots: &[Point]) -> Vec<usize> {
    cells
        .iter()
        .map(|&c| {
            let p = grid.cell_center(c);
            let mut best = (f64::INFINITY, 0);
            for (k, r) in robots.iter().enumerate() {
                let d = p.distance_sq(*r);
                if d < best.0 {
                    best = (d, k);
                }
            }
            best.1
        })
        .collect()
}

/// Robot owning most of a region's cells; ties go to the lowest id.
pub fn majority_owner(owners: &[usize], robots: usize) -> usize {
    let mut counts = vec![0usize; robots];
    for &o in owners {
        counts[o] += 1;
    }
    let mut best = 0;
    for k in 1..robots {
        if counts[k] > counts[best] {
            best = k;
        }
    }
    best
}

/// Voronoi split by robot position, then a TSP per robot over the regions
/// it owns.
pub fn mtsp_plan(
    grid: &OccupancyGrid,
    rrg: &mut Rrg,
    robots: &[Point],
    stats: &WorkloadStats,
    cfg: &PlannerConfig,
    seed: u64,
) -> Result<GoalSet> {
    let roi = RoiMask::for_grid(grid);
    let Some(ctx) = build_context(grid, &roi, rrg, robots, stats, cfg, seed)? else { return Ok(None) };
    let owner: Vec<usize> =
        ctx.graph.vertices.iter().map(|v| majority_owner(&voronoi_owner(grid, &v.region.cells, robots), robots.len())).collect();
    let matrix = build_matrix(&ctx.graph, &ctx.anchors, &ctx.paths);
    let mut goals = Vec::with_capacity(robots.len());
    for k in 0..robots.len() {
        let mine: Vec<usize> =
            (0..ctx.graph.len()).filter(|&j| owner[j] == k && matrix.start(k, j).is_finite()).collect();
        if mine.is_empty() {
            goals.push(None);
            continue;
        }
        let order = solve_tsp(&matrix.for_robot(k).restrict(&mine), &cfg.solver)?;
        goals.push(Some(goal_for(&ctx, rrg, grid, k, mine[order[0]])?));
    }
    Ok(Some(goals))
}

/// Greedy assignment over a robot × point utility table. Each round takes
/// the best remaining pair, then scales down the utility of points within
/// `radius` of the chosen one. Ties go to the lower robot, then point.
pub fn gre_assign(mut utility: Vec<Vec<f64>>, points: &[Point], gamma: f64, radius: f64) -> Vec<Option<usize>> {
    let robots = utility.len();
    let mut assigned = vec![None; robots];
    let mut taken = vec![false; points.len()];
    for _ in 0..robots.min(points.len()) {
        let mut best: Option<(f64, usize, usize)> = None;
        for (k, row) in utility.iter().enumerate() {
            if assigned[k].is_some() {
                continue;
            }
            for (j, &u) in row.iter().enumerate() {
                if taken[j] || !u.is_finite() {
                    continue;
                }
                if best.is_none_or(|b| u > b.0) {
                    best = Some((u, k, j));
                }
            }
        }
        let Some((_, k, j)) = best else { break };
        assigned[k] = Some(j);
        taken[j] = true;
        for (i, p) in points.iter().enumerate() {
            if !taken[i] && p.distance(points[j]) <= radius {
                for row in utility.iter_mut() {
                    // Subtracting a share of |u| lowers negative utilities too.
                    row[i] -= (1.0 - gamma) * row[i].abs();
                }
            }
        }
    }
    assigned
}

/// Unknown area within `radius` of `p`, m².
pub fn information_gain(grid: &OccupancyGrid, p: Point, radius: f64) -> f64 {
    let res = grid.resolution();
    let r2 = radius * radius;
    let x0 = ((p.x - radius) / res).floor().max(0.0) as usize;
    let y0 = ((p.y - radius) / res).floor().max(0.0) as usize;
    let x1 = (((p.x + radius) / res).ceil() as usize).min(grid.width());
    let y1 = (((p.y + radius) / res).ceil() as usize).min(grid.height());
    let mut n = 0usize;
    for y in y0..y1 {
        for x in x0..x1 {
            let i = grid.index(x, y);
            if grid.get(i) == CellState::Unknown && grid.cell_center(i).distance_sq(p) <= r2 {
                n += 1;
            }
        }
    }
    n as f64 * grid.cell_area()
}

/// Greedy frontier assignment with distance-discounted utilities.
pub fn gre_plan(
    grid: &OccupancyGrid,
    rrg: &mut Rrg,
    robots: &[Point],
    stats: &WorkloadStats,
    cfg: &PlannerConfig,
    gre: &GreConfig,
    seed: u64,
) -> Result<GoalSet> {
    let roi = RoiMask::for_grid(grid);
    let Some(ctx) = build_context(grid, &roi, rrg, robots, stats, cfg, seed)? else { return Ok(None) };
    let points: Vec<Point> = ctx.graph.vertices.iter().map(|v| v.viewpoint.position).collect();
    let gains: Vec<f64> = points.iter().map(|&p| information_gain(grid, p, cfg.sensor_radius)).collect();
    let utility: Vec<Vec<f64>> = ctx
        .anchors
        .iter()
        .map(|a| {
            ctx.graph
                .vertices
                .iter()
                .zip(&gains)
                .map(|(v, &g)| {
                    let d = a.offset + ctx.paths.distance(a.vertex, v.viewpoint.rrg_vertex);
                    gre.alpha * g - gre.beta * d
                })
                .collect()
        })
        .collect();
    let assignment = gre_assign(utility, &points, gre.gamma, gre.discount_radius);
    let goals = assignment
        .iter()
        .enumerate()
        .map(|(k, j)| j.map(|j| goal_for(&ctx, rrg, grid, k, j)).transpose())
        .collect::<Result<Vec<_>>>()?;
    Ok(Some(goals))
}

/// Centralized controller: replans whenever any robot reaches its goal and
/// holds every robot while it plans.
pub struct Centralized {
    strategy: Strategy,
    cfg: PlannerConfig,
    gre: GreConfig,
    seed: u64,
    latency: u64,
    watchdog: u64,
    state: CenterState,
    epoch: u64,
    ready_at: u64,
    outbox: Vec<Option<Goal>>,
    idle_since: Option<u64>,
    last_plan: Option<RoutePlan>,
}

impl Centralized {
    pub fn new(strategy: Strategy, cfg: &ScenarioConfig, robots: usize) -> Self {
        Self {
            strategy,
            cfg: cfg.planner_config(),
            gre: GreConfig { discount_radius: cfg.sensor_radius, ..GreConfig::default() },
            seed: cfg.seed,
            latency: cfg.ticks(cfg.planning_latency, 0),
            watchdog: cfg.ticks(cfg.progress_period, 1),
            state: CenterState::Idle,
            epoch: 0,
            ready_at: 0,
            outbox: vec![None; robots],
            idle_since: None,
            last_plan: None,
        }
    }

    fn set_state(&mut self, next: CenterState, tick: u64, log: &mut EventLog, why: impl Display) {
        log.record(tick, NodeId::Center, "state", format!("{}->{} {why}", self.state, next));
        self.state = next;
    }

    fn start(&mut self, why: &str, world: &mut World, log: &mut EventLog) -> Result<()> {
        self.set_state(CenterState::Planning, world.tick, log, format!("trigger={why}"));
        self.epoch += 1;
        for r in &mut world.robots {
            r.held = true;
        }
        let positions = world.positions();
        let stats = world.stats();
        let seed = derive_seed(self.seed, 0, self.epoch);
        let result = match self.strategy {
            Strategy::Mtsp => mtsp_plan(&world.global, &mut world.rrg, &positions, &stats, &self.cfg, seed),
            Strategy::Gre => gre_plan(&world.global, &mut world.rrg, &positions, &stats, &self.cfg, &self.gre, seed),
            _ => ctr_plan(&world.global, &mut world.rrg, &positions, &stats, &self.cfg, seed).map(|(g, p)| {
                if p.is_some() {
                    self.last_plan = p;
                }
                g
            }),
        };
        self.outbox = match result {
            Ok(Some(goals)) => goals,
            Ok(None) => {
                log.record(world.tick, NodeId::Center, "plan", format!("epoch={} complete", self.epoch));
                vec![None; positions.len()]
            }
            Err(e) => {
                log.record(world.tick, NodeId::Center, "error", format!("epoch={} {e}", self.epoch));
                vec![None; positions.len()]
            }
        };
        self.ready_at = world.tick + self.latency;
        if self.latency == 0 {
            self.dispatch(world, log);
        }
        Ok(())
    }

    fn dispatch(&mut self, world: &mut World, log: &mut EventLog) {
        for (k, goal) in std::mem::take(&mut self.outbox).into_iter().enumerate() {
            world.robots[k].held = false;
            world.robots[k].path.clear();
            let Some(goal) = goal else { continue };
            let ok = world.follow(k, &goal.path).is_ok() || world.navigate(k, goal.position).is_ok();
            if ok {
                log.record(world.tick, format!("robot{k}"), "goal", format!("{:.3} {:.3}", goal.position.x, goal.position.y));
            } else {
                world.robots[k].path.clear();
            }
        }
        self.outbox = vec![None; world.robots.len()];
        self.set_state(CenterState::Monitoring, world.tick, log, format!("epoch={}", self.epoch));
    }
}

impl Controller for Centralized {
    fn on_tick(&mut self, world: &mut World, log: &mut EventLog) -> Result<()> {
        match self.state {
            CenterState::Idle => self.start("manual", world, log),
            CenterState::Planning => {
                for r in &world.robots {
                    if r.held && !r.path.is_empty() {
                        log.record(world.tick, format!("robot{}", r.id), "idle", "held");
                    }
                }
                if world.tick >= self.ready_at {
                    self.dispatch(world, log);
                }
                Ok(())
            }
            CenterState::Monitoring => {
                if let Some(r) = world.robots.iter().find(|r| r.arrived) {
                    let why = format!("arrived:robot{}", r.id);
                    self.idle_since = None;
                    return self.start(&why, world, log);
                }
                if world.robots.iter().all(|r| r.path.is_empty()) {
                    let since = *self.idle_since.get_or_insert(world.tick);
                    if world.tick - since >= self.watchdog {
                        self.idle_since = None;
                        return self.start("watchdog", world, log);
                    }
                } else {
                    self.idle_since = None;
                }
                Ok(())
            }
        }
    }

    fn last_plan(&self) -> Option<&RoutePlan> {
        self.last_plan.as_ref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.to_string().parse::<Strategy>().unwrap(), s);
        }
        assert!("nope".parse::<Strategy>().is_err());
    }

    #[test]
    fn gre_single_pair() {
        let a = gre_assign(vec![vec![5.0]], &[Point::new(0.0, 0.0)], 0.3, 6.0);
        assert_eq!(a, vec![Some(0)]);
    }

    #[test]
    fn gre_nearer_wins_on_equal_gain() {
        // Equal gain 10, distances 2 and 5.
        let a = gre_assign(vec![vec![10.0 - 2.0, 10.0 - 5.0]], &[Point::new(2.0, 0.0), Point::new(20.0, 0.0)], 0.3, 6.0);
        assert_eq!(a, vec![Some(0)]);
    }

    #[test]
    fn gre_discount_pushes_second_robot_away() {
        // Points 0 and 1 are 1 m apart; point 2 is 20 m away. Hand-simulated:
        // robot 0 takes point 0 (100 - 1 = 99). Point 1 drops from
        // 100 - 2 = 98 to 0.3 * 98 = 29.4 for robot 1, below point 2's
        // 80 - 10 = 70.
        let points = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(20.0, 0.0)];
        let utility = vec![vec![99.0, 98.0, 50.0], vec![97.0, 98.0, 70.0]];
        let a = gre_assign(utility, &points, 0.3, 6.0);
        assert_eq!(a, vec![Some(0), Some(2)]);
    }

    #[test]
    fn gre_negative_utility_is_lowered() {
        let points = [Point::new(0.0, 0.0), Point::new(1.0, 0.0)];
        // Robot 1 would prefer point 1 at -10; the discount makes it -17.
        let a = gre_assign(vec![vec![5.0, -20.0], vec![-15.0, -10.0]], &points, 0.3, 6.0);
        assert_eq!(a, vec![Some(0), Some(1)]);
        let b = gre_assign(vec![vec![5.0, -20.0], vec![-15.0, -10.0]], &points, 0.3, 0.5);
        assert_eq!(b, vec![Some(0), Some(1)]);
    }

    #[test]
    fn gre_terminates_with_fewer_points() {
        let a = gre_assign(vec![vec![1.0], vec![2.0], vec![3.0]], &[Point::new(0.0, 0.0)], 0.3, 6.0);
        assert_eq!(a, vec![None, None, Some(0)]);
    }

    #[test]
    fn voronoi_matches_nearest_oracle() {
        let g = OccupancyGrid::unknown(20, 4, 1.0).unwrap();
        let cells: Vec<usize> = (0..g.len()).collect();
        let robots = [Point::new(0.5, 0.5), Point::new(19.5, 0.5)];
        let owner = voronoi_owner(&g, &cells, &robots);
        for (&c, &o) in cells.iter().zip(&owner) {
            let p = g.cell_center(c);
            let (d0, d1) = (p.distance(robots[0]), p.distance(robots[1]));
            assert_eq!(o, if d1 < d0 { 1 } else { 0 });
        }
        assert_eq!(majority_owner(&owner[..10], 2), 0);
        assert_eq!(majority_owner(&[0, 1], 2), 0);
        assert_eq!(majority_owner(&[1, 1, 0], 2), 1);
    }

    #[test]
    fn gain_counts_unknown_disk() {
        let g = OccupancyGrid::unknown(40, 40, 0.5).unwrap();
        let a = information_gain(&g, Point::new(10.0, 10.0), 3.0);
        let exact = std::f64::consts::PI * 9.0;
        assert!((a - exact).abs() / exact < 0.05);
    }
}
