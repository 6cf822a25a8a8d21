//! The planning pipeline shared by every strategy: frontiers, viewpoints,
//! region graph, cost matrix and routes.

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::gridmap::{flood_free, OccupancyGrid, RoiMask};
use crate::perception::{
    detect_frontiers, fov, rrg_connect, sample_viewpoints, Frontier, Rrg, SamplingConfig, SourcePaths, Viewpoint,
};
use crate::regiongraph::{build_region_graph, RegionGraph, RegionVertex, WorkloadStats};
use crate::routing::{build_matrix, guide_path, solve_tsp, solve_vrp, CostMatrix, RobotAnchor, SolveOptions};

/// A goal closer than this many cells counts as already reached.
const ARRIVAL_SLACK: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlannerConfig {
    pub sensor_radius: f64,
    /// Frontiers wider than this are split, meters.
    pub frontier_diameter: f64,
    pub sampling: SamplingConfig,
    pub solver: SolveOptions,
    /// Frontier cells tried as fallback viewpoints when sampling fails.
    pub fallback_tries: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            sensor_radius: 6.0,
            frontier_diameter: 6.0,
            sampling: SamplingConfig::default(),
            solver: SolveOptions::default(),
            fallback_tries: 24,
        }
    }
}

/// Region graph plus what is needed to route over it.
#[derive(Clone, Debug)]
pub struct GraphContext {
    pub graph: RegionGraph,
    pub anchors: Vec<RobotAnchor>,
    pub paths: SourcePaths,
    /// Number of frontiers detected before viewpoint sampling.
    pub frontier_count: usize,
}

#[derive(Clone, Debug)]
pub struct RoutePlan {
    /// Region indices into `graph.vertices`, per robot.
    pub sequences: Vec<Vec<usize>>,
    /// Roadmap path to the first region's viewpoint; empty iff the
    /// sequence is empty.
    pub guide_paths: Vec<Vec<Point>>,
    pub objective: f64,
    pub graph: RegionGraph,
    pub anchors: Vec<RobotAnchor>,
}

impl RoutePlan {
    /// Cells of every region in a robot's sequence.
    pub fn roi_cells(&self, robot: usize) -> Vec<usize> {
        let mut cells: Vec<usize> =
            self.sequences[robot].iter().flat_map(|&j| self.graph.vertices[j].region.cells.iter().copied()).collect();
        cells.sort_unstable();
        cells
    }

    /// Sum of the workloads of a robot's regions.
    pub fn expected_workload(&self, robot: usize) -> f64 {
        self.sequences[robot].iter().map(|&j| self.graph.vertices[j].weight).sum()
    }
}

#[derive(Clone, Debug)]
pub enum PlanOutcome {
    /// No frontier left in the region of interest.
    Complete,
    Plan(RoutePlan),
}

/// Attach a robot to the roadmap: the nearest vertex it can see within
/// `connect_radius`, otherwise a new vertex at its position.
pub fn anchor_robot(rrg: &mut Rrg, grid: &OccupancyGrid, id: usize, position: Point, connect_radius: f64) -> Result<RobotAnchor> {
    if let Some(v) = rrg.nearest_visible(position, grid, connect_radius) {
        return Ok(RobotAnchor { id, position, vertex: v, offset: position.distance(rrg.vertex(v)) });
    }
    let vertex = match rrg_connect(rrg, position, grid, connect_radius)? {
        Some(v) => v,
        None => rrg.add_vertex(position),
    };
    Ok(RobotAnchor { id, position, vertex, offset: 0.0 })
}

/// Known Free cells 4-connected to any of the robots.
pub fn accessible_mask(grid: &OccupancyGrid, positions: &[Point]) -> Vec<bool> {
    let seeds: Vec<usize> = positions.iter().filter_map(|&p| grid.cell_at(p)).filter(|&c| grid.is_free(c)).collect();
    flood_free(grid, &seeds)
}

/// Viewpoints for frontiers that sampling could not serve: the frontier
/// cells nearest the centroid that are accessible and join the roadmap.
fn fallback_viewpoint(
    frontier: &Frontier,
    grid: &OccupancyGrid,
    rrg: &mut Rrg,
    accessible: &[bool],
    cfg: &PlannerConfig,
) -> Result<Option<Viewpoint>> {
    let mut cells: Vec<usize> = frontier.cells.iter().copied().filter(|&c| accessible[c]).collect();
    cells.sort_by(|&a, &b| {
        let (da, db) = (grid.cell_center(a).distance_sq(frontier.centroid), grid.cell_center(b).distance_sq(frontier.centroid));
        da.total_cmp(&db).then(a.cmp(&b))
    });
    for &c in cells.iter().take(cfg.fallback_tries) {
        let p = grid.cell_center(c);
        if let Some(v) = rrg_connect(rrg, p, grid, cfg.sampling.connect_radius)? {
            let fov_score = fov(p, frontier, grid, cfg.sampling.fov_radius)?;
            return Ok(Some(Viewpoint { frontier_id: frontier.id, position: p, fov_score, rrg_vertex: v }));
        }
    }
    Ok(None)
}

/// Detect frontiers in `roi`, give each a viewpoint, and build the region
/// graph. Returns `None` when the ROI has no frontier at all.
pub fn build_context(
    grid: &OccupancyGrid,
    roi: &RoiMask,
    rrg: &mut Rrg,
    robots: &[Point],
    stats: &WorkloadStats,
    cfg: &PlannerConfig,
    seed: u64,
) -> Result<Option<GraphContext>> {
    let frontiers = detect_frontiers(grid, roi, cfg.frontier_diameter)?;
    if frontiers.is_empty() {
        return Ok(None);
    }
    let anchors = robots
        .iter()
        .enumerate()
        .map(|(id, &p)| anchor_robot(rrg, grid, id, p, cfg.sampling.connect_radius))
        .collect::<Result<Vec<_>>>()?;
    let accessible = accessible_mask(grid, robots);
    let (mut viewpoints, mut kept) = sample_viewpoints(&frontiers, grid, rrg, &cfg.sampling, seed, Some(&accessible))?;
    if kept.len() < frontiers.len() {
        let mut merged: Vec<(Frontier, Viewpoint)> = kept.into_iter().zip(viewpoints).collect();
        for f in &frontiers {
            if merged.iter().any(|(k, _)| k.id == f.id) {
                continue;
            }
            if let Some(v) = fallback_viewpoint(f, grid, rrg, &accessible, cfg)? {
                merged.push((f.clone(), v));
            }
        }
        merged.sort_by_key(|(f, _)| f.id);
        (kept, viewpoints) = merged.into_iter().unzip();
    }
    let mut sources: Vec<usize> = anchors.iter().map(|a| a.vertex).collect();
    sources.extend(viewpoints.iter().map(|v| v.rrg_vertex));
    let paths = SourcePaths::new(rrg, &sources);
    let graph = build_region_graph(grid, roi, &kept, &viewpoints, &paths, stats, cfg.sensor_radius)?;
    Ok(Some(GraphContext { graph, anchors, paths, frontier_count: frontiers.len() }))
}

/// Solve the VRP over a context, leaving out regions no robot can reach.
pub fn route(ctx: GraphContext, rrg: &Rrg, cfg: &PlannerConfig) -> Result<RoutePlan> {
    let GraphContext { mut graph, anchors, paths, .. } = ctx;
    let mut matrix = build_matrix(&graph, &anchors, &paths);
    let solution = loop {
        match solve_vrp(&matrix, &cfg.solver) {
            Ok(s) => break s,
            Err(Error::UnreachableRegions(ids)) => {
                let keep: Vec<usize> = (0..graph.len()).filter(|j| ids.binary_search(j).is_err()).collect();
                graph = subgraph(&graph, &keep);
                matrix = build_matrix(&graph, &anchors, &paths);
            }
            Err(e) => return Err(e),
        }
    };
    let guide_paths = solution
        .routes
        .iter()
        .zip(&anchors)
        .map(|(seq, a)| if seq.is_empty() { Ok(Vec::new()) } else { guide_path(seq, &graph, rrg, &paths, a) })
        .collect::<Result<Vec<_>>>()?;
    Ok(RoutePlan { sequences: solution.routes, guide_paths, objective: solution.objective, graph, anchors })
}

/// Full pipeline for a set of robots over `roi`.
pub fn plan(
    grid: &OccupancyGrid,
    roi: &RoiMask,
    rrg: &mut Rrg,
    robots: &[Point],
    stats: &WorkloadStats,
    cfg: &PlannerConfig,
    seed: u64,
) -> Result<PlanOutcome> {
    match build_context(grid, roi, rrg, robots, stats, cfg, seed)? {
        None => Ok(PlanOutcome::Complete),
        Some(ctx) => Ok(PlanOutcome::Plan(route(ctx, rrg, cfg)?)),
    }
}

/// Single-robot visiting order over a context (client-side refinement).
pub fn local_order(ctx: &GraphContext, cfg: &PlannerConfig) -> Result<Vec<usize>> {
    let matrix: CostMatrix = build_matrix(&ctx.graph, &ctx.anchors[..1], &ctx.paths);
    let reachable: Vec<usize> = (0..ctx.graph.len()).filter(|&j| matrix.start(0, j).is_finite()).collect();
    let restricted = matrix.restrict(&reachable);
    let order = solve_tsp(&restricted, &cfg.solver)?;
    Ok(order.into_iter().map(|k| reachable[k]).collect())
}

/// Navigation goal for a region: its viewpoint, or the nearest cell of its
/// frontier when the robot already stands at the viewpoint. Standing on a
/// frontier cell always reveals its Unknown neighbors.
pub fn region_goal(grid: &OccupancyGrid, vertex: &RegionVertex, position: Point) -> Point {
    let vp = vertex.viewpoint.position;
    if vp.distance(position) > ARRIVAL_SLACK * grid.resolution() {
        return vp;
    }
    vertex
        .frontier
        .cells
        .iter()
        .map(|&c| (grid.cell_center(c).distance_sq(position), c))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map_or(vp, |(_, c)| grid.cell_center(c))
}

/// Regions `keep` with edges renumbered.
pub fn subgraph(g: &RegionGraph, keep: &[usize]) -> RegionGraph {
    let mut vertices = Vec::with_capacity(keep.len());
    for (new_id, &j) in keep.iter().enumerate() {
        let mut v = g.vertices[j].clone();
        v.region.id = new_id;
        vertices.push(v);
    }
    let mut edges = Vec::new();
    for (na, &a) in keep.iter().enumerate() {
        for (nb, &b) in keep.iter().enumerate().skip(na + 1) {
            if let Some(e) = g.edge(a, b) {
                edges.push(crate::regiongraph::RegionEdge { a: na, b: nb, weight: e.weight });
            }
        }
    }
    RegionGraph { vertices, edges }
}
