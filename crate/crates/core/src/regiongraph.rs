//! Partition of unexplored space into regions and the weighted graph over
//! them.
//!
//! Every Unknown cell inside the ROI belongs to the frontier whose nearest
//! cell is closest in straight-line distance (ties go to the lower frontier
//! id). The partition is computed with a two-pass separable squared
//! distance transform that carries labels, so it is exact on the integer
//! lattice and linear in the bounding box of the ROI.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::gridmap::{CellState, OccupancyGrid, RoiMask};
use crate::perception::{Distances, Frontier, Viewpoint};

/// Below this explored area (m²) the historical distance-per-area rate is
/// considered undefined.
pub const MIN_EXPLORED_AREA: f64 = 1e-9;

const NO_SITE: u32 = u32::MAX;
const INF: i64 = i64::MAX / 4;

/// Assign every Unknown cell in `roi` to its nearest frontier. Returns one
/// ascending cell list per input frontier, in input order (possibly
/// empty).
pub fn partition_regions(grid: &OccupancyGrid, roi: &RoiMask, frontiers: &[Frontier]) -> Result<Vec<Vec<usize>>> {
    roi.check(grid)?;
    let mut regions = vec![Vec::new(); frontiers.len()];
    if frontiers.is_empty() {
        return Ok(regions);
    }
    let targets: Vec<usize> = roi.iter().filter(|&i| grid.get(i) == CellState::Unknown).collect();
    if targets.is_empty() {
        return Ok(regions);
    }
    // Bounding box of targets and sites; sites outside it do not exist, so
    // restricting the transform to it is exact.
    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
    let mut grow = |i: usize| {
        let (x, y) = grid.coords(i);
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    };
    targets.iter().for_each(|&i| grow(i));
    frontiers.iter().flat_map(|f| f.cells.iter()).for_each(|&i| grow(i));
    let w = x1 - x0 + 1;
    let h = y1 - y0 + 1;

    // Site label per box cell: the lowest frontier id owning the cell.
    let mut site = vec![NO_SITE; w * h];
    for f in frontiers {
        for &c in &f.cells {
            let (x, y) = grid.coords(c);
            let slot = &mut site[(y - y0) * w + (x - x0)];
            *slot = (*slot).min(f.id as u32);
        }
    }

    // Pass 1: per column, squared vertical distance to the nearest site in
    // that column and the lowest label among sites achieving it.
    let mut col_d = vec![INF; w * h];
    let mut col_l = vec![NO_SITE; w * h];
    for x in 0..w {
        let mut last: Option<(usize, u32)> = None;
        for y in 0..h {
            let s = site[y * w + x];
            if s != NO_SITE {
                last = Some((y, s));
            }
            if let Some((sy, sl)) = last {
                let d = (y - sy) as i64;
                col_d[y * w + x] = d * d;
                col_l[y * w + x] = sl;
            }
        }
        let mut last: Option<(usize, u32)> = None;
        for y in (0..h).rev() {
            let s = site[y * w + x];
            if s != NO_SITE {
                last = Some((y, s));
            }
            if let Some((sy, sl)) = last {
                let d = (sy - y) as i64;
                let k = y * w + x;
                let d2 = d * d;
                if d2 < col_d[k] || (d2 == col_d[k] && sl < col_l[k]) {
                    col_d[k] = d2;
                    col_l[k] = sl;
                }
            }
        }
    }

    // Pass 2: per row, lower envelope of parabolas (x - q)^2 + g(q) under
    // the lexicographic order (distance, label).
    let index_of: std::collections::HashMap<usize, usize> =
        frontiers.iter().enumerate().map(|(i, f)| (f.id, i)).collect();
    let mut label = vec![NO_SITE; w * h];
    let mut hull: Vec<usize> = Vec::with_capacity(w);
    let mut starts: Vec<i64> = Vec::with_capacity(w);
    for y in 0..h {
        let row = y * w;
        hull.clear();
        starts.clear();
        for q in 0..w {
            if col_d[row + q] >= INF {
                continue;
            }
            loop {
                let Some(&p) = hull.last() else {
                    hull.push(q);
                    starts.push(i64::MIN);
                    break;
                };
                let t = takeover(p, q, col_d[row + p], col_d[row + q], col_l[row + p], col_l[row + q]);
                if t <= *starts.last().unwrap() {
                    hull.pop();
                    starts.pop();
                } else {
                    hull.push(q);
                    starts.push(t);
                    break;
                }
            }
        }
        if hull.is_empty() {
            continue;
        }
        let mut k = 0;
        for x in 0..w {
            while k + 1 < hull.len() && starts[k + 1] <= x as i64 {
                k += 1;
            }
            label[row + x] = col_l[row + hull[k]];
        }
    }

    for &c in &targets {
        let (x, y) = grid.coords(c);
        let l = label[(y - y0) * w + (x - x0)];
        if l != NO_SITE {
            regions[index_of[&(l as usize)]].push(c);
        }
    }
    Ok(regions)
}

/// First integer column from which parabola `q` beats parabola `p`
/// (`p < q`) under the (distance, label) order.
fn takeover(p: usize, q: usize, gp: i64, gq: i64, lp: u32, lq: u32) -> i64 {
    let (p, q) = (p as i64, q as i64);
    let num = (gq + q * q) - (gp + p * p);
    let den = 2 * (q - p);
    if lq < lp {
        // q wins from ceil(num / den), including the tie point.
        -(-num).div_euclid(den)
    } else {
        num.div_euclid(den) + 1
    }
}

/// Travel and exploration history used to extrapolate region workloads.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WorkloadStats {
    /// Distance traveled by each robot since the start, meters.
    pub distances: Vec<f64>,
    /// Total explored (known) area, m².
    pub explored_area: f64,
}

impl WorkloadStats {
    pub fn robot_count(&self) -> usize {
        self.distances.len()
    }

    pub fn total_distance(&self) -> f64 {
        self.distances.iter().sum()
    }

    /// Meters of travel per m² explored, or `None` while there is no
    /// history yet (nothing explored or nothing traveled).
    pub fn rate(&self) -> Option<f64> {
        let d = self.total_distance();
        (self.explored_area >= MIN_EXPLORED_AREA && d > 0.0).then(|| d / self.explored_area)
    }
}

/// Estimated exploration workload (meters of travel) of a region of
/// `area` m²: the historical travel per explored area times the area.
/// Without history, a sweep of width `2 * sensor_radius` is assumed
/// instead.
pub fn vertex_weight(stats: &WorkloadStats, area: f64, sensor_radius: f64) -> Result<f64> {
    if area < 0.0 || stats.explored_area < 0.0 || stats.distances.iter().any(|&d| d < 0.0) {
        return Err(Error::InvalidArgument("workload inputs must be non-negative".into()));
    }
    Ok(match stats.rate() {
        Some(rate) => rate * area,
        None => area / (2.0 * sensor_radius),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub id: usize,
    /// Ascending Unknown cell indices.
    pub cells: Vec<usize>,
    /// m²
    pub area: f64,
    pub frontier_id: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionVertex {
    pub region: Region,
    pub frontier: Frontier,
    pub viewpoint: Viewpoint,
    /// Estimated exploration workload, meters.
    pub weight: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionEdge {
    pub a: usize,
    pub b: usize,
    /// Travel cost between the two regions, meters.
    pub weight: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RegionGraph {
    pub vertices: Vec<RegionVertex>,
    /// `a < b`, ordered by `(a, b)`.
    pub edges: Vec<RegionEdge>,
}

impl RegionGraph {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edge(&self, a: usize, b: usize) -> Option<&RegionEdge> {
        let (a, b) = (a.min(b), a.max(b));
        self.edges.binary_search_by(|e| (e.a, e.b).cmp(&(a, b))).ok().map(|i| &self.edges[i])
    }

    pub fn total_weight(&self) -> f64 {
        self.vertices.iter().map(|v| v.weight).sum()
    }

    /// Line-oriented dump: `region <id> <frontier> <area> <weight> <vx> <vy>`
    /// and `link <a> <b> <weight>`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            let _ = writeln!(
                out,
                "region {} {} {:.3} {:.3} {:.3} {:.3}",
                v.region.id, v.region.frontier_id, v.region.area, v.weight, v.viewpoint.position.x, v.viewpoint.position.y
            );
        }
        for e in &self.edges {
            let _ = writeln!(out, "link {} {} {:.3}", e.a, e.b, e.weight);
        }
        out
    }
}

/// Travel cost between two regions: zero when their cell sets touch
/// (8-adjacency), otherwise the roadmap distance between their viewpoints
/// (`+inf` if disconnected).
pub fn edge_weight(touching: bool, vi: &Viewpoint, vj: &Viewpoint, distances: &impl Distances) -> f64 {
    if touching {
        0.0
    } else {
        distances.distance(vi.rrg_vertex, vj.rrg_vertex)
    }
}

/// Build the RegionGraph over the surviving frontiers. `viewpoints[i]`
/// belongs to `frontiers[i]`. Frontiers whose region is empty get no
/// vertex; edges join every pair at finite cost.
pub fn build_region_graph(
    grid: &OccupancyGrid,
    roi: &RoiMask,
    frontiers: &[Frontier],
    viewpoints: &[Viewpoint],
    distances: &impl Distances,
    stats: &WorkloadStats,
    sensor_radius: f64,
) -> Result<RegionGraph> {
    if frontiers.len() != viewpoints.len()
        || frontiers.iter().zip(viewpoints).any(|(f, v)| f.id != v.frontier_id)
    {
        return Err(Error::InvalidArgument("viewpoints must match the surviving frontiers".into()));
    }
    let cells = partition_regions(grid, roi, frontiers)?;
    let mut vertices = Vec::new();
    for ((frontier, viewpoint), cells) in frontiers.iter().zip(viewpoints).zip(cells) {
        if cells.is_empty() {
            continue;
        }
        let area = cells.len() as f64 * grid.cell_area();
        let weight = vertex_weight(stats, area, sensor_radius)?;
        let region = Region { id: vertices.len(), cells, area, frontier_id: frontier.id };
        vertices.push(RegionVertex { region, frontier: frontier.clone(), viewpoint: *viewpoint, weight });
    }
    let touching = touching_pairs(grid, &vertices);
    let mut edges = Vec::new();
    for i in 0..vertices.len() {
        for j in i + 1..vertices.len() {
            let t = touching.binary_search(&(i, j)).is_ok();
            let w = edge_weight(t, &vertices[i].viewpoint, &vertices[j].viewpoint, distances);
            if w.is_finite() {
                edges.push(RegionEdge { a: i, b: j, weight: w });
            }
        }
    }
    Ok(RegionGraph { vertices, edges })
}

/// Sorted `(i, j)`, `i < j`, of regions with 8-adjacent cells.
fn touching_pairs(grid: &OccupancyGrid, vertices: &[RegionVertex]) -> Vec<(usize, usize)> {
    let mut owner = vec![usize::MAX; grid.len()];
    for (i, v) in vertices.iter().enumerate() {
        for &c in &v.region.cells {
            owner[c] = i;
        }
    }
    let mut pairs = Vec::new();
    for (i, v) in vertices.iter().enumerate() {
        for &c in &v.region.cells {
            for n in grid.neighbors8(c) {
                let j = owner[n];
                if j != usize::MAX && j > i {
                    pairs.push((i, j));
                }
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::perception::DistanceTable;

    fn unknown_grid(w: usize, h: usize) -> OccupancyGrid {
        OccupancyGrid::unknown(w, h, 1.0).unwrap()
    }

    fn frontier(id: usize, cells: Vec<usize>, g: &mut OccupancyGrid) -> Frontier {
        for &c in &cells {
            g.set(c, CellState::Free);
        }
        Frontier::new(id, cells, g)
    }

    #[test]
    fn single_frontier_takes_everything() {
        let mut g = unknown_grid(6, 4);
        let f = frontier(0, vec![0], &mut g);
        let roi = RoiMask::for_grid(&g);
        let parts = partition_regions(&g, &roi, &[f]).unwrap();
        assert_eq!(parts[0].len(), 23);
    }

    #[test]
    fn corridor_splits_at_midpoint_with_ties_low() {
        // 1x9 corridor, frontiers at both ends: cells 1..=3 near 0, 5..=7
        // near 8, cell 4 is equidistant and goes to the lower id.
        let mut g = unknown_grid(9, 1);
        let a = frontier(0, vec![0], &mut g);
        let b = frontier(1, vec![8], &mut g);
        let roi = RoiMask::for_grid(&g);
        let parts = partition_regions(&g, &roi, &[a.clone(), b.clone()]).unwrap();
        assert_eq!(parts[0], vec![1, 2, 3, 4]);
        assert_eq!(parts[1], vec![5, 6, 7]);
        // Swapping ids moves the tie cell.
        let a2 = Frontier { id: 1, ..a };
        let b2 = Frontier { id: 0, ..b };
        let parts = partition_regions(&g, &roi, &[b2, a2]).unwrap();
        assert_eq!(parts[0], vec![4, 5, 6, 7]);
        assert_eq!(parts[1], vec![1, 2, 3]);
    }

    #[test]
    fn no_unknown_cells() {
        let g = OccupancyGrid::new(3, 3, 1.0, CellState::Free).unwrap();
        let f = Frontier::new(0, vec![4], &g);
        let parts = partition_regions(&g, &RoiMask::for_grid(&g), &[f]).unwrap();
        assert!(parts[0].is_empty());
        let graph = build_region_graph(
            &g,
            &RoiMask::for_grid(&g),
            &[],
            &[],
            &crate::perception::johnson_all_pairs(&crate::perception::Rrg::new()),
            &WorkloadStats::default(),
            6.0,
        )
        .unwrap();
        assert!(graph.is_empty());
    }

    #[test]
    fn vertex_weight_cases() {
        let stats = WorkloadStats { distances: vec![60.0, 40.0], explored_area: 50.0 };
        assert_eq!(vertex_weight(&stats, 10.0, 6.0).unwrap(), 20.0);
        assert_eq!(vertex_weight(&stats, 0.0, 6.0).unwrap(), 0.0);
        let fresh = WorkloadStats { distances: vec![0.0], explored_area: 0.0 };
        assert_eq!(vertex_weight(&fresh, 12.0, 6.0).unwrap(), 1.0);
        let parked = WorkloadStats { distances: vec![0.0, 0.0], explored_area: 113.0 };
        assert_eq!(vertex_weight(&parked, 12.0, 6.0).unwrap(), 1.0);
        assert!(vertex_weight(&stats, -1.0, 6.0).is_err());
        let doubled = WorkloadStats { distances: vec![120.0, 80.0], explored_area: 100.0 };
        assert_eq!(vertex_weight(&doubled, 10.0, 6.0).unwrap(), 20.0);
    }

    fn vp(frontier_id: usize, v: usize) -> Viewpoint {
        Viewpoint { frontier_id, position: Point::new(v as f64, 0.0), fov_score: 1.0, rrg_vertex: v }
    }

    #[test]
    fn edge_weight_cases() {
        let mut rrg = crate::perception::Rrg::new();
        for x in [0.0, 1.0, 3.0, 4.0] {
            rrg.add_vertex(Point::new(x, 0.0));
        }
        rrg.add_edge(0, 1);
        rrg.add_edge(1, 2);
        rrg.add_edge(2, 3);
        rrg.add_vertex(Point::new(50.0, 50.0));
        let t: DistanceTable = crate::perception::johnson_all_pairs(&rrg);
        assert_eq!(edge_weight(true, &vp(0, 0), &vp(1, 3), &t), 0.0);
        assert_eq!(edge_weight(false, &vp(0, 0), &vp(1, 3), &t), 4.0);
        assert_eq!(edge_weight(false, &vp(0, 0), &vp(1, 4), &t), f64::INFINITY);
    }

    #[test]
    fn three_regions_three_edges() {
        let mut g = unknown_grid(30, 3);
        let fs = vec![frontier(0, vec![0], &mut g), frontier(1, vec![15], &mut g), frontier(2, vec![29], &mut g)];
        let mut rrg = crate::perception::Rrg::new();
        for x in [0.5, 15.5, 29.5] {
            rrg.add_vertex(Point::new(x, 0.5));
        }
        rrg.add_edge(0, 1);
        rrg.add_edge(1, 2);
        let vps = vec![vp(0, 0), vp(1, 1), vp(2, 2)];
        let t = crate::perception::johnson_all_pairs(&rrg);
        let stats = WorkloadStats { distances: vec![10.0], explored_area: 10.0 };
        let graph = build_region_graph(&g, &RoiMask::for_grid(&g), &fs, &vps, &t, &stats, 6.0).unwrap();
        assert_eq!(graph.len(), 3);
        assert_eq!(graph.edges.len(), 3);
        assert_eq!(graph.edge(0, 1).unwrap().weight, 0.0);
        assert_eq!(graph.edge(0, 2).unwrap().weight, 29.0);
        let covered: usize = graph.vertices.iter().map(|v| v.region.cells.len()).sum();
        assert_eq!(covered, g.count(CellState::Unknown));
        let one = build_region_graph(&g, &RoiMask::for_grid(&g), &fs[..1], &vps[..1], &t, &stats, 6.0).unwrap();
        assert_eq!((one.len(), one.edges.len()), (1, 0));
    }
}
