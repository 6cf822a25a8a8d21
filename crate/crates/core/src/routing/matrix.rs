use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::perception::{Distances, Rrg, SourcePaths};
use crate::regiongraph::RegionGraph;

/// Region-block edge costs with vertex workloads folded in:
/// `d*_ij = (w_i + w_j) / 2 + d_ij`. Only obtainable from a
/// [`RegionGraph`], so folding cannot be applied twice.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldedWeights {
    n: usize,
    data: Vec<f64>,
}

impl FoldedWeights {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `+inf` for pairs without an edge; 0 on the diagonal.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

pub fn fold_weights(g: &RegionGraph) -> FoldedWeights {
    let n = g.len();
    let mut data = vec![f64::INFINITY; n * n];
    for i in 0..n {
        data[i * n + i] = 0.0;
    }
    for e in &g.edges {
        let folded = 0.5 * (g.vertices[e.a].weight + g.vertices[e.b].weight) + e.weight;
        data[e.a * n + e.b] = folded;
        data[e.b * n + e.a] = folded;
    }
    FoldedWeights { n, data }
}

/// A robot as seen by the planner: where it is and the roadmap vertex it
/// is attached to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RobotAnchor {
    pub id: usize,
    pub position: Point,
    pub vertex: usize,
    /// Straight-line distance from the robot to its vertex, meters.
    pub offset: f64,
}

/// Square cost matrix, robots first (`0..n_robots`) then regions.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix {
    n_robots: usize,
    n_regions: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    /// Build directly from entries; used by tests and the CSV loader.
    pub fn from_entries(n_robots: usize, n_regions: usize, data: Vec<f64>) -> Result<Self> {
        let n = n_robots + n_regions;
        if data.len() != n * n {
            return Err(Error::InvalidArgument(format!("expected {} entries, got {}", n * n, data.len())));
        }
        if data.iter().any(|&x| x.is_nan() || x < 0.0) {
            return Err(Error::InvalidArgument("cost entries must be non-negative".into()));
        }
        Ok(Self { n_robots, n_regions, data })
    }

    pub fn n_robots(&self) -> usize {
        self.n_robots
    }

    pub fn n_regions(&self) -> usize {
        self.n_regions
    }

    pub fn size(&self) -> usize {
        self.n_robots + self.n_regions
    }

    #[inline]
    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.data[from * self.size() + to]
    }

    /// Cost from robot `r` to region `j`.
    #[inline]
    pub fn start(&self, r: usize, j: usize) -> f64 {
        self.get(r, self.n_robots + j)
    }

    /// Cost from region `i` to region `j`.
    #[inline]
    pub fn step(&self, i: usize, j: usize) -> f64 {
        self.get(self.n_robots + i, self.n_robots + j)
    }

    /// Sub-matrix for one robot and all regions.
    pub fn for_robot(&self, r: usize) -> CostMatrix {
        let n = 1 + self.n_regions;
        let mut data = vec![0.0; n * n];
        for j in 0..self.n_regions {
            data[1 + j] = self.start(r, j);
            for k in 0..self.n_regions {
                data[(1 + j) * n + 1 + k] = self.step(j, k);
            }
        }
        CostMatrix { n_robots: 1, n_regions: self.n_regions, data }
    }

    /// Sub-matrix keeping all robots and the listed regions, in order.
    pub fn restrict(&self, regions: &[usize]) -> CostMatrix {
        let (r, m) = (self.n_robots, regions.len());
        let n = r + m;
        let mut data = vec![0.0; n * n];
        for (jj, &j) in regions.iter().enumerate() {
            for a in 0..r {
                data[a * n + r + jj] = self.start(a, j);
            }
            for (kk, &k) in regions.iter().enumerate() {
                data[(r + jj) * n + r + kk] = self.step(j, k);
            }
        }
        CostMatrix { n_robots: r, n_regions: m, data }
    }

    /// CSV dump with a header row; `inf` for missing links.
    pub fn to_csv(&self) -> String {
        let n = self.size();
        let label = |i: usize| if i < self.n_robots { format!("robot{i}") } else { format!("region{}", i - self.n_robots) };
        let mut out = String::from("from");
        for j in 0..n {
            let _ = write!(out, ",{}", label(j));
        }
        out.push('\n');
        for i in 0..n {
            out.push_str(&label(i));
            for j in 0..n {
                let v = self.get(i, j);
                if v.is_finite() {
                    let _ = write!(out, ",{v:.6}");
                } else {
                    out.push_str(",inf");
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Cost matrix for the open VRP: robot→region is roadmap travel to the
/// region's viewpoint plus half the region's workload; region→region is the
/// folded edge cost; anything → robot is free.
pub fn build_matrix(g: &RegionGraph, robots: &[RobotAnchor], distances: &impl Distances) -> CostMatrix {
    let folded = fold_weights(g);
    let (r, m) = (robots.len(), g.len());
    let n = r + m;
    let mut data = vec![0.0; n * n];
    for (a, robot) in robots.iter().enumerate() {
        for (j, v) in g.vertices.iter().enumerate() {
            let travel = distances.distance(robot.vertex, v.viewpoint.rrg_vertex);
            data[a * n + r + j] = if travel.is_finite() { robot.offset + travel + 0.5 * v.weight } else { f64::INFINITY };
        }
    }
    for i in 0..m {
        for j in 0..m {
            data[(r + i) * n + r + j] = folded.get(i, j);
        }
    }
    CostMatrix { n_robots: r, n_regions: m, data }
}

/// Roadmap path from the robot's vertex to the viewpoint of the first
/// region in its sequence.
pub fn guide_path(
    sequence: &[usize],
    g: &RegionGraph,
    rrg: &Rrg,
    paths: &SourcePaths,
    robot: &RobotAnchor,
) -> Result<Vec<Point>> {
    let first = *sequence.first().ok_or_else(|| Error::InvalidArgument("empty visiting sequence".into()))?;
    let target = g.vertices.get(first).ok_or(Error::UnknownVertex(first))?.viewpoint.rrg_vertex;
    let path = paths.path(rrg, robot.vertex, target)?;
    if path.is_empty() {
        let (p, q) = (rrg.vertex(robot.vertex), rrg.vertex(target));
        return Err(Error::NoPath { from: (p.x as usize, p.y as usize), to: (q.x as usize, q.y as usize) });
    }
    Ok(path)
}
