use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::gridmap::OccupancyGrid;

const BUCKET: f64 = 2.5;

/// Rapidly-exploring random graph over traversable space. Undirected;
/// every edge's straight segment crossed only Free cells when it was added
/// and its length is the Euclidean distance between its endpoints.
/// Vertices are never removed.
#[derive(Clone, Debug, Default)]
pub struct Rrg {
    vertices: Vec<Point>,
    adjacency: Vec<Vec<(usize, f64)>>,
    edges: Vec<(usize, usize, f64)>,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl Rrg {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adjacency[v]
    }

    fn bucket_of(p: Point) -> (i64, i64) {
        ((p.x / BUCKET).floor() as i64, (p.y / BUCKET).floor() as i64)
    }

    /// Add an isolated vertex.
    pub fn add_vertex(&mut self, p: Point) -> usize {
        let id = self.vertices.len();
        self.vertices.push(p);
        self.adjacency.push(Vec::new());
        self.buckets.entry(Self::bucket_of(p)).or_default().push(id);
        id
    }

    /// Add an undirected edge weighted by Euclidean length.
    pub fn add_edge(&mut self, a: usize, b: usize) {
        let len = self.vertices[a].distance(self.vertices[b]);
        self.adjacency[a].push((b, len));
        self.adjacency[b].push((a, len));
        self.edges.push((a.min(b), a.max(b), len));
    }

    /// Vertices within `radius` of `p`, ascending by index.
    pub fn within(&self, p: Point, radius: f64) -> Vec<usize> {
        let (bx0, by0) = Self::bucket_of(Point::new(p.x - radius, p.y - radius));
        let (bx1, by1) = Self::bucket_of(Point::new(p.x + radius, p.y + radius));
        let r2 = radius * radius;
        let mut out = Vec::new();
        for by in by0..=by1 {
            for bx in bx0..=bx1 {
                if let Some(ids) = self.buckets.get(&(bx, by)) {
                    out.extend(ids.iter().copied().filter(|&v| self.vertices[v].distance_sq(p) <= r2));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Closest vertex within `radius` joined to `p` by a free segment.
    /// Ties go to the lower index.
    pub fn nearest_visible(&self, p: Point, grid: &OccupancyGrid, radius: f64) -> Option<usize> {
        let mut cands: Vec<(f64, usize)> =
            self.within(p, radius).into_iter().map(|v| (self.vertices[v].distance_sq(p), v)).collect();
        cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        cands.into_iter().map(|(_, v)| v).find(|&v| grid.segment_free(self.vertices[v], p))
    }

    /// Line-oriented debug dump: `vertex <id> <x> <y>` then
    /// `edge <a> <b> <length>`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, p) in self.vertices.iter().enumerate() {
            let _ = writeln!(out, "vertex {i} {:.3} {:.3}", p.x, p.y);
        }
        for &(a, b, len) in &self.edges {
            let _ = writeln!(out, "edge {a} {b} {len:.3}");
        }
        out
    }

    /// Parse the format produced by [`Rrg::dump`]. Lengths are recomputed.
    pub fn parse_dump(text: &str) -> Result<Self> {
        let mut rrg = Rrg::new();
        for (n, line) in text.lines().enumerate() {
            let f: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Format(format!("bad RRG dump line {}: {line:?}", n + 1));
            match f.as_slice() {
                [] => {}
                ["vertex", _, x, y] => {
                    let p = Point::new(x.parse().map_err(|_| bad())?, y.parse().map_err(|_| bad())?);
                    rrg.add_vertex(p);
                }
                ["edge", a, b, _] => {
                    let a: usize = a.parse().map_err(|_| bad())?;
                    let b: usize = b.parse().map_err(|_| bad())?;
                    if a >= rrg.len() || b >= rrg.len() {
                        return Err(bad());
                    }
                    rrg.add_edge(a, b);
                }
                _ => return Err(bad()),
            }
        }
        Ok(rrg)
    }
}

/// Try to add `p` to the roadmap, joining it by free segments to every
/// vertex within `connect_radius`. An empty roadmap is seeded with `p`.
/// Returns `Ok(None)` when the roadmap is non-empty but no edge is possible.
pub fn rrg_connect(rrg: &mut Rrg, p: Point, grid: &OccupancyGrid, connect_radius: f64) -> Result<Option<usize>> {
    let cell = grid.cell_at(p).ok_or(Error::OutOfBounds { x: p.x, y: p.y })?;
    if !grid.is_free(cell) {
        return Err(Error::NotFree(cell));
    }
    if rrg.is_empty() {
        return Ok(Some(rrg.add_vertex(p)));
    }
    let linked: Vec<usize> =
        rrg.within(p, connect_radius).into_iter().filter(|&v| grid.segment_free(rrg.vertex(v), p)).collect();
    if linked.is_empty() {
        return Ok(None);
    }
    let id = rrg.add_vertex(p);
    for v in linked {
        rrg.add_edge(v, id);
    }
    Ok(Some(id))
}
