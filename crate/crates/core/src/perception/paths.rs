use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::perception::Rrg;

/// Shortest-path distance lookup between roadmap vertices.
pub trait Distances {
    fn distance(&self, from: usize, to: usize) -> f64;
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct HeapItem {
    dist: f64,
    vertex: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on (dist, vertex).
        other.dist.total_cmp(&self.dist).then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source Dijkstra over a directed adjacency list with non-negative
/// weights. Returns distances (`+inf` when unreachable) and predecessors.
pub fn dijkstra_adjacency(adjacency: &[Vec<(usize, f64)>], source: usize) -> (Vec<f64>, Vec<Option<usize>>) {
    let n = adjacency.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapItem { dist: 0.0, vertex: source });
    while let Some(HeapItem { dist: d, vertex: u }) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for &(v, w) in &adjacency[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                pred[v] = Some(u);
                heap.push(HeapItem { dist: nd, vertex: v });
            }
        }
    }
    (dist, pred)
}

/// Single-source Dijkstra on the roadmap.
pub fn dijkstra(rrg: &Rrg, source: usize) -> Vec<f64> {
    dijkstra_rrg(rrg, source).0
}

fn dijkstra_rrg(rrg: &Rrg, source: usize) -> (Vec<f64>, Vec<Option<usize>>) {
    let n = rrg.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapItem { dist: 0.0, vertex: source });
    while let Some(HeapItem { dist: d, vertex: u }) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for &(v, w) in rrg.neighbors(u) {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                pred[v] = Some(u);
                heap.push(HeapItem { dist: nd, vertex: v });
            }
        }
    }
    (dist, pred)
}

/// Dense all-pairs distance table.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceTable {
    n: usize,
    data: Vec<f64>,
}

impl DistanceTable {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.data[from * self.n + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.data[from * self.n..(from + 1) * self.n]
    }
}

impl Distances for DistanceTable {
    fn distance(&self, from: usize, to: usize) -> f64 {
        self.get(from, to)
    }
}

/// Johnson's algorithm over a directed adjacency list: Bellman–Ford
/// potentials from a virtual source, reweighting, then Dijkstra from every
/// vertex. Returns `None` on a negative cycle.
pub fn johnson_adjacency(adjacency: &[Vec<(usize, f64)>]) -> Option<DistanceTable> {
    let n = adjacency.len();
    // Virtual source reaches everything at cost 0.
    let mut h = vec![0.0f64; n];
    for round in 0..=n {
        let mut changed = false;
        for (u, edges) in adjacency.iter().enumerate() {
            for &(v, w) in edges {
                if h[u] + w < h[v] {
                    h[v] = h[u] + w;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
        if round == n {
            return None;
        }
    }
    let reweighted: Vec<Vec<(usize, f64)>> = adjacency
        .iter()
        .enumerate()
        .map(|(u, edges)| edges.iter().map(|&(v, w)| (v, (w + h[u] - h[v]).max(0.0))).collect())
        .collect();
    let mut data = vec![f64::INFINITY; n * n];
    for s in 0..n {
        let (dist, _) = dijkstra_adjacency(&reweighted, s);
        for (t, d) in dist.into_iter().enumerate() {
            data[s * n + t] = if d.is_finite() { d - h[s] + h[t] } else { f64::INFINITY };
        }
    }
    Some(DistanceTable { n, data })
}

/// All-pairs shortest distances on the roadmap; unreachable pairs are
/// `+inf`.
pub fn johnson_all_pairs(rrg: &Rrg) -> DistanceTable {
    let adjacency: Vec<Vec<(usize, f64)>> = (0..rrg.len()).map(|v| rrg.neighbors(v).to_vec()).collect();
    johnson_adjacency(&adjacency).expect("roadmap edge lengths are non-negative")
}

/// Minimum-length vertex sequence from `from` to `to`, as positions. Empty
/// when the two are disconnected.
pub fn shortest_path(rrg: &Rrg, from: usize, to: usize) -> Result<Vec<Point>> {
    for v in [from, to] {
        if v >= rrg.len() {
            return Err(Error::UnknownVertex(v));
        }
    }
    let (_, pred) = dijkstra_rrg(rrg, from);
    Ok(walk_back(rrg, &pred, from, to))
}

fn walk_back(rrg: &Rrg, pred: &[Option<usize>], from: usize, to: usize) -> Vec<Point> {
    let mut seq = vec![to];
    let mut cur = to;
    while cur != from {
        match pred[cur] {
            Some(p) => {
                seq.push(p);
                cur = p;
            }
            None => return Vec::new(),
        }
    }
    seq.reverse();
    seq.into_iter().map(|v| rrg.vertex(v)).collect()
}

/// Dijkstra trees from a handful of sources; the planner only ever needs
/// distances out of robots and viewpoints, never the full table.
#[derive(Clone, Debug)]
pub struct SourcePaths {
    sources: Vec<usize>,
    dist: Vec<Vec<f64>>,
    pred: Vec<Vec<Option<usize>>>,
}

impl SourcePaths {
    pub fn new(rrg: &Rrg, sources: &[usize]) -> Self {
        let mut uniq = sources.to_vec();
        uniq.sort_unstable();
        uniq.dedup();
        let (dist, pred) = uniq.iter().map(|&s| dijkstra_rrg(rrg, s)).unzip();
        Self { sources: uniq, dist, pred }
    }

    fn slot(&self, source: usize) -> Option<usize> {
        self.sources.binary_search(&source).ok()
    }

    pub fn has_source(&self, source: usize) -> bool {
        self.slot(source).is_some()
    }

    /// Vertex path from a source to `to`; empty when disconnected.
    pub fn path(&self, rrg: &Rrg, from: usize, to: usize) -> Result<Vec<Point>> {
        let slot = self.slot(from).ok_or(Error::UnknownVertex(from))?;
        if to >= rrg.len() {
            return Err(Error::UnknownVertex(to));
        }
        Ok(walk_back(rrg, &self.pred[slot], from, to))
    }
}

impl Distances for SourcePaths {
    /// Falls back to the reverse direction (the roadmap is undirected).
    fn distance(&self, from: usize, to: usize) -> f64 {
        if let Some(s) = self.slot(from) {
            return self.dist[s][to];
        }
        match self.slot(to) {
            Some(s) => self.dist[s][from],
            None => panic!("neither {from} nor {to} is a Dijkstra source"),
        }
    }
}
