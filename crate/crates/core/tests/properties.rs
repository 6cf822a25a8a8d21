use proptest::prelude::*;
use regionex_core::framework::{progress_check, ProgressReport, TaskStatus};
use regionex_core::gridmap::{merge, reveal, CellState, GroundTruth, OccupancyGrid, Pose};
use regionex_core::perception::{johnson_all_pairs, DistanceTable, Distances, Frontier, Rrg, Viewpoint};
use regionex_core::regiongraph::{Region, RegionEdge, RegionGraph, RegionVertex};
use regionex_core::routing::{build_matrix, route_cost, RobotAnchor};
use regionex_core::Point;

/// Array-based O(n²) Dijkstra over an edge list.
fn dense_dijkstra(n: usize, edges: &[(usize, usize, f64)], s: usize) -> Vec<f64> {
    let mut w = vec![f64::INFINITY; n * n];
    for &(a, b, d) in edges {
        w[a * n + b] = w[a * n + b].min(d);
        w[b * n + a] = w[b * n + a].min(d);
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[s] = 0.0;
    for _ in 0..n {
        let Some(u) = (0..n).filter(|&v| !done[v] && dist[v].is_finite()).min_by(|&a, &b| dist[a].total_cmp(&dist[b])) else {
            break;
        };
        done[u] = true;
        for v in 0..n {
            let cand = dist[u] + w[u * n + v];
            if cand < dist[v] {
                dist[v] = cand;
            }
        }
    }
    dist
}

fn roadmap() -> impl Strategy<Value = Rrg> {
    (2usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec((0.0f64..20.0, 0.0f64..20.0), n),
            prop::collection::vec((0..n, 0..n), 0..3 * n),
        )
            .prop_map(|(pts, pairs)| {
                let mut g = Rrg::new();
                for (x, y) in pts {
                    g.add_vertex(Point::new(x, y));
                }
                for (a, b) in pairs {
                    if a != b {
                        g.add_edge(a, b);
                    }
                }
                g
            })
    })
}

fn region_vertex(id: usize, weight: f64, rrg_vertex: usize, at: Point) -> RegionVertex {
    RegionVertex {
        region: Region { id, cells: vec![id], area: 1.0, frontier_id: id },
        frontier: Frontier { id, cells: vec![id], centroid: at },
        viewpoint: Viewpoint { frontier_id: id, position: at, fov_score: 1.0, rrg_vertex },
        weight,
    }
}

/// Complete RegionGraph over the first `m` roadmap vertices with random
/// workloads and edge costs, some of them zero.
fn graph_on(rrg: &Rrg, table: &DistanceTable, weights: &[f64], touching: &[bool]) -> RegionGraph {
    let m = weights.len();
    let vertices = (0..m).map(|i| region_vertex(i, weights[i], i, rrg.vertex(i))).collect();
    let mut edges = Vec::new();
    let mut t = touching.iter().cycle();
    for a in 0..m {
        for b in a + 1..m {
            let d = table.distance(a, b);
            let weight = if *t.next().unwrap() { 0.0 } else { d };
            if weight.is_finite() {
                edges.push(RegionEdge { a, b, weight });
            }
        }
    }
    RegionGraph { vertices, edges }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn johnson_agrees_with_dense_dijkstra(g in roadmap()) {
        let table = johnson_all_pairs(&g);
        for s in 0..g.len() {
            let oracle = dense_dijkstra(g.len(), g.edges(), s);
            for (t, &want) in oracle.iter().enumerate() {
                let got = table.get(s, t);
                if want.is_infinite() {
                    prop_assert!(got.is_infinite());
                } else {
                    prop_assert!((got - want).abs() <= 1e-9, "{s}->{t}: {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn route_cost_is_travel_plus_workload_minus_half_last(
        g in roadmap(),
        weights in prop::collection::vec(0.0f64..30.0, 1..8),
        touching in prop::collection::vec(any::<bool>(), 1..8),
        offset in 0.0f64..1.0,
        order_seed in any::<u64>(),
    ) {
        let m = weights.len().min(g.len() - 1);
        let weights = &weights[..m];
        let table = johnson_all_pairs(&g);
        let graph = graph_on(&g, &table, weights, &touching);
        let anchor_vertex = g.len() - 1;
        let robot = RobotAnchor { id: 0, position: g.vertex(anchor_vertex), vertex: anchor_vertex, offset };
        let matrix = build_matrix(&graph, &[robot], &table);
        let mut seq: Vec<usize> = (0..m).collect();
        let mut s = order_seed;
        for i in (1..seq.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            seq.swap(i, (s >> 33) as usize % (i + 1));
        }
        let edge = |a: usize, b: usize| graph.edge(a, b).map_or(f64::INFINITY, |e| e.weight);
        let mut travel = offset + table.distance(anchor_vertex, seq[0]);
        for w in seq.windows(2) {
            travel += edge(w[0], w[1]);
        }
        let cost = route_cost(&matrix, 0, &seq);
        if travel.is_finite() {
            let sum: f64 = seq.iter().map(|&v| weights[v]).sum();
            let expected = travel + sum - weights[*seq.last().unwrap()] / 2.0;
            prop_assert!((cost - expected).abs() <= 1e-9, "{cost} vs {expected}");
        } else {
            prop_assert!(cost.is_infinite());
        }
        for j in 0..m {
            prop_assert_eq!(matrix.get(1 + j, 0), 0.0);
        }
    }

    #[test]
    fn trigger_is_monotone_in_threshold(
        explored in 0.0f64..200.0,
        remaining in 0.0f64..200.0,
        expected in 0.0f64..200.0,
        lo in -100.0f64..100.0,
        gap in 0.0f64..100.0,
    ) {
        let r = ProgressReport { client: 0, w_explored: explored, w_remaining: remaining, w_expected: expected, epoch: 1, status: TaskStatus::Executing };
        if progress_check(&r, lo + gap) {
            prop_assert!(progress_check(&r, lo));
        }
    }

    #[test]
    fn merge_and_reveal_keep_the_cell_partition(
        cells in prop::collection::vec(prop::bool::weighted(0.2), 12 * 12),
        px in 1usize..11,
        py in 1usize..11,
        radius in 0.2f64..1.2,
    ) {
        let mut truth = OccupancyGrid::new(12, 12, 0.1, CellState::Free).unwrap();
        for (i, &blocked) in cells.iter().enumerate() {
            if blocked {
                truth.set(i, CellState::Obstacle);
            }
        }
        let start = truth.index(px, py);
        truth.set(start, CellState::Free);
        let truth = GroundTruth::new(truth, &[start]).unwrap();
        let mut known = OccupancyGrid::unknown(12, 12, 0.1).unwrap();
        let pose = Pose::at(truth.grid().cell_center(start));
        let fresh = reveal(&mut known, &truth, &pose, radius).unwrap();
        let total = known.count(CellState::Free) + known.count(CellState::Obstacle) + known.count(CellState::Unknown);
        prop_assert_eq!(total, 144);
        for &c in &fresh {
            prop_assert_eq!(known.get(c), truth.grid().get(c));
        }
        let again = reveal(&mut known, &truth, &pose, radius).unwrap();
        prop_assert!(again.is_empty());
        let merged = merge(&OccupancyGrid::unknown(12, 12, 0.1).unwrap(), &known).unwrap();
        prop_assert_eq!(merged, known);
    }
}
