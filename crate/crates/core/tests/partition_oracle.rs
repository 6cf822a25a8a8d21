//! Region partition against a brute-force per-cell argmin.

use proptest::prelude::*;
use regionex_core::gridmap::{CellState, OccupancyGrid, RoiMask};
use regionex_core::perception::Frontier;
use regionex_core::regiongraph::partition_regions;

/// For every Unknown roi cell: the frontier minimizing the squared
/// distance to its nearest cell, ties to the lowest id.
fn oracle(grid: &OccupancyGrid, roi: &RoiMask, frontiers: &[Frontier]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); frontiers.len()];
    for c in 0..grid.len() {
        if !roi.contains(c) || grid.get(c) != CellState::Unknown {
            continue;
        }
        let (cx, cy) = grid.coords(c);
        let mut best: Option<(i64, usize, usize)> = None;
        for (k, f) in frontiers.iter().enumerate() {
            let d = f
                .cells
                .iter()
                .map(|&s| {
                    let (sx, sy) = grid.coords(s);
                    let (dx, dy) = (sx as i64 - cx as i64, sy as i64 - cy as i64);
                    dx * dx + dy * dy
                })
                .min()
                .unwrap();
            if best.is_none_or(|(bd, bid, _)| d < bd || (d == bd && f.id < bid)) {
                best = Some((d, f.id, k));
            }
        }
        if let Some((_, _, k)) = best {
            out[k].push(c);
        }
    }
    out
}

fn instance() -> impl Strategy<Value = (OccupancyGrid, RoiMask, Vec<Frontier>)> {
    (1usize..=20, 1usize..=20, 1usize..=5, any::<u64>()).prop_map(|(w, h, nf, seed)| {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut grid = OccupancyGrid::unknown(w, h, 0.1).unwrap();
        for i in 0..grid.len() {
            let r: f64 = rng.random();
            if r < 0.3 {
                grid.set(i, CellState::Free);
            } else if r < 0.45 {
                grid.set(i, CellState::Obstacle);
            }
        }
        let roi = if rng.random::<bool>() {
            RoiMask::for_grid(&grid)
        } else {
            RoiMask::from_cells(w, h, (0..grid.len()).filter(|_| rng.random::<f64>() < 0.7))
        };
        // Disjoint random cell sets, shuffled ids so input order != id order.
        let mut owner = vec![usize::MAX; grid.len()];
        let mut sets = vec![Vec::new(); nf];
        for k in 0..nf {
            let n = rng.random_range(1..=4usize);
            for _ in 0..n {
                let c = rng.random_range(0..grid.len());
                if owner[c] == usize::MAX {
                    owner[c] = k;
                    sets[k].push(c);
                }
            }
        }
        let mut ids: Vec<usize> = (0..nf).collect();
        for i in (1..nf).rev() {
            ids.swap(i, rng.random_range(0..=i));
        }
        let frontiers = sets
            .into_iter()
            .zip(ids)
            .filter(|(s, _)| !s.is_empty())
            .map(|(s, id)| Frontier::new(id, s, &grid))
            .collect();
        (grid, roi, frontiers)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]
    #[test]
    fn partition_equals_argmin((grid, roi, frontiers) in instance()) {
        let got = partition_regions(&grid, &roi, &frontiers).unwrap();
        prop_assert_eq!(got, oracle(&grid, &roi, &frontiers));
    }
}

#[test]
fn ties_on_long_rows() {
    // Many equal-distance ties: two frontiers symmetric about a row.
    let mut grid = OccupancyGrid::unknown(20, 20, 0.1).unwrap();
    let a = vec![grid.index(5, 0), grid.index(5, 19)];
    let b = vec![grid.index(15, 0), grid.index(15, 19)];
    for &c in a.iter().chain(&b) {
        grid.set(c, CellState::Free);
    }
    let fs = vec![Frontier::new(1, a, &grid), Frontier::new(0, b, &grid)];
    let roi = RoiMask::for_grid(&grid);
    assert_eq!(partition_regions(&grid, &roi, &fs).unwrap(), oracle(&grid, &roi, &fs));
}
