use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regionex_core::routing::{route_cost, solve_tsp, solve_vrp, CostMatrix, Objective, SolveOptions, SolverMode};

/// Random instance shaped like a folded region graph: points in a plane,
/// region workloads, open routes.
fn instance(rng: &mut ChaCha8Rng, robots: usize, regions: usize) -> CostMatrix {
    // Coordinates and weights on a 1/8 m lattice keep sums exact.
    let q = |rng: &mut ChaCha8Rng, hi: f64| (rng.random_range(0.0..hi) * 8.0).round() / 8.0;
    let pts: Vec<(f64, f64)> = (0..robots + regions).map(|_| (q(rng, 50.0), q(rng, 30.0))).collect();
    let w: Vec<f64> = (0..regions).map(|_| q(rng, 40.0)).collect();
    let d = |a: usize, b: usize| (pts[a].0 - pts[b].0).abs() + (pts[a].1 - pts[b].1).abs();
    let n = robots + regions;
    let mut data = vec![0.0; n * n];
    for a in 0..robots {
        for j in 0..regions {
            data[a * n + robots + j] = d(a, robots + j) + w[j] / 2.0;
        }
    }
    for i in 0..regions {
        for j in 0..regions {
            if i != j {
                data[(robots + i) * n + robots + j] = (w[i] + w[j]) / 2.0 + d(robots + i, robots + j);
            }
        }
    }
    CostMatrix::from_entries(robots, regions, data).unwrap()
}

fn permutations(items: &[usize], out: &mut Vec<Vec<usize>>) {
    if items.is_empty() {
        out.push(Vec::new());
        return;
    }
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        let mut sub = Vec::new();
        permutations(&rest, &mut sub);
        for mut s in sub {
            s.insert(0, x);
            out.push(s);
        }
    }
}

/// Cheapest order for every (robot, subset), by depth-first enumeration
/// of every visiting sequence.
fn subset_costs(m: &CostMatrix) -> Vec<Vec<f64>> {
    fn dfs(m: &CostMatrix, robot: usize, last: Option<usize>, mask: usize, cost: f64, best: &mut [f64]) {
        if cost < best[mask] {
            best[mask] = cost;
        }
        for j in 0..m.n_regions() {
            if mask & (1 << j) == 0 {
                let step = match last {
                    None => m.start(robot, j),
                    Some(i) => m.step(i, j),
                };
                dfs(m, robot, Some(j), mask | (1 << j), cost + step, best);
            }
        }
    }
    (0..m.n_robots())
        .map(|a| {
            let mut best = vec![f64::INFINITY; 1 << m.n_regions()];
            dfs(m, a, None, 0, 0.0, &mut best);
            best
        })
        .collect()
}

/// Minimum over every assignment and every visiting order.
fn brute_force(m: &CostMatrix) -> (f64, f64) {
    let (r, n) = (m.n_robots(), m.n_regions());
    let table = subset_costs(m);
    let mut best = (f64::INFINITY, f64::INFINITY);
    let mut digits = vec![0usize; n];
    loop {
        let mut max = 0.0f64;
        let mut total = 0.0;
        for (a, costs) in table.iter().enumerate() {
            let mask = (0..n).filter(|&j| digits[j] == a).fold(0, |acc, j| acc | (1 << j));
            max = max.max(costs[mask]);
            total += costs[mask];
        }
        if max < best.0 || (max == best.0 && total < best.1) {
            best = (max, total);
        }
        let mut i = 0;
        while i < n {
            digits[i] += 1;
            if digits[i] < r {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
        if i == n {
            return best;
        }
    }
}

#[test]
fn exact_matches_enumeration_and_heuristic_is_close() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut close = 0;
    for case in 0..100 {
        let robots = rng.random_range(1..=3);
        let regions = rng.random_range(0..=9);
        let m = instance(&mut rng, robots, regions);
        let oracle = brute_force(&m);
        let exact = solve_vrp(&m, &SolveOptions { mode: SolverMode::Exact, ..Default::default() }).unwrap();
        assert_eq!((exact.max_cost, exact.total_cost), oracle, "case {case}");
        let heur = solve_vrp(&m, &SolveOptions { mode: SolverMode::Heuristic, ..Default::default() }).unwrap();
        assert!(heur.max_cost >= exact.max_cost);
        if heur.max_cost <= exact.max_cost * 1.05 + 1e-9 {
            close += 1;
        }
        let mut seen: Vec<usize> = heur.routes.concat();
        seen.sort_unstable();
        assert_eq!(seen, (0..regions).collect::<Vec<_>>());
    }
    println!("heuristic within 5% on {close}/100");
    assert!(close >= 95, "heuristic within 5% on {close}/100");
}

#[test]
fn min_total_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let (r, n) = (rng.random_range(1..=3), rng.random_range(1..=6));
        let m = instance(&mut rng, r, n);
        let exact = solve_vrp(&m, &SolveOptions { mode: SolverMode::Exact, objective: Objective::MinTotal, ..Default::default() })
            .unwrap();
        let (r, n) = (m.n_robots(), m.n_regions());
        // Open routes with zero return cost: the best total is the best
        // single-robot-per-subset split, found here by enumeration.
        let mut best = f64::INFINITY;
        let mut digits = vec![0usize; n];
        loop {
            let mut total = 0.0;
            for a in 0..r {
                let mine: Vec<usize> = (0..n).filter(|&j| digits[j] == a).collect();
                let mut orders = Vec::new();
                permutations(&mine, &mut orders);
                total += orders.iter().map(|o| route_cost(&m, a, o)).fold(f64::INFINITY, f64::min);
            }
            best = best.min(total);
            let mut i = 0;
            while i < n {
                digits[i] += 1;
                if digits[i] < r {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
            if i == n {
                break;
            }
        }
        assert_eq!(exact.total_cost, best);
    }
}

#[test]
fn tsp_held_karp_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..40 {
        let n = rng.random_range(0..=7);
        let m = instance(&mut rng, 1, n);
        let seq = solve_tsp(&m, &SolveOptions::default()).unwrap();
        let mut orders = Vec::new();
        permutations(&(0..n).collect::<Vec<_>>(), &mut orders);
        let best = orders.iter().map(|o| route_cost(&m, 0, o)).fold(f64::INFINITY, f64::min);
        assert_eq!(route_cost(&m, 0, &seq), if n == 0 { 0.0 } else { best });
    }
}

#[test]
fn scaling_keeps_exact_structure() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let (r, n) = (rng.random_range(1..=3), rng.random_range(1..=6));
        let m = instance(&mut rng, r, n);
        let size = m.size();
        let scaled: Vec<f64> = (0..size * size).map(|k| 4.0 * m.get(k / size, k % size)).collect();
        let s = CostMatrix::from_entries(m.n_robots(), m.n_regions(), scaled).unwrap();
        let opts = SolveOptions { mode: SolverMode::Exact, ..Default::default() };
        assert_eq!(solve_vrp(&m, &opts).unwrap().routes, solve_vrp(&s, &opts).unwrap().routes);
    }
}
