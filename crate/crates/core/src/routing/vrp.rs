use std::cmp::Ordering;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::routing::CostMatrix;

/// Largest instance the exhaustive VRP mode accepts.
pub const EXACT_MAX_REGIONS: usize = 9;
/// Largest instance solved exactly by the single-robot TSP.
pub const HELD_KARP_MAX_REGIONS: usize = 15;
const EXACT_MAX_ASSIGNMENTS: u64 = 50_000_000;
const EPS: f64 = 1e-9;
const PERTURB_ROUNDS: usize = 40;
const PERTURB_SEED: u64 = 0x5eed;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverMode {
    Exact,
    Heuristic,
    /// Exact when the instance is small enough, heuristic otherwise.
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    /// Minimize the longest route, then the total.
    MinMax,
    /// Minimize the total, then the longest route.
    MinTotal,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub mode: SolverMode,
    pub objective: Objective,
    /// Heuristic stops improving after this many move evaluations.
    pub max_evaluations: u64,
    /// Wall-clock cutoff for the heuristic. Makes results timing-dependent;
    /// leave unset when reproducibility matters.
    pub deadline: Option<Instant>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { mode: SolverMode::Auto, objective: Objective::MinMax, max_evaluations: 1_000_000, deadline: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VrpSolution {
    /// Region indices per robot, in visiting order.
    pub routes: Vec<Vec<usize>>,
    /// Value of the configured objective.
    pub objective: f64,
    pub max_cost: f64,
    pub total_cost: f64,
}

/// Open-route cost: robot to the first region, then region to region.
pub fn route_cost(m: &CostMatrix, robot: usize, seq: &[usize]) -> f64 {
    let Some(&first) = seq.first() else { return 0.0 };
    let mut cost = m.start(robot, first);
    for w in seq.windows(2) {
        cost += m.step(w[0], w[1]);
    }
    cost
}

fn key(costs: &[f64], objective: Objective) -> (f64, f64) {
    let max = costs.iter().copied().fold(0.0, f64::max);
    let total: f64 = costs.iter().sum();
    match objective {
        Objective::MinMax => (max, total),
        Objective::MinTotal => (total, max),
    }
}

fn cmp_key(a: (f64, f64), b: (f64, f64)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1))
}

/// Strict improvement with a small tolerance so floating-point noise
/// cannot cycle the local search.
fn improves(new: (f64, f64), old: (f64, f64)) -> bool {
    let tol = |x: f64| EPS * x.abs().max(1.0);
    if new.0 < old.0 - tol(old.0) {
        return true;
    }
    new.0 <= old.0 + tol(old.0) && new.1 < old.1 - tol(old.1)
}

fn solution(m: &CostMatrix, routes: Vec<Vec<usize>>, objective: Objective) -> VrpSolution {
    let costs: Vec<f64> = routes.iter().enumerate().map(|(r, s)| route_cost(m, r, s)).collect();
    let max_cost = costs.iter().copied().fold(0.0, f64::max);
    let total_cost = costs.iter().sum();
    let objective = match objective {
        Objective::MinMax => max_cost,
        Objective::MinTotal => total_cost,
    };
    VrpSolution { routes, objective, max_cost, total_cost }
}

/// Regions no robot can reach through finite matrix entries.
fn unreachable_regions(m: &CostMatrix) -> Vec<usize> {
    let n = m.n_regions();
    let mut seen = vec![false; n];
    let mut stack: Vec<usize> = (0..n).filter(|&j| (0..m.n_robots()).any(|r| m.start(r, j).is_finite())).collect();
    for &j in &stack {
        seen[j] = true;
    }
    while let Some(i) = stack.pop() {
        for j in 0..n {
            if !seen[j] && m.step(i, j).is_finite() {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    (0..n).filter(|&j| !seen[j]).collect()
}

/// Partition all regions into one open route per robot.
pub fn solve_vrp(m: &CostMatrix, opts: &SolveOptions) -> Result<VrpSolution> {
    if m.n_robots() == 0 {
        return Err(Error::InvalidArgument("at least one robot is required".into()));
    }
    let missing = unreachable_regions(m);
    if !missing.is_empty() {
        return Err(Error::UnreachableRegions(missing));
    }
    let exact_ok = m.n_regions() <= EXACT_MAX_REGIONS
        && (m.n_robots() as u64).checked_pow(m.n_regions() as u32).is_some_and(|a| a <= EXACT_MAX_ASSIGNMENTS);
    match opts.mode {
        SolverMode::Exact if !exact_ok => Err(Error::InvalidArgument(format!(
            "exact mode supports at most {EXACT_MAX_REGIONS} regions, got {}",
            m.n_regions()
        ))),
        SolverMode::Exact => Ok(solve_exact(m, opts.objective)),
        SolverMode::Auto if exact_ok => Ok(solve_exact(m, opts.objective)),
        _ => Ok(solve_heuristic(m, opts)),
    }
}

/// Open-path TSP for a single-robot matrix. Held–Karp up to
/// [`HELD_KARP_MAX_REGIONS`] regions, the VRP heuristic beyond.
pub fn solve_tsp(m: &CostMatrix, opts: &SolveOptions) -> Result<Vec<usize>> {
    if m.n_robots() != 1 {
        return Err(Error::InvalidArgument(format!("TSP needs exactly one robot, got {}", m.n_robots())));
    }
    let missing = unreachable_regions(m);
    if !missing.is_empty() {
        return Err(Error::UnreachableRegions(missing));
    }
    let n = m.n_regions();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n <= HELD_KARP_MAX_REGIONS && opts.mode != SolverMode::Heuristic {
        let hk = HeldKarp::new(m, 0);
        let full = (1usize << n) - 1;
        return Ok(hk.best_route(full).1);
    }
    let heuristic = SolveOptions { mode: SolverMode::Heuristic, ..*opts };
    Ok(solve_heuristic(m, &heuristic).routes.swap_remove(0))
}

/// Held–Karp table of cheapest open paths from one robot.
struct HeldKarp {
    n: usize,
    cost: Vec<f64>,
    parent: Vec<u8>,
}

impl HeldKarp {
    fn new(m: &CostMatrix, robot: usize) -> Self {
        let n = m.n_regions();
        let size = 1usize << n;
        let mut cost = vec![f64::INFINITY; size * n];
        let mut parent = vec![u8::MAX; size * n];
        for j in 0..n {
            cost[(1 << j) * n + j] = m.start(robot, j);
        }
        for mask in 1..size {
            for last in 0..n {
                if mask & (1 << last) == 0 {
                    continue;
                }
                let c = cost[mask * n + last];
                if !c.is_finite() {
                    continue;
                }
                for next in 0..n {
                    if mask & (1 << next) != 0 {
                        continue;
                    }
                    let nc = c + m.step(last, next);
                    let slot = (mask | (1 << next)) * n + next;
                    if nc < cost[slot] {
                        cost[slot] = nc;
                        parent[slot] = last as u8;
                    }
                }
            }
        }
        Self { n, cost, parent }
    }

    /// Cheapest route covering exactly `mask`; ties go to the lowest last
    /// region.
    fn best_route(&self, mask: usize) -> (f64, Vec<usize>) {
        if mask == 0 {
            return (0.0, Vec::new());
        }
        let mut best = (f64::INFINITY, usize::MAX);
        for last in 0..self.n {
            if mask & (1 << last) != 0 && self.cost[mask * self.n + last] < best.0 {
                best = (self.cost[mask * self.n + last], last);
            }
        }
        if best.1 == usize::MAX {
            return (f64::INFINITY, Vec::new());
        }
        let mut seq = Vec::new();
        let (mut cur_mask, mut cur) = (mask, best.1);
        loop {
            seq.push(cur);
            let p = self.parent[cur_mask * self.n + cur];
            cur_mask &= !(1 << cur);
            if p == u8::MAX {
                break;
            }
            cur = p as usize;
        }
        seq.reverse();
        (best.0, seq)
    }

    fn best_cost(&self, mask: usize) -> f64 {
        if mask == 0 {
            return 0.0;
        }
        (0..self.n).filter(|&l| mask & (1 << l) != 0).map(|l| self.cost[mask * self.n + l]).fold(f64::INFINITY, f64::min)
    }
}

fn solve_exact(m: &CostMatrix, objective: Objective) -> VrpSolution {
    let (r, n) = (m.n_robots(), m.n_regions());
    if n == 0 {
        return solution(m, vec![Vec::new(); r], objective);
    }
    let tables: Vec<HeldKarp> = (0..r).map(|a| HeldKarp::new(m, a)).collect();
    let best_cost: Vec<Vec<f64>> = tables.iter().map(|t| (0..1usize << n).map(|s| t.best_cost(s)).collect()).collect();
    let mut digits = vec![0usize; n];
    let mut masks = vec![0usize; r];
    let mut costs = vec![0.0; r];
    let mut best: Option<((f64, f64), Vec<usize>)> = None;
    loop {
        masks.iter_mut().for_each(|x| *x = 0);
        for (j, &d) in digits.iter().enumerate() {
            masks[d] |= 1 << j;
        }
        for a in 0..r {
            costs[a] = best_cost[a][masks[a]];
        }
        if costs.iter().all(|c| c.is_finite()) {
            let k = key(&costs, objective);
            let better = match &best {
                None => true,
                Some((bk, bmasks)) => match cmp_key(k, *bk) {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    Ordering::Equal => {
                        let mine: Vec<Vec<usize>> = (0..r).map(|a| tables[a].best_route(masks[a]).1).collect();
                        let theirs: Vec<Vec<usize>> = (0..r).map(|a| tables[a].best_route(bmasks[a]).1).collect();
                        mine < theirs
                    }
                },
            };
            if better {
                best = Some((k, masks.clone()));
            }
        }
        // Next assignment in mixed radix.
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
    let (_, masks) = best.expect("reachability was checked");
    let routes = (0..r).map(|a| tables[a].best_route(masks[a]).1).collect();
    solution(m, routes, objective)
}

struct Budget {
    left: u64,
    deadline: Option<Instant>,
    ticks: u32,
}

impl Budget {
    fn spend(&mut self) -> bool {
        if self.left == 0 {
            return false;
        }
        self.left -= 1;
        self.ticks = self.ticks.wrapping_add(1);
        if self.ticks % 512 == 0 {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    self.left = 0;
                    return false;
                }
            }
        }
        true
    }
}

/// Greedy insertion seeded with each robot's nearest region, then local
/// search (2-opt, segment relocation, swaps) until no move improves.
fn solve_heuristic(m: &CostMatrix, opts: &SolveOptions) -> VrpSolution {
    let (r, n) = (m.n_robots(), m.n_regions());
    let mut routes: Vec<Vec<usize>> = vec![Vec::new(); r];
    let mut assigned = vec![false; n];
    for (a, route) in routes.iter_mut().enumerate() {
        let nearest = (0..n)
            .filter(|&j| !assigned[j] && m.start(a, j).is_finite())
            .min_by(|&x, &y| m.start(a, x).total_cmp(&m.start(a, y)).then(x.cmp(&y)));
        if let Some(j) = nearest {
            assigned[j] = true;
            route.push(j);
        }
    }
    let mut costs: Vec<f64> = routes.iter().enumerate().map(|(a, s)| route_cost(m, a, s)).collect();
    loop {
        let mut best: Option<((f64, f64), usize, usize, usize, f64)> = None;
        for j in (0..n).filter(|&j| !assigned[j]) {
            for a in 0..r {
                for pos in 0..=routes[a].len() {
                    let delta = insertion_delta(m, a, &routes[a], pos, j);
                    if !delta.is_finite() {
                        continue;
                    }
                    let old = costs[a];
                    costs[a] = old + delta;
                    let k = key(&costs, opts.objective);
                    costs[a] = old;
                    if best.as_ref().is_none_or(|b| cmp_key(k, b.0) == Ordering::Less) {
                        best = Some((k, j, a, pos, old + delta));
                    }
                }
            }
        }
        let Some((_, j, a, pos, c)) = best else { break };
        routes[a].insert(pos, j);
        costs[a] = c;
        assigned[j] = true;
    }
    let mut budget = Budget { left: opts.max_evaluations, deadline: opts.deadline, ticks: 0 };
    while improve_once(m, &mut routes, &mut costs, opts.objective, &mut budget) {}

    // Iterated local search: kick the incumbent with a few random
    // relocations and re-optimize, keeping strict improvements.
    let mut rng = ChaCha8Rng::seed_from_u64(PERTURB_SEED);
    for _ in 0..PERTURB_ROUNDS {
        if budget.left == 0 || n < 2 {
            break;
        }
        let mut cand = routes.clone();
        for _ in 0..rng.random_range(1..=3usize) {
            let from: Vec<usize> = (0..r).filter(|&a| !cand[a].is_empty()).collect();
            let a = from[rng.random_range(0..from.len())];
            let i = rng.random_range(0..cand[a].len());
            let j = cand[a].remove(i);
            let b = rng.random_range(0..r);
            let pos = rng.random_range(0..=cand[b].len());
            cand[b].insert(pos, j);
        }
        let mut cand_costs: Vec<f64> = cand.iter().enumerate().map(|(a, s)| route_cost(m, a, s)).collect();
        if cand_costs.iter().any(|c| !c.is_finite()) {
            continue;
        }
        while improve_once(m, &mut cand, &mut cand_costs, opts.objective, &mut budget) {}
        if improves(key(&cand_costs, opts.objective), key(&costs, opts.objective)) {
            routes = cand;
            costs = cand_costs;
        }
    }
    solution(m, routes, opts.objective)
}

fn insertion_delta(m: &CostMatrix, robot: usize, seq: &[usize], pos: usize, j: usize) -> f64 {
    let into = if pos == 0 { m.start(robot, j) } else { m.step(seq[pos - 1], j) };
    match seq.get(pos) {
        None => into,
        Some(&next) => {
            let old = if pos == 0 { m.start(robot, next) } else { m.step(seq[pos - 1], next) };
            into + m.step(j, next) - old
        }
    }
}

/// Apply the first improving move found; false at a local optimum or when
/// the budget runs out.
fn improve_once(
    m: &CostMatrix,
    routes: &mut [Vec<usize>],
    costs: &mut [f64],
    objective: Objective,
    budget: &mut Budget,
) -> bool {
    let r = routes.len();
    let current = key(costs, objective);
    let mut trial = costs.to_vec();

    // Intra-route 2-opt: reverse routes[a][i..=k].
    for a in 0..r {
        let len = routes[a].len();
        for i in 0..len {
            for k in i + 1..len {
                if !budget.spend() {
                    return false;
                }
                let mut cand = routes[a].clone();
                cand[i..=k].reverse();
                trial[a] = route_cost(m, a, &cand);
                if improves(key(&trial, objective), current) {
                    routes[a] = cand;
                    costs[a] = trial[a];
                    return true;
                }
                trial[a] = costs[a];
            }
        }
    }

    // Segment relocation (length 1..=3, optionally reversed), within or
    // across routes.
    for a in 0..r {
        for seg in 1..=3usize {
            if routes[a].len() < seg {
                continue;
            }
            for i in 0..=routes[a].len() - seg {
                let segment: Vec<usize> = routes[a][i..i + seg].to_vec();
                let mut rest = routes[a].clone();
                rest.drain(i..i + seg);
                let rest_cost = route_cost(m, a, &rest);
                for b in 0..r {
                    let target_len = if b == a { rest.len() } else { routes[b].len() };
                    for pos in 0..=target_len {
                        if b == a && pos == i {
                            continue;
                        }
                        for reversed in [false, true] {
                            if reversed && seg == 1 {
                                continue;
                            }
                            if !budget.spend() {
                                return false;
                            }
                            let mut piece = segment.clone();
                            if reversed {
                                piece.reverse();
                            }
                            let mut target = if b == a { rest.clone() } else { routes[b].clone() };
                            target.splice(pos..pos, piece);
                            if b == a {
                                trial[a] = route_cost(m, a, &target);
                            } else {
                                trial[a] = rest_cost;
                                trial[b] = route_cost(m, b, &target);
                            }
                            if trial[a].is_finite() && trial[b].is_finite() && improves(key(&trial, objective), current) {
                                if b == a {
                                    routes[a] = target;
                                } else {
                                    routes[a] = rest.clone();
                                    routes[b] = target;
                                }
                                costs[a] = trial[a];
                                costs[b] = trial[b];
                                return true;
                            }
                            trial[a] = costs[a];
                            trial[b] = costs[b];
                        }
                    }
                }
            }
        }
    }

    // Swap one region between two routes.
    for a in 0..r {
        for b in a + 1..r {
            for i in 0..routes[a].len() {
                for k in 0..routes[b].len() {
                    if !budget.spend() {
                        return false;
                    }
                    let mut ra = routes[a].clone();
                    let mut rb = routes[b].clone();
                    std::mem::swap(&mut ra[i], &mut rb[k]);
                    trial[a] = route_cost(m, a, &ra);
                    trial[b] = route_cost(m, b, &rb);
                    if trial[a].is_finite() && trial[b].is_finite() && improves(key(&trial, objective), current) {
                        routes[a] = ra;
                        routes[b] = rb;
                        costs[a] = trial[a];
                        costs[b] = trial[b];
                        return true;
                    }
                    trial[a] = costs[a];
                    trial[b] = costs[b];
                }
            }
        }
    }
    false
}
