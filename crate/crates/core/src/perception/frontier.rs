use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::gridmap::{CellState, OccupancyGrid, RoiMask};

/// A cluster of frontier cells: Free cells touching Unknown space.
#[derive(Clone, Debug, PartialEq)]
pub struct Frontier {
    pub id: usize,
    /// Ascending cell indices.
    pub cells: Vec<usize>,
    pub centroid: Point,
}

impl Frontier {
    pub fn new(id: usize, mut cells: Vec<usize>, grid: &OccupancyGrid) -> Self {
        cells.sort_unstable();
        let n = cells.len().max(1) as f64;
        let sum = cells.iter().fold(Point::default(), |acc, &c| acc + grid.cell_center(c));
        Self { id, cells, centroid: sum * (1.0 / n) }
    }
}

fn is_frontier_cell(grid: &OccupancyGrid, idx: usize) -> bool {
    grid.get(idx) == CellState::Free && grid.neighbors8(idx).any(|n| grid.get(n) == CellState::Unknown)
}

/// Every Free cell inside `roi` with an Unknown 8-neighbor, ascending.
pub fn frontier_cells(grid: &OccupancyGrid, roi: &RoiMask) -> Result<Vec<usize>> {
    roi.check(grid)?;
    Ok(roi.iter().filter(|&i| is_frontier_cell(grid, i)).collect())
}

/// Frontier clusters inside `roi`: 8-connected components of frontier
/// cells, each split by farthest-point bisection until its diameter is at
/// most `max_diameter` meters. Ordered (and numbered) by smallest cell.
pub fn detect_frontiers(grid: &OccupancyGrid, roi: &RoiMask, max_diameter: f64) -> Result<Vec<Frontier>> {
    let cells = frontier_cells(grid, roi)?;
    let mut is_cell = vec![false; grid.len()];
    for &c in &cells {
        is_cell[c] = true;
    }
    let mut seen = vec![false; grid.len()];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &start in &cells {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut component = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            for n in grid.neighbors8(c) {
                if is_cell[n] && !seen[n] {
                    seen[n] = true;
                    component.push(n);
                    queue.push_back(n);
                }
            }
        }
        component.sort_unstable();
        split_by_diameter(grid, component, max_diameter, &mut clusters);
    }
    clusters.sort_by_key(|c| c[0]);
    Ok(clusters.into_iter().enumerate().map(|(id, cells)| Frontier::new(id, cells, grid)).collect())
}

fn farthest_from(grid: &OccupancyGrid, cells: &[usize], from: Point) -> (usize, f64) {
    let mut best = (cells[0], -1.0);
    for &c in cells {
        let d = grid.cell_center(c).distance_sq(from);
        if d > best.1 {
            best = (c, d);
        }
    }
    best
}

fn diameter_sq(grid: &OccupancyGrid, cells: &[usize]) -> f64 {
    let pts: Vec<Point> = cells.iter().map(|&c| grid.cell_center(c)).collect();
    let mut best = 0.0f64;
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            best = best.max(a.distance_sq(*b));
        }
    }
    best
}

fn split_by_diameter(grid: &OccupancyGrid, cells: Vec<usize>, max_diameter: f64, out: &mut Vec<Vec<usize>>) {
    if cells.len() <= 1 || diameter_sq(grid, &cells) <= max_diameter * max_diameter + 1e-9 {
        out.push(cells);
        return;
    }
    let (b, _) = farthest_from(grid, &cells, grid.cell_center(cells[0]));
    let pb = grid.cell_center(b);
    let (c, _) = farthest_from(grid, &cells, pb);
    let pc = grid.cell_center(c);
    let (near_b, near_c): (Vec<usize>, Vec<usize>) =
        cells.iter().partition(|&&x| grid.cell_center(x).distance_sq(pb) <= grid.cell_center(x).distance_sq(pc));
    split_by_diameter(grid, near_b, max_diameter, out);
    split_by_diameter(grid, near_c, max_diameter, out);
}

/// Fraction of the frontier's cells within `radius` of `point` and in
/// line of sight from it.
pub fn fov(point: Point, frontier: &Frontier, grid: &OccupancyGrid, radius: f64) -> Result<f64> {
    let origin = grid.cell_at(point).ok_or(Error::OutOfBounds { x: point.x, y: point.y })?;
    if !grid.is_free(origin) {
        return Err(Error::NotFree(origin));
    }
    if frontier.cells.is_empty() {
        return Ok(0.0);
    }
    let r2 = radius * radius;
    let visible = frontier
        .cells
        .iter()
        .filter(|&&c| grid.cell_center(c).distance_sq(point) <= r2 && grid.line_of_sight(origin, c))
        .count();
    Ok(visible as f64 / frontier.cells.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridmap::parse_map;

    fn half_known(w: usize, h: usize, known_cols: usize) -> OccupancyGrid {
        let mut g = OccupancyGrid::unknown(w, h, 1.0).unwrap();
        for y in 0..h {
            for x in 0..known_cols {
                let i = g.index(x, y);
                g.set(i, CellState::Free);
            }
        }
        g
    }

    #[test]
    fn fully_known_grid_has_no_frontiers() {
        let g = parse_map("...\n.#.\n...\n", 1.0).unwrap();
        assert!(detect_frontiers(&g, &RoiMask::for_grid(&g), 6.0).unwrap().is_empty());
    }

    #[test]
    fn half_known_grid_boundary_column() {
        let g = half_known(10, 10, 5);
        let roi = RoiMask::for_grid(&g);
        // Brute-force adjacency oracle.
        let expected: Vec<usize> = (0..g.len())
            .filter(|&i| {
                let (x, y) = g.coords(i);
                g.get(i) == CellState::Free
                    && (-1i64..=1).any(|dy| {
                        (-1i64..=1).any(|dx| {
                            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                            g.in_bounds(nx, ny) && g.at(nx as usize, ny as usize) == CellState::Unknown
                        })
                    })
            })
            .collect();
        assert_eq!(expected, (0..10).map(|y| y * 10 + 4).collect::<Vec<_>>());
        let big = detect_frontiers(&g, &roi, 20.0).unwrap();
        assert_eq!(big.len(), 1);
        assert_eq!(big[0].cells, expected);
        let split = detect_frontiers(&g, &roi, 4.0).unwrap();
        assert!(split.len() >= 2);
        let mut all: Vec<usize> = split.iter().flat_map(|f| f.cells.clone()).collect();
        all.sort_unstable();
        assert_eq!(all, expected);
        for f in &split {
            assert!(diameter_sq(&g, &f.cells) <= 16.0 + 1e-9);
        }
        for w in split.windows(2) {
            assert!(w[0].cells[0] < w[1].cells[0]);
            assert_eq!(w[0].id + 1, w[1].id);
        }
    }

    #[test]
    fn sealed_unknown_pocket_has_no_frontier() {
        let mut g = parse_map(".....\n.###.\n.#.#.\n.###.\n.....\n", 1.0).unwrap();
        g.set(12, CellState::Unknown);
        assert!(detect_frontiers(&g, &RoiMask::for_grid(&g), 6.0).unwrap().is_empty());
    }

    #[test]
    fn roi_restricts_frontier_cells() {
        let g = half_known(10, 10, 5);
        let roi = RoiMask::from_cells(10, 10, [4, 14]);
        let f = detect_frontiers(&g, &roi, 6.0).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].cells, vec![4, 14]);
    }

    #[test]
    fn fov_cases() {
        let g = half_known(10, 3, 5);
        let single = Frontier::new(0, vec![g.index(4, 1)], &g);
        assert_eq!(fov(Point::new(3.5, 1.5), &single, &g, 3.0).unwrap(), 1.0);
        assert_eq!(fov(Point::new(0.5, 1.5), &single, &g, 2.0).unwrap(), 0.0);
        assert!(matches!(fov(Point::new(7.5, 1.5), &single, &g, 2.0), Err(Error::NotFree(_))));
    }

    #[test]
    fn fov_wall_hides_part_of_frontier() {
        // Viewer at (1,2); a wall segment at x=3 for rows 0..=1 hides the
        // upper part of the frontier column x=5.
        let mut g = parse_map("..#...\n..#...\n......\n......\n......\n", 1.0).unwrap();
        for y in 0..5 {
            let i = g.index(5, y);
            g.set(i, CellState::Free);
        }
        let cells: Vec<usize> = (0..5).map(|y| g.index(5, y)).collect();
        let f = Frontier::new(0, cells.clone(), &g);
        let origin = g.index(1, 2);
        let oracle = cells.iter().filter(|&&c| g.line_of_sight(origin, c)).count() as f64 / 5.0;
        let got = fov(Point::new(1.5, 2.5), &f, &g, 10.0).unwrap();
        assert_eq!(got, oracle);
        assert!(got < 1.0 && got > 0.0);
    }
}
