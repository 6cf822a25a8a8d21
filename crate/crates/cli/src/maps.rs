//! Generators for the four 50 m × 30 m benchmark environments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regionex_core::gridmap::{flood_free, to_map_text, CellState, OccupancyGrid};
use regionex_core::{Error, Point, Result};
use std::fmt;
use std::str::FromStr;

pub const WIDTH: usize = 500;
pub const HEIGHT: usize = 300;
pub const RESOLUTION: f64 = 0.1;
/// Square in the top-left corner kept free of obstacles, in cells.
pub const START_AREA: usize = 30;
pub const MAX_ATTEMPTS: u64 = 10;
/// Seed used for the bundled random map.
pub const BUNDLED_SEED: u64 = 7;

const WALL: usize = 2;
const DOOR: usize = 15;
const RANDOM_DENSITY: f64 = 0.20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MapKind {
    Empty,
    Grid,
    Random,
    Campus,
}

impl MapKind {
    pub const ALL: [MapKind; 4] = [MapKind::Empty, MapKind::Grid, MapKind::Random, MapKind::Campus];

    pub fn name(self) -> &'static str {
        match self {
            MapKind::Empty => "empty",
            MapKind::Grid => "grid",
            MapKind::Random => "random",
            MapKind::Campus => "campus",
        }
    }

    /// Text of the bundled map file for this kind.
    pub fn bundled(self) -> &'static str {
        match self {
            MapKind::Empty => include_str!("../maps/empty.map"),
            MapKind::Grid => include_str!("../maps/grid.map"),
            MapKind::Random => include_str!("../maps/random.map"),
            MapKind::Campus => include_str!("../maps/campus.map"),
        }
    }
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MapKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        MapKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown map kind `{s}`")))
    }
}

/// Robot start positions in the cleared corner, 0.6 m apart.
pub fn start_positions(count: usize) -> Vec<Point> {
    (0..count).map(|k| Point::new(1.0 + 0.6 * (k % 3) as f64, 1.0 + 0.6 * (k / 3) as f64)).collect()
}

/// Generate a map of the given kind. Only `Random` depends on the seed.
pub fn generate(kind: MapKind, seed: u64) -> Result<OccupancyGrid> {
    let grid = match kind {
        MapKind::Empty => bordered(),
        MapKind::Grid => room_lattice(),
        MapKind::Campus => campus(),
        MapKind::Random => return random_with_retries(seed),
    };
    if !is_connected(&grid) {
        return Err(Error::Config(format!("{kind} map is disconnected")));
    }
    Ok(grid)
}

pub fn generate_text(kind: MapKind, seed: u64) -> Result<String> {
    generate(kind, seed).map(|g| to_map_text(&g))
}

/// True when every free cell is 4-connected to the start corner.
pub fn is_connected(grid: &OccupancyGrid) -> bool {
    let start = grid.index(START_AREA / 2, START_AREA / 2);
    if !grid.is_free(start) {
        return false;
    }
    let seen = flood_free(grid, &[start]);
    (0..grid.len()).all(|i| !grid.is_free(i) || seen[i])
}

fn bordered() -> OccupancyGrid {
    let mut g = OccupancyGrid::new(WIDTH, HEIGHT, RESOLUTION, CellState::Free).expect("static dimensions");
    fill(&mut g, 0, 0, WIDTH, WALL);
    fill(&mut g, 0, HEIGHT - WALL, WIDTH, HEIGHT);
    fill(&mut g, 0, 0, WALL, HEIGHT);
    fill(&mut g, WIDTH - WALL, 0, WIDTH, HEIGHT);
    g
}

/// Mark the half-open cell rectangle `[x0, x1) × [y0, y1)` as obstacle.
fn fill(g: &mut OccupancyGrid, x0: usize, y0: usize, x1: usize, y1: usize) {
    set_rect(g, x0, y0, x1, y1, CellState::Obstacle);
}

fn clear(g: &mut OccupancyGrid, x0: usize, y0: usize, x1: usize, y1: usize) {
    set_rect(g, x0, y0, x1, y1, CellState::Free);
}

fn set_rect(g: &mut OccupancyGrid, x0: usize, y0: usize, x1: usize, y1: usize, s: CellState) {
    for y in y0..y1.min(g.height()) {
        for x in x0..x1.min(g.width()) {
            let i = g.index(x, y);
            g.set(i, s);
        }
    }
}

/// Six by four rooms separated by thin walls with a centred door in every
/// shared wall.
fn room_lattice() -> OccupancyGrid {
    let mut g = bordered();
    let (cols, rows) = (6, 4);
    let cw = WIDTH / cols;
    let rh = HEIGHT / rows;
    for c in 1..cols {
        let x = c * cw;
        fill(&mut g, x, 0, x + WALL, HEIGHT);
        for r in 0..rows {
            let mid = r * rh + rh / 2;
            clear(&mut g, x, mid - DOOR / 2, x + WALL, mid + DOOR / 2 + 1);
        }
    }
    for r in 1..rows {
        let y = r * rh;
        fill(&mut g, 0, y, WIDTH, y + WALL);
        for c in 0..cols {
            let mid = c * cw + cw / 2;
            clear(&mut g, mid - DOOR / 2, y, mid + DOOR / 2 + 1, y + WALL);
        }
    }
    g
}

fn random_with_retries(seed: u64) -> Result<OccupancyGrid> {
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(MAX_ATTEMPTS).wrapping_add(attempt));
        if let Some(g) = random_obstacles(&mut rng) {
            if is_connected(&g) {
                return Ok(g);
            }
        }
    }
    Err(Error::Config(format!("random map generation failed after {MAX_ATTEMPTS} attempts (seed {seed})")))
}

/// Place random rectangles of 1 m to 4 m sides until the interior is ~20%
/// obstacle, rejecting any rectangle that would seal off free space.
fn random_obstacles(rng: &mut ChaCha8Rng) -> Option<OccupancyGrid> {
    let mut g = bordered();
    let interior = ((WIDTH - 2 * WALL) * (HEIGHT - 2 * WALL)) as f64;
    let target = (RANDOM_DENSITY * interior) as usize;
    let mut placed = 0usize;
    for _ in 0..4000 {
        if placed >= target {
            return Some(g);
        }
        let w = rng.random_range(10..=40);
        let h = rng.random_range(10..=40);
        let x0 = rng.random_range(WALL..WIDTH - WALL - w);
        let y0 = rng.random_range(WALL..HEIGHT - WALL - h);
        if x0 < START_AREA + 5 && y0 < START_AREA + 5 {
            continue;
        }
        let fresh: Vec<usize> = (y0..y0 + h)
            .flat_map(|y| (x0..x0 + w).map(move |x| (x, y)))
            .map(|(x, y)| g.index(x, y))
            .filter(|&i| g.is_free(i))
            .collect();
        if fresh.is_empty() {
            continue;
        }
        fresh.iter().for_each(|&i| g.set(i, CellState::Obstacle));
        if is_connected(&g) {
            placed += fresh.len();
        } else {
            fresh.iter().for_each(|&i| g.set(i, CellState::Free));
        }
    }
    (placed >= target).then_some(g)
}

/// Fixed layout: hollow buildings with doors, solid blocks, a courtyard of
/// pillars and a fenced lawn.
fn campus() -> OccupancyGrid {
    let mut g = bordered();
    // Hollow building with two rooms, door facing the start corner.
    hollow(&mut g, 60, 40, 180, 120);
    fill(&mut g, 118, 40, 120, 120);
    clear(&mut g, 118, 70, 120, 85);
    clear(&mut g, 60, 70, 62, 85);
    clear(&mut g, 150, 118, 165, 120);
    // Solid block.
    fill(&mut g, 230, 30, 310, 100);
    // L-shaped hollow building.
    hollow(&mut g, 360, 40, 470, 140);
    fill(&mut g, 417, 92, 470, 140);
    clear(&mut g, 360, 100, 362, 115);
    clear(&mut g, 440, 40, 455, 42);
    // Building with a corridor and three rooms.
    hollow(&mut g, 40, 170, 200, 270);
    fill(&mut g, 40, 210, 200, 212);
    fill(&mut g, 40, 228, 200, 230);
    clear(&mut g, 40, 212, 42, 228);
    clear(&mut g, 198, 212, 200, 228);
    for x in [95, 145] {
        fill(&mut g, x, 170, x + 2, 210);
        fill(&mut g, x, 230, x + 2, 270);
    }
    for x in [60, 110, 165] {
        clear(&mut g, x, 210, x + 15, 212);
        clear(&mut g, x, 228, x + 15, 230);
    }
    // Courtyard pillars.
    for px in (240..330).step_by(30) {
        for py in (150..260).step_by(35) {
            fill(&mut g, px, py, px + 6, py + 6);
        }
    }
    // Fenced lawn with two gates.
    hollow(&mut g, 370, 180, 470, 265);
    clear(&mut g, 370, 210, 372, 228);
    clear(&mut g, 430, 263, 448, 265);
    g
}

/// Wall outline of the rectangle `[x0, x1) × [y0, y1)`.
fn hollow(g: &mut OccupancyGrid, x0: usize, y0: usize, x1: usize, y1: usize) {
    fill(g, x0, y0, x1, y0 + WALL);
    fill(g, x0, y1 - WALL, x1, y1);
    fill(g, x0, y0, x0 + WALL, y1);
    fill(g, x1 - WALL, y0, x1, y1);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_round_trip() {
        for k in MapKind::ALL {
            assert_eq!(k.name().parse::<MapKind>().unwrap(), k);
        }
        assert!("forest".parse::<MapKind>().is_err());
    }

    #[test]
    fn starts_sit_in_the_cleared_corner() {
        let g = generate(MapKind::Random, BUNDLED_SEED).unwrap();
        for p in start_positions(4) {
            let i = g.cell_at(p).unwrap();
            let (x, y) = g.coords(i);
            assert!(x < START_AREA && y < START_AREA && g.is_free(i));
        }
    }
}
