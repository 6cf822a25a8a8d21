//! Occupancy grids, ground-truth environments, the sensor reveal model and
//! map merging.
//!
//! Cells are addressed either by `(x, y)` column/row coordinates or by the
//! flat index `y * width + x`. Row 0 of a map file is `y = 0`. A cell's
//! center sits at `((x + 0.5) * resolution, (y + 0.5) * resolution)`.

use std::collections::VecDeque;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{bresenham, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CellState {
    Free,
    Obstacle,
    Unknown,
}

impl CellState {
    pub fn is_known(self) -> bool {
        self != CellState::Unknown
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    resolution: f64,
    cells: Vec<CellState>,
}

impl OccupancyGrid {
    pub fn new(width: usize, height: usize, resolution: f64, fill: CellState) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!("grid must be non-empty, got {width}x{height}")));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::InvalidArgument(format!("resolution must be positive, got {resolution}")));
        }
        Ok(Self { width, height, resolution, cells: vec![fill; width * height] })
    }

    pub fn unknown(width: usize, height: usize, resolution: f64) -> Result<Self> {
        Self::new(width, height, resolution, CellState::Unknown)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[CellState] {
        &self.cells
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.width, idx / self.width)
    }

    #[inline]
    pub fn get(&self, idx: usize) -> CellState {
        self.cells[idx]
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> CellState {
        self.cells[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, idx: usize, state: CellState) {
        self.cells[idx] = state;
    }

    #[inline]
    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    pub fn is_free(&self, idx: usize) -> bool {
        self.cells[idx] == CellState::Free
    }

    pub fn cell_center(&self, idx: usize) -> Point {
        let (x, y) = self.coords(idx);
        Point::new((x as f64 + 0.5) * self.resolution, (y as f64 + 0.5) * self.resolution)
    }

    /// The cell containing `p`, if inside the grid.
    pub fn cell_at(&self, p: Point) -> Option<usize> {
        let x = (p.x / self.resolution).floor();
        let y = (p.y / self.resolution).floor();
        if !x.is_finite() || !y.is_finite() || !self.in_bounds(x as i64, y as i64) {
            return None;
        }
        Some(self.index(x as usize, y as usize))
    }

    /// Whether `p` lies in a Free cell.
    pub fn is_free_at(&self, p: Point) -> bool {
        self.cell_at(p).is_some_and(|c| self.is_free(c))
    }

    pub fn count(&self, state: CellState) -> usize {
        self.cells.iter().filter(|&&c| c == state).count()
    }

    pub fn cell_area(&self) -> f64 {
        self.resolution * self.resolution
    }

    /// In-bounds 8-neighbors of `idx`.
    pub fn neighbors8(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let (x, y) = self.coords(idx);
        let (x, y) = (x as i64, y as i64);
        NEIGHBORS8.iter().filter_map(move |&(dx, dy)| {
            let (nx, ny) = (x + dx, y + dy);
            self.in_bounds(nx, ny).then(|| self.index(nx as usize, ny as usize))
        })
    }

    /// In-bounds 4-neighbors of `idx`.
    pub fn neighbors4(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let (x, y) = self.coords(idx);
        let (x, y) = (x as i64, y as i64);
        NEIGHBORS4.iter().filter_map(move |&(dx, dy)| {
            let (nx, ny) = (x + dx, y + dy);
            self.in_bounds(nx, ny).then(|| self.index(nx as usize, ny as usize))
        })
    }

    fn same_shape(&self, other: &OccupancyGrid) -> Result<()> {
        if self.width != other.width || self.height != other.height || self.resolution != other.resolution {
            return Err(Error::DimensionMismatch(self.width, self.height, other.width, other.height));
        }
        Ok(())
    }

    /// Cell-wise merge of `other` into `self`. See [`merge`].
    pub fn merge_from(&mut self, other: &OccupancyGrid) -> Result<()> {
        self.same_shape(other)?;
        for (dst, &src) in self.cells.iter_mut().zip(&other.cells) {
            *dst = merge_cell(*dst, src);
        }
        Ok(())
    }

    /// Whether every cell on the straight segment between two points is
    /// Free. Uses the 4-connected supercover so diagonal squeezes between
    /// touching obstacle corners are rejected.
    pub fn segment_free(&self, a: Point, b: Point) -> bool {
        let mut ok = true;
        crate::geometry::segment_cells(a, b, self.resolution, |x, y| {
            ok = self.in_bounds(x, y) && self.at(x as usize, y as usize) == CellState::Free;
            ok
        });
        ok
    }

    /// Line of sight from cell `from` to cell `to`: no Obstacle cell
    /// strictly between them on the integer line. The endpoints themselves
    /// are not tested.
    pub fn line_of_sight(&self, from: usize, to: usize) -> bool {
        let (x0, y0) = self.coords(from);
        let (x1, y1) = self.coords(to);
        let mut clear = true;
        bresenham(x0 as i64, y0 as i64, x1 as i64, y1 as i64, |x, y| {
            let (x, y) = (x as usize, y as usize);
            if (x, y) == (x0, y0) || (x, y) == (x1, y1) {
                return true;
            }
            clear = self.at(x, y) != CellState::Obstacle;
            clear
        });
        clear
    }
}

const NEIGHBORS8: [(i64, i64); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];
const NEIGHBORS4: [(i64, i64); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];

#[inline]
fn merge_cell(a: CellState, b: CellState) -> CellState {
    use CellState::*;
    match (a, b) {
        (Unknown, s) | (s, Unknown) => s,
        (Obstacle, _) | (_, Obstacle) => Obstacle,
        (Free, Free) => Free,
    }
}

/// Merge two maps of the same shape. Known beats Unknown; a Free/Obstacle
/// conflict resolves to Obstacle.
pub fn merge(global: &OccupancyGrid, local: &OccupancyGrid) -> Result<OccupancyGrid> {
    let mut out = global.clone();
    out.merge_from(local)?;
    Ok(out)
}

/// 4-connected flood fill over Free cells, returned in ascending order.
pub fn reachable_free(grid: &OccupancyGrid, from: usize) -> Result<Vec<usize>> {
    if from >= grid.len() || !grid.is_free(from) {
        return Err(Error::NotFree(from));
    }
    let mask = flood_free(grid, &[from]);
    Ok(mask.iter().enumerate().filter_map(|(i, &m)| m.then_some(i)).collect())
}

/// Flood fill mask from several Free seeds (non-free seeds are ignored).
pub fn flood_free(grid: &OccupancyGrid, seeds: &[usize]) -> Vec<bool> {
    let mut seen = vec![false; grid.len()];
    let mut queue = VecDeque::new();
    for &s in seeds {
        if s < grid.len() && grid.is_free(s) && !seen[s] {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(c) = queue.pop_front() {
        for n in grid.neighbors4(c) {
            if !seen[n] && grid.is_free(n) {
                seen[n] = true;
                queue.push_back(n);
            }
        }
    }
    seen
}

/// A fully known environment together with the Free cells that no robot
/// start can reach (rooms without entrances).
#[derive(Clone, Debug)]
pub struct GroundTruth {
    grid: OccupancyGrid,
    unreachable: Vec<usize>,
    /// Obstacle cells whose 8 neighbors are all Obstacle (or outside the
    /// grid). No ray can ever reach them.
    sealed: Vec<bool>,
}

impl GroundTruth {
    pub fn new(grid: OccupancyGrid, starts: &[usize]) -> Result<Self> {
        if grid.count(CellState::Unknown) > 0 {
            return Err(Error::Format("ground truth may not contain unknown cells".into()));
        }
        if starts.is_empty() {
            return Err(Error::InvalidArgument("at least one start cell is required".into()));
        }
        for &s in starts {
            if s >= grid.len() || !grid.is_free(s) {
                return Err(Error::NotFree(s));
            }
        }
        let reach = flood_free(&grid, starts);
        let unreachable = (0..grid.len()).filter(|&i| grid.is_free(i) && !reach[i]).collect();
        let sealed = (0..grid.len())
            .map(|i| {
                let (x, y) = grid.coords(i);
                grid.get(i) == CellState::Obstacle
                    && NEIGHBORS8.iter().all(|&(dx, dy)| {
                        let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                        !grid.in_bounds(nx, ny) || grid.at(nx as usize, ny as usize) == CellState::Obstacle
                    })
            })
            .collect();
        Ok(Self { grid, unreachable, sealed })
    }

    pub fn grid(&self) -> &OccupancyGrid {
        &self.grid
    }

    pub fn unreachable(&self) -> &[usize] {
        &self.unreachable
    }

    pub fn is_sealed(&self, idx: usize) -> bool {
        self.sealed[idx]
    }

    /// Free cells reachable from the starts; exploration is complete once
    /// all of them are known.
    pub fn reachable_free_count(&self) -> usize {
        self.grid.count(CellState::Free) - self.unreachable.len()
    }

    pub fn reachable_mask(&self) -> Vec<bool> {
        let mut mask: Vec<bool> = self.grid.cells.iter().map(|&c| c == CellState::Free).collect();
        for &u in &self.unreachable {
            mask[u] = false;
        }
        mask
    }
}

/// Parse an ASCII map: one row per line, `.` Free, `#` Obstacle, `?` Unknown.
pub fn parse_map(text: &str, resolution: f64) -> Result<OccupancyGrid> {
    let rows: Vec<&str> = text.lines().filter(|l| !l.is_empty()).collect();
    if rows.is_empty() {
        return Err(Error::Format("empty map".into()));
    }
    let width = rows[0].len();
    let mut cells = Vec::with_capacity(width * rows.len());
    for (y, row) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(Error::Format(format!("row {y} has {} columns, expected {width}", row.len())));
        }
        for (x, ch) in row.bytes().enumerate() {
            cells.push(match ch {
                b'.' => CellState::Free,
                b'#' => CellState::Obstacle,
                b'?' => CellState::Unknown,
                other => {
                    return Err(Error::Format(format!("unexpected character {:?} at ({x}, {y})", other as char)))
                }
            });
        }
    }
    let mut grid = OccupancyGrid::new(width, rows.len(), resolution, CellState::Free)?;
    grid.cells = cells;
    Ok(grid)
}

/// Load an ASCII map as ground truth, computing unreachable cells against
/// the given start cells.
pub fn load_map(text: &str, resolution: f64, starts: &[usize]) -> Result<GroundTruth> {
    GroundTruth::new(parse_map(text, resolution)?, starts)
}

/// Render a fully known grid back to the ASCII map format.
pub fn to_map_text(grid: &OccupancyGrid) -> String {
    let mut out = String::with_capacity((grid.width + 1) * grid.height);
    for y in 0..grid.height {
        for x in 0..grid.width {
            out.push(match grid.at(x, y) {
                CellState::Free => '.',
                CellState::Obstacle => '#',
                CellState::Unknown => '?',
            });
        }
        out.push('\n');
    }
    out
}

/// Import a PGM (P2 ASCII or P5 binary) image. Pixels below 50 are
/// obstacles, above 205 free; anything in between is rejected because a
/// ground truth must be fully known.
pub fn parse_pgm(bytes: &[u8], resolution: f64) -> Result<OccupancyGrid> {
    let mut pos = 0usize;
    let mut token = || -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated PGM header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token()?;
    let num = |s: String| s.parse::<usize>().map_err(|_| Error::Format(format!("bad PGM number {s:?}")));
    let width = num(token()?)?;
    let height = num(token()?)?;
    let maxval = num(token()?)?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::Format(format!("unsupported PGM maxval {maxval}")));
    }
    let pixels: Vec<usize> = match magic.as_str() {
        "P2" => (0..width * height).map(|_| token().and_then(num)).collect::<Result<_>>()?,
        "P5" => {
            let data = bytes.get(pos + 1..pos + 1 + width * height).ok_or_else(|| Error::Format("truncated PGM data".into()))?;
            data.iter().map(|&b| b as usize).collect()
        }
        other => return Err(Error::Format(format!("unsupported PGM magic {other:?}"))),
    };
    let mut grid = OccupancyGrid::new(width, height, resolution, CellState::Free)?;
    for (i, &p) in pixels.iter().enumerate() {
        let scaled = p * 255 / maxval;
        grid.cells[i] = if scaled < 50 {
            CellState::Obstacle
        } else if scaled > 205 {
            CellState::Free
        } else {
            return Err(Error::Format(format!("pixel {i} value {p} is neither free nor obstacle")));
        };
    }
    Ok(grid)
}

/// Region-of-interest bitmask over a grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoiMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl RoiMask {
    pub fn full(width: usize, height: usize) -> Self {
        Self { width, height, bits: vec![true; width * height] }
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self { width, height, bits: vec![false; width * height] }
    }

    pub fn for_grid(grid: &OccupancyGrid) -> Self {
        Self::full(grid.width, grid.height)
    }

    pub fn from_cells(width: usize, height: usize, cells: impl IntoIterator<Item = usize>) -> Self {
        let mut roi = Self::empty(width, height);
        for c in cells {
            roi.bits[c] = true;
        }
        roi
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn contains(&self, idx: usize) -> bool {
        self.bits[idx]
    }

    pub fn insert(&mut self, idx: usize) {
        self.bits[idx] = true;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn matches(&self, grid: &OccupancyGrid) -> bool {
        self.width == grid.width && self.height == grid.height
    }

    pub fn check(&self, grid: &OccupancyGrid) -> Result<()> {
        if !self.matches(grid) {
            return Err(Error::DimensionMismatch(self.width, self.height, grid.width, grid.height));
        }
        Ok(())
    }

    /// Inclusive bounding box `(x0, y0, x1, y1)` of the set bits.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        let mut bb: Option<(usize, usize, usize, usize)> = None;
        for i in self.iter() {
            let (x, y) = (i % self.width, i / self.width);
            bb = Some(match bb {
                None => (x, y, x, y),
                Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
            });
        }
        bb
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta: normalize_angle(theta) }
    }

    pub fn at(p: Point) -> Self {
        Self::new(p.x, p.y, 0.0)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Wrap an angle into `[-π, π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let wrapped = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if wrapped >= PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

/// Precomputed sensor footprint: for every cell offset inside the sensor
/// disk, the intermediate offsets of the integer line from the origin cell.
/// Bound to a grid width so offsets can be applied as flat index deltas.
#[derive(Clone, Debug)]
pub struct RevealKernel {
    radius: f64,
    width: usize,
    offsets: Vec<KernelEntry>,
    between: Vec<isize>,
}

#[derive(Clone, Copy, Debug)]
struct KernelEntry {
    dx: i32,
    dy: i32,
    start: u32,
    len: u32,
}

impl RevealKernel {
    pub fn new(radius: f64, resolution: f64, width: usize) -> Self {
        let reach = (radius / resolution).ceil() as i64 + 1;
        let mut offsets = Vec::new();
        let mut between = Vec::new();
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                // Pose may sit anywhere inside its cell: admit every offset
                // whose center could be within range.
                let gap_x = (dx.abs() as f64 - 1.0).max(0.0) * resolution;
                let gap_y = (dy.abs() as f64 - 1.0).max(0.0) * resolution;
                if gap_x.hypot(gap_y) > radius {
                    continue;
                }
                let start = between.len() as u32;
                bresenham(0, 0, dx, dy, |x, y| {
                    if (x, y) != (0, 0) && (x, y) != (dx, dy) {
                        between.push(y as isize * width as isize + x as isize);
                    }
                    true
                });
                let len = between.len() as u32 - start;
                offsets.push(KernelEntry { dx: dx as i32, dy: dy as i32, start, len });
            }
        }
        Self { radius, width, offsets, between }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Reveal into `known` every Unknown cell visible from `pose`. Returns
    /// the newly revealed cells in ascending index order.
    pub fn reveal(&self, known: &mut OccupancyGrid, truth: &GroundTruth, pose: Point) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        self.reveal_into(known, truth, pose, &mut out)?;
        Ok(out)
    }

    pub fn reveal_into(
        &self,
        known: &mut OccupancyGrid,
        truth: &GroundTruth,
        pose: Point,
        out: &mut Vec<usize>,
    ) -> Result<()> {
        let tgrid = truth.grid();
        known.same_shape(tgrid)?;
        if known.width != self.width {
            return Err(Error::InvalidArgument("reveal kernel built for a different grid width".into()));
        }
        let origin = known.cell_at(pose).ok_or(Error::OutOfBounds { x: pose.x, y: pose.y })?;
        let (ox, oy) = known.coords(origin);
        let res = known.resolution;
        let r2 = self.radius * self.radius;
        let tcells = &tgrid.cells;
        let start_len = out.len();
        for e in &self.offsets {
            let tx = ox as i64 + e.dx as i64;
            let ty = oy as i64 + e.dy as i64;
            if !known.in_bounds(tx, ty) {
                continue;
            }
            let t = ty as usize * self.width + tx as usize;
            if known.cells[t] != CellState::Unknown || truth.sealed[t] {
                continue;
            }
            let cx = (tx as f64 + 0.5) * res - pose.x;
            let cy = (ty as f64 + 0.5) * res - pose.y;
            if cx * cx + cy * cy > r2 {
                continue;
            }
            let path = &self.between[e.start as usize..(e.start + e.len) as usize];
            let blocked = path.iter().any(|&d| tcells[(origin as isize + d) as usize] == CellState::Obstacle);
            if !blocked {
                out.push(t);
            }
        }
        for &c in &out[start_len..] {
            known.cells[c] = tcells[c];
        }
        out[start_len..].sort_unstable();
        Ok(())
    }
}

/// Reveal every Unknown cell of `known` within `radius` of `pose` that the
/// pose can see in `truth`. Obstacles are revealed but hide what lies
/// behind them.
pub fn reveal(known: &mut OccupancyGrid, truth: &GroundTruth, pose: &Pose, radius: f64) -> Result<Vec<usize>> {
    RevealKernel::new(radius, known.resolution, known.width).reveal(known, truth, pose.position())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truth(text: &str, start: (usize, usize)) -> GroundTruth {
        let grid = parse_map(text, 1.0).unwrap();
        let s = grid.index(start.0, start.1);
        GroundTruth::new(grid, &[s]).unwrap()
    }

    #[test]
    fn load_open_map() {
        let t = load_map("...\n...\n...\n", 0.1, &[0]).unwrap();
        assert_eq!(t.grid().count(CellState::Free), 9);
        assert!(t.unreachable().is_empty());
    }

    #[test]
    fn load_maps_characters() {
        let g = parse_map("#.#\n", 1.0).unwrap();
        assert_eq!(g.cells(), &[CellState::Obstacle, CellState::Free, CellState::Obstacle]);
    }

    #[test]
    fn load_rejects_ragged_and_empty() {
        assert!(matches!(parse_map("..\n.\n", 1.0), Err(Error::Format(_))));
        assert!(matches!(parse_map("", 1.0), Err(Error::Format(_))));
        assert!(matches!(parse_map("..x\n", 1.0), Err(Error::Format(_))));
    }

    #[test]
    fn enclosed_cell_is_unreachable() {
        let t = truth(".....\n.###.\n.#.#.\n.###.\n.....\n", (0, 0));
        assert_eq!(t.unreachable(), &[12]);
        assert_eq!(t.reachable_free_count(), 16);
    }

    #[test]
    fn reachable_free_cases() {
        let g = parse_map("###\n#.#\n###\n", 1.0).unwrap();
        assert_eq!(reachable_free(&g, 4).unwrap(), vec![4]);
        let open = parse_map(".....\n.....\n.....\n.....\n.....\n", 1.0).unwrap();
        assert_eq!(reachable_free(&open, 12).unwrap().len(), 25);
        let split = parse_map("..#..\n..#..\n..#..\n", 1.0).unwrap();
        assert_eq!(reachable_free(&split, 0).unwrap(), vec![0, 1, 5, 6, 10, 11]);
        assert!(matches!(reachable_free(&split, 2), Err(Error::NotFree(2))));
    }

    #[test]
    fn merge_rules() {
        let m = parse_map(".#\n..\n", 1.0).unwrap();
        let u = OccupancyGrid::unknown(2, 2, 1.0).unwrap();
        assert_eq!(merge(&m, &u).unwrap(), m);
        assert_eq!(merge(&u, &m).unwrap(), m);
        let mut a = u.clone();
        a.set(0, CellState::Free);
        let mut b = u.clone();
        b.set(0, CellState::Obstacle);
        assert_eq!(merge(&a, &b).unwrap().get(0), CellState::Obstacle);
        assert_eq!(merge(&b, &a).unwrap().get(0), CellState::Obstacle);
        let wrong = OccupancyGrid::unknown(3, 2, 1.0).unwrap();
        assert!(matches!(merge(&m, &wrong), Err(Error::DimensionMismatch(..))));
    }

    #[test]
    fn reveal_open_disk() {
        let text: String = (0..200).map(|_| format!("{}\n", ".".repeat(200))).collect();
        let t = load_map(&text, 0.1, &[0]).unwrap();
        let mut known = OccupancyGrid::unknown(200, 200, 0.1).unwrap();
        let pose = Pose::new(10.0, 10.0, 0.0);
        let got = reveal(&mut known, &t, &pose, 6.0).unwrap();
        let expected: Vec<usize> =
            (0..known.len()).filter(|&i| known.cell_center(i).distance(pose.position()) <= 6.0).collect();
        assert_eq!(got, expected);
        assert!(reveal(&mut known, &t, &pose, 6.0).unwrap().is_empty());
    }

    #[test]
    fn reveal_occlusion() {
        let t = truth("......\n...#..\n......\n", (0, 1));
        let mut known = OccupancyGrid::unknown(6, 3, 1.0).unwrap();
        reveal(&mut known, &t, &Pose::new(0.5, 1.5, 0.0), 10.0).unwrap();
        assert_eq!(known.at(3, 1), CellState::Obstacle);
        assert_eq!(known.at(4, 1), CellState::Unknown);
        assert_eq!(known.at(5, 1), CellState::Unknown);
        assert_eq!(known.at(2, 1), CellState::Free);
    }

    #[test]
    fn reveal_outside_grid_is_error() {
        let t = truth("...\n", (0, 0));
        let mut known = OccupancyGrid::unknown(3, 1, 1.0).unwrap();
        assert!(matches!(reveal(&mut known, &t, &Pose::new(5.0, 0.5, 0.0), 2.0), Err(Error::OutOfBounds { .. })));
    }

    #[test]
    fn pose_theta_normalized() {
        assert!((Pose::new(0.0, 0.0, 3.0 * PI).theta() + PI).abs() < 1e-12);
        assert!((Pose::new(0.0, 0.0, PI).theta() + PI).abs() < 1e-12);
        assert!((Pose::new(0.0, 0.0, -0.5).theta() + 0.5).abs() < 1e-12);
    }

    #[test]
    fn pgm_import() {
        let g = parse_pgm(b"P2\n# c\n3 1\n255\n0 255 10\n", 0.1).unwrap();
        assert_eq!(g.cells(), &[CellState::Obstacle, CellState::Free, CellState::Obstacle]);
        let mut p5 = b"P5 2 1 255\n".to_vec();
        p5.extend_from_slice(&[255, 0]);
        let g = parse_pgm(&p5, 0.1).unwrap();
        assert_eq!(g.cells(), &[CellState::Free, CellState::Obstacle]);
        assert!(parse_pgm(b"P2 1 1 255 128", 0.1).is_err());
    }
}
