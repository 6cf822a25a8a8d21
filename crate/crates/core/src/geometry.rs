//! Continuous-space points and grid line traversal.

use std::ops::{Add, Mul, Sub};

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_sq(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn lerp(self, other: Point, t: f64) -> Point {
        Point::new(self.x + (other.x - self.x) * t, self.y + (other.y - self.y) * t)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

/// Integer line stepping from `(x0, y0)` to `(x1, y1)` inclusive of both
/// ends. Consecutive cells are 8-adjacent. The visiting order always starts
/// at the first endpoint, so the traversal is not symmetric in general.
pub fn bresenham(x0: i64, y0: i64, x1: i64, y1: i64, mut visit: impl FnMut(i64, i64) -> bool) {
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    let (mut x, mut y) = (x0, y0);
    loop {
        if !visit(x, y) {
            return;
        }
        if x == x1 && y == y1 {
            return;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// Every cell a continuous segment touches, in order (Amanatides–Woo
/// traversal). Consecutive cells are 4-adjacent; when the segment passes
/// exactly through a cell corner both side cells are reported.
pub fn segment_cells(a: Point, b: Point, resolution: f64, mut visit: impl FnMut(i64, i64) -> bool) {
    let (ax, ay) = (a.x / resolution, a.y / resolution);
    let (bx, by) = (b.x / resolution, b.y / resolution);
    let mut cx = ax.floor() as i64;
    let mut cy = ay.floor() as i64;
    let ex = bx.floor() as i64;
    let ey = by.floor() as i64;
    let dx = bx - ax;
    let dy = by - ay;
    let step_x: i64 = if dx > 0.0 { 1 } else { -1 };
    let step_y: i64 = if dy > 0.0 { 1 } else { -1 };
    let t_delta_x = if dx != 0.0 { (1.0 / dx).abs() } else { f64::INFINITY };
    let t_delta_y = if dy != 0.0 { (1.0 / dy).abs() } else { f64::INFINITY };
    let mut t_max_x = if dx > 0.0 {
        ((cx + 1) as f64 - ax) / dx
    } else if dx < 0.0 {
        (cx as f64 - ax) / dx
    } else {
        f64::INFINITY
    };
    let mut t_max_y = if dy > 0.0 {
        ((cy + 1) as f64 - ay) / dy
    } else if dy < 0.0 {
        (cy as f64 - ay) / dy
    } else {
        f64::INFINITY
    };
    if !visit(cx, cy) {
        return;
    }
    let max_steps = (ex - cx).abs() + (ey - cy).abs() + 2;
    for _ in 0..max_steps {
        if cx == ex && cy == ey {
            return;
        }
        if (t_max_x - t_max_y).abs() < 1e-12 {
            // Corner crossing: report both side cells before the diagonal.
            if !visit(cx + step_x, cy) || !visit(cx, cy + step_y) {
                return;
            }
            cx += step_x;
            cy += step_y;
            t_max_x += t_delta_x;
            t_max_y += t_delta_y;
        } else if t_max_x < t_max_y {
            cx += step_x;
            t_max_x += t_delta_x;
        } else {
            cy += step_y;
            t_max_y += t_delta_y;
        }
        if t_max_x.min(t_max_y) > 1.0 + 1e-12 && (cx != ex || cy != ey) {
            // Floating-point drift; snap to the end cell.
            if !visit(ex, ey) {
                return;
            }
            return;
        }
        if !visit(cx, cy) {
            return;
        }
    }
}
