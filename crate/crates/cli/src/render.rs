//! SVG stills of a world: occupancy, region partition, roadmap, robots and
//! visiting-sequence arrows. One SVG unit is one grid cell.

use regionex_core::gridmap::{CellState, OccupancyGrid};
use regionex_core::perception::Rrg;
use regionex_core::planner::RoutePlan;
use regionex_core::simulator::World;
use regionex_core::Point;
use std::fmt::Write as _;

const FREE: &str = "#ffffff";
const OBSTACLE: &str = "#262626";
const UNKNOWN: &str = "#b8b8b8";
const PIXELS_PER_CELL: usize = 2;

/// Everything a still shows. Missing layers are omitted.
#[derive(Clone, Copy)]
pub struct Snapshot<'a> {
    pub grid: &'a OccupancyGrid,
    pub rrg: Option<&'a Rrg>,
    pub plan: Option<&'a RoutePlan>,
    pub robots: &'a [Point],
    /// Simulated time, shown in the title when set.
    pub time: Option<f64>,
}

impl<'a> Snapshot<'a> {
    pub fn of(world: &'a World, plan: Option<&'a RoutePlan>, robots: &'a [Point]) -> Self {
        Self { grid: &world.global, rrg: Some(&world.rrg), plan, robots, time: Some(world.time()) }
    }
}

/// Fill colour of region `id`: hues spaced by the golden angle.
pub fn region_color(id: usize) -> String {
    let hue = (id as f64 * 137.507_764) % 360.0;
    let (r, g, b) = hsl_to_rgb(hue, 0.70, 0.55);
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn hsl_to_rgb(h: f64, s: f64, l: f64) -> (u8, u8, u8) {
    let c = (1.0 - (2.0 * l - 1.0).abs()) * s;
    let hp = h / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = l - c / 2.0;
    let byte = |v: f64| ((v + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    (byte(r), byte(g), byte(b))
}

/// Horizontal runs `(x0, x1, y)` of consecutive cell indices.
fn runs(width: usize, cells: impl IntoIterator<Item = usize>) -> Vec<(usize, usize, usize)> {
    let mut out: Vec<(usize, usize, usize)> = Vec::new();
    for c in cells {
        let (x, y) = (c % width, c / width);
        match out.last_mut() {
            Some(run) if run.2 == y && run.1 == x => run.1 = x + 1,
            _ => out.push((x, x + 1, y)),
        }
    }
    out
}

fn rects(svg: &mut String, runs: &[(usize, usize, usize)]) {
    for &(x0, x1, y) in runs {
        let _ = write!(svg, r#"<rect x="{x0}" y="{y}" width="{}" height="1"/>"#, x1 - x0);
    }
}

pub fn render_snapshot(s: &Snapshot) -> String {
    let g = s.grid;
    let (w, h) = (g.width(), g.height());
    let scale = 1.0 / g.resolution();
    let px = |p: Point| (p.x * scale, p.y * scale);
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {w} {h}" shape-rendering="crispEdges">"#,
        w * PIXELS_PER_CELL,
        h * PIXELS_PER_CELL
    );
    if let Some(t) = s.time {
        let _ = writeln!(svg, "<title>t = {t:.1} s</title>");
    }
    svg.push_str(concat!(
        r##"<defs><marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="6" markerHeight="6" orient="auto-start-reverse">"##,
        r##"<path d="M0,0 L10,5 L0,10 z" fill="#d00000"/></marker></defs>"##,
        "\n"
    ));

    let _ = write!(svg, r#"<g id="occupancy"><rect x="0" y="0" width="{w}" height="{h}" fill="{UNKNOWN}"/>"#);
    for (state, colour) in [(CellState::Free, FREE), (CellState::Obstacle, OBSTACLE)] {
        let _ = write!(svg, r#"<g fill="{colour}">"#);
        rects(&mut svg, &runs(w, (0..g.len()).filter(|&c| g.get(c) == state)));
        svg.push_str("</g>");
    }
    svg.push_str("</g>\n");

    if let Some(plan) = s.plan {
        svg.push_str(r#"<g id="regions" fill-opacity="0.6">"#);
        for (j, v) in plan.graph.vertices.iter().enumerate() {
            let _ = write!(svg, r#"<g data-region="{j}" fill="{}">"#, region_color(j));
            rects(&mut svg, &runs(w, v.region.cells.iter().copied()));
            svg.push_str("</g>");
        }
        svg.push_str("</g>\n");
    }

    if let Some(rrg) = s.rrg.filter(|r| !r.edges().is_empty()) {
        svg.push_str(r##"<g id="rrg"><path fill="none" stroke="#3b6fb6" stroke-width="0.6" stroke-opacity="0.7" d=""##);
        for &(a, b, _) in rrg.edges() {
            let ((x0, y0), (x1, y1)) = (px(rrg.vertex(a)), px(rrg.vertex(b)));
            let _ = write!(svg, "M{x0:.2},{y0:.2}L{x1:.2},{y1:.2}");
        }
        svg.push_str("\"/></g>\n");
    }

    if let Some(plan) = s.plan {
        svg.push_str(r##"<g id="routes" stroke="#d00000" stroke-width="1.5" marker-end="url(#arrow)">"##);
        for (k, seq) in plan.sequences.iter().enumerate() {
            let mut from = plan.anchors.get(k).map(|a| a.position).or_else(|| s.robots.get(k).copied());
            for (order, &j) in seq.iter().enumerate() {
                let to = plan.graph.vertices[j].viewpoint.position;
                if let Some(f) = from {
                    let ((x0, y0), (x1, y1)) = (px(f), px(to));
                    let _ = write!(
                        svg,
                        r#"<line data-robot="{k}" data-order="{order}" data-region="{j}" x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y1:.2}"/>"#
                    );
                }
                from = Some(to);
            }
        }
        svg.push_str("</g>\n");
    }

    if !s.robots.is_empty() {
        svg.push_str(r##"<g id="robots" fill="#1b9e3e" stroke="#000000" stroke-width="0.5">"##);
        for (k, &p) in s.robots.iter().enumerate() {
            let (x, y) = px(p);
            let _ = write!(svg, r#"<circle data-robot="{k}" cx="{x:.2}" cy="{y:.2}" r="4"/>"#);
        }
        svg.push_str("</g>\n");
    }
    svg.push_str("</svg>\n");
    svg
}
