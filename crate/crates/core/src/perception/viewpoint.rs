use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::gridmap::OccupancyGrid;
use crate::perception::{fov, rrg_connect, Frontier, Rrg};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplingConfig {
    /// Samples drawn per frontier.
    pub max_iterations: usize,
    /// Radius of the sampling disk around the frontier centroid, meters.
    pub sampling_radius: f64,
    /// A candidate must see strictly more than this fraction of its
    /// frontier.
    pub fov_threshold: f64,
    /// Range used when scoring visibility, meters.
    pub fov_radius: f64,
    /// Roadmap connection radius, meters.
    pub connect_radius: f64,
    /// A candidate this close to an existing roadmap vertex reuses it
    /// instead of adding a new one (0 disables reuse).
    pub reuse_radius: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            max_iterations: 30,
            sampling_radius: 6.0,
            fov_threshold: 0.3,
            fov_radius: 5.5,
            connect_radius: 5.0,
            reuse_radius: 1.5,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
        }
        if !(self.sampling_radius > 0.0) || !(self.connect_radius > 0.0) || !(self.fov_radius > 0.0) {
            return Err(Error::InvalidArgument("sampling radii must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.fov_threshold) {
            return Err(Error::InvalidArgument("fov_threshold must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// The entry point chosen for a frontier.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Viewpoint {
    pub frontier_id: usize,
    pub position: Point,
    pub fov_score: f64,
    pub rrg_vertex: usize,
}

/// Sample a viewpoint for every frontier and add it to the roadmap.
///
/// Per frontier, `max_iterations` points are drawn uniformly from the disk
/// around its centroid. Points outside accessible Free space or whose
/// visibility score does not exceed the threshold are dropped. The rest
/// are tried in descending score order (ties keep sample order) and the
/// first one that can join the roadmap becomes the viewpoint. Frontiers
/// left without a viewpoint are dropped from the returned list.
///
/// `accessible`, when given, marks the cells robots can actually reach.
pub fn sample_viewpoints(
    frontiers: &[Frontier],
    grid: &OccupancyGrid,
    rrg: &mut Rrg,
    cfg: &SamplingConfig,
    seed: u64,
    accessible: Option<&[bool]>,
) -> Result<(Vec<Viewpoint>, Vec<Frontier>)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut viewpoints = Vec::new();
    let mut surviving = Vec::new();
    let ok_cell = |c: usize| grid.is_free(c) && accessible.is_none_or(|a| a[c]);
    for frontier in frontiers {
        let mut candidates: Vec<(f64, Point)> = Vec::new();
        for _ in 0..cfg.max_iterations {
            let r = cfg.sampling_radius * rng.random::<f64>().sqrt();
            let theta = std::f64::consts::TAU * rng.random::<f64>();
            let p = frontier.centroid + Point::new(r * theta.cos(), r * theta.sin());
            let Some(cell) = grid.cell_at(p) else { continue };
            if !ok_cell(cell) {
                continue;
            }
            let score = fov(p, frontier, grid, cfg.fov_radius)?;
            if score > cfg.fov_threshold {
                candidates.push((score, p));
            }
        }
        candidates.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut chosen = None;
        for (score, p) in candidates {
            if cfg.reuse_radius > 0.0 {
                if let Some(v) = rrg.nearest_visible(p, grid, cfg.reuse_radius) {
                    let q = rrg.vertex(v);
                    if grid.cell_at(q).is_some_and(ok_cell) {
                        let reuse_score = fov(q, frontier, grid, cfg.fov_radius)?;
                        if reuse_score > cfg.fov_threshold {
                            chosen = Some((reuse_score, q, v));
                            break;
                        }
                    }
                }
            }
            if let Some(v) = rrg_connect(rrg, p, grid, cfg.connect_radius)? {
                chosen = Some((score, p, v));
                break;
            }
        }
        if let Some((fov_score, position, rrg_vertex)) = chosen {
            viewpoints.push(Viewpoint { frontier_id: frontier.id, position, fov_score, rrg_vertex });
            surviving.push(frontier.clone());
        }
    }
    Ok((viewpoints, surviving))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridmap::{parse_map, CellState, RoiMask};
    use crate::perception::detect_frontiers;

    fn open_with_unknown_right(w: usize, h: usize, known: usize) -> OccupancyGrid {
        let mut g = OccupancyGrid::unknown(w, h, 0.5).unwrap();
        for y in 0..h {
            for x in 0..known {
                let i = g.index(x, y);
                g.set(i, CellState::Free);
            }
        }
        g
    }

    #[test]
    fn zero_frontiers() {
        let g = parse_map("...\n", 1.0).unwrap();
        let mut rrg = Rrg::new();
        let (v, f) = sample_viewpoints(&[], &g, &mut rrg, &SamplingConfig::default(), 1, None).unwrap();
        assert!(v.is_empty() && f.is_empty() && rrg.is_empty());
    }

    #[test]
    fn open_space_frontier_gets_one_viewpoint() {
        let g = open_with_unknown_right(40, 12, 20);
        let frontiers = detect_frontiers(&g, &RoiMask::for_grid(&g), 6.0).unwrap();
        assert_eq!(frontiers.len(), 1);
        let mut rrg = Rrg::new();
        let cfg = SamplingConfig { max_iterations: 200, ..SamplingConfig::default() };
        let (vps, surv) = sample_viewpoints(&frontiers, &g, &mut rrg, &cfg, 7, None).unwrap();
        assert_eq!(vps.len(), 1);
        assert_eq!(surv.len(), 1);
        assert_eq!(rrg.len(), 1);
        assert!(vps[0].fov_score > cfg.fov_threshold);
        assert!(g.is_free_at(vps[0].position));
        assert_eq!(fov(vps[0].position, &frontiers[0], &g, cfg.fov_radius).unwrap(), vps[0].fov_score);
    }

    #[test]
    fn frontier_with_blocked_disk_is_eliminated() {
        let g = parse_map("#####\n#####\n#####\n", 1.0).unwrap();
        let f = Frontier::new(0, vec![7], &g);
        let mut rrg = Rrg::new();
        let cfg = SamplingConfig { sampling_radius: 1.0, ..SamplingConfig::default() };
        let (v, s) = sample_viewpoints(&[f], &g, &mut rrg, &cfg, 3, None).unwrap();
        assert!(v.is_empty() && s.is_empty());
    }

    #[test]
    fn deterministic_for_seed() {
        let g = open_with_unknown_right(60, 30, 25);
        let frontiers = detect_frontiers(&g, &RoiMask::for_grid(&g), 6.0).unwrap();
        let run = |seed| {
            let mut rrg = Rrg::new();
            let out = sample_viewpoints(&frontiers, &g, &mut rrg, &SamplingConfig::default(), seed, None).unwrap();
            (out.0, rrg.dump())
        };
        assert_eq!(run(11), run(11));
    }
}
