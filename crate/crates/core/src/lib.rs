//! Multi-robot exploration planning over a RegionGraph.
//!
//! The crate is organised bottom-up:
//!
//! - [`gridmap`]: occupancy grids, ground truth environments, the sensor
//!   reveal model and map merging.
//! - [`perception`]: frontier detection, the rapidly-exploring random graph
//!   (RRG), viewpoint sampling and shortest paths on the RRG.
//! - [`regiongraph`]: Voronoi-like partition of unexplored space and the
//!   weighted graph built over the resulting regions.
//! - [`routing`]: cost-matrix construction and the open VRP / TSP solvers.
//! - [`planner`]: the end-to-end pipeline shared by every strategy.
//! - [`framework`]: the hierarchical center/client protocol.
//! - [`baselines`]: centralized, multi-TSP and greedy comparison strategies.
//! - [`simulator`]: the deterministic discrete-time world and its metrics.

pub mod baselines;
pub mod error;
pub mod framework;
pub mod geometry;
pub mod gridmap;
pub mod perception;
pub mod planner;
pub mod regiongraph;
pub mod routing;
pub mod simulator;

pub use error::{Error, Result};
pub use geometry::Point;
pub use gridmap::{CellState, GroundTruth, OccupancyGrid, Pose, RoiMask};
