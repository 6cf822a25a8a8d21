//! Frontier detection and clustering, the RRG roadmap, viewpoint sampling
//! and shortest paths over the roadmap.

mod frontier;
mod paths;
mod rrg;
mod viewpoint;

pub use frontier::{detect_frontiers, fov, frontier_cells, Frontier};
pub use paths::{dijkstra, dijkstra_adjacency, johnson_adjacency, johnson_all_pairs, shortest_path, DistanceTable, Distances, SourcePaths};
pub use rrg::{rrg_connect, Rrg};
pub use viewpoint::{sample_viewpoints, SamplingConfig, Viewpoint};
