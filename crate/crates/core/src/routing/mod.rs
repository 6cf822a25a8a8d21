//! Open VRP modeling over the RegionGraph and the solvers behind it.
//!
//! Region workloads are folded into the edges so a route's cost is travel
//! plus the exploration work of the regions it visits. Robots enter the
//! matrix as extra rows and columns; every return to a robot costs nothing,
//! which turns a closed-tour solver model into open routes.

mod matrix;
mod vrp;

pub use matrix::{build_matrix, fold_weights, guide_path, CostMatrix, FoldedWeights, RobotAnchor};
pub use vrp::{
    route_cost, solve_tsp, solve_vrp, Objective, SolveOptions, SolverMode, VrpSolution, EXACT_MAX_REGIONS,
    HELD_KARP_MAX_REGIONS,
};
