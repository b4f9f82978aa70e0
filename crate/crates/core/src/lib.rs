//! Core problem model for capacitated vehicle routing and its common variants.
//!
//! This crate defines the instance and solution types shared by the neural
//! construction policy, the local search engine and the command-line harness,
//! together with exact cost evaluation under penalty weights and strict
//! feasibility checking.
//!
//! Supported variant flags: multiple depots, mixed backhauls, route duration
//! limits, open routes, time windows, and a single-tour TSP mode. Any
//! combination of the non-TSP flags is representable.

mod error;
mod eval;
mod feasibility;
mod types;

pub use error::{CoreError, StructuralIssue};
pub use eval::{build_distance_matrix, evaluate_route, evaluate_solution, route_distance, RouteCost};
pub use feasibility::{check_feasibility, FeasibilityReport, RouteReport};
pub use types::{
    CostBreakdown, Instance, Node, NodeKind, PenaltyWeights, Route, Solution, VariantFlags,
};
