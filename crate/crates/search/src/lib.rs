//! Granular local search refinement.
//!
//! Five operators — segment exchange, reversed pair move, intra-route edge
//! reversal, best-relocation and best-exchange between route pairs — applied
//! within size-limited neighborhoods, with immediate acceptance of improving
//! moves. A small-penalty sweep explores through temporary infeasibility; a
//! large-penalty sweep plus targeted ejection restores feasibility. The main
//! loop perturbs the incumbent by crossover with a random solution each
//! iteration and keeps the best feasible solution found.

mod config;
mod construct;
mod crossover;
mod driver;
mod error;
mod neighbors;
mod search;
mod worker;

pub use config::LsConfig;
pub use construct::{make_random, place_leftover_backhauls};
pub use crossover::{ox_crossover, srex_crossover, srex_offspring_pair};
pub use driver::{run_local_search, write_trace_csv, LsOutcome, TraceEntry};
pub use error::SearchError;
pub use neighbors::{build_granular_neighbors, NeighborLists};
pub use search::{fix, search};
pub use worker::{MoveResult, SearchState, MOVE_EPS};
