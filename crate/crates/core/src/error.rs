use thiserror::Error;

/// Structural defects of a solution with respect to an instance.
///
/// These are distinct from constraint violations (capacity, time windows,
/// duration): a structurally invalid solution does not even describe a
/// partition of the customers into routes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StructuralIssue {
    /// A route references a node index outside `0..g`.
    NodeOutOfRange(usize),
    /// A route lists a depot index in its customer sequence.
    DepotAsCustomer(usize),
    /// A route's anchor depot is not a depot index.
    InvalidDepot(usize),
    /// A customer appears in more than one position.
    DuplicateCustomer(usize),
    /// A customer does not appear in any route.
    MissingCustomer(usize),
    /// TSP solutions must consist of a single tour.
    MultipleTspRoutes(usize),
}

impl std::fmt::Display for StructuralIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StructuralIssue::NodeOutOfRange(i) => write!(f, "node index {i} out of range"),
            StructuralIssue::DepotAsCustomer(i) => write!(f, "depot {i} listed as a customer"),
            StructuralIssue::InvalidDepot(i) => write!(f, "route depot {i} is not a depot index"),
            StructuralIssue::DuplicateCustomer(i) => write!(f, "customer {i} served more than once"),
            StructuralIssue::MissingCustomer(i) => write!(f, "customer {i} not served"),
            StructuralIssue::MultipleTspRoutes(k) => {
                write!(f, "TSP solution has {k} routes, expected 1")
            }
        }
    }
}

/// Errors raised by the core model.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("non-finite coordinate at node {0}")]
    NonFiniteCoordinate(usize),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("structurally invalid solution: {0}")]
    Structural(StructuralIssue),
}
