use thiserror::Error;

#[derive(Debug, Error)]
pub enum SearchError {
    /// No feasible placement exists for a customer, even on a route of its
    /// own (e.g. demand exceeding vehicle capacity).
    #[error("customer {0} cannot be feasibly served")]
    HardInfeasible(usize),
    #[error("crossover parents cover different node sets")]
    MismatchedParents,
    #[error(transparent)]
    Core(#[from] vrp_core::CoreError),
}
