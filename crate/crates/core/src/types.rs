use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::eval::build_distance_matrix;

/// Which routing constraints are active for an instance.
///
/// Any combination of the non-TSP flags is representable; `tsp_mode`
/// excludes all other flags because a TSP solution is a single tour with no
/// demands, capacities or schedules.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantFlags {
    pub multi_depot: bool,
    pub backhaul: bool,
    pub duration_limit: bool,
    pub open_routes: bool,
    pub time_windows: bool,
    pub tsp_mode: bool,
}

impl VariantFlags {
    pub fn cvrp() -> Self {
        Self::default()
    }

    pub fn mdvrp() -> Self {
        Self {
            multi_depot: true,
            ..Self::default()
        }
    }

    pub fn tsp() -> Self {
        Self {
            tsp_mode: true,
            ..Self::default()
        }
    }

    /// True when no flag set conflicts with another.
    pub fn is_valid(&self) -> bool {
        !(self.tsp_mode
            && (self.multi_depot
                || self.backhaul
                || self.duration_limit
                || self.open_routes
                || self.time_windows))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Depot,
    Customer,
}

/// A depot or customer with its geometry, demand and schedule attributes.
///
/// Depots carry zero demand and are never backhauls. Time-window fields are
/// meaningful only when the instance's `time_windows` flag is active.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub kind: NodeKind,
    pub x: f64,
    pub y: f64,
    pub demand: f64,
    pub is_backhaul: bool,
    pub tw_early: f64,
    pub tw_late: f64,
    pub service_time: f64,
}

impl Node {
    pub fn depot(id: usize, x: f64, y: f64) -> Self {
        Node {
            id,
            kind: NodeKind::Depot,
            x,
            y,
            demand: 0.0,
            is_backhaul: false,
            tw_early: 0.0,
            tw_late: 0.0,
            service_time: 0.0,
        }
    }

    pub fn customer(id: usize, x: f64, y: f64, demand: f64) -> Self {
        Node {
            id,
            kind: NodeKind::Customer,
            x,
            y,
            demand,
            is_backhaul: false,
            tw_early: 0.0,
            tw_late: 0.0,
            service_time: 0.0,
        }
    }
}

/// An immutable problem definition.
///
/// Nodes are stored depots-first: indices `0..m` are depots, `m..g` are
/// customers. The distance matrix is symmetric Euclidean with a zero
/// diagonal and doubles as the travel-time matrix (unit speed). Depot-to-
/// depot entries are stored but never traversed by any operation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Instance {
    nodes: Vec<Node>,
    depot_count: usize,
    capacity: f64,
    route_limit: Option<f64>,
    variant: VariantFlags,
    dist: Vec<f64>,
}

impl Instance {
    /// Builds an instance, computing the distance matrix from coordinates.
    pub fn new(
        nodes: Vec<Node>,
        depot_count: usize,
        capacity: f64,
        route_limit: Option<f64>,
        variant: VariantFlags,
    ) -> Result<Self, CoreError> {
        let coords: Vec<(f64, f64)> = nodes.iter().map(|n| (n.x, n.y)).collect();
        let dist = build_distance_matrix(&coords)?;
        Self::with_distance_matrix(nodes, depot_count, capacity, route_limit, variant, dist)
    }

    /// Builds an instance with a caller-supplied matrix (e.g. rounded
    /// distances for benchmark sets that publish integer objectives).
    pub fn with_distance_matrix(
        nodes: Vec<Node>,
        depot_count: usize,
        capacity: f64,
        route_limit: Option<f64>,
        variant: VariantFlags,
        dist: Vec<f64>,
    ) -> Result<Self, CoreError> {
        let g = nodes.len();
        if g == 0 {
            return Err(CoreError::InvalidInstance("no nodes".into()));
        }
        if depot_count == 0 || depot_count > g {
            return Err(CoreError::InvalidInstance(format!(
                "depot count {depot_count} out of range for {g} nodes"
            )));
        }
        if !variant.is_valid() {
            return Err(CoreError::InvalidInstance(
                "tsp_mode excludes all other variant flags".into(),
            ));
        }
        if !variant.multi_depot && depot_count != 1 {
            return Err(CoreError::InvalidInstance(
                "single-depot variants require exactly one depot".into(),
            ));
        }
        if dist.len() != g * g {
            return Err(CoreError::InvalidInstance(format!(
                "distance matrix has {} entries, expected {}",
                dist.len(),
                g * g
            )));
        }
        for (i, node) in nodes.iter().enumerate() {
            if node.id != i {
                return Err(CoreError::InvalidInstance(format!(
                    "node at position {i} has id {}",
                    node.id
                )));
            }
            let is_depot_slot = i < depot_count;
            match (is_depot_slot, node.kind) {
                (true, NodeKind::Customer) | (false, NodeKind::Depot) => {
                    return Err(CoreError::InvalidInstance(format!(
                        "node {i} kind does not match depots-first layout"
                    )));
                }
                _ => {}
            }
            if is_depot_slot && (node.demand != 0.0 || node.is_backhaul) {
                return Err(CoreError::InvalidInstance(format!(
                    "depot {i} must have zero demand and no backhaul flag"
                )));
            }
            if variant.time_windows && node.tw_early > node.tw_late {
                return Err(CoreError::InvalidInstance(format!(
                    "node {i} window [{}, {}] is empty",
                    node.tw_early, node.tw_late
                )));
            }
        }
        if variant.duration_limit && route_limit.is_none() {
            return Err(CoreError::InvalidInstance(
                "duration_limit flag set without a route limit".into(),
            ));
        }
        Ok(Instance {
            nodes,
            depot_count,
            capacity,
            route_limit,
            variant,
            dist,
        })
    }

    /// Total number of nodes `g = m + n`.
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Number of depots `m`.
    pub fn num_depots(&self) -> usize {
        self.depot_count
    }

    /// Number of customers `n`.
    pub fn num_customers(&self) -> usize {
        self.nodes.len() - self.depot_count
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn route_limit(&self) -> Option<f64> {
        self.route_limit
    }

    pub fn variant(&self) -> VariantFlags {
        self.variant
    }

    pub fn node(&self, i: usize) -> &Node {
        &self.nodes[i]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn is_depot(&self, i: usize) -> bool {
        i < self.depot_count
    }

    /// Customer node indices `m..g`.
    pub fn customer_ids(&self) -> std::ops::Range<usize> {
        self.depot_count..self.nodes.len()
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.nodes.len() + j]
    }

    pub fn distance_matrix(&self) -> &[f64] {
        &self.dist
    }

    /// Latest depot return time when time windows are active.
    pub fn horizon(&self) -> Option<f64> {
        if self.variant.time_windows {
            Some(self.nodes[0].tw_late)
        } else {
            None
        }
    }
}

/// One vehicle's trip: an anchor depot plus the ordered customers it serves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Route {
    pub depot: usize,
    pub customers: Vec<usize>,
}

impl Route {
    pub fn new(depot: usize, customers: Vec<usize>) -> Self {
        Route { depot, customers }
    }

    pub fn is_empty(&self) -> bool {
        self.customers.is_empty()
    }
}

/// A complete routing plan. Every customer of the instance must appear in
/// exactly one route exactly once for the solution to be structurally valid.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Solution {
    pub routes: Vec<Route>,
}

impl Solution {
    pub fn new(routes: Vec<Route>) -> Self {
        Solution { routes }
    }

    /// Drops empty routes.
    pub fn normalize(&mut self) {
        self.routes.retain(|r| !r.customers.is_empty());
    }

    pub fn num_customers(&self) -> usize {
        self.routes.iter().map(|r| r.customers.len()).sum()
    }
}

/// Penalty coefficients applied per unit of constraint violation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyWeights {
    pub capacity: f64,
    pub time_window: f64,
    pub duration: f64,
}

impl PenaltyWeights {
    pub const ZERO: PenaltyWeights = PenaltyWeights {
        capacity: 0.0,
        time_window: 0.0,
        duration: 0.0,
    };

    pub fn uniform(w: f64) -> Self {
        debug_assert!(w >= 0.0);
        PenaltyWeights {
            capacity: w,
            time_window: w,
            duration: w,
        }
    }
}

/// Raw distance plus per-constraint violation magnitudes and the penalized
/// scalar combining them. `penalized == distance` exactly when the solution
/// is free of violations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostBreakdown {
    pub distance: f64,
    pub excess_load: f64,
    pub tw_violation: f64,
    pub duration_excess: f64,
    pub penalized: f64,
}
