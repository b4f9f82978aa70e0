use vrp_core::Instance;

use crate::error::PolicyError;

/// Construction stage of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// No active route: only depots are selectable.
    SelectDepot,
    /// A route is open: feasible customers plus the active depot (to close
    /// the route) are selectable.
    ExtendRoute,
}

/// Per-trajectory decoding state.
///
/// Load tracking follows the mixed-backhaul profile: `peak_load` is the
/// maximum on-board load anywhere along the active route under the
/// convention that the vehicle departs with all linehaul goods; `end_load`
/// is the load after the last visited stop. Appending a linehaul customer
/// raises the peak, appending a backhaul raises the end load.
#[derive(Debug, Clone)]
pub struct RolloutState {
    pub current: usize,
    pub active_depot: usize,
    pub phase: Phase,
    pub visited: Vec<bool>,
    pub remaining: usize,
    pub end_load: f64,
    pub peak_load: f64,
    pub clock: f64,
    pub route_len: f64,
    pub route_stops: usize,
    pub total_distance: f64,
    pub done: bool,
    /// TSP only: the tour returns to this node at the end.
    pub start_node: usize,
    /// Backhaul bookkeeping: unvisited linehaul count and unvisited
    /// backhaul demand total. Once no linehaul remains, no new route can
    /// open, so all leftover backhauls must fit on the active route.
    pub remaining_linehauls: usize,
    pub remaining_backhaul_demand: f64,
}

impl RolloutState {
    pub fn new(instance: &Instance) -> Self {
        let g = instance.num_nodes();
        let tsp = instance.variant().tsp_mode;
        let mut remaining_linehauls = 0;
        let mut remaining_backhaul_demand = 0.0;
        if !tsp {
            for c in instance.customer_ids() {
                if instance.node(c).is_backhaul {
                    remaining_backhaul_demand += instance.node(c).demand;
                } else {
                    remaining_linehauls += 1;
                }
            }
        }
        RolloutState {
            current: 0,
            active_depot: 0,
            phase: Phase::SelectDepot,
            visited: vec![false; g],
            remaining: if tsp { g } else { instance.num_customers() },
            end_load: 0.0,
            peak_load: 0.0,
            clock: 0.0,
            route_len: 0.0,
            route_stops: 0,
            total_distance: 0.0,
            done: false,
            start_node: 0,
            remaining_linehauls,
            remaining_backhaul_demand,
        }
    }
}

/// Whether customer `c` can be appended to the active route of `state`.
fn customer_feasible(state: &RolloutState, c: usize, instance: &Instance) -> bool {
    if state.visited[c] {
        return false;
    }
    let v = instance.variant();
    if v.tsp_mode {
        return true;
    }
    let node = instance.node(c);

    if node.is_backhaul {
        if state.route_stops == 0 {
            return false; // routes must start with a linehaul customer
        }
        if state.end_load + node.demand > instance.capacity() {
            return false;
        }
    } else {
        if state.peak_load + node.demand > instance.capacity() {
            return false;
        }
        // Taking the last linehaul forecloses new routes, so the leftover
        // backhauls must all fit on the route this customer joins.
        if v.backhaul
            && state.remaining_linehauls == 1
            && state.end_load + state.remaining_backhaul_demand > instance.capacity()
        {
            return false;
        }
    }

    let leg = instance.dist(state.current, c);
    if v.time_windows {
        let arrival = state.clock + leg;
        let start = arrival.max(node.tw_early);
        if start > node.tw_late {
            return false;
        }
        let depart = start + node.service_time;
        let back = if v.open_routes {
            depart
        } else {
            depart + instance.dist(c, state.active_depot)
        };
        if back > instance.node(state.active_depot).tw_late {
            return false;
        }
    }
    if v.duration_limit {
        if let Some(limit) = instance.route_limit() {
            let extended = state.route_len + leg;
            let closing = if v.open_routes {
                extended
            } else {
                extended + instance.dist(c, state.active_depot)
            };
            if closing > limit {
                return false;
            }
        }
    }
    true
}

/// Closing now would strand backhaul customers: with no linehaul left, no
/// new route can open, so unvisited backhauls can only join the active one.
fn route_close_stranded(state: &RolloutState, instance: &Instance) -> bool {
    instance.variant().backhaul
        && state.remaining > 0
        && state.remaining_linehauls == 0
}

/// Whether depot `d` can open a new route, i.e. some unvisited customer is
/// feasible as its first stop.
fn depot_can_open(state: &RolloutState, d: usize, instance: &Instance) -> bool {
    let probe = RolloutState {
        current: d,
        active_depot: d,
        phase: Phase::ExtendRoute,
        end_load: 0.0,
        peak_load: 0.0,
        clock: 0.0,
        route_len: 0.0,
        route_stops: 0,
        ..state.clone()
    };
    instance
        .customer_ids()
        .any(|c| customer_feasible(&probe, c, instance))
}

/// Computes the action mask for a trajectory state: `mask[i]` is true when
/// node `i` is selectable. Finished trajectories may only re-select their
/// current node (a no-op the rollout loop ignores).
pub fn action_mask(state: &RolloutState, instance: &Instance) -> Vec<bool> {
    let g = instance.num_nodes();
    let mut mask = vec![false; g];
    if state.done {
        mask[state.current] = true;
        return mask;
    }
    if instance.variant().tsp_mode {
        for (i, m) in mask.iter_mut().enumerate() {
            *m = !state.visited[i];
        }
        return mask;
    }
    match state.phase {
        Phase::SelectDepot => {
            for d in 0..instance.num_depots() {
                mask[d] = depot_can_open(state, d, instance);
            }
        }
        Phase::ExtendRoute => {
            if state.route_stops > 0 && !route_close_stranded(state, instance) {
                mask[state.active_depot] = true;
            }
            for c in instance.customer_ids() {
                mask[c] = customer_feasible(state, c, instance);
            }
        }
    }
    mask
}

/// Applies `action` to `state`, returning the travel distance incurred by
/// the transition. Selecting a masked action is a contract violation.
pub fn advance_state(
    state: &mut RolloutState,
    action: usize,
    instance: &Instance,
) -> Result<f64, PolicyError> {
    advance_for(state, action, instance, 0)
}

pub(crate) fn advance_for(
    state: &mut RolloutState,
    action: usize,
    instance: &Instance,
    trajectory: usize,
) -> Result<f64, PolicyError> {
    let v = instance.variant();
    if v.tsp_mode {
        if state.visited[action] {
            return Err(PolicyError::MaskedAction { trajectory, action });
        }
        let leg = if state.remaining == instance.num_nodes() {
            state.start_node = action;
            0.0
        } else {
            instance.dist(state.current, action)
        };
        state.visited[action] = true;
        state.remaining -= 1;
        state.current = action;
        state.total_distance += leg;
        if state.remaining == 0 {
            let closing = instance.dist(state.current, state.start_node);
            state.total_distance += closing;
            state.done = true;
            return Ok(leg + closing);
        }
        return Ok(leg);
    }

    match state.phase {
        Phase::SelectDepot => {
            if action >= instance.num_depots() || !depot_can_open(state, action, instance) {
                return Err(PolicyError::MaskedAction { trajectory, action });
            }
            state.active_depot = action;
            state.current = action;
            state.phase = Phase::ExtendRoute;
            state.end_load = 0.0;
            state.peak_load = 0.0;
            state.clock = 0.0;
            state.route_len = 0.0;
            state.route_stops = 0;
            Ok(0.0)
        }
        Phase::ExtendRoute => {
            if action == state.active_depot {
                if state.route_stops == 0 || route_close_stranded(state, instance) {
                    return Err(PolicyError::MaskedAction { trajectory, action });
                }
                let leg = if v.open_routes {
                    0.0
                } else {
                    instance.dist(state.current, state.active_depot)
                };
                state.total_distance += leg;
                state.current = state.active_depot;
                state.phase = Phase::SelectDepot;
                state.route_stops = 0;
                if state.remaining == 0 {
                    state.done = true;
                }
                return Ok(leg);
            }
            if action < instance.num_depots() || !customer_feasible(state, action, instance) {
                return Err(PolicyError::MaskedAction { trajectory, action });
            }
            let node = instance.node(action);
            let leg = instance.dist(state.current, action);
            if node.is_backhaul {
                state.end_load += node.demand;
                state.peak_load = state.peak_load.max(state.end_load);
                state.remaining_backhaul_demand -= node.demand;
            } else {
                state.peak_load += node.demand;
                state.remaining_linehauls -= 1;
            }
            if v.time_windows {
                let arrival = state.clock + leg;
                let start = arrival.max(node.tw_early);
                state.clock = start + node.service_time;
            } else {
                state.clock += leg;
            }
            state.route_len += leg;
            state.total_distance += leg;
            state.visited[action] = true;
            state.remaining -= 1;
            state.current = action;
            state.route_stops += 1;
            Ok(leg)
        }
    }
}
