use crate::error::{CoreError, StructuralIssue};
use crate::types::{CostBreakdown, Instance, PenaltyWeights, Route, Solution};

/// Computes the full symmetric Euclidean distance matrix, row-major.
pub fn build_distance_matrix(coords: &[(f64, f64)]) -> Result<Vec<f64>, CoreError> {
    if coords.is_empty() {
        return Err(CoreError::InvalidInstance("no coordinates".into()));
    }
    for (i, &(x, y)) in coords.iter().enumerate() {
        if !x.is_finite() || !y.is_finite() {
            return Err(CoreError::NonFiniteCoordinate(i));
        }
    }
    let g = coords.len();
    let mut dist = vec![0.0; g * g];
    for i in 0..g {
        for j in (i + 1)..g {
            let dx = coords[i].0 - coords[j].0;
            let dy = coords[i].1 - coords[j].1;
            let d = (dx * dx + dy * dy).sqrt();
            dist[i * g + j] = d;
            dist[j * g + i] = d;
        }
    }
    Ok(dist)
}

/// Travel distance of a single route.
///
/// Closed routes sum depot -> c1 -> ... -> ck -> depot. Under `open_routes`
/// the final return leg is omitted. In TSP mode the route is a cyclic tour
/// over the anchor node and all listed stops.
pub fn route_distance(route: &Route, instance: &Instance) -> f64 {
    let mut total = 0.0;
    let mut prev = route.depot;
    for &c in &route.customers {
        total += instance.dist(prev, c);
        prev = c;
    }
    let v = instance.variant();
    if v.tsp_mode {
        total += instance.dist(prev, route.depot);
    } else if !route.customers.is_empty() && !v.open_routes {
        total += instance.dist(prev, route.depot);
    }
    total
}

/// Per-route cost components, before penalty weighting.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RouteCost {
    pub distance: f64,
    pub excess_load: f64,
    pub tw_violation: f64,
    pub duration_excess: f64,
}

impl RouteCost {
    pub fn penalized(&self, w: &PenaltyWeights) -> f64 {
        self.distance
            + w.capacity * self.excess_load
            + w.time_window * self.tw_violation
            + w.duration * self.duration_excess
    }

    pub fn is_clean(&self) -> bool {
        self.excess_load == 0.0 && self.tw_violation == 0.0 && self.duration_excess == 0.0
    }

    pub fn add(&mut self, other: &RouteCost) {
        self.distance += other.distance;
        self.excess_load += other.excess_load;
        self.tw_violation += other.tw_violation;
        self.duration_excess += other.duration_excess;
    }
}

/// Evaluates one route in a single pass: distance, capacity excess under the
/// mixed-backhaul load profile, time-window violations and duration excess.
///
/// The load profile models a vehicle departing with all linehaul goods of
/// the route on board: deliveries decrease the load, pickups increase it.
/// Appending a linehaul customer therefore raises the load at every earlier
/// point of the route, which the running peak accounts for. Arriving before
/// a window opens incurs waiting at no cost; the violation magnitude is how
/// far the service start overruns the window close. When time windows are
/// active and the route is closed, the return to the depot is checked
/// against the depot horizon as a final visit.
pub fn evaluate_route(instance: &Instance, depot: usize, customers: &[usize]) -> RouteCost {
    let v = instance.variant();
    let mut cost = RouteCost::default();

    // Distance.
    let mut length = 0.0;
    let mut prev = depot;
    for &c in customers {
        length += instance.dist(prev, c);
        prev = c;
    }
    if v.tsp_mode || (!customers.is_empty() && !v.open_routes) {
        length += instance.dist(prev, depot);
    }
    cost.distance = length;

    if v.tsp_mode {
        return cost;
    }

    // Load profile: `end` is the load on arrival back at the depot assuming
    // the vehicle departed with exactly the linehaul total; `peak` is the
    // maximum load reached anywhere along the route.
    let mut end = 0.0_f64;
    let mut peak = 0.0_f64;
    for &c in customers {
        let node = instance.node(c);
        if node.is_backhaul {
            end += node.demand;
            peak = peak.max(end);
        } else {
            peak += node.demand;
        }
    }
    cost.excess_load = (peak - instance.capacity()).max(0.0);

    // Schedule.
    if v.time_windows {
        let mut clock = 0.0_f64;
        let mut at = depot;
        let mut violation = 0.0;
        for &c in customers {
            let node = instance.node(c);
            let arrival = clock + instance.dist(at, c);
            let start = arrival.max(node.tw_early);
            violation += (start - node.tw_late).max(0.0);
            clock = start + node.service_time;
            at = c;
        }
        if !customers.is_empty() && !v.open_routes {
            let back = clock + instance.dist(at, depot);
            violation += (back - instance.node(depot).tw_late).max(0.0);
        }
        cost.tw_violation = violation;
    }

    if v.duration_limit {
        if let Some(limit) = instance.route_limit() {
            cost.duration_excess = (length - limit).max(0.0);
        }
    }

    cost
}

/// Checks structural validity: every customer of the instance appears in
/// exactly one route exactly once, all indices in range, depots valid.
pub(crate) fn structural_issues(solution: &Solution, instance: &Instance) -> Vec<StructuralIssue> {
    let g = instance.num_nodes();
    let m = instance.num_depots();
    let mut issues = Vec::new();
    let mut seen = vec![false; g];
    for route in &solution.routes {
        if route.depot >= m {
            issues.push(StructuralIssue::InvalidDepot(route.depot));
        }
        for &c in &route.customers {
            if c >= g {
                issues.push(StructuralIssue::NodeOutOfRange(c));
            } else if c < m {
                issues.push(StructuralIssue::DepotAsCustomer(c));
            } else if seen[c] {
                issues.push(StructuralIssue::DuplicateCustomer(c));
            } else {
                seen[c] = true;
            }
        }
    }
    for c in instance.customer_ids() {
        if !seen[c] {
            issues.push(StructuralIssue::MissingCustomer(c));
        }
    }
    if instance.variant().tsp_mode {
        let nonempty = solution.routes.iter().filter(|r| !r.is_empty()).count();
        if nonempty > 1 {
            issues.push(StructuralIssue::MultipleTspRoutes(nonempty));
        }
    }
    issues
}

/// Exact evaluation of a solution under penalty weights.
///
/// Returns an error if the solution is not a partition of the customers;
/// constraint violations are reported in the breakdown, not as errors.
pub fn evaluate_solution(
    solution: &Solution,
    instance: &Instance,
    weights: &PenaltyWeights,
) -> Result<CostBreakdown, CoreError> {
    if let Some(issue) = structural_issues(solution, instance).into_iter().next() {
        return Err(CoreError::Structural(issue));
    }
    let mut total = RouteCost::default();
    for route in &solution.routes {
        let rc = evaluate_route(instance, route.depot, &route.customers);
        total.add(&rc);
    }
    Ok(CostBreakdown {
        distance: total.distance,
        excess_load: total.excess_load,
        tw_violation: total.tw_violation,
        duration_excess: total.duration_excess,
        penalized: total.penalized(weights),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Node, VariantFlags};

    fn two_node_instance(variant: VariantFlags) -> Instance {
        let nodes = vec![
            Node::depot(0, 0.0, 0.0),
            Node::customer(1, 0.3, 0.4, 1.0),
        ];
        Instance::new(nodes, 1, 50.0, None, variant).unwrap()
    }

    #[test]
    fn distance_matrix_three_four_five() {
        let d = build_distance_matrix(&[(0.0, 0.0), (3.0, 4.0)]).unwrap();
        assert_eq!(d, vec![0.0, 5.0, 5.0, 0.0]);
    }

    #[test]
    fn distance_matrix_single_node() {
        let d = build_distance_matrix(&[(0.5, 0.5)]).unwrap();
        assert_eq!(d, vec![0.0]);
    }

    #[test]
    fn distance_matrix_rejects_non_finite() {
        let err = build_distance_matrix(&[(0.0, 0.0), (f64::NAN, 1.0)]).unwrap_err();
        assert!(matches!(err, CoreError::NonFiniteCoordinate(1)));
    }

    #[test]
    fn route_distance_closed_and_open() {
        let closed = two_node_instance(VariantFlags::cvrp());
        let route = Route::new(0, vec![1]);
        assert!((route_distance(&route, &closed) - 1.0).abs() < 1e-12);

        let open = two_node_instance(VariantFlags {
            open_routes: true,
            ..VariantFlags::default()
        });
        assert!((route_distance(&route, &open) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn feasible_solution_penalized_equals_distance() {
        let inst = two_node_instance(VariantFlags::cvrp());
        let sol = Solution::new(vec![Route::new(0, vec![1])]);
        let cb = evaluate_solution(&sol, &inst, &PenaltyWeights::uniform(10.0)).unwrap();
        assert_eq!(cb.penalized, cb.distance);
    }

    #[test]
    fn capacity_excess_is_weighted() {
        let nodes = vec![
            Node::depot(0, 0.0, 0.0),
            Node::customer(1, 1.0, 0.0, 55.0),
        ];
        let inst = Instance::new(nodes, 1, 50.0, None, VariantFlags::cvrp()).unwrap();
        let sol = Solution::new(vec![Route::new(0, vec![1])]);
        let w = PenaltyWeights {
            capacity: 0.1,
            time_window: 0.0,
            duration: 0.0,
        };
        let cb = evaluate_solution(&sol, &inst, &w).unwrap();
        assert!((cb.excess_load - 5.0).abs() < 1e-12);
        assert!((cb.penalized - (cb.distance + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn missing_customer_is_structural_error() {
        let inst = two_node_instance(VariantFlags::cvrp());
        let sol = Solution::new(vec![]);
        let err = evaluate_solution(&sol, &inst, &PenaltyWeights::ZERO).unwrap_err();
        assert!(matches!(
            err,
            CoreError::Structural(StructuralIssue::MissingCustomer(1))
        ));
    }

    #[test]
    fn backhaul_peak_accounts_for_later_linehauls() {
        // Route [backhaul 4, linehaul 3]: the vehicle departs carrying the
        // linehaul goods, so the load after the pickup is 7.
        let mut b = Node::customer(1, 1.0, 0.0, 4.0);
        b.is_backhaul = true;
        let l = Node::customer(2, 2.0, 0.0, 3.0);
        let nodes = vec![Node::depot(0, 0.0, 0.0), b, l];
        let inst = Instance::new(
            nodes,
            1,
            6.0,
            None,
            VariantFlags {
                backhaul: true,
                ..VariantFlags::default()
            },
        )
        .unwrap();
        let rc = evaluate_route(&inst, 0, &[1, 2]);
        assert!((rc.excess_load - 1.0).abs() < 1e-12);
    }
}
