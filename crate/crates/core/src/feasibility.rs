use crate::error::StructuralIssue;
use crate::eval::{evaluate_route, structural_issues, RouteCost};
use crate::types::{Instance, Solution};

/// Per-route findings from a feasibility check.
#[derive(Debug, Clone)]
pub struct RouteReport {
    pub route_index: usize,
    pub cost: RouteCost,
    /// Only meaningful when the instance's backhaul flag is active.
    pub starts_with_backhaul: bool,
}

impl RouteReport {
    pub fn is_feasible(&self) -> bool {
        self.cost.is_clean() && !self.starts_with_backhaul
    }
}

/// Verdict plus the evidence behind it. Infeasibility is a verdict here,
/// never an error.
#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub structural: Vec<StructuralIssue>,
    pub routes: Vec<RouteReport>,
}

/// Checks a solution for full feasibility: structural validity, zero
/// violation magnitudes on every route, and (for backhaul instances) the
/// rule that every route begins with a linehaul customer.
pub fn check_feasibility(solution: &Solution, instance: &Instance) -> FeasibilityReport {
    let structural = structural_issues(solution, instance);
    let backhaul = instance.variant().backhaul;
    let mut routes = Vec::with_capacity(solution.routes.len());
    let mut all_clean = true;
    for (idx, route) in solution.routes.iter().enumerate() {
        // Skip per-route evaluation only if indices are unusable.
        let usable = route.depot < instance.num_depots()
            && route
                .customers
                .iter()
                .all(|&c| c >= instance.num_depots() && c < instance.num_nodes());
        if !usable {
            all_clean = false;
            continue;
        }
        let cost = evaluate_route(instance, route.depot, &route.customers);
        let starts_with_backhaul = backhaul
            && route
                .customers
                .first()
                .map(|&c| instance.node(c).is_backhaul)
                .unwrap_or(false);
        let report = RouteReport {
            route_index: idx,
            cost,
            starts_with_backhaul,
        };
        all_clean &= report.is_feasible();
        routes.push(report);
    }
    FeasibilityReport {
        feasible: structural.is_empty() && all_clean,
        structural,
        routes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Node, Route, VariantFlags};
    use crate::Instance;

    #[test]
    fn tsp_tour_visiting_all_nodes_is_feasible() {
        let nodes = vec![
            Node::depot(0, 0.0, 0.0),
            Node::customer(1, 1.0, 0.0, 0.0),
            Node::customer(2, 1.0, 1.0, 0.0),
        ];
        let inst = Instance::new(nodes, 1, 1.0, None, VariantFlags::tsp()).unwrap();
        let sol = Solution::new(vec![Route::new(0, vec![1, 2])]);
        assert!(check_feasibility(&sol, &inst).feasible);
    }

    #[test]
    fn backhaul_first_route_is_infeasible() {
        let mut b = Node::customer(1, 1.0, 0.0, 2.0);
        b.is_backhaul = true;
        let nodes = vec![Node::depot(0, 0.0, 0.0), b, Node::customer(2, 2.0, 0.0, 3.0)];
        let inst = Instance::new(
            nodes,
            1,
            50.0,
            None,
            VariantFlags {
                backhaul: true,
                ..VariantFlags::default()
            },
        )
        .unwrap();
        let sol = Solution::new(vec![Route::new(0, vec![1, 2])]);
        let report = check_feasibility(&sol, &inst);
        assert!(!report.feasible);
        assert!(report.routes[0].starts_with_backhaul);

        let ok = Solution::new(vec![Route::new(0, vec![2, 1])]);
        assert!(check_feasibility(&ok, &inst).feasible);
    }
}
