use vrp_core::{Instance, Route, Solution};
use vrp_search::place_leftover_backhauls;

use crate::SolveError;

/// Nearest-neighbor construction: routes are built sequentially, always
/// extending to the closest unvisited customer the vehicle can still fit;
/// when nothing fits, a new route opens at the depot nearest to the
/// remaining customers. Only capacity is consulted — schedule or length
/// violations are left for the refinement phase to repair.
pub fn greedy_initial(instance: &Instance) -> Result<Solution, SolveError> {
    if instance.variant().tsp_mode {
        let mut unvisited: Vec<usize> = instance.customer_ids().collect();
        let mut tour = Vec::with_capacity(unvisited.len());
        let mut at = 0usize;
        while !unvisited.is_empty() {
            let (k, _) = unvisited
                .iter()
                .enumerate()
                .min_by(|(_, &a), (_, &b)| {
                    instance.dist(at, a).partial_cmp(&instance.dist(at, b)).unwrap()
                })
                .unwrap();
            at = unvisited.swap_remove(k);
            tour.push(at);
        }
        return Ok(Solution::new(vec![Route::new(0, tour)]));
    }

    let mut unvisited: Vec<usize> = instance.customer_ids().collect();
    // Hard check: every linehaul must fit an empty vehicle.
    if let Some(&c) = unvisited
        .iter()
        .find(|&&c| !instance.node(c).is_backhaul && instance.node(c).demand > instance.capacity())
    {
        return Err(vrp_search::SearchError::HardInfeasible(c).into());
    }

    let nearest_depot = |unvisited: &[usize]| -> usize {
        let mut best = (f64::INFINITY, 0usize);
        for d in 0..instance.num_depots() {
            for &c in unvisited {
                let dist = instance.dist(d, c);
                if dist < best.0 {
                    best = (dist, d);
                }
            }
        }
        best.1
    };

    let mut routes: Vec<Route> = Vec::new();
    let mut depot = nearest_depot(&unvisited);
    let mut current: Vec<usize> = Vec::new();
    let mut end = 0.0f64;
    let mut peak = 0.0f64;
    let mut at = depot;

    while !unvisited.is_empty() {
        let fits = |c: usize| {
            let node = instance.node(c);
            if node.is_backhaul {
                !current.is_empty() && end + node.demand <= instance.capacity()
            } else {
                peak + node.demand <= instance.capacity()
            }
        };
        let next = unvisited
            .iter()
            .enumerate()
            .filter(|(_, &c)| fits(c))
            .min_by(|(_, &a), (_, &b)| {
                instance.dist(at, a).partial_cmp(&instance.dist(at, b)).unwrap()
            })
            .map(|(k, _)| k);
        match next {
            Some(k) => {
                let c = unvisited.swap_remove(k);
                let node = instance.node(c);
                if node.is_backhaul {
                    end += node.demand;
                    peak = peak.max(end);
                } else {
                    peak += node.demand;
                }
                current.push(c);
                at = c;
            }
            None => {
                if current.is_empty() {
                    break; // only unplaceable backhauls remain
                }
                routes.push(Route::new(depot, std::mem::take(&mut current)));
                depot = nearest_depot(&unvisited);
                at = depot;
                end = 0.0;
                peak = 0.0;
            }
        }
    }
    if !current.is_empty() {
        routes.push(Route::new(depot, current));
    }
    if !unvisited.is_empty() {
        place_leftover_backhauls(instance, &mut routes, unvisited)?;
    }
    Ok(Solution::new(routes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use vrp_core::{evaluate_solution, Node, PenaltyWeights, VariantFlags};
    use vrp_io::{generate_instance, GenConfig};

    #[test]
    fn single_customer_gets_a_direct_route() {
        let inst = generate_instance(&GenConfig::new(VariantFlags::cvrp(), 1, 1, 11)).unwrap();
        let sol = greedy_initial(&inst).unwrap();
        assert_eq!(sol.routes.len(), 1);
        assert_eq!(sol.routes[0].customers, vec![1]);
    }

    #[test]
    fn collinear_customers_visited_in_distance_order() {
        let nodes = vec![
            Node::depot(0, 0.0, 0.0),
            Node::customer(1, 3.0, 0.0, 1.0),
            Node::customer(2, 1.0, 0.0, 1.0),
            Node::customer(3, 2.0, 0.0, 1.0),
        ];
        let inst = vrp_core::Instance::new(nodes, 1, 50.0, None, VariantFlags::cvrp()).unwrap();
        let sol = greedy_initial(&inst).unwrap();
        assert_eq!(sol.routes.len(), 1);
        assert_eq!(sol.routes[0].customers, vec![2, 3, 1]);
    }

    #[test]
    fn output_is_capacity_feasible_on_fuzzed_instances() {
        let variants = [
            VariantFlags::cvrp(),
            VariantFlags::mdvrp(),
            VariantFlags {
                backhaul: true,
                ..VariantFlags::default()
            },
        ];
        let mut count = 0;
        for variant in variants {
            let m = if variant.multi_depot { 3 } else { 1 };
            for seed in 0..334 {
                let inst =
                    generate_instance(&GenConfig::new(variant, 20, m, seed)).unwrap();
                let sol = greedy_initial(&inst).unwrap();
                let cb = evaluate_solution(&sol, &inst, &PenaltyWeights::uniform(1.0)).unwrap();
                assert_eq!(cb.excess_load, 0.0);
                count += 1;
            }
        }
        assert!(count >= 1000);
    }
}
