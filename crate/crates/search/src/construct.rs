use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use vrp_core::{Instance, Route, Solution};

use crate::error::SearchError;

/// Running capacity profile of a route under construction: `end` is the
/// on-board load after the last stop, `peak` the maximum anywhere.
#[derive(Clone, Copy, Default)]
struct LoadProfile {
    end: f64,
    peak: f64,
}

impl LoadProfile {
    fn fits(&self, instance: &Instance, customer: usize, route_empty: bool) -> bool {
        let node = instance.node(customer);
        if node.is_backhaul {
            !route_empty && self.end + node.demand <= instance.capacity()
        } else {
            self.peak + node.demand <= instance.capacity()
        }
    }

    fn take(&mut self, instance: &Instance, customer: usize) {
        let node = instance.node(customer);
        if node.is_backhaul {
            self.end += node.demand;
            self.peak = self.peak.max(self.end);
        } else {
            self.peak += node.demand;
        }
    }
}

/// Capacity peak of a complete candidate route.
fn capacity_peak(instance: &Instance, customers: &[usize]) -> f64 {
    let mut p = LoadProfile::default();
    for &c in customers {
        p.take(instance, c);
    }
    p.peak
}

/// Backhaul customers that could not be placed sequentially are slotted
/// into the cheapest capacity-feasible position of the existing routes.
pub fn place_leftover_backhauls(
    instance: &Instance,
    routes: &mut Vec<Route>,
    mut leftover: Vec<usize>,
) -> Result<(), SearchError> {
    leftover.sort_by(|&a, &b| {
        instance
            .node(b)
            .demand
            .partial_cmp(&instance.node(a).demand)
            .unwrap()
            .then(a.cmp(&b))
    });
    for customer in leftover {
        let mut best: Option<(f64, usize, usize)> = None;
        for (r, route) in routes.iter().enumerate() {
            for q in 1..=route.customers.len() {
                let mut cand = route.customers.clone();
                cand.insert(q, customer);
                if capacity_peak(instance, &cand) > instance.capacity() {
                    continue;
                }
                let prev = cand[q - 1];
                let next = if q + 1 < cand.len() {
                    cand[q + 1]
                } else {
                    route.depot
                };
                let delta = instance.dist(prev, customer) + instance.dist(customer, next)
                    - instance.dist(prev, next);
                if best.as_ref().map(|(d, _, _)| delta < *d).unwrap_or(true) {
                    best = Some((delta, r, q));
                }
            }
        }
        match best {
            Some((_, r, q)) => routes[r].customers.insert(q, customer),
            None => return Err(SearchError::HardInfeasible(customer)),
        }
    }
    Ok(())
}

/// Random sequential construction: appends uniformly chosen unvisited
/// customers to the current route while capacity (the only constraint
/// consulted) allows, opening a new route from a random depot when nothing
/// fits. Capacity-feasible by construction; other constraints are left to
/// the penalty sweeps.
pub fn make_random(instance: &Instance, rng: &mut ChaCha8Rng) -> Result<Solution, SearchError> {
    if instance.variant().tsp_mode {
        let mut customers: Vec<usize> = instance.customer_ids().collect();
        customers.shuffle(rng);
        return Ok(Solution::new(vec![Route::new(0, customers)]));
    }
    let mut unvisited: Vec<usize> = instance.customer_ids().collect();
    let mut routes: Vec<Route> = Vec::new();
    let pick_depot = |rng: &mut ChaCha8Rng| {
        if instance.variant().multi_depot {
            rng.random_range(0..instance.num_depots())
        } else {
            0
        }
    };
    let mut depot = pick_depot(rng);
    let mut current: Vec<usize> = Vec::new();
    let mut profile = LoadProfile::default();

    while !unvisited.is_empty() {
        let fits: Vec<usize> = (0..unvisited.len())
            .filter(|&i| profile.fits(instance, unvisited[i], current.is_empty()))
            .collect();
        if fits.is_empty() {
            if current.is_empty() {
                break; // only route-opening-incompatible customers remain
            }
            routes.push(Route::new(depot, std::mem::take(&mut current)));
            depot = pick_depot(rng);
            profile = LoadProfile::default();
            continue;
        }
        let choice = unvisited.swap_remove(fits[rng.random_range(0..fits.len())]);
        profile.take(instance, choice);
        current.push(choice);
    }
    if !current.is_empty() {
        routes.push(Route::new(depot, current));
    }
    if !unvisited.is_empty() {
        // Any linehaul left over is individually unservable.
        if let Some(&c) = unvisited.iter().find(|&&c| !instance.node(c).is_backhaul) {
            return Err(SearchError::HardInfeasible(c));
        }
        place_leftover_backhauls(instance, &mut routes, unvisited)?;
    }
    Ok(Solution::new(routes))
}
