use std::collections::HashSet;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use vrp_core::{evaluate_route, evaluate_solution, Instance, PenaltyWeights, Route, Solution};

use crate::error::SearchError;

fn customer_set(routes: &[Route], picked: &[usize]) -> HashSet<usize> {
    picked
        .iter()
        .flat_map(|&r| routes[r].customers.iter().copied())
        .collect()
}

/// Least-penalized-cost insertion of one customer into existing routes or,
/// when cheaper or necessary, a fresh single-customer route.
fn least_cost_insert(
    instance: &Instance,
    pen: &PenaltyWeights,
    routes: &mut Vec<Route>,
    customer: usize,
) {
    let backhaul_rule = instance.variant().backhaul && instance.node(customer).is_backhaul;
    let mut best: Option<(f64, usize, usize)> = None;
    for (r, route) in routes.iter().enumerate() {
        let base = evaluate_route(instance, route.depot, &route.customers).penalized(pen);
        let start = if backhaul_rule { 1 } else { 0 };
        for q in start..=route.customers.len() {
            let mut cand = route.customers.clone();
            cand.insert(q, customer);
            let delta = evaluate_route(instance, route.depot, &cand).penalized(pen) - base;
            if best.as_ref().map(|(d, _, _)| delta < *d).unwrap_or(true) {
                best = Some((delta, r, q));
            }
        }
    }
    // A fresh route is an option too, unless the customer is a backhaul
    // (those may never lead a route).
    if !backhaul_rule {
        for depot in 0..instance.num_depots() {
            let delta = evaluate_route(instance, depot, &[customer]).penalized(pen);
            if best.as_ref().map(|(d, _, _)| delta < *d).unwrap_or(true) {
                best = Some((delta, usize::MAX, depot));
            }
        }
    }
    match best {
        Some((_, r, q)) if r != usize::MAX => routes[r].customers.insert(q, customer),
        Some((_, _, depot)) => routes.push(Route::new(depot, vec![customer])),
        None => unreachable!("insertion always has a candidate"),
    }
}

/// Selective route exchange: both offspring start as copies of the first
/// parent; a random route subset of each parent is exchanged, duplicates
/// are stripped, and customers left unserved re-enter by least-cost
/// insertion. Returns `(offspring_keeping_B_routes, offspring_restricted)`.
pub fn srex_offspring_pair(
    parent_a: &Solution,
    parent_b: &Solution,
    instance: &Instance,
    pen: &PenaltyWeights,
    rng: &mut ChaCha8Rng,
) -> Result<(Solution, Solution), SearchError> {
    let a_routes: Vec<Route> = parent_a
        .routes
        .iter()
        .filter(|r| !r.customers.is_empty())
        .cloned()
        .collect();
    let b_routes: Vec<Route> = parent_b
        .routes
        .iter()
        .filter(|r| !r.customers.is_empty())
        .cloned()
        .collect();
    if a_routes.is_empty() || b_routes.is_empty() {
        return Err(SearchError::MismatchedParents);
    }
    let half = |n: usize| n.div_ceil(2);
    let ka = rng.random_range(1..=half(a_routes.len()));
    let kb = rng.random_range(1..=half(b_routes.len()));
    let sa: Vec<usize> = rand::seq::index::sample(rng, a_routes.len(), ka).into_vec();
    let sb: Vec<usize> = rand::seq::index::sample(rng, b_routes.len(), kb).into_vec();
    let sa_customers = customer_set(&a_routes, &sa);
    let sb_customers = customer_set(&b_routes, &sb);

    let keep_a: Vec<Route> = a_routes
        .iter()
        .enumerate()
        .filter(|(i, _)| !sa.contains(i))
        .map(|(_, r)| r.clone())
        .collect();

    // First offspring inherits the S_B routes intact.
    let mut os1: Vec<Route> = keep_a
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.customers
                .retain(|c| !(sb_customers.contains(c) && !sa_customers.contains(c)));
            r
        })
        .collect();
    os1.extend(sb.iter().map(|&i| b_routes[i].clone()));

    // Second offspring takes only the S_B structure restricted to removed
    // customers.
    let mut os2: Vec<Route> = keep_a;
    os2.extend(sb.iter().map(|&i| {
        let mut r = b_routes[i].clone();
        r.customers.retain(|c| sa_customers.contains(c));
        r
    }));

    // Both offspring now miss exactly the customers of S_A \ S_B.
    let mut unserved: Vec<usize> = sa_customers.difference(&sb_customers).copied().collect();
    unserved.sort_unstable();
    for offspring in [&mut os1, &mut os2] {
        offspring.retain(|r| !r.customers.is_empty());
        for &c in &unserved {
            least_cost_insert(instance, pen, offspring, c);
        }
    }
    Ok((Solution::new(os1), Solution::new(os2)))
}

/// Runs the route exchange and keeps the offspring with the better
/// penalized cost.
pub fn srex_crossover(
    parent_a: &Solution,
    parent_b: &Solution,
    instance: &Instance,
    pen: &PenaltyWeights,
    rng: &mut ChaCha8Rng,
) -> Result<Solution, SearchError> {
    let (os1, os2) = srex_offspring_pair(parent_a, parent_b, instance, pen, rng)?;
    let c1 = evaluate_solution(&os1, instance, pen)?.penalized;
    let c2 = evaluate_solution(&os2, instance, pen)?.penalized;
    Ok(if c1 <= c2 { os1 } else { os2 })
}

/// Order crossover for single tours: a random cut of the first parent is
/// copied in place and the remaining positions fill with the second
/// parent's nodes in their cyclic order starting after the cut.
pub fn ox_crossover(
    parent_a: &Solution,
    parent_b: &Solution,
    rng: &mut ChaCha8Rng,
) -> Result<Solution, SearchError> {
    let tour = |p: &Solution| -> Option<Vec<usize>> {
        let route = p.routes.iter().find(|r| !r.customers.is_empty())?;
        let mut seq = Vec::with_capacity(route.customers.len() + 1);
        seq.push(route.depot);
        seq.extend_from_slice(&route.customers);
        Some(seq)
    };
    let a = tour(parent_a).ok_or(SearchError::MismatchedParents)?;
    let b = tour(parent_b).ok_or(SearchError::MismatchedParents)?;
    if a.len() != b.len() {
        return Err(SearchError::MismatchedParents);
    }
    let set_a: HashSet<usize> = a.iter().copied().collect();
    if b.iter().any(|n| !set_a.contains(n)) {
        return Err(SearchError::MismatchedParents);
    }
    let g = a.len();
    let c1 = rng.random_range(0..g);
    let c2 = rng.random_range(0..=g - c1) + c1; // segment [c1, c2)
    let seq = ox_fill(&a, &b, c1, c2);
    // Rotate the anchor back to the front.
    let pos = seq.iter().position(|&n| n == 0).unwrap();
    let mut customers = Vec::with_capacity(g - 1);
    customers.extend_from_slice(&seq[pos + 1..]);
    customers.extend_from_slice(&seq[..pos]);
    Ok(Solution::new(vec![Route::new(0, customers)]))
}

/// The order-crossover fill rule: keep `a[c1..c2)` in place, then fill the
/// remaining positions cyclically from `c2` with `b`'s nodes in their
/// cyclic order starting at `c2`, skipping nodes already present.
pub(crate) fn ox_fill(a: &[usize], b: &[usize], c1: usize, c2: usize) -> Vec<usize> {
    let g = a.len();
    let mut child: Vec<Option<usize>> = vec![None; g];
    let mut used: HashSet<usize> = HashSet::new();
    for i in c1..c2 {
        child[i] = Some(a[i]);
        used.insert(a[i]);
    }
    let mut write = c2 % g;
    for k in 0..g {
        let node = b[(c2 + k) % g];
        if used.contains(&node) {
            continue;
        }
        while child[write].is_some() {
            write = (write + 1) % g;
        }
        child[write] = Some(node);
        used.insert(node);
    }
    child.into_iter().map(|n| n.unwrap()).collect()
}
