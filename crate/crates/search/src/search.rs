use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use vrp_core::{check_feasibility, evaluate_route};

use crate::config::LsConfig;
use crate::error::SearchError;
use crate::neighbors::NeighborLists;
use crate::worker::SearchState;

#[derive(Clone, Copy, PartialEq)]
enum NodeOp {
    Exchange,
    MoveTwoReversed,
    TwoOpt,
}

#[derive(Clone, Copy, PartialEq)]
enum RouteOp {
    RelocateStar,
    SwapStar,
}

/// The improvement sweep: node-level operators over granular node pairs
/// until a full pass yields nothing, then route-level operators over all
/// route pairs until quiescent, repeating both phases until neither can
/// improve. Operator order is reshuffled per call; improving moves are
/// applied the moment they are found. Under small penalties the result may
/// be infeasible.
pub fn search(
    state: &mut SearchState,
    neighbors: &NeighborLists,
    cfg: &LsConfig,
    rng: &mut ChaCha8Rng,
) {
    let mut node_ops = [NodeOp::Exchange, NodeOp::MoveTwoReversed, NodeOp::TwoOpt];
    node_ops.shuffle(rng);
    let mut route_ops = [RouteOp::RelocateStar, RouteOp::SwapStar];
    route_ops.shuffle(rng);
    let customer_ids: Vec<usize> = state.instance().customer_ids().collect();

    loop {
        let mut any_phase_improved = false;
        loop {
            let mut improved = false;
            for &a in &customer_ids {
                for &b in neighbors.of(a) {
                    for op in node_ops {
                        match op {
                            NodeOp::Exchange => {
                                for x in 1..=cfg.x_max {
                                    for m in 0..=x {
                                        if state.try_exchange(a, b, x, m).applied() {
                                            improved = true;
                                        }
                                    }
                                }
                            }
                            NodeOp::MoveTwoReversed => {
                                if state.try_move_two_reversed(a, b).applied() {
                                    improved = true;
                                }
                            }
                            NodeOp::TwoOpt => {
                                if state.try_two_opt(a, b).applied() {
                                    improved = true;
                                }
                            }
                        }
                    }
                }
            }
            if !improved {
                break;
            }
            any_phase_improved = true;
        }

        loop {
            let mut improved = false;
            state.ensure_spare_routes();
            let count = state.route_count();
            for i in 0..count {
                if state.route_len(i) == 0 {
                    continue;
                }
                for j in (i + 1)..count {
                    for op in route_ops {
                        let applied = match op {
                            // Empty destinations are legal for relocation:
                            // that is how routes split.
                            RouteOp::RelocateStar => state.try_relocate_star(i, j).applied(),
                            RouteOp::SwapStar => {
                                state.route_len(j) > 0 && state.try_swap_star(i, j).applied()
                            }
                        };
                        if applied {
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                break;
            }
            any_phase_improved = true;
        }

        if !any_phase_improved {
            break;
        }
    }
}

fn route_violation_score(state: &SearchState, r: usize) -> f64 {
    let cost = state.route_cost(r);
    let mut score = cost.excess_load + cost.tw_violation + cost.duration_excess;
    if state.instance().variant().backhaul {
        if let Some(&first) = state.route_customers(r).first() {
            if state.instance().node(first).is_backhaul {
                score += 1e9;
            }
        }
    }
    score
}

/// Restores feasibility: an operator sweep under very large penalties,
/// then, if violations survive, targeted ejection of offending customers
/// and least-cost feasible reinsertion (opening fresh routes as needed).
/// Returns with the search-regime penalties active again.
pub fn fix(
    state: &mut SearchState,
    neighbors: &NeighborLists,
    cfg: &LsConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(), SearchError> {
    state.set_penalties(cfg.fix_weights);
    search(state, neighbors, cfg, rng);

    let solution = state.solution();
    if !check_feasibility(&solution, state.instance()).feasible {
        eject_and_reinsert(state)?;
    }
    state.set_penalties(cfg.search_weights);
    debug_assert!(check_feasibility(&state.solution(), state.instance()).feasible);
    Ok(())
}

fn eject_and_reinsert(state: &mut SearchState) -> Result<(), SearchError> {
    let instance = state.instance();
    let mut ejected: Vec<usize> = Vec::new();

    for r in 0..state.route_count() {
        while route_violation_score(state, r) > 0.0 {
            // Remove the customer whose departure shrinks the violation
            // most, breaking ties by cheaper remaining distance.
            let customers = state.route_customers(r).to_vec();
            let mut best: Option<(f64, f64, usize)> = None;
            for (pos, _) in customers.iter().enumerate() {
                let mut cand = customers.clone();
                let gone = cand.remove(pos);
                let cost = evaluate_route(instance, state.route_depot(r), &cand);
                let mut score = cost.excess_load + cost.tw_violation + cost.duration_excess;
                if instance.variant().backhaul {
                    if let Some(&first) = cand.first() {
                        if instance.node(first).is_backhaul {
                            score += 1e9;
                        }
                    }
                }
                let key = (score, cost.distance);
                if best
                    .as_ref()
                    .map(|(s, d, _)| key < (*s, *d))
                    .unwrap_or(true)
                {
                    best = Some((score, cost.distance, gone));
                }
            }
            let (_, _, victim) = best.expect("violated route has customers");
            let mut cand = state.route_customers(r).to_vec();
            let pos = cand.iter().position(|&c| c == victim).unwrap();
            cand.remove(pos);
            state.replace_route(r, cand);
            ejected.push(victim);
        }
    }

    // Deterministic reinsertion order: big demands first.
    ejected.sort_by(|&a, &b| {
        instance.node(b).demand.partial_cmp(&instance.node(a).demand).unwrap().then(a.cmp(&b))
    });
    for customer in ejected {
        reinsert_feasible(state, customer)?;
    }
    Ok(())
}

fn clean_and_legal(state: &SearchState, r_depot: usize, cand: &[usize]) -> Option<f64> {
    let instance = state.instance();
    let cost = evaluate_route(instance, r_depot, cand);
    if !cost.is_clean() {
        return None;
    }
    if instance.variant().backhaul {
        if let Some(&first) = cand.first() {
            if instance.node(first).is_backhaul {
                return None;
            }
        }
    }
    Some(cost.distance)
}

fn reinsert_feasible(state: &mut SearchState, customer: usize) -> Result<(), SearchError> {
    let instance = state.instance();
    let mut best: Option<(f64, usize, Vec<usize>)> = None;
    for r in 0..state.route_count() {
        let current = state.route_customers(r);
        let base = state.route_cost(r).distance;
        for q in 0..=current.len() {
            let mut cand = current.to_vec();
            cand.insert(q, customer);
            if let Some(dist) = clean_and_legal(state, state.route_depot(r), &cand) {
                let delta = dist - base;
                if best.as_ref().map(|(d, _, _)| delta < *d).unwrap_or(true) {
                    best = Some((delta, r, cand));
                }
            }
        }
    }
    if let Some((_, r, cand)) = best {
        state.replace_route(r, cand);
        return Ok(());
    }
    // Open a fresh route from the cheapest depot that can serve the
    // customer on its own.
    let mut depots: Vec<usize> = (0..instance.num_depots()).collect();
    depots.sort_by(|&a, &b| {
        instance
            .dist(a, customer)
            .partial_cmp(&instance.dist(b, customer))
            .unwrap()
    });
    for depot in depots {
        let cand = vec![customer];
        if clean_and_legal(state, depot, &cand).is_some() {
            state.push_route(depot, cand);
            return Ok(());
        }
    }
    Err(SearchError::HardInfeasible(customer))
}
