use vrp_core::{evaluate_route, Instance, PenaltyWeights, Route, RouteCost, Solution};

use crate::error::SearchError;

/// Moves must clear this margin to be accepted; equal-delta moves are
/// rejected so sweeps cannot cycle.
pub const MOVE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MoveResult {
    /// The move improved the penalized cost by `|delta|` and was applied.
    Applied(f64),
    /// Evaluated but not improving.
    Rejected,
    /// The move does not exist for these arguments (segment off the route
    /// end, overlapping segments, missing successor, ...).
    Inapplicable,
}

impl MoveResult {
    pub fn applied(&self) -> bool {
        matches!(self, MoveResult::Applied(_))
    }
}

#[derive(Debug, Clone)]
struct WorkRoute {
    depot: usize,
    customers: Vec<usize>,
    cost: RouteCost,
}

/// A solution under modification: routes with cached cost components and a
/// customer location index. Operators evaluate candidate routes by exact
/// re-evaluation of the affected routes only, so reported deltas always
/// equal the difference of full solution evaluations.
pub struct SearchState<'a> {
    instance: &'a Instance,
    pen: PenaltyWeights,
    routes: Vec<WorkRoute>,
    /// node id -> (route index, position); depots and absent nodes None.
    loc: Vec<Option<(usize, usize)>>,
}

impl<'a> SearchState<'a> {
    pub fn new(
        instance: &'a Instance,
        solution: &Solution,
        pen: PenaltyWeights,
    ) -> Result<Self, SearchError> {
        // Reject structurally invalid input up front.
        vrp_core::evaluate_solution(solution, instance, &pen)?;
        let mut loc = vec![None; instance.num_nodes()];
        let routes: Vec<WorkRoute> = solution
            .routes
            .iter()
            .map(|r| WorkRoute {
                depot: r.depot,
                customers: r.customers.clone(),
                cost: evaluate_route(instance, r.depot, &r.customers),
            })
            .collect();
        for (ri, route) in routes.iter().enumerate() {
            for (pos, &c) in route.customers.iter().enumerate() {
                loc[c] = Some((ri, pos));
            }
        }
        let mut state = SearchState {
            instance,
            pen,
            routes,
            loc,
        };
        state.ensure_spare_routes();
        Ok(state)
    }

    /// Keeps one empty route per depot available as a relocation target,
    /// so sweeps can open routes (splitting an overloaded route needs an
    /// empty destination).
    pub fn ensure_spare_routes(&mut self) {
        for depot in 0..self.instance.num_depots() {
            let has_spare = self
                .routes
                .iter()
                .any(|r| r.depot == depot && r.customers.is_empty());
            if !has_spare {
                self.routes.push(WorkRoute {
                    depot,
                    customers: Vec::new(),
                    cost: RouteCost::default(),
                });
            }
        }
    }

    pub fn instance(&self) -> &'a Instance {
        self.instance
    }

    pub fn penalties(&self) -> PenaltyWeights {
        self.pen
    }

    /// Swaps the active penalty regime; cached route costs stay valid since
    /// they store raw components.
    pub fn set_penalties(&mut self, pen: PenaltyWeights) {
        self.pen = pen;
    }

    pub fn penalized_cost(&self) -> f64 {
        self.routes.iter().map(|r| r.cost.penalized(&self.pen)).sum()
    }

    pub fn total_cost(&self) -> RouteCost {
        let mut total = RouteCost::default();
        for r in &self.routes {
            total.add(&r.cost);
        }
        total
    }

    pub fn route_count(&self) -> usize {
        self.routes.len()
    }

    pub fn route_len(&self, r: usize) -> usize {
        self.routes[r].customers.len()
    }

    pub fn solution(&self) -> Solution {
        let mut sol = Solution::new(
            self.routes
                .iter()
                .map(|r| Route::new(r.depot, r.customers.clone()))
                .collect(),
        );
        sol.normalize();
        sol
    }

    fn locate(&self, customer: usize) -> Option<(usize, usize)> {
        self.loc[customer]
    }

    fn eval(&self, depot: usize, customers: &[usize]) -> RouteCost {
        evaluate_route(self.instance, depot, customers)
    }

    /// Mixed-backhaul instances never accept a candidate route headed by a
    /// backhaul customer; constructors respect the rule, operators preserve
    /// it.
    fn rule_ok(&self, customers: &[usize]) -> bool {
        if !self.instance.variant().backhaul {
            return true;
        }
        customers
            .first()
            .map(|&c| !self.instance.node(c).is_backhaul)
            .unwrap_or(true)
    }

    fn reindex(&mut self, r: usize) {
        for (pos, &c) in self.routes[r].customers.iter().enumerate() {
            self.loc[c] = Some((r, pos));
        }
    }

    fn commit_one(&mut self, r: usize, customers: Vec<usize>, cost: RouteCost) {
        self.routes[r].customers = customers;
        self.routes[r].cost = cost;
        self.reindex(r);
    }

    fn commit_two(
        &mut self,
        ri: usize,
        ci: Vec<usize>,
        cost_i: RouteCost,
        rj: usize,
        cj: Vec<usize>,
        cost_j: RouteCost,
    ) {
        self.routes[ri].customers = ci;
        self.routes[ri].cost = cost_i;
        self.routes[rj].customers = cj;
        self.routes[rj].cost = cost_j;
        self.reindex(ri);
        self.reindex(rj);
    }

    /// Adds a route; used by repair when reinsertion must open one.
    pub(crate) fn push_route(&mut self, depot: usize, customers: Vec<usize>) {
        let cost = self.eval(depot, &customers);
        self.routes.push(WorkRoute {
            depot,
            customers,
            cost,
        });
        self.reindex(self.routes.len() - 1);
    }

    pub(crate) fn route_customers(&self, r: usize) -> &[usize] {
        &self.routes[r].customers
    }

    pub(crate) fn route_cost(&self, r: usize) -> &RouteCost {
        &self.routes[r].cost
    }

    pub(crate) fn route_depot(&self, r: usize) -> usize {
        self.routes[r].depot
    }

    pub(crate) fn replace_route(&mut self, r: usize, customers: Vec<usize>) {
        let cost = self.eval(self.routes[r].depot, &customers);
        for &c in &self.routes[r].customers {
            self.loc[c] = None;
        }
        self.commit_one(r, customers, cost);
    }

    fn try_single_route(&mut self, r: usize, candidate: Vec<usize>) -> MoveResult {
        if !self.rule_ok(&candidate) {
            return MoveResult::Inapplicable;
        }
        let cost = self.eval(self.routes[r].depot, &candidate);
        let delta = cost.penalized(&self.pen) - self.routes[r].cost.penalized(&self.pen);
        if delta < -MOVE_EPS {
            self.commit_one(r, candidate, cost);
            MoveResult::Applied(delta)
        } else {
            MoveResult::Rejected
        }
    }

    fn try_route_pair(
        &mut self,
        ri: usize,
        ci: Vec<usize>,
        rj: usize,
        cj: Vec<usize>,
    ) -> MoveResult {
        if !self.rule_ok(&ci) || !self.rule_ok(&cj) {
            return MoveResult::Inapplicable;
        }
        let cost_i = self.eval(self.routes[ri].depot, &ci);
        let cost_j = self.eval(self.routes[rj].depot, &cj);
        let delta = cost_i.penalized(&self.pen) + cost_j.penalized(&self.pen)
            - self.routes[ri].cost.penalized(&self.pen)
            - self.routes[rj].cost.penalized(&self.pen);
        if delta < -MOVE_EPS {
            self.commit_two(ri, ci, cost_i, rj, cj, cost_j);
            MoveResult::Applied(delta)
        } else {
            MoveResult::Rejected
        }
    }

    /// (X, M)-exchange: swaps the X-customer segment starting at `a` with
    /// the M-customer segment starting at `b` (M = 0 relocates the
    /// X-segment to just before `b`). Segments must not overlap or run off
    /// their route's end.
    pub fn try_exchange(&mut self, a: usize, b: usize, x: usize, m: usize) -> MoveResult {
        debug_assert!(x >= 1 && m <= x);
        let (ra, pa) = match self.locate(a) {
            Some(v) => v,
            None => return MoveResult::Inapplicable,
        };
        let (rb, pb) = match self.locate(b) {
            Some(v) => v,
            None => return MoveResult::Inapplicable,
        };
        let len_a = self.routes[ra].customers.len();
        let len_b = self.routes[rb].customers.len();
        if pa + x > len_a || pb + m > len_b {
            return MoveResult::Inapplicable;
        }
        if ra == rb {
            let (lo, lo_len, hi, hi_len) = if pa <= pb { (pa, x, pb, m) } else { (pb, m, pa, x) };
            if lo + lo_len > hi {
                return MoveResult::Inapplicable; // overlapping segments
            }
            let src = &self.routes[ra].customers;
            let mut cand = Vec::with_capacity(len_a);
            cand.extend_from_slice(&src[..lo]);
            cand.extend_from_slice(&src[hi..hi + hi_len]);
            cand.extend_from_slice(&src[lo + lo_len..hi]);
            cand.extend_from_slice(&src[lo..lo + lo_len]);
            cand.extend_from_slice(&src[hi + hi_len..]);
            self.try_single_route(ra, cand)
        } else {
            let src_a = &self.routes[ra].customers;
            let src_b = &self.routes[rb].customers;
            let mut ca = Vec::with_capacity(len_a - x + m);
            ca.extend_from_slice(&src_a[..pa]);
            ca.extend_from_slice(&src_b[pb..pb + m]);
            ca.extend_from_slice(&src_a[pa + x..]);
            let mut cb = Vec::with_capacity(len_b - m + x);
            cb.extend_from_slice(&src_b[..pb]);
            cb.extend_from_slice(&src_a[pa..pa + x]);
            cb.extend_from_slice(&src_b[pb + m..]);
            self.try_route_pair(ra, ca, rb, cb)
        }
    }

    /// Removes `a` and its successor and reinserts them after `b` in
    /// reversed order.
    pub fn try_move_two_reversed(&mut self, a: usize, b: usize) -> MoveResult {
        let (ra, pa) = match self.locate(a) {
            Some(v) => v,
            None => return MoveResult::Inapplicable,
        };
        if pa + 1 >= self.routes[ra].customers.len() {
            return MoveResult::Inapplicable; // `a` is the route tail
        }
        let succ = self.routes[ra].customers[pa + 1];
        if b == a || b == succ {
            return MoveResult::Inapplicable;
        }
        let (rb, pb) = match self.locate(b) {
            Some(v) => v,
            None => return MoveResult::Inapplicable,
        };
        if rb == ra {
            let src = &self.routes[ra].customers;
            let mut cand: Vec<usize> = Vec::with_capacity(src.len());
            cand.extend(src.iter().copied().filter(|&c| c != a && c != succ));
            let pos_b = cand.iter().position(|&c| c == b).unwrap();
            cand.insert(pos_b + 1, succ);
            cand.insert(pos_b + 2, a);
            self.try_single_route(ra, cand)
        } else {
            let src_a = &self.routes[ra].customers;
            let mut ca = Vec::with_capacity(src_a.len() - 2);
            ca.extend(src_a.iter().copied().filter(|&c| c != a && c != succ));
            let src_b = &self.routes[rb].customers;
            let mut cb = Vec::with_capacity(src_b.len() + 2);
            cb.extend_from_slice(&src_b[..pb + 1]);
            cb.push(succ);
            cb.push(a);
            cb.extend_from_slice(&src_b[pb + 1..]);
            self.try_route_pair(ra, ca, rb, cb)
        }
    }

    /// Intra-route edge reversal: removes the edge entering `a` and the
    /// edge leaving `b` and reverses the path between them, so prefix and
    /// suffix segments are reachable too.
    pub fn try_two_opt(&mut self, a: usize, b: usize) -> MoveResult {
        let (ra, pa) = match self.locate(a) {
            Some(v) => v,
            None => return MoveResult::Inapplicable,
        };
        let (rb, pb) = match self.locate(b) {
            Some(v) => v,
            None => return MoveResult::Inapplicable,
        };
        if ra != rb || pa == pb {
            return MoveResult::Inapplicable;
        }
        let (i, j) = if pa < pb { (pa, pb) } else { (pb, pa) };
        let mut cand = self.routes[ra].customers.clone();
        cand[i..=j].reverse();
        self.try_single_route(ra, cand)
    }

    /// Best single-customer relocation between two routes, in either
    /// direction, over every insertion position.
    pub fn try_relocate_star(&mut self, ri: usize, rj: usize) -> MoveResult {
        if ri == rj {
            return MoveResult::Inapplicable;
        }
        let mut best: Option<(f64, usize, usize, Vec<usize>, Vec<usize>)> = None;
        for (src, dst) in [(ri, rj), (rj, ri)] {
            let src_customers = self.routes[src].customers.clone();
            if src_customers.is_empty() {
                continue;
            }
            let dst_customers = self.routes[dst].customers.clone();
            let old = self.routes[src].cost.penalized(&self.pen)
                + self.routes[dst].cost.penalized(&self.pen);
            for (p, &u) in src_customers.iter().enumerate() {
                let mut removed = src_customers.clone();
                removed.remove(p);
                if !self.rule_ok(&removed) {
                    continue;
                }
                let removed_cost = self.eval(self.routes[src].depot, &removed);
                for q in 0..=dst_customers.len() {
                    let mut inserted = dst_customers.clone();
                    inserted.insert(q, u);
                    if !self.rule_ok(&inserted) {
                        continue;
                    }
                    let inserted_cost = self.eval(self.routes[dst].depot, &inserted);
                    let delta = removed_cost.penalized(&self.pen)
                        + inserted_cost.penalized(&self.pen)
                        - old;
                    if delta < best.as_ref().map(|b| b.0).unwrap_or(-MOVE_EPS) {
                        best = Some((delta, src, dst, removed.clone(), inserted));
                    }
                }
            }
        }
        match best {
            Some((delta, src, dst, removed, inserted)) => {
                let cost_src = self.eval(self.routes[src].depot, &removed);
                let cost_dst = self.eval(self.routes[dst].depot, &inserted);
                self.commit_two(src, removed, cost_src, dst, inserted, cost_dst);
                MoveResult::Applied(delta)
            }
            None => MoveResult::Rejected,
        }
    }

    /// Best exchange of one customer from each route, each reinserted at
    /// its best position in the opposite route rather than swapped in
    /// place.
    pub fn try_swap_star(&mut self, ri: usize, rj: usize) -> MoveResult {
        if ri == rj
            || self.routes[ri].customers.is_empty()
            || self.routes[rj].customers.is_empty()
        {
            return MoveResult::Inapplicable;
        }
        let ci = self.routes[ri].customers.clone();
        let cj = self.routes[rj].customers.clone();
        let old = self.routes[ri].cost.penalized(&self.pen)
            + self.routes[rj].cost.penalized(&self.pen);
        let mut best: Option<(f64, Vec<usize>, Vec<usize>)> = None;
        for (pu, &u) in ci.iter().enumerate() {
            let mut base_i = ci.clone();
            base_i.remove(pu);
            for (pv, &v) in cj.iter().enumerate() {
                let mut base_j = cj.clone();
                base_j.remove(pv);
                // Best placement of v in route i (without u).
                let mut best_i: Option<(f64, Vec<usize>)> = None;
                for q in 0..=base_i.len() {
                    let mut cand = base_i.clone();
                    cand.insert(q, v);
                    if !self.rule_ok(&cand) {
                        continue;
                    }
                    let cost = self.eval(self.routes[ri].depot, &cand).penalized(&self.pen);
                    if best_i.as_ref().map(|b| cost < b.0).unwrap_or(true) {
                        best_i = Some((cost, cand));
                    }
                }
                let mut best_j: Option<(f64, Vec<usize>)> = None;
                for q in 0..=base_j.len() {
                    let mut cand = base_j.clone();
                    cand.insert(q, u);
                    if !self.rule_ok(&cand) {
                        continue;
                    }
                    let cost = self.eval(self.routes[rj].depot, &cand).penalized(&self.pen);
                    if best_j.as_ref().map(|b| cost < b.0).unwrap_or(true) {
                        best_j = Some((cost, cand));
                    }
                }
                if let (Some((cost_i, cand_i)), Some((cost_j, cand_j))) = (best_i, best_j) {
                    let delta = cost_i + cost_j - old;
                    if delta < best.as_ref().map(|b| b.0).unwrap_or(-MOVE_EPS) {
                        best = Some((delta, cand_i, cand_j));
                    }
                }
            }
        }
        match best {
            Some((delta, cand_i, cand_j)) => {
                let cost_i = self.eval(self.routes[ri].depot, &cand_i);
                let cost_j = self.eval(self.routes[rj].depot, &cand_j);
                self.commit_two(ri, cand_i, cost_i, rj, cand_j, cost_j);
                MoveResult::Applied(delta)
            }
            None => MoveResult::Rejected,
        }
    }
}
