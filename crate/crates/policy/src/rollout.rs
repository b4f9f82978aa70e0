use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use vrp_core::{Instance, Route, Solution};

use crate::error::PolicyError;
use crate::model::{decode_step, encode, BnMode, BnStats};
use crate::params::PolicyParams;
use crate::state::{action_mask, advance_for, RolloutState};
use crate::tape::{Graph, Var};

/// One decoded trajectory: the full action sequence (forced prefix
/// included), its total travel distance, and — on recording graphs — the
/// accumulated log-probability of the non-forced actions.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub actions: Vec<usize>,
    pub forced_prefix: usize,
    pub cost: f64,
}

pub enum DecodeMode<'a> {
    /// Highest-probability action each step.
    Greedy,
    /// Sample from the masked distribution.
    Sample(&'a mut ChaCha8Rng),
    /// Re-walk previously recorded trajectories (teacher forcing); used by
    /// gradient checks.
    Replay(&'a [Trajectory]),
}

pub struct RolloutResult {
    pub trajectories: Vec<Trajectory>,
    /// Per-trajectory summed log-probability (N x 1), present when the
    /// graph records gradients.
    pub logprob_sum: Option<Var>,
    /// Plain per-trajectory log-probability totals, always available.
    pub logprob_values: Vec<f64>,
    pub bn_stats: Vec<BnStats>,
    /// Parameter leaves registered for this rollout, in canonical tensor
    /// order; pair with [`crate::tape::Grads`] after a backward pass.
    pub param_leaves: Vec<Var>,
}

/// Default multi-start count: one trajectory per non-zero node.
pub fn default_starts(instance: &Instance, cap: usize) -> Vec<usize> {
    let n = (instance.num_nodes() - 1).min(cap.max(1));
    (1..=n).collect()
}

fn force_start(
    state: &mut RolloutState,
    instance: &Instance,
    start: usize,
) -> Result<Vec<usize>, PolicyError> {
    let m = instance.num_depots();
    if instance.variant().tsp_mode {
        advance_for(state, start, instance, 0)?;
        return Ok(vec![start]);
    }
    if start < m {
        if advance_for(state, start, instance, 0).is_ok() {
            return Ok(vec![start]);
        }
        return Ok(Vec::new());
    }
    // Customer start: implicitly departs depot 0, falling back to the
    // customer's nearest depot (then any) when depot 0 cannot serve it.
    let mut depots: Vec<usize> = (0..m).collect();
    depots.sort_by(|&a, &b| {
        let key = |d: usize| if d == 0 { -1.0 } else { instance.dist(d, start) };
        key(a).partial_cmp(&key(b)).unwrap()
    });
    for d in depots {
        let mut probe = state.clone();
        if advance_for(&mut probe, d, instance, 0).is_ok()
            && advance_for(&mut probe, start, instance, 0).is_ok()
        {
            *state = probe;
            return Ok(vec![d, start]);
        }
    }
    // No depot can open with this customer; leave the first move to the
    // policy.
    Ok(Vec::new())
}

/// Runs multi-start decoding on one instance.
///
/// Trajectory `j` begins at node `starts[j]`: depots open the first route
/// directly, customers implicitly depart depot 0. Forced actions carry no
/// log-probability. Decoding is batched across trajectories; finished ones
/// keep selecting their current node with probability one (adding exactly
/// zero log-probability) until every trajectory completes.
pub fn rollout(
    g: &mut Graph,
    params: &PolicyParams,
    instance: &Instance,
    horizon: f64,
    starts: &[usize],
    mut mode: DecodeMode,
    bn: BnMode,
) -> Result<RolloutResult, PolicyError> {
    let pv = params.vars(g);
    let enc = encode(g, params, &pv, instance, horizon, bn)?;
    let n_traj = match &mode {
        DecodeMode::Replay(trajs) => trajs.len(),
        _ => starts.len(),
    };
    let g_nodes = instance.num_nodes();

    let mut states: Vec<RolloutState> = Vec::with_capacity(n_traj);
    let mut actions: Vec<Vec<usize>> = Vec::with_capacity(n_traj);
    let mut forced: Vec<usize> = Vec::with_capacity(n_traj);
    let mut cursors: Vec<usize> = vec![0; n_traj];
    for j in 0..n_traj {
        let mut state = RolloutState::new(instance);
        match &mode {
            DecodeMode::Replay(trajs) => {
                let prefix = trajs[j].forced_prefix;
                for &a in &trajs[j].actions[..prefix] {
                    advance_for(&mut state, a, instance, j)?;
                }
                actions.push(trajs[j].actions[..prefix].to_vec());
                forced.push(prefix);
                cursors[j] = prefix;
            }
            _ => {
                let taken = force_start(&mut state, instance, starts[j])?;
                forced.push(taken.len());
                actions.push(taken);
            }
        }
        states.push(state);
    }

    let grad = g.grad_enabled();
    let mut logprob_sum: Option<Var> = grad.then(|| g.constant(Array2::zeros((n_traj, 1))));
    let mut logprob_values = vec![0.0f64; n_traj];
    let mark = g.mark();

    while states.iter().any(|s| !s.done) {
        let mut mask = Array2::from_elem((n_traj, g_nodes), false);
        for (j, state) in states.iter().enumerate() {
            let row = action_mask(state, instance);
            if !row.iter().any(|&b| b) {
                return Err(PolicyError::AllMasked(j));
            }
            for (i, &b) in row.iter().enumerate() {
                mask[[j, i]] = b;
            }
        }
        let logp = decode_step(
            g,
            &enc,
            &pv.decoder,
            &params.config,
            &states,
            instance,
            horizon,
            &mask,
        );
        let mut picks: Vec<(usize, usize)> = Vec::with_capacity(n_traj);
        for j in 0..n_traj {
            if states[j].done {
                picks.push((j, states[j].current));
                continue;
            }
            let action = match &mut mode {
                DecodeMode::Greedy => {
                    let row = g.value(logp).row(j).to_owned();
                    let mut best = usize::MAX;
                    let mut best_v = f64::NEG_INFINITY;
                    for i in 0..g_nodes {
                        if mask[[j, i]] && row[i] > best_v {
                            best_v = row[i];
                            best = i;
                        }
                    }
                    best
                }
                DecodeMode::Sample(rng) => {
                    let row = g.value(logp).row(j).to_owned();
                    let mut draw = rng.random::<f64>();
                    let mut chosen = usize::MAX;
                    for i in 0..g_nodes {
                        if mask[[j, i]] {
                            chosen = i; // residual mass lands on the last bucket
                            let p = row[i].exp();
                            if draw < p {
                                break;
                            }
                            draw -= p;
                        }
                    }
                    chosen
                }
                DecodeMode::Replay(trajs) => {
                    let a = trajs[j].actions[cursors[j]];
                    cursors[j] += 1;
                    a
                }
            };
            picks.push((j, action));
        }
        for &(j, action) in &picks {
            logprob_values[j] += g.value(logp)[[j, action]];
        }
        if grad {
            let picked = g.pick(logp, &picks);
            let prev = logprob_sum.take().unwrap();
            logprob_sum = Some(g.add(prev, picked));
        }
        for (j, action) in picks.iter().copied() {
            if states[j].done {
                continue;
            }
            advance_for(&mut states[j], action, instance, j)?;
            actions[j].push(action);
        }
        if !grad {
            g.truncate(mark);
        }
    }

    let trajectories = (0..n_traj)
        .map(|j| Trajectory {
            actions: std::mem::take(&mut actions[j]),
            forced_prefix: forced[j],
            cost: states[j].total_distance,
        })
        .collect();
    Ok(RolloutResult {
        trajectories,
        logprob_sum,
        logprob_values,
        bn_stats: enc.bn_stats,
        param_leaves: pv.leaves,
    })
}

/// Converts a trajectory's action list into a structured solution.
/// TSP tours are rotated so the anchor node leads.
pub fn trajectory_to_solution(actions: &[usize], instance: &Instance) -> Solution {
    if instance.variant().tsp_mode {
        let pos = actions
            .iter()
            .position(|&a| a == 0)
            .expect("tour must visit the anchor");
        let mut customers = Vec::with_capacity(actions.len() - 1);
        customers.extend_from_slice(&actions[pos + 1..]);
        customers.extend_from_slice(&actions[..pos]);
        return Solution::new(vec![Route::new(0, customers)]);
    }
    let m = instance.num_depots();
    let mut routes = Vec::new();
    let mut open: Option<(usize, Vec<usize>)> = None;
    for &a in actions {
        if a < m {
            match open.take() {
                None => open = Some((a, Vec::new())),
                Some((depot, customers)) => {
                    if !customers.is_empty() {
                        routes.push(Route::new(depot, customers));
                    }
                }
            }
        } else if let Some((_, customers)) = open.as_mut() {
            customers.push(a);
        }
    }
    if let Some((depot, customers)) = open {
        if !customers.is_empty() {
            routes.push(Route::new(depot, customers));
        }
    }
    Solution::new(routes)
}

/// Greedy multi-start construction, returning the best decoded solution
/// and its travel distance (in the instance's own units).
pub fn greedy_construct(
    params: &PolicyParams,
    instance: &Instance,
    horizon: f64,
    max_starts: usize,
) -> Result<(Solution, f64), PolicyError> {
    let mut g = Graph::new(false);
    let starts = default_starts(instance, max_starts);
    let result = rollout(
        &mut g,
        params,
        instance,
        horizon,
        &starts,
        DecodeMode::Greedy,
        BnMode::Eval,
    )?;
    let best = result
        .trajectories
        .iter()
        .min_by(|a, b| a.cost.partial_cmp(&b.cost).unwrap())
        .expect("at least one trajectory");
    Ok((trajectory_to_solution(&best.actions, instance), best.cost))
}
