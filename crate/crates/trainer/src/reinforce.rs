use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use vrp_core::Instance;
use vrp_io::{generate_instance, normalize_for_policy};
use vrp_policy::{
    rollout, BnMode, BnStats, DecodeMode, Graph, PolicyParams, RolloutResult,
};

use crate::config::TrainConfig;
use crate::error::TrainError;
use crate::optim::OptimState;

const BN_MOMENTUM: f64 = 0.1;

/// Splitmix-style seed derivation so every (epoch, step, instance) draws an
/// independent, reproducible stream.
pub(crate) fn mix_seed(seed: u64, parts: &[u64]) -> u64 {
    let mut x = seed;
    for &p in parts {
        x ^= p.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = x;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        x = z ^ (z >> 31);
    }
    x
}

/// Mean reward per instance over its sampled trajectories: the shared
/// baseline that centers every trajectory of that instance.
pub fn shared_baseline(rewards: &Array2<f64>) -> Vec<f64> {
    rewards
        .rows()
        .into_iter()
        .map(|row| row.sum() / row.len() as f64)
        .collect()
}

/// Per-instance contribution to the policy gradient.
pub struct InstanceGrad {
    /// None when every trajectory earned the same reward: the advantage is
    /// identically zero, so the contribution is exactly the zero gradient.
    pub grads: Option<Vec<Array2<f64>>>,
    pub rewards: Vec<f64>,
    pub bn_stats: Vec<BnStats>,
    pub mean_cost: f64,
}

/// Samples `n_starts` trajectories on one instance and accumulates
/// `sum_j (R_j - b) * grad log p(tau_j)` by one reverse pass.
pub fn instance_gradient(
    params: &PolicyParams,
    instance: &Instance,
    horizon: f64,
    n_starts: usize,
    rng: &mut ChaCha8Rng,
) -> Result<InstanceGrad, TrainError> {
    let mut g = Graph::new(true);
    let starts: Vec<usize> = (1..=n_starts).collect();
    let result: RolloutResult = rollout(
        &mut g,
        params,
        instance,
        horizon,
        &starts,
        DecodeMode::Sample(rng),
        BnMode::Train,
    )?;
    let rewards: Vec<f64> = result.trajectories.iter().map(|t| -t.cost).collect();
    let mean_cost = result.trajectories.iter().map(|t| t.cost).sum::<f64>() / n_starts as f64;
    let max = rewards.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = rewards.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == min {
        return Ok(InstanceGrad {
            grads: None,
            rewards,
            bn_stats: result.bn_stats,
            mean_cost,
        });
    }
    let baseline: f64 = rewards.iter().sum::<f64>() / n_starts as f64;
    let adv = Array2::from_shape_vec(
        (1, n_starts),
        rewards.iter().map(|r| r - baseline).collect(),
    )
    .expect("advantage shape");
    let adv_c = g.constant(adv);
    let logprob = result.logprob_sum.expect("recording graph");
    let objective = g.matmul(adv_c, logprob); // 1x1: sum_j adv_j * logp_j
    let grads = g.backward(objective);
    let collected: Vec<Array2<f64>> = result
        .param_leaves
        .iter()
        .map(|&leaf| grads.get(leaf).clone())
        .collect();
    Ok(InstanceGrad {
        grads: Some(collected),
        rewards,
        bn_stats: result.bn_stats,
        mean_cost,
    })
}

fn fold_bn_stats(params: &mut PolicyParams, per_instance: &[Vec<BnStats>]) {
    if per_instance.is_empty() || per_instance[0].is_empty() {
        return;
    }
    let count = per_instance[0].len();
    let batch = per_instance.len() as f64;
    let mut means: Vec<Array2<f64>> = per_instance[0]
        .iter()
        .map(|s| Array2::zeros(s.mean.raw_dim()))
        .collect();
    let mut vars = means.clone();
    for stats in per_instance {
        for (i, s) in stats.iter().enumerate() {
            means[i] = &means[i] + &s.mean;
            vars[i] = &vars[i] + &s.var;
        }
    }
    for i in 0..count {
        means[i] /= batch;
        vars[i] /= batch;
    }
    // Stats arrive interleaved per layer: bn1 then bn2.
    for (l, layer) in params.layers.iter_mut().enumerate() {
        for (k, bn) in [&mut layer.bn1, &mut layer.bn2].into_iter().enumerate() {
            let idx = 2 * l + k;
            bn.run_mean = &bn.run_mean * (1.0 - BN_MOMENTUM) + &means[idx] * BN_MOMENTUM;
            bn.run_var = &bn.run_var * (1.0 - BN_MOMENTUM) + &vars[idx] * BN_MOMENTUM;
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StepStats {
    /// Mean travel distance over all B x N sampled trajectories.
    pub mean_cost: f64,
}

/// One training step: samples a fresh batch, estimates the policy gradient
/// with the shared baseline, and ascends the expected return.
pub fn reinforce_step(
    params: &mut PolicyParams,
    opt: &mut OptimState,
    cfg: &TrainConfig,
    epoch: usize,
    step: usize,
) -> Result<StepStats, TrainError> {
    let batch: Result<Vec<(Instance, f64)>, TrainError> = (0..cfg.batch_size)
        .map(|i| {
            let seed = mix_seed(cfg.seed, &[epoch as u64, step as u64, i as u64, 1]);
            let inst = generate_instance(&cfg.gen_config(seed))?;
            let norm = normalize_for_policy(&inst)?;
            Ok((norm.instance, norm.horizon))
        })
        .collect();
    let batch = batch?;
    let n_starts = cfg.starts_for(batch[0].0.num_nodes());

    // Instances are independent; gradients merge in index order so the
    // result does not depend on scheduling.
    let shared = &*params;
    let results: Result<Vec<InstanceGrad>, TrainError> = batch
        .par_iter()
        .enumerate()
        .map(|(i, (inst, horizon))| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(
                cfg.seed,
                &[epoch as u64, step as u64, i as u64, 2],
            ));
            instance_gradient(shared, inst, *horizon, n_starts, &mut rng)
        })
        .collect();
    let results = results?;

    let scale = 1.0 / (cfg.batch_size * n_starts) as f64;
    let mut total: Vec<Array2<f64>> = params
        .trainable_tensors()
        .iter()
        .map(|(_, t)| Array2::zeros(t.raw_dim()))
        .collect();
    let mut cost_sum = 0.0;
    for r in &results {
        cost_sum += r.mean_cost;
        if let Some(gs) = &r.grads {
            for (acc, g) in total.iter_mut().zip(gs) {
                *acc = &*acc + g;
            }
        }
    }
    for acc in total.iter_mut() {
        *acc *= scale;
    }
    for ((name, _), g) in params.trainable_tensors().iter().zip(&total) {
        if g.iter().any(|v| !v.is_finite()) {
            return Err(TrainError::NonFiniteGradient {
                tensor: name.clone(),
                epoch,
                step,
            });
        }
    }

    opt.apply(params, &total, cfg.learning_rate);
    let stats: Vec<Vec<BnStats>> = results.into_iter().map(|r| r.bn_stats).collect();
    fold_bn_stats(params, &stats);
    Ok(StepStats {
        mean_cost: cost_sum / cfg.batch_size as f64,
    })
}

/// Mean of the best greedy multi-start cost over a held-out set; the
/// standard inference-quality metric for a checkpoint.
pub fn mean_greedy_cost(
    params: &PolicyParams,
    instances: &[(Instance, f64)],
    max_starts: usize,
) -> Result<f64, TrainError> {
    let costs: Result<Vec<f64>, TrainError> = instances
        .par_iter()
        .map(|(inst, horizon)| {
            let (_, cost) = vrp_policy::greedy_construct(params, inst, *horizon, max_starts)?;
            Ok(cost)
        })
        .collect();
    let costs = costs?;
    Ok(costs.iter().sum::<f64>() / costs.len().max(1) as f64)
}
