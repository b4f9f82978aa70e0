//! Verification utilities: replay-based surrogate loss and finite
//! differences for checking the analytic policy gradient.
//!
//! The REINFORCE estimator is the gradient of
//! `(1/BN) * sum_i sum_j (R_ij - b_i) * log p(tau_ij)` with the sampled
//! trajectories, rewards and baselines held fixed. Freezing a batch makes
//! that surrogate a smooth deterministic function of the parameters, which
//! central differences can probe tensor by tensor.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vrp_core::Instance;
use vrp_io::{generate_instance, normalize_for_policy};
use vrp_policy::{rollout, BnMode, DecodeMode, Graph, PolicyParams, Trajectory};

use crate::config::TrainConfig;
use crate::error::TrainError;
use crate::reinforce::mix_seed;

pub struct FrozenBatch {
    pub instances: Vec<(Instance, f64)>,
    pub trajectories: Vec<Vec<Trajectory>>,
    pub advantages: Vec<Vec<f64>>,
    /// 1 / (B * N)
    pub scale: f64,
}

/// Samples one batch exactly the way a training step would and freezes the
/// trajectories, rewards and shared baselines.
pub fn freeze_batch(params: &PolicyParams, cfg: &TrainConfig) -> Result<FrozenBatch, TrainError> {
    let mut instances = Vec::with_capacity(cfg.batch_size);
    let mut trajectories = Vec::with_capacity(cfg.batch_size);
    let mut advantages = Vec::with_capacity(cfg.batch_size);
    let mut n_starts = 1;
    for i in 0..cfg.batch_size {
        let seed = mix_seed(cfg.seed, &[0, 0, i as u64, 1]);
        let inst = generate_instance(&cfg.gen_config(seed))?;
        let norm = normalize_for_policy(&inst)?;
        n_starts = cfg.starts_for(norm.instance.num_nodes());
        let starts: Vec<usize> = (1..=n_starts).collect();
        let mut rng =
            ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, &[0, 0, i as u64, 2]));
        let mut g = Graph::new(false);
        let result = rollout(
            &mut g,
            params,
            &norm.instance,
            norm.horizon,
            &starts,
            DecodeMode::Sample(&mut rng),
            BnMode::Train,
        )?;
        let rewards: Vec<f64> = result.trajectories.iter().map(|t| -t.cost).collect();
        let baseline = rewards.iter().sum::<f64>() / rewards.len() as f64;
        advantages.push(rewards.iter().map(|r| r - baseline).collect());
        trajectories.push(result.trajectories);
        instances.push((norm.instance, norm.horizon));
    }
    let scale = 1.0 / (cfg.batch_size * n_starts) as f64;
    Ok(FrozenBatch {
        instances,
        trajectories,
        advantages,
        scale,
    })
}

/// The surrogate objective at `params` for a frozen batch.
pub fn replay_loss(params: &PolicyParams, batch: &FrozenBatch) -> Result<f64, TrainError> {
    let mut total = 0.0;
    for (i, (inst, horizon)) in batch.instances.iter().enumerate() {
        let mut g = Graph::new(false);
        let result = rollout(
            &mut g,
            params,
            inst,
            *horizon,
            &[],
            DecodeMode::Replay(&batch.trajectories[i]),
            BnMode::Train,
        )?;
        for (lp, adv) in result.logprob_values.iter().zip(&batch.advantages[i]) {
            total += lp * adv;
        }
    }
    Ok(total * batch.scale)
}

/// Reverse-mode gradient of [`replay_loss`], one array per trainable
/// tensor in canonical order.
pub fn replay_gradient(
    params: &PolicyParams,
    batch: &FrozenBatch,
) -> Result<Vec<Array2<f64>>, TrainError> {
    let mut total: Vec<Array2<f64>> = params
        .trainable_tensors()
        .iter()
        .map(|(_, t)| Array2::zeros(t.raw_dim()))
        .collect();
    for (i, (inst, horizon)) in batch.instances.iter().enumerate() {
        let mut g = Graph::new(true);
        let result = rollout(
            &mut g,
            params,
            inst,
            *horizon,
            &[],
            DecodeMode::Replay(&batch.trajectories[i]),
            BnMode::Train,
        )?;
        let adv = Array2::from_shape_vec(
            (1, batch.advantages[i].len()),
            batch.advantages[i].clone(),
        )
        .expect("advantage shape");
        let adv_c = g.constant(adv);
        let logprob = result.logprob_sum.expect("recording graph");
        let objective = g.matmul(adv_c, logprob);
        let grads = g.backward(objective);
        for (acc, leaf) in total.iter_mut().zip(&result.param_leaves) {
            *acc = &*acc + grads.get(*leaf);
        }
    }
    for acc in total.iter_mut() {
        *acc *= batch.scale;
    }
    Ok(total)
}

/// Central finite differences of [`replay_loss`] over every parameter
/// scalar. Tensors are probed in parallel; each worker owns its parameter
/// copy, so results are exact and deterministic.
pub fn finite_difference_gradient(
    params: &PolicyParams,
    batch: &FrozenBatch,
    h: f64,
) -> Result<Vec<Array2<f64>>, TrainError> {
    use rayon::prelude::*;
    let shapes: Vec<(usize, usize)> = params
        .trainable_tensors()
        .iter()
        .map(|(_, t)| (t.nrows(), t.ncols()))
        .collect();
    shapes
        .par_iter()
        .enumerate()
        .map(|(tensor_idx, &(rows, cols))| {
            let mut work = params.clone();
            let mut grad = Array2::zeros((rows, cols));
            for r in 0..rows {
                for c in 0..cols {
                    let set = |work: &mut PolicyParams, value: f64| {
                        let mut tensors = work.trainable_tensors_mut();
                        tensors[tensor_idx].1[[r, c]] = value;
                    };
                    let base = params.trainable_tensors()[tensor_idx].1[[r, c]];
                    set(&mut work, base + h);
                    let up = replay_loss(&work, batch)?;
                    set(&mut work, base - h);
                    let down = replay_loss(&work, batch)?;
                    set(&mut work, base);
                    grad[[r, c]] = (up - down) / (2.0 * h);
                }
            }
            Ok(grad)
        })
        .collect()
}

/// Per-tensor relative error `||a - b|| / max(||a||, ||b||, floor)`.
///
/// The floor scales with the whole gradient's magnitude: a tensor whose
/// true derivative is identically zero (e.g. a bias immediately absorbed
/// by batch-statistic normalization) compares as noise against noise, and
/// only deviations that are material next to the rest of the gradient
/// should count.
pub fn per_tensor_relative_errors(
    params: &PolicyParams,
    analytic: &[Array2<f64>],
    numeric: &[Array2<f64>],
) -> Vec<(String, f64)> {
    let norm = |x: &Array2<f64>| x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let global: f64 = analytic.iter().map(|a| norm(a).powi(2)).sum::<f64>().sqrt();
    let floor = (1e-6 * (1.0 + global)).max(1e-8);
    params
        .trainable_tensors()
        .iter()
        .zip(analytic.iter().zip(numeric))
        .map(|((name, _), (a, n))| {
            let diff = a - n;
            let err = norm(&diff) / norm(a).max(norm(n)).max(floor);
            (name.clone(), err)
        })
        .collect()
}
