use std::path::Path;
use std::time::Instant;

use vrp_policy::PolicyParams;

use crate::config::TrainConfig;
use crate::error::TrainError;
use crate::optim::OptimState;
use crate::reinforce::{mix_seed, reinforce_step};

#[derive(Debug, Clone, Copy)]
pub struct EpochPoint {
    pub epoch: usize,
    /// Mean sampled-trajectory cost across the epoch's steps.
    pub mean_cost: f64,
    pub seconds: f64,
}

pub struct TrainOutcome {
    pub params: PolicyParams,
    pub curve: Vec<EpochPoint>,
}

fn train_from(
    mut params: PolicyParams,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    let mut opt = OptimState::new(&params, cfg.optimizer);
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let started = Instant::now();
        let mut cost_sum = 0.0;
        for step in 0..cfg.steps_per_epoch {
            let stats = reinforce_step(&mut params, &mut opt, cfg, epoch, step)?;
            cost_sum += stats.mean_cost;
        }
        curve.push(EpochPoint {
            epoch: epoch + 1,
            mean_cost: cost_sum / cfg.steps_per_epoch as f64,
            seconds: started.elapsed().as_secs_f64(),
        });
    }
    Ok(TrainOutcome { params, curve })
}

/// The parameter initialization a training run starts from.
pub fn initial_params(cfg: &TrainConfig) -> PolicyParams {
    let init_seed = mix_seed(cfg.seed, &[0xFEED]);
    PolicyParams::init(cfg.model, cfg.variant, init_seed)
}

/// Trains a fresh policy on freshly generated instances of the configured
/// variant. Deterministic for a fixed configuration and seed.
pub fn train(cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    train_from(initial_params(cfg), cfg)
}

/// Continues training a pre-trained policy on a different variant, keeping
/// every parameter tensor and the architecture unchanged.
pub fn finetune(
    pretrained: PolicyParams,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    if pretrained.config != cfg.model {
        return Err(TrainError::Incompatible(format!(
            "checkpoint dims {:?} differ from configured {:?}",
            pretrained.config, cfg.model
        )));
    }
    if cfg.variant.tsp_mode != !pretrained.config.customer_features {
        return Err(TrainError::Incompatible(
            "single-tour fine-tuning requires an adapted checkpoint (and vice versa)".into(),
        ));
    }
    let mut params = pretrained;
    params.trained_on = cfg.variant;
    train_from(params, cfg)
}

/// Writes the per-epoch curve as `epoch,mean_objective,seconds`.
pub fn write_curve_csv(curve: &[EpochPoint], path: &Path) -> Result<(), TrainError> {
    let mut out = String::from("epoch,mean_objective,seconds\n");
    for p in curve {
        out.push_str(&format!("{},{:.6},{:.3}\n", p.epoch, p.mean_cost, p.seconds));
    }
    std::fs::write(path, out).map_err(|e| TrainError::File(format!("{}: {e}", path.display())))
}
