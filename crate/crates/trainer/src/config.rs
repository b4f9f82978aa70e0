use vrp_core::VariantFlags;
use vrp_io::GenConfig;
use vrp_policy::PolicyConfig;

use crate::error::TrainError;

/// Gradient update rule. The adaptive rule is the default; plain ascent
/// exists for gradient-checking tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    Adam { beta1: f64, beta2: f64, eps: f64 },
    Sgd,
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Training-run configuration.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub steps_per_epoch: usize,
    pub batch_size: usize,
    /// Trajectories per instance; defaults to g - 1, capped by `max_starts`.
    pub n_starts: Option<usize>,
    pub max_starts: usize,
    pub learning_rate: f64,
    pub variant: VariantFlags,
    pub customers: usize,
    pub depots: usize,
    pub seed: u64,
    pub optimizer: Optimizer,
    pub model: PolicyConfig,
}

impl TrainConfig {
    /// CPU-budget defaults: 5 epochs x 100 steps x 64 instances of n = 20
    /// on the small model profile.
    pub fn desk(variant: VariantFlags, seed: u64) -> Self {
        let depots = if variant.multi_depot { 2 } else { 1 };
        TrainConfig {
            epochs: 5,
            steps_per_epoch: 100,
            batch_size: 64,
            n_starts: None,
            max_starts: 200,
            learning_rate: 1e-4,
            variant,
            customers: 20,
            depots,
            seed,
            optimizer: Optimizer::default(),
            model: PolicyConfig::desk(),
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.steps_per_epoch == 0 || self.batch_size == 0 {
            return Err(TrainError::Config(
                "steps and batch size must be positive".into(),
            ));
        }
        if self.customers == 0 || self.depots == 0 {
            return Err(TrainError::Config("empty instance dimensions".into()));
        }
        if self.learning_rate < 0.0 {
            return Err(TrainError::Config("negative learning rate".into()));
        }
        let g = self.customers + self.depots;
        if let Some(n) = self.n_starts {
            if n == 0 || n > g - 1 {
                return Err(TrainError::Config(format!(
                    "n_starts {n} outside 1..={}",
                    g - 1
                )));
            }
        }
        self.model.validate().map_err(TrainError::from)
    }

    pub fn gen_config(&self, seed: u64) -> GenConfig {
        GenConfig::new(self.variant, self.customers, self.depots, seed)
    }

    pub fn starts_for(&self, num_nodes: usize) -> usize {
        let default = num_nodes - 1;
        self.n_starts
            .unwrap_or(default)
            .min(default)
            .min(self.max_starts)
            .max(1)
    }
}
