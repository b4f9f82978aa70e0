//! Policy-gradient training: multi-start sampling with a shared per-instance
//! baseline, gradient ascent on the expected return, variant fine-tuning and
//! the single-tour architecture adaptation.

mod adapt;
mod config;
mod error;
pub mod gradcheck;
mod optim;
mod reinforce;
mod train;

pub use adapt::adapt_for_tsp;
pub use config::{Optimizer, TrainConfig};
pub use error::TrainError;
pub use optim::OptimState;
pub use reinforce::{
    instance_gradient, mean_greedy_cost, reinforce_step, shared_baseline, InstanceGrad, StepStats,
};
pub use train::{finetune, initial_params, train, write_curve_csv, EpochPoint, TrainOutcome};

pub use vrp_policy::{load_checkpoint, save_checkpoint};
