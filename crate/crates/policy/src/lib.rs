//! Edge-aware graph-attention construction policy.
//!
//! The encoder embeds node and edge features and refines them with stacked
//! edge-aware attention layers; the decoder scores candidate next nodes
//! with a multi-head glimpse followed by clipped single-head
//! compatibilities over a feasibility mask. Decoding runs one trajectory
//! per starting node, so a single instance yields a whole portfolio of
//! candidate solutions.
//!
//! Forward passes run on a small recording tape ([`tape::Graph`]); with
//! gradients enabled the same code path yields exact reverse-mode
//! derivatives for training.

pub mod augment;
pub mod checkpoint;
mod error;
pub mod model;
pub mod params;
pub mod rollout;
pub mod state;
pub mod tape;

pub use augment::augment_x8;
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use error::PolicyError;
pub use model::{decode_step, dynamic_features, egat_layer, embed_inputs, encode, BnMode, BnStats, Encoded};
pub use params::{ParamVars, PolicyConfig, PolicyParams};
pub use rollout::{
    default_starts, greedy_construct, rollout, trajectory_to_solution, DecodeMode, RolloutResult,
    Trajectory,
};
pub use state::{action_mask, advance_state, Phase, RolloutState};
pub use tape::{Grads, Graph, Var};
