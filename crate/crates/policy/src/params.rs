use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use vrp_core::VariantFlags;

use crate::error::PolicyError;
use crate::tape::{Graph, Var};

/// Architecture dimensions and decoding constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    /// Node embedding width.
    pub h_x: usize,
    /// Edge embedding width.
    pub h_e: usize,
    /// Attention heads in the decoder glimpse; must divide `h_x`.
    pub heads: usize,
    /// Encoder layer count.
    pub layers: usize,
    /// Hidden width of the encoder feed-forward block.
    pub ff_hidden: usize,
    /// Logit clip constant.
    pub clip: f64,
    /// False once the model has been adapted for single-tour decoding:
    /// the customer embedding is removed and the decoder query loses the
    /// dynamic-feature inputs.
    pub customer_features: bool,
}

impl PolicyConfig {
    /// Full-scale profile.
    pub fn full() -> Self {
        PolicyConfig {
            h_x: 256,
            h_e: 32,
            heads: 16,
            layers: 5,
            ff_hidden: 512,
            clip: 10.0,
            customer_features: true,
        }
    }

    /// Small profile for tests and CPU-budget training runs.
    pub fn desk() -> Self {
        PolicyConfig {
            h_x: 64,
            h_e: 16,
            heads: 8,
            layers: 2,
            ff_hidden: 128,
            clip: 10.0,
            customer_features: true,
        }
    }

    /// Tiny profile for gradient-checking unit tests.
    pub fn micro() -> Self {
        PolicyConfig {
            h_x: 8,
            h_e: 4,
            heads: 2,
            layers: 1,
            ff_hidden: 8,
            clip: 10.0,
            customer_features: true,
        }
    }

    pub fn head_dim(&self) -> usize {
        self.h_x / self.heads
    }

    /// Decoder query input width: current-node embedding plus, unless
    /// adapted for TSP, the four dynamic features.
    pub fn query_in(&self) -> usize {
        if self.customer_features {
            self.h_x + DYNAMIC_FEATURES
        } else {
            self.h_x
        }
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.h_x == 0 || self.heads == 0 || self.h_x % self.heads != 0 {
            return Err(PolicyError::Config(format!(
                "h_x {} must be a positive multiple of heads {}",
                self.h_x, self.heads
            )));
        }
        Ok(())
    }
}

pub const CUSTOMER_FEATURES: usize = 5; // x, y, demand, tw_early, tw_late
pub const DEPOT_FEATURES: usize = 2; // x, y
pub const EDGE_FEATURES: usize = 1; // distance
pub const DYNAMIC_FEATURES: usize = 4; // load, time, route length, open flag

#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub w: Array2<f64>,
    /// 1 x out bias row.
    pub b: Array2<f64>,
}

impl Linear {
    fn init(rng: &mut ChaCha8Rng, input: usize, output: usize) -> Self {
        Linear {
            w: init_tensor(rng, output, input),
            b: Array2::zeros((1, output)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnParams {
    pub gamma: Array2<f64>,
    pub beta: Array2<f64>,
    pub run_mean: Array2<f64>,
    pub run_var: Array2<f64>,
}

impl BnParams {
    fn init(width: usize) -> Self {
        BnParams {
            gamma: Array2::ones((1, width)),
            beta: Array2::zeros((1, width)),
            run_mean: Array2::zeros((1, width)),
            run_var: Array2::ones((1, width)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EgatLayer {
    /// W1: projects the concatenated pair-plus-edge features.
    pub attn_w: Array2<f64>,
    /// a: attention vector applied to the projection (1 x d).
    pub attn_a: Array2<f64>,
    /// W2: message transform.
    pub msg_w: Array2<f64>,
    pub bn1: BnParams,
    pub ff1: Linear,
    pub ff2: Linear,
    pub bn2: BnParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderParams {
    pub w_v: Array2<f64>,
    pub w_k: Array2<f64>,
    pub w_q: Array2<f64>,
    /// Glimpse output projection combining the attention heads.
    pub w_out: Array2<f64>,
}

/// All parameter tensors of the policy, plus the architecture metadata
/// needed to interpret them.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub config: PolicyConfig,
    /// Variant flags the checkpoint was trained on (informational).
    pub trained_on: VariantFlags,
    pub customer_embed: Option<Linear>,
    pub depot_embed: Linear,
    pub edge_embed: Linear,
    pub layers: Vec<EgatLayer>,
    pub decoder: DecoderParams,
}

fn init_tensor(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    let bound = 1.0 / (cols as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-bound..bound))
}

impl PolicyParams {
    /// Seeded uniform initialization with zero biases and identity batch
    /// normalization.
    pub fn init(config: PolicyConfig, trained_on: VariantFlags, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = config.h_x;
        let he = config.h_e;
        let pair_in = 2 * h + he;
        let customer_embed = config
            .customer_features
            .then(|| Linear::init(&mut rng, CUSTOMER_FEATURES, h));
        let depot_embed = Linear::init(&mut rng, DEPOT_FEATURES, h);
        let edge_embed = Linear::init(&mut rng, EDGE_FEATURES, he);
        let layers = (0..config.layers)
            .map(|_| EgatLayer {
                attn_w: init_tensor(&mut rng, h, pair_in),
                attn_a: init_tensor(&mut rng, 1, h),
                msg_w: init_tensor(&mut rng, h, h),
                bn1: BnParams::init(h),
                ff1: Linear::init(&mut rng, h, config.ff_hidden),
                ff2: Linear::init(&mut rng, config.ff_hidden, h),
                bn2: BnParams::init(h),
            })
            .collect();
        let decoder = DecoderParams {
            w_v: init_tensor(&mut rng, h, h),
            w_k: init_tensor(&mut rng, h, h),
            w_q: init_tensor(&mut rng, h, config.query_in()),
            w_out: init_tensor(&mut rng, h, h),
        };
        PolicyParams {
            config,
            trained_on,
            customer_embed,
            depot_embed,
            edge_embed,
            layers,
            decoder,
        }
    }

    /// Trainable tensors in canonical order, with stable names shared by
    /// the checkpoint format, the optimizer state and gradient checks.
    pub fn trainable_tensors(&self) -> Vec<(String, &Array2<f64>)> {
        let mut out: Vec<(String, &Array2<f64>)> = Vec::new();
        if let Some(ce) = &self.customer_embed {
            out.push(("customer_embed.w".into(), &ce.w));
            out.push(("customer_embed.b".into(), &ce.b));
        }
        out.push(("depot_embed.w".into(), &self.depot_embed.w));
        out.push(("depot_embed.b".into(), &self.depot_embed.b));
        out.push(("edge_embed.w".into(), &self.edge_embed.w));
        out.push(("edge_embed.b".into(), &self.edge_embed.b));
        for (l, layer) in self.layers.iter().enumerate() {
            out.push((format!("layers.{l}.attn_w"), &layer.attn_w));
            out.push((format!("layers.{l}.attn_a"), &layer.attn_a));
            out.push((format!("layers.{l}.msg_w"), &layer.msg_w));
            out.push((format!("layers.{l}.bn1.gamma"), &layer.bn1.gamma));
            out.push((format!("layers.{l}.bn1.beta"), &layer.bn1.beta));
            out.push((format!("layers.{l}.ff1.w"), &layer.ff1.w));
            out.push((format!("layers.{l}.ff1.b"), &layer.ff1.b));
            out.push((format!("layers.{l}.ff2.w"), &layer.ff2.w));
            out.push((format!("layers.{l}.ff2.b"), &layer.ff2.b));
            out.push((format!("layers.{l}.bn2.gamma"), &layer.bn2.gamma));
            out.push((format!("layers.{l}.bn2.beta"), &layer.bn2.beta));
        }
        out.push(("decoder.w_v".into(), &self.decoder.w_v));
        out.push(("decoder.w_k".into(), &self.decoder.w_k));
        out.push(("decoder.w_q".into(), &self.decoder.w_q));
        out.push(("decoder.w_out".into(), &self.decoder.w_out));
        out
    }

    pub fn trainable_tensors_mut(&mut self) -> Vec<(String, &mut Array2<f64>)> {
        let mut out: Vec<(String, &mut Array2<f64>)> = Vec::new();
        if let Some(ce) = &mut self.customer_embed {
            out.push(("customer_embed.w".into(), &mut ce.w));
            out.push(("customer_embed.b".into(), &mut ce.b));
        }
        out.push(("depot_embed.w".into(), &mut self.depot_embed.w));
        out.push(("depot_embed.b".into(), &mut self.depot_embed.b));
        out.push(("edge_embed.w".into(), &mut self.edge_embed.w));
        out.push(("edge_embed.b".into(), &mut self.edge_embed.b));
        for (l, layer) in self.layers.iter_mut().enumerate() {
            out.push((format!("layers.{l}.attn_w"), &mut layer.attn_w));
            out.push((format!("layers.{l}.attn_a"), &mut layer.attn_a));
            out.push((format!("layers.{l}.msg_w"), &mut layer.msg_w));
            out.push((format!("layers.{l}.bn1.gamma"), &mut layer.bn1.gamma));
            out.push((format!("layers.{l}.bn1.beta"), &mut layer.bn1.beta));
            out.push((format!("layers.{l}.ff1.w"), &mut layer.ff1.w));
            out.push((format!("layers.{l}.ff1.b"), &mut layer.ff1.b));
            out.push((format!("layers.{l}.ff2.w"), &mut layer.ff2.w));
            out.push((format!("layers.{l}.ff2.b"), &mut layer.ff2.b));
            out.push((format!("layers.{l}.bn2.gamma"), &mut layer.bn2.gamma));
            out.push((format!("layers.{l}.bn2.beta"), &mut layer.bn2.beta));
        }
        out.push(("decoder.w_v".into(), &mut self.decoder.w_v));
        out.push(("decoder.w_k".into(), &mut self.decoder.w_k));
        out.push(("decoder.w_q".into(), &mut self.decoder.w_q));
        out.push(("decoder.w_out".into(), &mut self.decoder.w_out));
        out
    }

    /// Batch-norm running statistics (persisted, not trained).
    pub fn stat_tensors(&self) -> Vec<(String, &Array2<f64>)> {
        let mut out: Vec<(String, &Array2<f64>)> = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            out.push((format!("layers.{l}.bn1.run_mean"), &layer.bn1.run_mean));
            out.push((format!("layers.{l}.bn1.run_var"), &layer.bn1.run_var));
            out.push((format!("layers.{l}.bn2.run_mean"), &layer.bn2.run_mean));
            out.push((format!("layers.{l}.bn2.run_var"), &layer.bn2.run_var));
        }
        out
    }

    pub fn stat_tensors_mut(&mut self) -> Vec<(String, &mut Array2<f64>)> {
        let mut out: Vec<(String, &mut Array2<f64>)> = Vec::new();
        for (l, layer) in self.layers.iter_mut().enumerate() {
            out.push((format!("layers.{l}.bn1.run_mean"), &mut layer.bn1.run_mean));
            out.push((format!("layers.{l}.bn1.run_var"), &mut layer.bn1.run_var));
            out.push((format!("layers.{l}.bn2.run_mean"), &mut layer.bn2.run_mean));
            out.push((format!("layers.{l}.bn2.run_var"), &mut layer.bn2.run_var));
        }
        out
    }
}

// Graph-resident views of the parameters for one forward pass.

#[derive(Clone, Copy)]
pub struct LinearVars {
    pub w: Var,
    pub b: Var,
}

#[derive(Clone, Copy)]
pub struct BnVars {
    pub gamma: Var,
    pub beta: Var,
}

#[derive(Clone, Copy)]
pub struct EgatLayerVars {
    pub attn_w: Var,
    pub attn_a: Var,
    pub msg_w: Var,
    pub bn1: BnVars,
    pub ff1: LinearVars,
    pub ff2: LinearVars,
    pub bn2: BnVars,
}

#[derive(Clone, Copy)]
pub struct DecoderVars {
    pub w_v: Var,
    pub w_k: Var,
    pub w_q: Var,
    pub w_out: Var,
}

/// Parameter leaves registered on a graph, in the same canonical order as
/// [`PolicyParams::trainable_tensors`]; `leaves` supports gradient
/// extraction after a backward pass.
pub struct ParamVars {
    pub customer_embed: Option<LinearVars>,
    pub depot_embed: LinearVars,
    pub edge_embed: LinearVars,
    pub layers: Vec<EgatLayerVars>,
    pub decoder: DecoderVars,
    pub leaves: Vec<Var>,
}

impl PolicyParams {
    pub fn vars(&self, g: &mut Graph) -> ParamVars {
        let mut leaves = Vec::new();
        let mut leaf = |g: &mut Graph, t: &Array2<f64>| {
            let v = g.leaf(t.clone());
            leaves.push(v);
            v
        };
        let customer_embed = self.customer_embed.as_ref().map(|ce| LinearVars {
            w: leaf(g, &ce.w),
            b: leaf(g, &ce.b),
        });
        let depot_embed = LinearVars {
            w: leaf(g, &self.depot_embed.w),
            b: leaf(g, &self.depot_embed.b),
        };
        let edge_embed = LinearVars {
            w: leaf(g, &self.edge_embed.w),
            b: leaf(g, &self.edge_embed.b),
        };
        let layers = self
            .layers
            .iter()
            .map(|l| EgatLayerVars {
                attn_w: leaf(g, &l.attn_w),
                attn_a: leaf(g, &l.attn_a),
                msg_w: leaf(g, &l.msg_w),
                bn1: BnVars {
                    gamma: leaf(g, &l.bn1.gamma),
                    beta: leaf(g, &l.bn1.beta),
                },
                ff1: LinearVars {
                    w: leaf(g, &l.ff1.w),
                    b: leaf(g, &l.ff1.b),
                },
                ff2: LinearVars {
                    w: leaf(g, &l.ff2.w),
                    b: leaf(g, &l.ff2.b),
                },
                bn2: BnVars {
                    gamma: leaf(g, &l.bn2.gamma),
                    beta: leaf(g, &l.bn2.beta),
                },
            })
            .collect();
        let decoder = DecoderVars {
            w_v: leaf(g, &self.decoder.w_v),
            w_k: leaf(g, &self.decoder.w_k),
            w_q: leaf(g, &self.decoder.w_q),
            w_out: leaf(g, &self.decoder.w_out),
        };
        ParamVars {
            customer_embed,
            depot_embed,
            edge_embed,
            layers,
            decoder,
            leaves,
        }
    }
}
