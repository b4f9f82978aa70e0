use ndarray::Array2;
use vrp_core::Instance;

use crate::error::PolicyError;
use crate::params::{
    BnVars, DecoderVars, EgatLayerVars, ParamVars, PolicyConfig, PolicyParams, CUSTOMER_FEATURES,
    DEPOT_FEATURES, DYNAMIC_FEATURES,
};
use crate::state::RolloutState;
use crate::tape::{Graph, Var};

const LEAKY_SLOPE: f64 = 0.2;
const BN_EPS: f64 = 1e-5;

/// Batch-normalization execution mode: batch statistics while training,
/// frozen running statistics at inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnMode {
    Train,
    Eval,
}

/// Statistics observed by one normalization during a training forward pass,
/// in layer order; the trainer folds them into the running estimates.
#[derive(Debug, Clone)]
pub struct BnStats {
    pub mean: Array2<f64>,
    pub var: Array2<f64>,
}

/// Raw input feature matrices for one instance.
///
/// Customers carry coordinates, demand and window bounds; depots carry
/// coordinates only; edges carry the scalar distance. Demands are expected
/// pre-normalized by capacity; window features are divided by the horizon
/// here.
pub fn input_features(
    instance: &Instance,
    horizon: f64,
) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let g = instance.num_nodes();
    let m = instance.num_depots();
    let n = instance.num_customers();
    let h = if horizon > 0.0 { horizon } else { 1.0 };
    let mut depot = Array2::zeros((m, DEPOT_FEATURES));
    for d in 0..m {
        depot[[d, 0]] = instance.node(d).x;
        depot[[d, 1]] = instance.node(d).y;
    }
    let mut customer = Array2::zeros((n, CUSTOMER_FEATURES));
    for (row, c) in instance.customer_ids().enumerate() {
        let node = instance.node(c);
        customer[[row, 0]] = node.x;
        customer[[row, 1]] = node.y;
        customer[[row, 2]] = node.demand;
        customer[[row, 3]] = node.tw_early / h;
        customer[[row, 4]] = node.tw_late / h;
    }
    let mut edge = Array2::zeros((g * g, 1));
    for i in 0..g {
        for j in 0..g {
            edge[[i * g + j, 0]] = instance.dist(i, j);
        }
    }
    (depot, customer, edge)
}

fn linear(g: &mut Graph, x: Var, w: Var, b: Var) -> Var {
    let y = g.matmul_nt(x, w);
    g.add_row(y, b)
}

fn batch_norm(
    g: &mut Graph,
    x: Var,
    bn: BnVars,
    running: Option<(&Array2<f64>, &Array2<f64>)>,
    stats: &mut Vec<BnStats>,
) -> Var {
    let normalized = match running {
        Some((mean, var)) => {
            let mean_c = g.constant(mean.clone());
            let var_c = g.constant(var.clone());
            let centered = g.sub_row(x, mean_c);
            let std = g.sqrt_eps(var_c, BN_EPS);
            g.div_row(centered, std)
        }
        None => {
            let mean = g.mean_rows(x);
            let centered = g.sub_row(x, mean);
            let sq = g.mul(centered, centered);
            let var = g.mean_rows(sq);
            stats.push(BnStats {
                mean: g.value(mean).clone(),
                var: g.value(var).clone(),
            });
            let std = g.sqrt_eps(var, BN_EPS);
            g.div_row(centered, std)
        }
    };
    let scaled = g.mul_row(normalized, bn.gamma);
    g.add_row(scaled, bn.beta)
}

/// Embeds node and edge features: depots and customers through their own
/// linear maps, stacked depots-first; edge distances through the edge map.
/// For single-tour models every node uses the coordinate embedding.
pub fn embed_inputs(
    g: &mut Graph,
    pv: &ParamVars,
    config: &PolicyConfig,
    instance: &Instance,
    horizon: f64,
) -> Result<(Var, Var), PolicyError> {
    let (depot_f, customer_f, edge_f) = input_features(instance, horizon);
    let x0 = if config.customer_features {
        let ce = pv
            .customer_embed
            .ok_or_else(|| PolicyError::Config("missing customer embedding".into()))?;
        let dv = g.constant(depot_f);
        let cv = g.constant(customer_f);
        let depots = linear(g, dv, pv.depot_embed.w, pv.depot_embed.b);
        let customers = linear(g, cv, ce.w, ce.b);
        g.concat_rows(&[depots, customers])
    } else {
        // Adapted single-tour model: coordinates only, one shared map.
        let mut coords = Array2::zeros((instance.num_nodes(), DEPOT_FEATURES));
        for i in 0..instance.num_nodes() {
            coords[[i, 0]] = instance.node(i).x;
            coords[[i, 1]] = instance.node(i).y;
        }
        let cv = g.constant(coords);
        linear(g, cv, pv.depot_embed.w, pv.depot_embed.b)
    };
    let ev = g.constant(edge_f);
    let edges = linear(g, ev, pv.edge_embed.w, pv.edge_embed.b);
    Ok((x0, edges))
}

/// One edge-aware graph attention layer.
///
/// Attention scores combine both endpoint embeddings and the edge
/// embedding; the softmax runs over all nodes (depots included). The
/// weighted message sum passes through a residual + normalization block,
/// then a feed-forward block with its own residual + normalization.
pub fn egat_layer(
    g: &mut Graph,
    x: Var,
    edges: Var,
    layer: &EgatLayerVars,
    num_nodes: usize,
    bn: BnMode,
    running: Option<&crate::params::EgatLayer>,
    stats: &mut Vec<BnStats>,
) -> Var {
    let h = g.value(x).ncols();
    let he = g.value(edges).ncols();

    // a^T W1 [x_i || x_j || e_ij] decomposes into three per-part vectors.
    let w_eff = g.matmul(layer.attn_a, layer.attn_w); // 1 x (2h + he)
    let u = g.slice_cols(w_eff, 0, h);
    let v = g.slice_cols(w_eff, h, 2 * h);
    let we = g.slice_cols(w_eff, 2 * h, 2 * h + he);

    let p = g.matmul_nt(x, u); // g x 1 : contribution of x_i
    let q = g.matmul_nt(x, v); // g x 1 : contribution of x_j
    let r_flat = g.matmul_nt(edges, we); // g^2 x 1
    let r = g.reshape(r_flat, num_nodes, num_nodes);
    let qt = g.transpose(q);
    let with_cols = g.add_row(r, qt);
    let scores_raw = g.add_col(with_cols, p);
    let scores = g.leaky_relu(scores_raw, LEAKY_SLOPE);
    let alpha = g.softmax_rows(scores, None);

    let msg_in = g.matmul_nt(x, layer.msg_w);
    let mixed = g.matmul(alpha, msg_in);
    let resid1 = g.add(x, mixed);
    let norm1 = match bn {
        BnMode::Train => batch_norm(g, resid1, layer.bn1, None, stats),
        BnMode::Eval => {
            let params = running.expect("eval mode requires running stats");
            batch_norm(
                g,
                resid1,
                layer.bn1,
                Some((&params.bn1.run_mean, &params.bn1.run_var)),
                stats,
            )
        }
    };

    let ff_hidden = linear(g, norm1, layer.ff1.w, layer.ff1.b);
    let ff_act = g.relu(ff_hidden);
    let ff_out = linear(g, ff_act, layer.ff2.w, layer.ff2.b);
    let resid2 = g.add(norm1, ff_out);
    match bn {
        BnMode::Train => batch_norm(g, resid2, layer.bn2, None, stats),
        BnMode::Eval => {
            let params = running.expect("eval mode requires running stats");
            batch_norm(
                g,
                resid2,
                layer.bn2,
                Some((&params.bn2.run_mean, &params.bn2.run_var)),
                stats,
            )
        }
    }
}

/// Encoder output: final node embeddings plus the decoder's precomputed
/// key and value projections (whole and per attention head), all
/// graph-resident.
pub struct Encoded {
    pub x: Var,
    pub keys: Var,
    pub values: Var,
    pub head_keys: Vec<Var>,
    pub head_values: Vec<Var>,
    pub bn_stats: Vec<BnStats>,
    pub num_nodes: usize,
}

/// Runs the full encoder once per instance; embeddings are reused by every
/// decode step afterwards.
pub fn encode(
    g: &mut Graph,
    params: &PolicyParams,
    pv: &ParamVars,
    instance: &Instance,
    horizon: f64,
    bn: BnMode,
) -> Result<Encoded, PolicyError> {
    params.config.validate()?;
    if instance.variant().tsp_mode == params.config.customer_features {
        return Err(PolicyError::Config(if params.config.customer_features {
            "single-tour instance requires a TSP-adapted model".into()
        } else {
            "TSP-adapted model cannot decode routing instances".into()
        }));
    }
    let (mut x, edges) = embed_inputs(g, pv, &params.config, instance, horizon)?;
    let num_nodes = instance.num_nodes();
    let mut stats = Vec::new();
    for (idx, layer) in pv.layers.iter().enumerate() {
        x = egat_layer(
            g,
            x,
            edges,
            layer,
            num_nodes,
            bn,
            Some(&params.layers[idx]),
            &mut stats,
        );
        if g.value(x).iter().any(|v| !v.is_finite()) {
            return Err(PolicyError::NonFinite { layer: idx });
        }
    }
    let keys = g.matmul_nt(x, pv.decoder.w_k);
    let values = g.matmul_nt(x, pv.decoder.w_v);
    let hd = params.config.head_dim();
    let (mut head_keys, mut head_values) = (Vec::new(), Vec::new());
    for head in 0..params.config.heads {
        head_keys.push(g.slice_cols(keys, head * hd, (head + 1) * hd));
        head_values.push(g.slice_cols(values, head * hd, (head + 1) * hd));
    }
    Ok(Encoded {
        x,
        keys,
        values,
        head_keys,
        head_values,
        bn_stats: stats,
        num_nodes,
    })
}

/// Dynamic context features for one trajectory: remaining load fraction,
/// normalized elapsed time, normalized route length, open-route indicator.
pub fn dynamic_features(state: &RolloutState, instance: &Instance, horizon: f64) -> [f64; 4] {
    let cap = instance.capacity();
    let load_frac = if cap > 0.0 {
        (cap - state.peak_load.max(state.end_load)) / cap
    } else {
        0.0
    };
    let time_div = if horizon > 0.0 { horizon } else { 1.0 };
    let len_div = instance.route_limit().unwrap_or(1.0);
    [
        load_frac,
        state.clock / time_div,
        state.route_len / len_div,
        if instance.variant().open_routes { 1.0 } else { 0.0 },
    ]
}

/// One decoding step for a batch of trajectory states.
///
/// Builds the context query from the current-node embedding (plus dynamic
/// features unless the model is TSP-adapted), aggregates a glimpse with
/// multi-head attention over the precomputed keys/values, and produces
/// clipped single-head compatibilities. Masked nodes get probability
/// exactly zero. Returns the log-probability matrix (rows follow `states`).
pub fn decode_step(
    g: &mut Graph,
    enc: &Encoded,
    dec: &DecoderVars,
    config: &PolicyConfig,
    states: &[RolloutState],
    instance: &Instance,
    horizon: f64,
    mask: &Array2<bool>,
) -> Var {
    let rows = states.len();
    let currents: Vec<usize> = states.iter().map(|s| s.current).collect();
    let current_emb = g.gather_rows(enc.x, &currents);
    let query_in = if config.customer_features {
        let mut dyn_f = Array2::zeros((rows, DYNAMIC_FEATURES));
        for (r, state) in states.iter().enumerate() {
            let f = dynamic_features(state, instance, horizon);
            for (c, value) in f.iter().enumerate() {
                dyn_f[[r, c]] = *value;
            }
        }
        let dyn_v = g.constant(dyn_f);
        g.concat_cols(&[current_emb, dyn_v])
    } else {
        current_emb
    };
    let query_raw = g.matmul_nt(query_in, dec.w_q); // rows x h

    let heads = config.heads;
    let hd = config.head_dim();
    let query = g.scale(query_raw, 1.0 / (hd as f64).sqrt());
    let mut glimpses = Vec::with_capacity(heads);
    for head in 0..heads {
        let q_h = g.slice_cols(query, head * hd, (head + 1) * hd);
        let scores = g.matmul_nt(q_h, enc.head_keys[head]);
        let attn = g.softmax_rows(scores, Some(mask));
        glimpses.push(g.matmul(attn, enc.head_values[head]));
    }
    let glimpse = g.concat_cols(&glimpses);
    let context = g.matmul_nt(glimpse, dec.w_out); // rows x h

    let compat_raw = g.matmul_nt(context, enc.keys);
    let compat_scaled = g.scale(compat_raw, 1.0 / (config.h_x as f64).sqrt());
    let squashed = g.tanh_op(compat_scaled);
    let logits = g.scale(squashed, config.clip);
    g.log_softmax_rows(logits, Some(mask))
}
