use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use vrp_core::{Instance, Node, VariantFlags};

use crate::error::IoError;

/// Time-window generation parameters.
///
/// Windows are centered uniformly between the earliest possible arrival
/// from the nearest depot and the latest center that still permits service
/// plus the return trip within the horizon. Widths are drawn uniformly from
/// `[width_min, width_max]` and the window close is clamped so the depot
/// horizon always contains the full visit. This construction guarantees
/// every customer is individually servable from a depot; it approximates
/// the classic benchmark generators rather than reproducing them exactly.
#[derive(Debug, Clone, Copy)]
pub struct TwParams {
    pub horizon: f64,
    pub service_time: f64,
    pub width_min: f64,
    pub width_max: f64,
}

impl Default for TwParams {
    fn default() -> Self {
        TwParams {
            horizon: 4.6,
            service_time: 0.2,
            width_min: 0.4,
            width_max: 1.2,
        }
    }
}

/// Configuration for seeded random instance generation.
#[derive(Debug, Clone)]
pub struct GenConfig {
    pub variant: VariantFlags,
    /// Customer count.
    pub n: usize,
    /// Depot count (forced to 1 for single-depot variants).
    pub m: usize,
    pub seed: u64,
    pub capacity: f64,
    pub backhaul_fraction: f64,
    pub route_limit: f64,
    pub tw: TwParams,
}

impl GenConfig {
    pub fn new(variant: VariantFlags, n: usize, m: usize, seed: u64) -> Self {
        GenConfig {
            variant,
            n,
            m,
            seed,
            capacity: 50.0,
            backhaul_fraction: 0.20,
            route_limit: 3.0,
            tw: TwParams::default(),
        }
    }

    fn validate(&self) -> Result<(), IoError> {
        if self.n == 0 {
            return Err(IoError::InvalidConfig("customer count must be >= 1".into()));
        }
        if self.m == 0 {
            return Err(IoError::InvalidConfig("depot count must be >= 1".into()));
        }
        if !self.variant.is_valid() {
            return Err(IoError::InvalidConfig("conflicting variant flags".into()));
        }
        if !self.variant.multi_depot && self.m != 1 {
            return Err(IoError::InvalidConfig(
                "single-depot variants require m = 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.backhaul_fraction) {
            return Err(IoError::InvalidConfig(
                "backhaul fraction must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Draws per-node `(tw_early, tw_late, service_time)` triples for a node
/// skeleton whose coordinates and depots are already fixed. Depots receive
/// the full horizon `[0, H]` and zero service time.
pub fn generate_time_windows(
    nodes: &[Node],
    depot_count: usize,
    tw: &TwParams,
    rng: &mut ChaCha8Rng,
) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::with_capacity(nodes.len());
    for (i, node) in nodes.iter().enumerate() {
        if i < depot_count {
            out.push((0.0, tw.horizon, 0.0));
            continue;
        }
        // Distance from depot 0 bounds both ends of the window, so every
        // customer stays servable by a vehicle departing depot 0 at time 0.
        let dep = &nodes[0];
        let d = ((dep.x - node.x).powi(2) + (dep.y - node.y).powi(2)).sqrt();
        let latest_center = (tw.horizon - d - tw.service_time).max(d);
        let center = if latest_center > d {
            rng.random_range(d..latest_center)
        } else {
            d
        };
        let width = rng.random_range(tw.width_min..=tw.width_max);
        let early = (center - width / 2.0).max(0.0);
        let late = (center + width / 2.0)
            .min(tw.horizon - d - tw.service_time)
            .max(center);
        out.push((early, late, tw.service_time));
    }
    out
}

/// Generates a random instance: coordinates i.i.d. uniform on the unit
/// square, integer demands uniform on {1, ..., 9}, plus variant-specific
/// attributes (backhaul marks, route length limit, time windows). Pure
/// function of the configuration, including its seed.
pub fn generate_instance(config: &GenConfig) -> Result<Instance, IoError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let v = config.variant;
    let m = config.m;
    let g = m + config.n;

    let mut nodes = Vec::with_capacity(g);
    for i in 0..m {
        nodes.push(Node::depot(i, rng.random::<f64>(), rng.random::<f64>()));
    }
    for i in m..g {
        let x = rng.random::<f64>();
        let y = rng.random::<f64>();
        let demand = if v.tsp_mode {
            0.0
        } else {
            rng.random_range(1..=9) as f64
        };
        nodes.push(Node::customer(i, x, y, demand));
    }

    if v.backhaul {
        let count = (config.backhaul_fraction * config.n as f64).floor() as usize;
        let picks = rand::seq::index::sample(&mut rng, config.n, count);
        for idx in picks.iter() {
            nodes[m + idx].is_backhaul = true;
        }
    }

    if v.time_windows {
        let windows = generate_time_windows(&nodes, m, &config.tw, &mut rng);
        for (node, (early, late, service)) in nodes.iter_mut().zip(windows) {
            node.tw_early = early;
            node.tw_late = late;
            node.service_time = service;
        }
    }

    let route_limit = v.duration_limit.then_some(config.route_limit);
    Ok(Instance::new(nodes, m, config.capacity, route_limit, v)?)
}
