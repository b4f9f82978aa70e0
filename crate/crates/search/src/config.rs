use std::time::Duration;

use vrp_core::PenaltyWeights;

/// Local-search configuration.
///
/// The search regime keeps penalties small so the sweep can cut through
/// infeasible territory; the fix regime makes violations uncompetitive.
#[derive(Debug, Clone)]
pub struct LsConfig {
    pub iterations: usize,
    /// Largest segment length for the segment-exchange operator.
    pub x_max: usize,
    /// Granular neighborhood size.
    pub gamma: usize,
    pub search_weights: PenaltyWeights,
    pub fix_weights: PenaltyWeights,
    pub seed: u64,
    /// Wall-clock cap; iterations stop early once exceeded.
    pub time_budget: Option<Duration>,
}

impl Default for LsConfig {
    fn default() -> Self {
        LsConfig {
            iterations: 50,
            x_max: 3,
            gamma: 20,
            search_weights: PenaltyWeights::uniform(0.1),
            fix_weights: PenaltyWeights::uniform(1e4),
            seed: 0,
            time_budget: None,
        }
    }
}

impl LsConfig {
    /// Deeper profile for solving individual instances.
    pub fn single_instance() -> Self {
        LsConfig {
            iterations: 250,
            ..LsConfig::default()
        }
    }

    /// Rescales the capacity penalty to the instance's own units.
    ///
    /// The defaults are calibrated for unit-square coordinates with
    /// single-digit demands, where one load unit trades against roughly a
    /// tenth of a typical inter-node distance. Benchmark files measure
    /// distance in tens of units and demand in tens of load units, so the
    /// load-to-distance exchange rate must follow, or the small-penalty
    /// sweep collapses every route into one overloaded tour. Time and
    /// duration violations are already distance-commensurate and keep
    /// their weights.
    pub fn scaled_for(&self, instance: &vrp_core::Instance) -> LsConfig {
        let g = instance.num_nodes();
        let mut dist_sum = 0.0;
        let mut dist_count = 0usize;
        for i in 0..g {
            for j in (i + 1)..g {
                dist_sum += instance.dist(i, j);
                dist_count += 1;
            }
        }
        let mean_dist = if dist_count > 0 {
            dist_sum / dist_count as f64
        } else {
            0.0
        };
        let demands: Vec<f64> = instance
            .customer_ids()
            .map(|c| instance.node(c).demand)
            .filter(|&d| d > 0.0)
            .collect();
        if demands.is_empty() || mean_dist <= 0.0 {
            return self.clone();
        }
        let mean_demand = demands.iter().sum::<f64>() / demands.len() as f64;
        let ratio = (mean_dist / mean_demand) / 0.1;
        let mut scaled = self.clone();
        scaled.search_weights.capacity *= ratio;
        scaled.fix_weights.capacity *= ratio;
        scaled
    }
}
