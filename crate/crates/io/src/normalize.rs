use vrp_core::{Instance, Node};

use crate::error::IoError;

/// An instance rescaled for the neural policy, plus the factors needed to
/// map costs back to original units.
#[derive(Debug, Clone)]
pub struct NormalizedInstance {
    pub instance: Instance,
    /// Multiply scaled-space costs by this to recover original units.
    pub scale: f64,
    /// Scheduling horizon in scaled units (1.0 when no time windows); the
    /// feature encoder divides time quantities by this.
    pub horizon: f64,
}

/// Rescales an instance into the unit square for the policy.
///
/// Coordinates are translated and divided by the larger bounding-box side,
/// preserving aspect ratio. All time quantities (windows, service times)
/// and the route limit are divided by the same factor so travel times stay
/// consistent with distances; demands are divided by the vehicle capacity.
/// Instances whose coordinates already lie in the unit square are returned
/// geometrically unchanged with scale 1, as are degenerate instances whose
/// nodes coincide.
pub fn normalize_for_policy(instance: &Instance) -> Result<NormalizedInstance, IoError> {
    let nodes = instance.nodes();
    let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
    let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for n in nodes {
        min_x = min_x.min(n.x);
        min_y = min_y.min(n.y);
        max_x = max_x.max(n.x);
        max_y = max_y.max(n.y);
    }
    let span = (max_x - min_x).max(max_y - min_y);
    let already_unit = min_x >= 0.0 && min_y >= 0.0 && max_x <= 1.0 && max_y <= 1.0;
    let identity = already_unit || span <= 0.0;
    let (scale, off_x, off_y) = if identity {
        (1.0, 0.0, 0.0)
    } else {
        (span, min_x, min_y)
    };

    let capacity = instance.capacity();
    let demand_div = if capacity > 0.0 { capacity } else { 1.0 };
    let scaled_nodes: Vec<Node> = nodes
        .iter()
        .map(|n| {
            let mut s = n.clone();
            s.x = (n.x - off_x) / scale;
            s.y = (n.y - off_y) / scale;
            s.demand = n.demand / demand_div;
            s.tw_early = n.tw_early / scale;
            s.tw_late = n.tw_late / scale;
            s.service_time = n.service_time / scale;
            s
        })
        .collect();

    let scaled = Instance::new(
        scaled_nodes,
        instance.num_depots(),
        1.0,
        instance.route_limit().map(|l| l / scale),
        instance.variant(),
    )?;
    let horizon = scaled.horizon().unwrap_or(1.0);
    Ok(NormalizedInstance {
        instance: scaled,
        scale,
        horizon,
    })
}
