use vrp_core::{Instance, Node};

use crate::error::PolicyError;

/// The eight axis-swap/reflection isometries of the unit square, identity
/// first. Demands, windows and flags are untouched; distance matrices are
/// recomputed but agree with the original up to rounding noise.
pub fn augment_x8(instance: &Instance) -> Result<Vec<Instance>, PolicyError> {
    let maps: [fn(f64, f64) -> (f64, f64); 8] = [
        |x, y| (x, y),
        |x, y| (y, x),
        |x, y| (x, 1.0 - y),
        |x, y| (y, 1.0 - x),
        |x, y| (1.0 - x, y),
        |x, y| (1.0 - y, x),
        |x, y| (1.0 - x, 1.0 - y),
        |x, y| (1.0 - y, 1.0 - x),
    ];
    maps.iter()
        .map(|map| {
            let nodes: Vec<Node> = instance
                .nodes()
                .iter()
                .map(|n| {
                    let mut n = n.clone();
                    let (x, y) = map(n.x, n.y);
                    n.x = x;
                    n.y = y;
                    n
                })
                .collect();
            Instance::new(
                nodes,
                instance.num_depots(),
                instance.capacity(),
                instance.route_limit(),
                instance.variant(),
            )
            .map_err(PolicyError::from)
        })
        .collect()
}
