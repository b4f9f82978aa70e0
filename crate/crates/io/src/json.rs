use serde::{Deserialize, Serialize};
use vrp_core::{Instance, Node, VariantFlags};

use crate::error::IoError;

const FORMAT_VERSION: u32 = 1;

/// Canonical JSON instance document, version 1. Mirrors the instance fields
/// so fixtures stay diffable; the distance matrix is recomputed on load
/// unless a rounded matrix is marked.
#[derive(Debug, Serialize, Deserialize)]
struct InstanceDoc {
    format_version: u32,
    variant: VariantFlags,
    depots: usize,
    capacity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    route_limit: Option<f64>,
    #[serde(default)]
    rounded_distances: bool,
    nodes: Vec<NodeDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeDoc {
    x: f64,
    y: f64,
    #[serde(default)]
    demand: f64,
    #[serde(default)]
    backhaul: bool,
    #[serde(default)]
    tw: Option<(f64, f64)>,
    #[serde(default)]
    service: f64,
}

pub fn instance_to_json(instance: &Instance) -> String {
    instance_to_json_with(instance, false)
}

pub fn instance_to_json_with(instance: &Instance, rounded: bool) -> String {
    let doc = InstanceDoc {
        format_version: FORMAT_VERSION,
        variant: instance.variant(),
        depots: instance.num_depots(),
        capacity: instance.capacity(),
        route_limit: instance.route_limit(),
        rounded_distances: rounded,
        nodes: instance
            .nodes()
            .iter()
            .map(|n| NodeDoc {
                x: n.x,
                y: n.y,
                demand: n.demand,
                backhaul: n.is_backhaul,
                tw: instance
                    .variant()
                    .time_windows
                    .then_some((n.tw_early, n.tw_late)),
                service: n.service_time,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("instance serialization cannot fail")
}

pub fn instance_from_json(text: &str) -> Result<Instance, IoError> {
    let doc: InstanceDoc = serde_json::from_str(text)?;
    if doc.format_version != FORMAT_VERSION {
        return Err(IoError::Unsupported(format!(
            "instance document version {}",
            doc.format_version
        )));
    }
    let nodes: Vec<Node> = doc
        .nodes
        .iter()
        .enumerate()
        .map(|(i, nd)| {
            let mut node = if i < doc.depots {
                Node::depot(i, nd.x, nd.y)
            } else {
                Node::customer(i, nd.x, nd.y, nd.demand)
            };
            if i >= doc.depots {
                node.is_backhaul = nd.backhaul;
            }
            if let Some((early, late)) = nd.tw {
                node.tw_early = early;
                node.tw_late = late;
            }
            node.service_time = nd.service;
            node
        })
        .collect();
    let instance = if doc.rounded_distances {
        let coords: Vec<(f64, f64)> = nodes.iter().map(|n| (n.x, n.y)).collect();
        let mut dist = vrp_core::build_distance_matrix(&coords)?;
        for d in dist.iter_mut() {
            *d = d.round();
        }
        Instance::with_distance_matrix(
            nodes,
            doc.depots,
            doc.capacity,
            doc.route_limit,
            doc.variant,
            dist,
        )?
    } else {
        Instance::new(nodes, doc.depots, doc.capacity, doc.route_limit, doc.variant)?
    };
    Ok(instance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_instance, GenConfig};
    use vrp_core::NodeKind;

    #[test]
    fn json_round_trip_is_identity() {
        let variant = VariantFlags {
            multi_depot: true,
            time_windows: true,
            ..VariantFlags::default()
        };
        let inst = generate_instance(&GenConfig::new(variant, 15, 3, 42)).unwrap();
        let text = instance_to_json(&inst);
        let back = instance_from_json(&text).unwrap();
        assert_eq!(inst.nodes(), back.nodes());
        assert_eq!(inst.capacity(), back.capacity());
        assert_eq!(inst.variant(), back.variant());
        // Idempotent on the document representation.
        assert_eq!(text, instance_to_json(&back));
    }

    #[test]
    fn depot_kind_is_positional() {
        let inst = generate_instance(&GenConfig::new(VariantFlags::mdvrp(), 5, 2, 1)).unwrap();
        let back = instance_from_json(&instance_to_json(&inst)).unwrap();
        assert_eq!(back.node(0).kind, NodeKind::Depot);
        assert_eq!(back.node(2).kind, NodeKind::Customer);
    }
}
