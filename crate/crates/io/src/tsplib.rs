use std::collections::HashMap;

use vrp_core::{build_distance_matrix, Instance, Node, NodeKind, VariantFlags};

use crate::error::IoError;
use crate::LoadedInstance;

/// Parses the TSPLIB/CVRPLIB keyword-section format (EUC_2D only).
///
/// `TYPE: TSP` files become single-tour instances; `TYPE: CVRP` files become
/// single-depot capacitated instances with the depot moved to index 0.
/// Instances named `X-n...` (CVRPLIB Set-X) follow the convention of
/// comparing objectives on distances rounded to the nearest integer; for
/// those the distance matrix is rounded entrywise and the result is flagged.
pub fn parse_tsplib_like(text: &str) -> Result<LoadedInstance, IoError> {
    let mut header: HashMap<String, String> = HashMap::new();
    let mut coords: Vec<(usize, f64, f64)> = Vec::new();
    let mut demands: HashMap<usize, f64> = HashMap::new();
    let mut depot_ids: Vec<usize> = Vec::new();

    #[derive(PartialEq)]
    enum Section {
        Header,
        Coords,
        Demands,
        Depots,
    }
    let mut section = Section::Header;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let upper = line.to_ascii_uppercase();
        if upper == "EOF" {
            break;
        }
        match upper.as_str() {
            "NODE_COORD_SECTION" => {
                section = Section::Coords;
                continue;
            }
            "DEMAND_SECTION" => {
                section = Section::Demands;
                continue;
            }
            "DEPOT_SECTION" => {
                section = Section::Depots;
                continue;
            }
            _ => {}
        }
        match section {
            Section::Header => {
                if let Some((key, value)) = line.split_once(':') {
                    header.insert(
                        key.trim().to_ascii_uppercase(),
                        value.trim().to_string(),
                    );
                } else {
                    return Err(IoError::parse(lineno, format!("unexpected line '{line}'")));
                }
            }
            Section::Coords => {
                let toks: Vec<&str> = line.split_whitespace().collect();
                if toks.len() < 3 {
                    return Err(IoError::parse(lineno, "coordinate row must be 'id x y'"));
                }
                let id: usize = toks[0]
                    .parse()
                    .map_err(|_| IoError::parse(lineno, "bad node id"))?;
                let x: f64 = toks[1]
                    .parse()
                    .map_err(|_| IoError::parse(lineno, "bad x coordinate"))?;
                let y: f64 = toks[2]
                    .parse()
                    .map_err(|_| IoError::parse(lineno, "bad y coordinate"))?;
                coords.push((id, x, y));
            }
            Section::Demands => {
                let toks: Vec<&str> = line.split_whitespace().collect();
                if toks.len() < 2 {
                    return Err(IoError::parse(lineno, "demand row must be 'id demand'"));
                }
                let id: usize = toks[0]
                    .parse()
                    .map_err(|_| IoError::parse(lineno, "bad node id"))?;
                let d: f64 = toks[1]
                    .parse()
                    .map_err(|_| IoError::parse(lineno, "bad demand"))?;
                demands.insert(id, d);
            }
            Section::Depots => {
                let tok = line.split_whitespace().next().unwrap();
                let id: i64 = tok
                    .parse()
                    .map_err(|_| IoError::parse(lineno, "bad depot id"))?;
                if id < 0 {
                    section = Section::Header;
                } else {
                    depot_ids.push(id as usize);
                }
            }
        }
    }

    let name = header.get("NAME").cloned().unwrap_or_default();
    let kind = header
        .get("TYPE")
        .cloned()
        .unwrap_or_default()
        .to_ascii_uppercase();
    let ewt = header
        .get("EDGE_WEIGHT_TYPE")
        .cloned()
        .unwrap_or_else(|| "EUC_2D".into());
    if ewt.to_ascii_uppercase() != "EUC_2D" {
        return Err(IoError::Unsupported(format!("EDGE_WEIGHT_TYPE {ewt}")));
    }
    let dimension: usize = header
        .get("DIMENSION")
        .and_then(|d| d.trim().parse().ok())
        .unwrap_or(coords.len());
    if coords.len() != dimension {
        return Err(IoError::parse(
            1,
            format!("DIMENSION {dimension} but {} coordinate rows", coords.len()),
        ));
    }

    match kind.as_str() {
        "TSP" => {
            let mut nodes: Vec<Node> = Vec::with_capacity(coords.len());
            for (pos, &(_, x, y)) in coords.iter().enumerate() {
                let mut node = Node::customer(pos, x, y, 0.0);
                if pos == 0 {
                    node.kind = NodeKind::Depot;
                }
                nodes.push(node);
            }
            let instance = Instance::new(nodes, 1, 1.0, None, VariantFlags::tsp())?;
            Ok(LoadedInstance {
                name,
                instance,
                rounded: false,
            })
        }
        "CVRP" => {
            let capacity: f64 = header
                .get("CAPACITY")
                .and_then(|c| c.trim().parse().ok())
                .ok_or_else(|| IoError::parse(1, "CVRP file missing CAPACITY"))?;
            let depot_file_id = *depot_ids
                .first()
                .ok_or_else(|| IoError::parse(1, "CVRP file missing DEPOT_SECTION"))?;
            // Depot first, customers keep their file order.
            let mut ordered: Vec<(usize, f64, f64)> = Vec::with_capacity(coords.len());
            for &(id, x, y) in &coords {
                if id == depot_file_id {
                    ordered.insert(0, (id, x, y));
                } else {
                    ordered.push((id, x, y));
                }
            }
            let mut nodes: Vec<Node> = Vec::with_capacity(ordered.len());
            for (pos, &(id, x, y)) in ordered.iter().enumerate() {
                if pos == 0 {
                    nodes.push(Node::depot(0, x, y));
                } else {
                    let demand = *demands.get(&id).ok_or_else(|| {
                        IoError::parse(1, format!("node {id} missing from DEMAND_SECTION"))
                    })?;
                    nodes.push(Node::customer(pos, x, y, demand));
                }
            }
            let rounded = name.to_ascii_uppercase().starts_with("X-N");
            let pts: Vec<(f64, f64)> = nodes.iter().map(|n| (n.x, n.y)).collect();
            let mut dist = build_distance_matrix(&pts)?;
            if rounded {
                for d in dist.iter_mut() {
                    *d = d.round();
                }
            }
            let instance = Instance::with_distance_matrix(
                nodes,
                1,
                capacity,
                None,
                VariantFlags::cvrp(),
                dist,
            )?;
            Ok(LoadedInstance {
                name,
                instance,
                rounded,
            })
        }
        other => Err(IoError::Unsupported(format!("TYPE {other}"))),
    }
}
