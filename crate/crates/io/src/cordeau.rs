use vrp_core::{Instance, Node, VariantFlags};

use crate::error::IoError;

fn nums(line: &str, lineno: usize) -> Result<Vec<f64>, IoError> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| IoError::parse(lineno, format!("expected number, found '{tok}'")))
        })
        .collect()
}

/// Parses the Cordeau multi-depot VRP text format.
///
/// Layout: a header `type vehicles n m`, then one `duration capacity` line
/// per depot, then `n` customer rows (`id x y service demand ...`, trailing
/// visit-combination fields ignored), then `m` depot coordinate rows. A
/// positive duration in the depot lines activates the route length limit.
pub fn parse_cordeau(text: &str) -> Result<Instance, IoError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    if lines.is_empty() {
        return Err(IoError::parse(1, "empty file"));
    }
    let (lineno, header) = lines[0];
    let head = nums(header, lineno)?;
    if head.len() < 4 {
        return Err(IoError::parse(
            lineno,
            "header must be 'type vehicles customers depots'",
        ));
    }
    let kind = head[0] as i64;
    if kind != 2 {
        return Err(IoError::Unsupported(format!(
            "problem type {kind} (only type 2, MDVRP, is supported)"
        )));
    }
    let n = head[2] as usize;
    let m = head[3] as usize;
    if n == 0 || m == 0 {
        return Err(IoError::parse(lineno, "zero customers or depots in header"));
    }
    let expected = 1 + m + n + m;
    if lines.len() < expected {
        return Err(IoError::parse(
            lines.last().map(|(l, _)| *l).unwrap_or(1),
            format!("file has {} data lines, expected {expected}", lines.len()),
        ));
    }

    let mut duration = 0.0f64;
    let mut capacity = None;
    for i in 0..m {
        let (lineno, line) = lines[1 + i];
        let row = nums(line, lineno)?;
        if row.len() < 2 {
            return Err(IoError::parse(lineno, "depot line must be 'duration capacity'"));
        }
        duration = duration.max(row[0]);
        match capacity {
            None => capacity = Some(row[1]),
            Some(q) if (q - row[1]).abs() > 1e-9 => {
                return Err(IoError::Unsupported(
                    "heterogeneous vehicle capacities across depots".into(),
                ))
            }
            _ => {}
        }
    }
    let capacity = capacity.unwrap();

    // Customer rows come first in the file but depots occupy the first
    // instance indices.
    let mut nodes: Vec<Node> = Vec::with_capacity(m + n);
    for d in 0..m {
        let (lineno, line) = lines[1 + m + n + d];
        let row = nums(line, lineno)?;
        if row.len() < 3 {
            return Err(IoError::parse(lineno, "depot row must be 'id x y ...'"));
        }
        nodes.push(Node::depot(d, row[1], row[2]));
    }
    for c in 0..n {
        let (lineno, line) = lines[1 + m + c];
        let row = nums(line, lineno)?;
        if row.len() < 5 {
            return Err(IoError::parse(
                lineno,
                "customer row must be 'id x y service demand ...'",
            ));
        }
        let mut node = Node::customer(m + c, row[1], row[2], row[4]);
        node.service_time = row[3];
        nodes.push(node);
    }

    let variant = VariantFlags {
        multi_depot: m > 1,
        duration_limit: duration > 0.0,
        ..VariantFlags::default()
    };
    let route_limit = (duration > 0.0).then_some(duration);
    Ok(Instance::new(nodes, m, capacity, route_limit, variant)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
2 4 5 2
0 80
0 80
1 10.0 10.0 0 7 1 4 1 2 4 8
2 20.0 10.0 0 30 1 4 1 2 4 8
3 30.0 10.0 0 16 1 4 1 2 4 8
4 40.0 10.0 0 9 1 4 1 2 4 8
5 50.0 10.0 0 21 1 4 1 2 4 8
6 0.0 0.0 0 0 0 0 0
7 60.0 0.0 0 0 0 0 0
";

    #[test]
    fn parses_sample_mdvrp() {
        let inst = parse_cordeau(SAMPLE).unwrap();
        assert_eq!(inst.num_depots(), 2);
        assert_eq!(inst.num_customers(), 5);
        assert!(inst.variant().multi_depot);
        assert!(!inst.variant().duration_limit);
        assert_eq!(inst.capacity(), 80.0);
        assert_eq!(inst.node(0).x, 0.0);
        assert_eq!(inst.node(2).x, 10.0);
        assert_eq!(inst.node(2).demand, 7.0);
    }

    #[test]
    fn duration_header_sets_route_limit() {
        let text = SAMPLE.replace("0 80", "200 80");
        let inst = parse_cordeau(&text).unwrap();
        assert!(inst.variant().duration_limit);
        assert_eq!(inst.route_limit(), Some(200.0));
    }

    #[test]
    fn malformed_row_reports_line_number() {
        let text = SAMPLE.replace("3 30.0 10.0 0 16 1 4 1 2 4 8", "3 30.0 oops");
        match parse_cordeau(&text) {
            Err(IoError::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
