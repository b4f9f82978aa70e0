use vrp_core::{Instance, Node, VariantFlags};

use crate::error::IoError;
use crate::LoadedInstance;

/// Parses the Solomon VRPTW layout: an instance name, a vehicle
/// `NUMBER CAPACITY` pair, then rows of
/// `id x y demand ready due service`. Row id 0 is the depot and its window
/// supplies the scheduling horizon.
pub fn parse_solomon(text: &str) -> Result<LoadedInstance, IoError> {
    let mut name = String::new();
    let mut capacity: Option<f64> = None;
    let mut rows: Vec<(usize, [f64; 7])> = Vec::new();
    let mut after_vehicle_header = false;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if name.is_empty() {
            name = line.to_string();
            continue;
        }
        let upper = line.to_ascii_uppercase();
        if upper.starts_with("VEHICLE") || upper.starts_with("CUSTOMER") {
            continue;
        }
        if upper.contains("CAPACITY") || upper.contains("CUST NO") {
            after_vehicle_header = upper.contains("CAPACITY");
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let parsed: Result<Vec<f64>, _> = toks.iter().map(|t| t.parse::<f64>()).collect();
        let values = parsed.map_err(|_| {
            IoError::parse(lineno, format!("expected numeric row, found '{line}'"))
        })?;
        if after_vehicle_header && capacity.is_none() {
            if values.len() < 2 {
                return Err(IoError::parse(lineno, "vehicle row must be 'number capacity'"));
            }
            capacity = Some(values[1]);
            continue;
        }
        if values.len() < 7 {
            return Err(IoError::parse(
                lineno,
                "customer row must be 'id x y demand ready due service'",
            ));
        }
        rows.push((
            lineno,
            [
                values[0], values[1], values[2], values[3], values[4], values[5], values[6],
            ],
        ));
    }

    let capacity = capacity.ok_or_else(|| IoError::parse(1, "missing vehicle capacity"))?;
    if rows.is_empty() {
        return Err(IoError::parse(1, "no customer rows"));
    }
    let (depot_line, depot_row) = rows[0];
    if depot_row[0] as usize != 0 {
        return Err(IoError::parse(depot_line, "first row must be depot id 0"));
    }

    let mut nodes = Vec::with_capacity(rows.len());
    let mut depot = Node::depot(0, depot_row[1], depot_row[2]);
    depot.tw_early = depot_row[4];
    depot.tw_late = depot_row[5];
    nodes.push(depot);
    for (pos, &(lineno, row)) in rows.iter().enumerate().skip(1) {
        if row[4] > row[5] {
            return Err(IoError::parse(lineno, "ready time after due time"));
        }
        let mut node = Node::customer(pos, row[1], row[2], row[3]);
        node.tw_early = row[4];
        node.tw_late = row[5];
        node.service_time = row[6];
        nodes.push(node);
    }

    let variant = VariantFlags {
        time_windows: true,
        ..VariantFlags::default()
    };
    let instance = Instance::new(nodes, 1, capacity, None, variant)?;
    Ok(LoadedInstance {
        name,
        instance,
        rounded: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use vrp_core::{check_feasibility, Route, Solution};

    const SAMPLE: &str = "\
TOY5

VEHICLE
NUMBER     CAPACITY
  3         100

CUSTOMER
CUST NO.  XCOORD.   YCOORD.    DEMAND   READY TIME  DUE DATE   SERVICE   TIME

    0      40         50          0          0       240          0
    1      45         68         10          0       200         10
    2      45         70         30         50       200         10
    3      42         66         10         20        80         10
    4      42         68         10         30       120         10
    5      42         65         10         40       100         10
";

    #[test]
    fn parses_vrptw_instance() {
        let loaded = parse_solomon(SAMPLE).unwrap();
        let inst = &loaded.instance;
        assert_eq!(loaded.name, "TOY5");
        assert!(inst.variant().time_windows);
        assert_eq!(inst.num_customers(), 5);
        assert_eq!(inst.capacity(), 100.0);
        assert_eq!(inst.horizon(), Some(240.0));
        assert_eq!(inst.node(2).tw_early, 50.0);
    }

    #[test]
    fn authored_single_customer_route_is_checkable() {
        let loaded = parse_solomon(SAMPLE).unwrap();
        let inst = &loaded.instance;
        // Serve every customer on its own route: trivially feasible here.
        let sol = Solution::new(
            inst.customer_ids()
                .map(|c| Route::new(0, vec![c]))
                .collect(),
        );
        assert!(check_feasibility(&sol, inst).feasible);
    }

    #[test]
    fn malformed_row_reports_line() {
        let broken = SAMPLE.replace("    3      42", "    3      xx");
        match parse_solomon(&broken) {
            Err(IoError::Parse { line, .. }) => assert_eq!(line, 13),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
