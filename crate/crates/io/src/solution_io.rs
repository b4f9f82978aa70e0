use std::path::Path;

use vrp_core::{Instance, Route, Solution};

use crate::error::IoError;

/// Renders a solution in the line-oriented text format:
///
/// ```text
/// Route #1 (depot 0): 5 12 7
/// Route #2 (depot 1): 9 3
/// Cost 123.456
/// ```
///
/// Customer tokens are instance node indices. The cost is printed with
/// three decimals.
pub fn format_solution(solution: &Solution, cost: f64) -> String {
    let mut out = String::new();
    for (k, route) in solution.routes.iter().enumerate() {
        let stops: Vec<String> = route.customers.iter().map(|c| c.to_string()).collect();
        out.push_str(&format!(
            "Route #{} (depot {}): {}\n",
            k + 1,
            route.depot,
            stops.join(" ")
        ));
    }
    out.push_str(&format!("Cost {cost:.3}\n"));
    out
}

pub fn write_solution(solution: &Solution, cost: f64, path: &Path) -> Result<(), IoError> {
    std::fs::write(path, format_solution(solution, cost))
        .map_err(|e| IoError::File(path.display().to_string(), e.to_string()))
}

/// Parses the solution text format, validating indices against the instance.
pub fn parse_solution(text: &str, instance: &Instance) -> Result<(Solution, f64), IoError> {
    let mut routes = Vec::new();
    let mut cost = None;
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("Cost") {
            let value: f64 = rest
                .trim()
                .parse()
                .map_err(|_| IoError::SolutionFormat(format!("bad cost line '{line}'")))?;
            cost = Some(value);
            continue;
        }
        if !line.starts_with("Route") {
            return Err(IoError::SolutionFormat(format!("unexpected line '{line}'")));
        }
        let open = line
            .find('(')
            .ok_or_else(|| IoError::SolutionFormat("missing depot annotation".into()))?;
        let close = line
            .find(')')
            .ok_or_else(|| IoError::SolutionFormat("missing depot annotation".into()))?;
        let depot: usize = line[open + 1..close]
            .trim_start_matches("depot")
            .trim()
            .parse()
            .map_err(|_| IoError::SolutionFormat("bad depot index".into()))?;
        if depot >= instance.num_depots() {
            return Err(IoError::SolutionFormat(format!(
                "depot {depot} out of range"
            )));
        }
        let colon = line
            .rfind(':')
            .ok_or_else(|| IoError::SolutionFormat("missing ':' in route line".into()))?;
        let mut customers = Vec::new();
        for tok in line[colon + 1..].split_whitespace() {
            let c: usize = tok
                .parse()
                .map_err(|_| IoError::SolutionFormat(format!("bad customer token '{tok}'")))?;
            if c < instance.num_depots() || c >= instance.num_nodes() {
                return Err(IoError::SolutionFormat(format!(
                    "customer {c} out of range"
                )));
            }
            customers.push(c);
        }
        routes.push(Route::new(depot, customers));
    }
    let cost = cost.ok_or_else(|| IoError::SolutionFormat("missing cost line".into()))?;
    Ok((Solution::new(routes), cost))
}

pub fn read_solution(path: &Path, instance: &Instance) -> Result<(Solution, f64), IoError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| IoError::File(path.display().to_string(), e.to_string()))?;
    parse_solution(&text, instance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_instance, GenConfig};
    use vrp_core::{evaluate_solution, PenaltyWeights, VariantFlags};

    #[test]
    fn write_read_round_trip() {
        let inst = generate_instance(&GenConfig::new(VariantFlags::mdvrp(), 8, 2, 5)).unwrap();
        let sol = Solution::new(vec![
            Route::new(0, vec![2, 3, 4]),
            Route::new(1, vec![5, 6, 7, 8, 9]),
        ]);
        let cost = evaluate_solution(&sol, &inst, &PenaltyWeights::ZERO)
            .unwrap()
            .distance;
        let text = format_solution(&sol, cost);
        let (back, parsed_cost) = parse_solution(&text, &inst).unwrap();
        assert_eq!(back, sol);
        assert!((parsed_cost - cost).abs() < 5e-4); // three printed decimals
    }

    #[test]
    fn out_of_range_customer_is_rejected() {
        let inst = generate_instance(&GenConfig::new(VariantFlags::cvrp(), 4, 1, 5)).unwrap();
        let text = "Route #1 (depot 0): 2 9\nCost 1.0\n";
        assert!(matches!(
            parse_solution(text, &inst),
            Err(IoError::SolutionFormat(_))
        ));
    }
}
