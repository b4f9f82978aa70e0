//! Exact micro-scale oracle: optimal CVRP objective by dynamic programming
//! over customer subsets (optimal open path cost per subset via
//! Held-Karp, then a set-partition DP over feasible routes).

use vrp_core::{Instance, VariantFlags};
use vrp_io::{generate_instance, GenConfig};
use vrp_solver::{SolveConfig, SolveMode, Solver};

/// Exact optimum for a single-depot capacitated instance with n <= 12.
pub fn exact_cvrp_optimum(inst: &Instance) -> f64 {
    let n = inst.num_customers();
    let ids: Vec<usize> = inst.customer_ids().collect();
    let full = 1usize << n;

    // Held-Karp over each subset: cheapest depot-start path ending at i.
    let mut path = vec![vec![f64::INFINITY; n]; full];
    for (i, &c) in ids.iter().enumerate() {
        path[1 << i][i] = inst.dist(0, c);
    }
    for mask in 1..full {
        for last in 0..n {
            if mask & (1 << last) == 0 || !path[mask][last].is_finite() {
                continue;
            }
            for next in 0..n {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let cand = path[mask][last] + inst.dist(ids[last], ids[next]);
                let m2 = mask | (1 << next);
                if cand < path[m2][next] {
                    path[m2][next] = cand;
                }
            }
        }
    }
    // Cheapest feasible closed route per subset.
    let mut route_cost = vec![f64::INFINITY; full];
    for mask in 1..full {
        let demand: f64 = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| inst.node(ids[i]).demand)
            .sum();
        if demand > inst.capacity() {
            continue;
        }
        for last in 0..n {
            if mask & (1 << last) != 0 && path[mask][last].is_finite() {
                let closed = path[mask][last] + inst.dist(ids[last], 0);
                if closed < route_cost[mask] {
                    route_cost[mask] = closed;
                }
            }
        }
    }
    // Partition DP.
    let mut dp = vec![f64::INFINITY; full];
    dp[0] = 0.0;
    for mask in 1..full {
        // Iterate submasks containing the lowest set bit to avoid
        // counting partitions twice.
        let low = mask & mask.wrapping_neg();
        let mut sub = mask;
        while sub > 0 {
            if sub & low != 0 && route_cost[sub].is_finite() && dp[mask ^ sub].is_finite() {
                let cand = dp[mask ^ sub] + route_cost[sub];
                if cand < dp[mask] {
                    dp[mask] = cand;
                }
            }
            sub = (sub - 1) & mask;
        }
    }
    dp[full - 1]
}

#[test]
fn quality_probe_200_micro_instances() {
    let mut optimal = 0;
    let mut within_two_percent = 0;
    let total = 200;
    for seed in 0..total {
        let n = 5 + (seed as usize % 4); // 5..=8
        let inst = generate_instance(&GenConfig::new(VariantFlags::cvrp(), n, 1, 10_000 + seed))
            .unwrap();
        let exact = exact_cvrp_optimum(&inst);
        let cfg = SolveConfig {
            mode: SolveMode::GreedyLs,
            seed,
            ..SolveConfig::default()
        };
        let solver = Solver::new(cfg).unwrap();
        let (_, stats) = solver.solve(&inst).unwrap();
        assert!(stats.final_cost >= exact - 1e-9, "beat the exact optimum?!");
        if stats.final_cost <= exact + 1e-6 {
            optimal += 1;
        }
        if stats.final_cost <= exact * 1.02 + 1e-9 {
            within_two_percent += 1;
        }
    }
    println!("optimal {optimal}/{total}, within 2% {within_two_percent}/{total}");
    assert!(optimal * 100 >= total * 90);
    assert_eq!(within_two_percent, total);
}
