//! Pipeline composition and harness behavior.

use vrp_core::{check_feasibility, evaluate_solution, PenaltyWeights, VariantFlags};
use vrp_io::{generate_instance, instance_to_json, GenConfig};
use vrp_policy::{PolicyConfig, PolicyParams};
use vrp_solver::{benchmark, compute_rpd, SolveConfig, SolveMode, Solver};

fn desk_params() -> PolicyParams {
    PolicyParams::init(PolicyConfig::desk(), VariantFlags::mdvrp(), 33)
}

#[test]
fn random_ls_with_zero_iterations_is_init_or_one_sweep() {
    let inst = generate_instance(&GenConfig::new(VariantFlags::cvrp(), 12, 1, 5)).unwrap();
    let mut cfg = SolveConfig {
        mode: SolveMode::RandomLs,
        seed: 9,
        ..SolveConfig::default()
    };
    cfg.ls.iterations = 0;
    let solver = Solver::new(cfg).unwrap();
    let (solution, stats) = solver.solve(&inst).unwrap();
    assert!(check_feasibility(&solution, &inst).feasible);
    assert!(stats.final_cost <= stats.construction_cost + 1e-9);
    assert_eq!(stats.trace.len(), 1);
}

#[test]
fn final_cost_never_exceeds_feasible_construction() {
    for seed in 0..20 {
        let inst =
            generate_instance(&GenConfig::new(VariantFlags::mdvrp(), 15, 2, seed)).unwrap();
        let mut cfg = SolveConfig {
            mode: SolveMode::GreedyLs,
            seed,
            ..SolveConfig::default()
        };
        cfg.ls.iterations = 10;
        let solver = Solver::new(cfg).unwrap();
        let (solution, stats) = solver.solve(&inst).unwrap();
        assert!(stats.construction_feasible);
        assert!(stats.final_cost <= stats.construction_cost + 1e-9);
        let recomputed = evaluate_solution(&solution, &inst, &PenaltyWeights::ZERO)
            .unwrap()
            .distance;
        assert!((recomputed - stats.final_cost).abs() <= 1e-9);
    }
}

#[test]
fn solve_is_deterministic_for_fixed_seed() {
    let inst = generate_instance(&GenConfig::new(VariantFlags::cvrp(), 15, 1, 77)).unwrap();
    let run = || {
        let mut cfg = SolveConfig {
            mode: SolveMode::RandomLs,
            seed: 4,
            ..SolveConfig::default()
        };
        cfg.ls.iterations = 15;
        let solver = Solver::new(cfg).unwrap();
        solver.solve(&inst).unwrap()
    };
    let (a, sa) = run();
    let (b, sb) = run();
    assert_eq!(a, b);
    assert_eq!(sa.final_cost, sb.final_cost);
}

#[test]
fn neural_pipeline_solves_feasibly_with_untrained_params() {
    let inst = generate_instance(&GenConfig::new(VariantFlags::mdvrp(), 12, 2, 3)).unwrap();
    let mut cfg = SolveConfig {
        mode: SolveMode::NeuralLs,
        seed: 5,
        ..SolveConfig::default()
    };
    cfg.ls.iterations = 5;
    let solver = Solver::with_params(cfg, desk_params());
    let (solution, stats) = solver.solve(&inst).unwrap();
    assert!(stats.construction_feasible);
    assert!(check_feasibility(&solution, &inst).feasible);
    assert!(stats.final_cost <= stats.construction_cost + 1e-9);
}

#[test]
fn augmented_construction_never_loses_to_single_image() {
    let params = desk_params();
    for seed in 0..25 {
        let inst =
            generate_instance(&GenConfig::new(VariantFlags::mdvrp(), 10, 2, 100 + seed)).unwrap();
        let solve_with = |augment: bool| {
            let cfg = SolveConfig {
                mode: SolveMode::Neural,
                augment,
                seed,
                ..SolveConfig::default()
            };
            let solver = Solver::with_params(cfg, params.clone());
            solver.solve(&inst).unwrap().1.construction_cost
        };
        let plain = solve_with(false);
        let augmented = solve_with(true);
        assert!(
            augmented <= plain + 1e-9,
            "augmented {augmented} vs single {plain}"
        );
    }
}

#[test]
fn neural_mode_without_checkpoint_is_a_config_error() {
    let cfg = SolveConfig {
        mode: SolveMode::NeuralLs,
        checkpoint: None,
        ..SolveConfig::default()
    };
    assert!(Solver::new(cfg).is_err());
}

#[test]
fn benchmark_reports_rpd_and_skips_garbage() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate_instance(&GenConfig::new(VariantFlags::cvrp(), 8, 1, 42)).unwrap();
    std::fs::write(dir.path().join("tiny.json"), instance_to_json(&inst)).unwrap();
    std::fs::write(dir.path().join("garbage.txt"), "not an instance at all\n").unwrap();

    let mut refs = std::collections::BTreeMap::new();
    refs.insert("tiny".to_string(), 1.0);

    let mut cfg = SolveConfig {
        mode: SolveMode::GreedyLs,
        seed: 1,
        ..SolveConfig::default()
    };
    cfg.ls.iterations = 5;
    let solver = Solver::new(cfg).unwrap();
    let out = tempfile::tempdir().unwrap();
    let report = benchmark(dir.path(), &refs, &solver, Some(out.path())).unwrap();
    assert_eq!(report.instances.len(), 2);
    assert_eq!(report.solved, 1);
    assert_eq!(report.skipped, 1);

    let tiny = report
        .instances
        .iter()
        .find(|r| r.name == "tiny")
        .unwrap();
    let expected = compute_rpd(tiny.objective.unwrap(), 1.0).unwrap();
    assert!((report.mean_rpd.unwrap() - expected).abs() <= 1e-9);

    // The emitted solution file re-evaluates to the reported objective.
    let sol_path = out.path().join("solutions/tiny.sol");
    let (solution, cost) = vrp_io::read_solution(&sol_path, &inst).unwrap();
    let recomputed = evaluate_solution(&solution, &inst, &PenaltyWeights::ZERO)
        .unwrap()
        .distance;
    assert!((recomputed - tiny.objective.unwrap()).abs() <= 1e-9);
    assert!((cost - recomputed).abs() <= 5e-4);
    assert!(out.path().join("report.csv").is_file());
    assert!(out.path().join("report.json").is_file());
}

#[test]
fn benchmark_of_empty_directory_has_undefined_mean() {
    let dir = tempfile::tempdir().unwrap();
    let refs = std::collections::BTreeMap::new();
    let solver = Solver::new(SolveConfig::default()).unwrap();
    let report = benchmark(dir.path(), &refs, &solver, None).unwrap();
    assert!(report.instances.is_empty());
    assert!(report.mean_rpd.is_none());
}

#[test]
fn time_budget_caps_iterations() {
    let inst = generate_instance(&GenConfig::new(VariantFlags::cvrp(), 20, 1, 9)).unwrap();
    let mut cfg = SolveConfig {
        mode: SolveMode::GreedyLs,
        seed: 2,
        time_budget: Some(std::time::Duration::from_millis(1)),
        ..SolveConfig::default()
    };
    cfg.ls.iterations = 100_000;
    let solver = Solver::new(cfg).unwrap();
    let (_, stats) = solver.solve(&inst).unwrap();
    assert!(stats.iterations_run < 100_000);
}
