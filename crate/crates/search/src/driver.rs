use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vrp_core::{check_feasibility, evaluate_solution, Instance, PenaltyWeights, Solution};

use crate::config::LsConfig;
use crate::construct::make_random;
use crate::crossover::{ox_crossover, srex_crossover};
use crate::error::SearchError;
use crate::neighbors::build_granular_neighbors;
use crate::search::{fix, search};
use crate::worker::SearchState;

#[derive(Debug, Clone, Copy)]
pub struct TraceEntry {
    pub iteration: usize,
    pub best_cost: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone)]
pub struct LsOutcome {
    pub best: Solution,
    pub best_cost: f64,
    pub trace: Vec<TraceEntry>,
    pub iterations_run: usize,
}

fn feasible_distance(sol: &Solution, instance: &Instance) -> Option<f64> {
    if check_feasibility(sol, instance).feasible {
        Some(
            evaluate_solution(sol, instance, &PenaltyWeights::ZERO)
                .expect("feasible solutions are structurally valid")
                .distance,
        )
    } else {
        None
    }
}

/// The refinement loop: one search pass over the initial solution, then
/// `iterations` rounds of crossover perturbation (route exchange with a
/// random solution; order crossover for single tours), search, repair and
/// incumbent update on strict improvement. The incumbent is always
/// feasible and its cost trace never increases.
pub fn run_local_search(
    initial: &Solution,
    instance: &Instance,
    cfg: &LsConfig,
) -> Result<LsOutcome, SearchError> {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let neighbors = build_granular_neighbors(instance, cfg.gamma);

    let mut normalized = initial.clone();
    normalized.normalize();
    let mut incumbent: Option<(Solution, f64)> =
        feasible_distance(&normalized, instance).map(|d| (normalized.clone(), d));

    let mut state = SearchState::new(instance, &normalized, cfg.search_weights)?;
    search(&mut state, &neighbors, cfg, &mut rng);
    if !check_feasibility(&state.solution(), instance).feasible {
        fix(&mut state, &neighbors, cfg, &mut rng)?;
    }
    let refined = state.solution();
    if let Some(d) = feasible_distance(&refined, instance) {
        if incumbent.as_ref().map(|(_, bd)| d < *bd).unwrap_or(true) {
            incumbent = Some((refined, d));
        }
    }
    let (mut best, mut best_cost) = incumbent.ok_or_else(|| {
        // The repair path either returns feasible or errors, so this is
        // unreachable in practice.
        SearchError::HardInfeasible(instance.num_depots())
    })?;

    let mut trace = vec![TraceEntry {
        iteration: 0,
        best_cost,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    }];

    let mut iterations_run = 0;
    for iteration in 1..=cfg.iterations {
        if let Some(budget) = cfg.time_budget {
            if started.elapsed() >= budget {
                break;
            }
        }
        iterations_run = iteration;
        let random = make_random(instance, &mut rng)?;
        let offspring = if instance.variant().tsp_mode {
            ox_crossover(&best, &random, &mut rng)?
        } else {
            srex_crossover(&best, &random, instance, &cfg.search_weights, &mut rng)?
        };
        let mut state = SearchState::new(instance, &offspring, cfg.search_weights)?;
        search(&mut state, &neighbors, cfg, &mut rng);
        if !check_feasibility(&state.solution(), instance).feasible {
            fix(&mut state, &neighbors, cfg, &mut rng)?;
        }
        let candidate = state.solution();
        if let Some(d) = feasible_distance(&candidate, instance) {
            if d < best_cost {
                best = candidate;
                best_cost = d;
            }
        }
        trace.push(TraceEntry {
            iteration,
            best_cost,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        });
    }

    Ok(LsOutcome {
        best,
        best_cost,
        trace,
        iterations_run,
    })
}

/// Writes a convergence trace as `iteration,best_cost,wall_clock_ms`.
pub fn write_trace_csv(trace: &[TraceEntry], path: &Path) -> Result<(), std::io::Error> {
    let mut out = String::from("iteration,best_cost,wall_clock_ms\n");
    for t in trace {
        out.push_str(&format!("{},{:.6},{:.3}\n", t.iteration, t.best_cost, t.wall_ms));
    }
    std::fs::write(path, out)
}
