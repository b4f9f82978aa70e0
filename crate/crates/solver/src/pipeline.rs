use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vrp_core::{check_feasibility, evaluate_solution, Instance, PenaltyWeights, Solution};
use vrp_io::normalize_for_policy;
use vrp_policy::{augment_x8, greedy_construct, load_checkpoint, PolicyParams};
use vrp_search::{make_random, run_local_search, LsConfig, TraceEntry};

use crate::greedy::greedy_initial;
use crate::SolveError;

/// Pipeline variants: pure neural construction, neural plus refinement, or
/// the non-neural initializers plus refinement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    Neural,
    NeuralLs,
    GreedyLs,
    RandomLs,
}

impl SolveMode {
    pub fn uses_policy(&self) -> bool {
        matches!(self, SolveMode::Neural | SolveMode::NeuralLs)
    }

    pub fn uses_local_search(&self) -> bool {
        !matches!(self, SolveMode::Neural)
    }
}

impl std::str::FromStr for SolveMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "neural" => Ok(SolveMode::Neural),
            "neural+ls" => Ok(SolveMode::NeuralLs),
            "greedy+ls" => Ok(SolveMode::GreedyLs),
            "random+ls" => Ok(SolveMode::RandomLs),
            other => Err(format!(
                "unknown mode '{other}' (expected neural, neural+ls, greedy+ls or random+ls)"
            )),
        }
    }
}

impl std::fmt::Display for SolveMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            SolveMode::Neural => "neural",
            SolveMode::NeuralLs => "neural+ls",
            SolveMode::GreedyLs => "greedy+ls",
            SolveMode::RandomLs => "random+ls",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub mode: SolveMode,
    pub checkpoint: Option<PathBuf>,
    pub augment: bool,
    /// Cap on decoding start nodes for very large instances.
    pub max_starts: usize,
    pub ls: LsConfig,
    pub time_budget: Option<Duration>,
    pub seed: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            mode: SolveMode::GreedyLs,
            checkpoint: None,
            augment: true,
            max_starts: 200,
            ls: LsConfig::default(),
            time_budget: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveStats {
    pub construction_cost: f64,
    pub construction_feasible: bool,
    pub final_cost: f64,
    pub trace: Vec<TraceEntry>,
    pub construction_seconds: f64,
    pub search_seconds: f64,
    pub iterations_run: usize,
}

/// A configured pipeline; neural modes hold the loaded policy so one
/// checkpoint serves many instances (and many threads).
pub struct Solver {
    cfg: SolveConfig,
    params: Option<PolicyParams>,
}

impl Solver {
    pub fn new(cfg: SolveConfig) -> Result<Self, SolveError> {
        let params = if cfg.mode.uses_policy() {
            let path = cfg.checkpoint.as_ref().ok_or_else(|| {
                SolveError::Config("neural modes require a checkpoint".into())
            })?;
            Some(load_checkpoint(path)?)
        } else {
            None
        };
        Ok(Solver { cfg, params })
    }

    /// Builds a solver around an already-loaded policy.
    pub fn with_params(cfg: SolveConfig, params: PolicyParams) -> Self {
        Solver {
            cfg,
            params: Some(params),
        }
    }

    pub fn config(&self) -> &SolveConfig {
        &self.cfg
    }

    fn construct(&self, instance: &Instance) -> Result<Solution, SolveError> {
        match self.cfg.mode {
            SolveMode::GreedyLs => greedy_initial(instance),
            SolveMode::RandomLs => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed ^ 0xC0FFEE);
                Ok(make_random(instance, &mut rng)?)
            }
            SolveMode::Neural | SolveMode::NeuralLs => {
                let params = self.params.as_ref().expect("validated at construction");
                let norm = normalize_for_policy(instance)?;
                let images = if self.cfg.augment {
                    augment_x8(&norm.instance)?
                } else {
                    vec![norm.instance.clone()]
                };
                let mut best: Option<(Solution, f64)> = None;
                for image in &images {
                    let (sol, cost) =
                        greedy_construct(params, image, norm.horizon, self.cfg.max_starts)?;
                    if best.as_ref().map(|(_, c)| cost < *c).unwrap_or(true) {
                        best = Some((sol, cost));
                    }
                }
                Ok(best.expect("at least one image").0)
            }
        }
    }

    pub fn solve(&self, instance: &Instance) -> Result<(Solution, SolveStats), SolveError> {
        let start = Instant::now();
        let construction = self.construct(instance)?;
        let construction_seconds = start.elapsed().as_secs_f64();
        let breakdown = evaluate_solution(&construction, instance, &PenaltyWeights::ZERO)?.distance;
        let construction_feasible = check_feasibility(&construction, instance).feasible;

        if !self.cfg.mode.uses_local_search() {
            return Ok((
                construction.clone(),
                SolveStats {
                    construction_cost: breakdown,
                    construction_feasible,
                    final_cost: breakdown,
                    trace: Vec::new(),
                    construction_seconds,
                    search_seconds: 0.0,
                    iterations_run: 0,
                },
            ));
        }

        let mut ls = self.cfg.ls.scaled_for(instance);
        ls.seed = self.cfg.seed;
        ls.time_budget = self.cfg.time_budget;
        let ls_start = Instant::now();
        let outcome = run_local_search(&construction, instance, &ls)?;
        Ok((
            outcome.best,
            SolveStats {
                construction_cost: breakdown,
                construction_feasible,
                final_cost: outcome.best_cost,
                trace: outcome.trace,
                construction_seconds,
                search_seconds: ls_start.elapsed().as_secs_f64(),
                iterations_run: outcome.iterations_run,
            },
        ))
    }
}
