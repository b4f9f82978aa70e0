use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use vrp_io::{format_solution, load_instance};

use crate::pipeline::Solver;
use crate::rpd::compute_rpd;
use crate::SolveError;

#[derive(Debug, Clone, Serialize)]
pub struct InstanceReport {
    pub name: String,
    pub objective: Option<f64>,
    pub best_known: Option<f64>,
    pub rpd: Option<f64>,
    pub construction_cost: Option<f64>,
    pub seconds: f64,
    pub iterations: usize,
    /// Why the instance was skipped, when it was.
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkReport {
    pub instances: Vec<InstanceReport>,
    /// Mean over instances with a reference; None when undefined.
    pub mean_rpd: Option<f64>,
    pub total_seconds: f64,
    pub solved: usize,
    pub skipped: usize,
}

impl BenchmarkReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "name,objective,best_known,rpd_percent,construction_cost,seconds,iterations,skipped\n",
        );
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        for r in &self.instances {
            out.push_str(&format!(
                "{},{},{},{},{},{:.3},{},{}\n",
                r.name,
                fmt(r.objective),
                fmt(r.best_known),
                fmt(r.rpd),
                fmt(r.construction_cost),
                r.seconds,
                r.iterations,
                r.skipped.clone().unwrap_or_default(),
            ));
        }
        out
    }
}

/// Reads a JSON object mapping instance names to best-known objectives.
pub fn load_references(path: &Path) -> Result<BTreeMap<String, f64>, SolveError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SolveError::File(format!("{}: {e}", path.display())))?;
    let refs: BTreeMap<String, f64> = serde_json::from_str(&text)
        .map_err(|e| SolveError::File(format!("{}: {e}", path.display())))?;
    Ok(refs)
}

/// Solves every parseable instance in `dir`, reporting objectives and RPDs
/// against the provided references. Unparseable files are recorded as
/// skipped and the run continues. Solution files land in
/// `out_dir/solutions/` when an output directory is given.
pub fn benchmark(
    dir: &Path,
    references: &BTreeMap<String, f64>,
    solver: &Solver,
    out_dir: Option<&Path>,
) -> Result<BenchmarkReport, SolveError> {
    let started = Instant::now();
    let mut files: Vec<std::path::PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| SolveError::File(format!("{}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();

    let solutions_dir = out_dir.map(|d| d.join("solutions"));
    if let Some(sd) = &solutions_dir {
        std::fs::create_dir_all(sd).map_err(|e| SolveError::File(format!("{}: {e}", sd.display())))?;
    }

    let instances: Vec<InstanceReport> = files
        .par_iter()
        .map(|path| {
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let solve_start = Instant::now();
            let loaded = match load_instance(path) {
                Ok(l) => l,
                Err(e) => {
                    return InstanceReport {
                        name,
                        objective: None,
                        best_known: None,
                        rpd: None,
                        construction_cost: None,
                        seconds: 0.0,
                        iterations: 0,
                        skipped: Some(e.to_string()),
                    }
                }
            };
            let reference = references.get(&loaded.name).or_else(|| references.get(&name));
            match solver.solve(&loaded.instance) {
                Ok((solution, stats)) => {
                    if let Some(sd) = &solutions_dir {
                        let _ = std::fs::write(
                            sd.join(format!("{name}.sol")),
                            format_solution(&solution, stats.final_cost),
                        );
                    }
                    let rpd = reference.and_then(|&r| compute_rpd(stats.final_cost, r).ok());
                    InstanceReport {
                        name,
                        objective: Some(stats.final_cost),
                        best_known: reference.copied(),
                        rpd,
                        construction_cost: Some(stats.construction_cost),
                        seconds: solve_start.elapsed().as_secs_f64(),
                        iterations: stats.iterations_run,
                        skipped: None,
                    }
                }
                Err(e) => InstanceReport {
                    name,
                    objective: None,
                    best_known: reference.copied(),
                    rpd: None,
                    construction_cost: None,
                    seconds: solve_start.elapsed().as_secs_f64(),
                    iterations: 0,
                    skipped: Some(e.to_string()),
                },
            }
        })
        .collect();

    let rpds: Vec<f64> = instances.iter().filter_map(|r| r.rpd).collect();
    let mean_rpd = if rpds.is_empty() {
        None
    } else {
        Some(rpds.iter().sum::<f64>() / rpds.len() as f64)
    };
    let solved = instances.iter().filter(|r| r.skipped.is_none()).count();
    let skipped = instances.len() - solved;
    let report = BenchmarkReport {
        instances,
        mean_rpd,
        total_seconds: started.elapsed().as_secs_f64(),
        solved,
        skipped,
    };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)
            .map_err(|e| SolveError::File(format!("{}: {e}", dir.display())))?;
        std::fs::write(dir.join("report.csv"), report.to_csv())
            .map_err(|e| SolveError::File(format!("report.csv: {e}")))?;
        let json = serde_json::to_string_pretty(&report)
            .map_err(|e| SolveError::File(format!("report.json: {e}")))?;
        std::fs::write(dir.join("report.json"), json)
            .map_err(|e| SolveError::File(format!("report.json: {e}")))?;
    }
    Ok(report)
}
