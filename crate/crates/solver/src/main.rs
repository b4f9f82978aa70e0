use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use vrp_core::{PenaltyWeights, VariantFlags};
use vrp_io::{generate_instance, instance_to_json, load_instance, write_solution, GenConfig};
use vrp_policy::PolicyConfig;
use vrp_search::{write_trace_csv, LsConfig};
use vrp_solver::{benchmark, SolveConfig, SolveMode, Solver};
use vrp_trainer::{
    adapt_for_tsp, finetune, load_checkpoint, save_checkpoint, train, write_curve_csv, TrainConfig,
};

#[derive(Parser)]
#[command(
    name = "vrp-solver",
    version,
    about = "Hybrid construction-policy + granular local-search solver for VRP variants"
)]
struct Cli {
    /// TOML document supplying defaults for omitted flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (also VRP_THREADS); defaults to the CPU count.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate random instances to JSON files.
    Generate(GenerateArgs),
    /// Pre-train a policy on freshly generated instances.
    Train(TrainArgs),
    /// Continue training a checkpoint on another variant.
    Finetune(FinetuneArgs),
    /// Adapt a pre-trained checkpoint for single-tour decoding.
    AdaptTsp(AdaptArgs),
    /// Solve one instance file.
    Solve(SolveArgs),
    /// Solve every instance in a directory and report RPDs.
    Benchmark(BenchArgs),
    /// Solve one instance and write its convergence trace CSV.
    Trace(TraceArgs),
}

#[derive(Args, Clone)]
struct GenerateArgs {
    /// Variant name or '+' combination: cvrp, mdvrp, vrpb, vrpl, ovrp,
    /// vrptw, tsp (e.g. mdvrp+vrptw).
    #[arg(long, default_value = "cvrp")]
    variant: String,
    #[arg(long, default_value_t = 20)]
    n: usize,
    /// Depot count; defaults to 1 (single depot) or 2 (multi depot).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// How many instances to emit (seeds increment from --seed).
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 50.0)]
    capacity: f64,
    #[arg(long, default_value_t = 0.20)]
    backhaul_fraction: f64,
    #[arg(long, default_value_t = 3.0)]
    route_limit: f64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Clone)]
struct TrainCommonArgs {
    #[arg(long, default_value = "mdvrp")]
    variant: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Model profile: desk (CPU-sized) or full.
    #[arg(long, default_value = "desk")]
    profile: String,
    /// Cap on trajectories per instance.
    #[arg(long)]
    max_starts: Option<usize>,
    /// Per-epoch mean-objective curve CSV.
    #[arg(long)]
    curve: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct TrainArgs {
    #[command(flatten)]
    common: TrainCommonArgs,
    /// Checkpoint output path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct FinetuneArgs {
    /// Pre-trained checkpoint to start from.
    #[arg(long)]
    checkpoint: PathBuf,
    #[command(flatten)]
    common: TrainCommonArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct AdaptArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct SolveCommonArgs {
    /// Instance file (Cordeau, TSPLIB/CVRPLIB, Solomon or JSON).
    instance: PathBuf,
    /// neural | neural+ls | greedy+ls | random+ls
    #[arg(long)]
    mode: Option<String>,
    /// Local-search iterations.
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Disable eight-image augmentation for neural construction.
    #[arg(long)]
    no_augment: bool,
    #[arg(long)]
    max_starts: Option<usize>,
    /// Wall-clock budget for the refinement phase, in seconds.
    #[arg(long)]
    time_budget_s: Option<f64>,
}

#[derive(Args, Clone)]
struct SolveArgs {
    #[command(flatten)]
    common: SolveCommonArgs,
    /// Write the solution file here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the convergence trace CSV here.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct TraceArgs {
    #[command(flatten)]
    common: SolveCommonArgs,
    /// Convergence trace CSV path.
    #[arg(long)]
    trace: PathBuf,
}

#[derive(Args, Clone)]
struct BenchArgs {
    /// Directory of instance files.
    #[arg(long)]
    dir: PathBuf,
    /// JSON object mapping instance names to best-known objectives.
    #[arg(long)]
    refs: PathBuf,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    no_augment: bool,
    #[arg(long)]
    max_starts: Option<usize>,
    #[arg(long)]
    time_budget_s: Option<f64>,
    /// Reports and per-instance solutions land here.
    #[arg(long, default_value = "bench-out")]
    out_dir: PathBuf,
}

/// Optional config document; flags given on the command line win.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    threads: Option<usize>,
    #[serde(default)]
    solve: FileSolve,
    #[serde(default)]
    ls: FileLs,
    #[serde(default)]
    train: FileTrain,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSolve {
    mode: Option<String>,
    iterations: Option<usize>,
    checkpoint: Option<PathBuf>,
    augment: Option<bool>,
    max_starts: Option<usize>,
    time_budget_s: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileLs {
    x_max: Option<usize>,
    gamma: Option<usize>,
    search_weight: Option<f64>,
    fix_weight: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileTrain {
    epochs: Option<usize>,
    steps: Option<usize>,
    batch: Option<usize>,
    lr: Option<f64>,
    n: Option<usize>,
    m: Option<usize>,
    max_starts: Option<usize>,
}

enum AppError {
    Usage(String),
    Runtime(String),
}

impl<E: std::fmt::Display> From<E> for AppError {
    fn from(e: E) -> Self {
        AppError::Runtime(e.to_string())
    }
}

fn parse_variant(spec: &str) -> Result<VariantFlags, AppError> {
    let mut flags = VariantFlags::default();
    for token in spec.split('+') {
        match token.trim().to_ascii_lowercase().as_str() {
            "cvrp" | "vrp" => {}
            "mdvrp" | "md" => flags.multi_depot = true,
            "vrpb" | "b" | "backhaul" => flags.backhaul = true,
            "vrpl" | "l" | "duration" => flags.duration_limit = true,
            "ovrp" | "o" | "open" => flags.open_routes = true,
            "vrptw" | "tw" => flags.time_windows = true,
            "tsp" => flags.tsp_mode = true,
            other => {
                return Err(AppError::Usage(format!(
                    "unknown variant token '{other}'"
                )))
            }
        }
    }
    if !flags.is_valid() {
        return Err(AppError::Usage(
            "tsp cannot be combined with other variant flags".into(),
        ));
    }
    Ok(flags)
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig, AppError> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| AppError::Usage(format!("config {}: {e}", p.display())))?;
            toml::from_str(&text)
                .map_err(|e| AppError::Usage(format!("config {}: {e}", p.display())))
        }
    }
}

fn ls_config(file: &FileConfig, iters: Option<usize>, seed: u64) -> LsConfig {
    let mut ls = LsConfig::default();
    if let Some(x) = file.ls.x_max {
        ls.x_max = x;
    }
    if let Some(g) = file.ls.gamma {
        ls.gamma = g;
    }
    if let Some(w) = file.ls.search_weight {
        ls.search_weights = PenaltyWeights::uniform(w);
    }
    if let Some(w) = file.ls.fix_weight {
        ls.fix_weights = PenaltyWeights::uniform(w);
    }
    if let Some(i) = iters.or(file.solve.iterations) {
        ls.iterations = i;
    }
    ls.seed = seed;
    ls
}

fn solve_config(common: &SolveCommonArgs, file: &FileConfig) -> Result<SolveConfig, AppError> {
    let mode_str = common
        .mode
        .clone()
        .or_else(|| file.solve.mode.clone())
        .unwrap_or_else(|| "greedy+ls".to_string());
    let mode: SolveMode = mode_str.parse().map_err(AppError::Usage)?;
    let seed = common.seed.or(file.seed).unwrap_or(0);
    let checkpoint = common.checkpoint.clone().or_else(|| file.solve.checkpoint.clone());
    if mode.uses_policy() && checkpoint.is_none() {
        return Err(AppError::Usage(
            "neural modes require --checkpoint".into(),
        ));
    }
    let augment = if common.no_augment {
        false
    } else {
        file.solve.augment.unwrap_or(true)
    };
    Ok(SolveConfig {
        mode,
        checkpoint,
        augment,
        max_starts: common.max_starts.or(file.solve.max_starts).unwrap_or(200),
        ls: ls_config(file, common.iters, seed),
        time_budget: common
            .time_budget_s
            .or(file.solve.time_budget_s)
            .map(Duration::from_secs_f64),
        seed,
    })
}

fn train_config(common: &TrainCommonArgs, file: &FileConfig) -> Result<TrainConfig, AppError> {
    let variant = parse_variant(&common.variant)?;
    let seed = common.seed.or(file.seed).unwrap_or(0);
    let mut cfg = TrainConfig::desk(variant, seed);
    cfg.model = match common.profile.as_str() {
        "desk" => PolicyConfig::desk(),
        "full" => PolicyConfig::full(),
        other => return Err(AppError::Usage(format!("unknown profile '{other}'"))),
    };
    if variant.tsp_mode {
        cfg.model.customer_features = false;
    }
    if let Some(n) = common.n.or(file.train.n) {
        cfg.customers = n;
    }
    if let Some(m) = common.m.or(file.train.m) {
        cfg.depots = m;
    } else if !variant.multi_depot {
        cfg.depots = 1;
    }
    if let Some(e) = common.epochs.or(file.train.epochs) {
        cfg.epochs = e;
    }
    if let Some(t) = common.steps.or(file.train.steps) {
        cfg.steps_per_epoch = t;
    }
    if let Some(b) = common.batch.or(file.train.batch) {
        cfg.batch_size = b;
    }
    if let Some(lr) = common.lr.or(file.train.lr) {
        cfg.learning_rate = lr;
    }
    if let Some(ms) = common.max_starts.or(file.train.max_starts) {
        cfg.max_starts = ms;
    }
    Ok(cfg)
}

fn print_solve_summary(name: &str, stats: &vrp_solver::SolveStats) {
    println!("instance {name}");
    println!(
        "construction {:.6} ({}feasible, {:.3}s)",
        stats.construction_cost,
        if stats.construction_feasible { "" } else { "in" },
        stats.construction_seconds
    );
    println!(
        "cost {:.6} ({} iterations, {:.3}s search)",
        stats.final_cost, stats.iterations_run, stats.search_seconds
    );
}

fn run_solve(
    common: &SolveCommonArgs,
    out: Option<&Path>,
    trace: Option<&Path>,
    file: &FileConfig,
) -> Result<(), AppError> {
    let cfg = solve_config(common, file)?;
    let loaded = load_instance(&common.instance)
        .map_err(|e| AppError::Runtime(format!("{}: {e}", common.instance.display())))?;
    let solver = Solver::new(cfg).map_err(|e| AppError::Runtime(e.to_string()))?;
    let (solution, stats) = solver
        .solve(&loaded.instance)
        .map_err(|e| AppError::Runtime(e.to_string()))?;
    print_solve_summary(&loaded.name, &stats);
    if let Some(path) = out {
        write_solution(&solution, stats.final_cost, path)?;
    }
    if let Some(path) = trace {
        write_trace_csv(&stats.trace, path)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), AppError> {
    let file = load_file_config(cli.config.as_deref())?;
    let threads = cli
        .threads
        .or(file.threads)
        .or_else(|| std::env::var("VRP_THREADS").ok().and_then(|v| v.parse().ok()));
    if let Some(t) = threads {
        // Ignore failure: the global pool may already exist in tests.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }

    match cli.command {
        Command::Generate(args) => {
            let variant = parse_variant(&args.variant)?;
            let m = args
                .m
                .unwrap_or(if variant.multi_depot { 2 } else { 1 });
            std::fs::create_dir_all(&args.out_dir)
                .map_err(|e| AppError::Runtime(format!("{}: {e}", args.out_dir.display())))?;
            for i in 0..args.count {
                let seed = args.seed + i as u64;
                let mut gen = GenConfig::new(variant, args.n, m, seed);
                gen.capacity = args.capacity;
                gen.backhaul_fraction = args.backhaul_fraction;
                gen.route_limit = args.route_limit;
                let instance = generate_instance(&gen)?;
                let name = format!(
                    "{}-n{}-m{}-seed{}.json",
                    args.variant.replace('+', "_"),
                    args.n,
                    m,
                    seed
                );
                let path = args.out_dir.join(&name);
                std::fs::write(&path, instance_to_json(&instance))
                    .map_err(|e| AppError::Runtime(format!("{}: {e}", path.display())))?;
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Train(args) => {
            let cfg = train_config(&args.common, &file)?;
            let outcome = train(&cfg)?;
            save_checkpoint(&outcome.params, &args.out)?;
            if let Some(curve) = &args.common.curve {
                write_curve_csv(&outcome.curve, curve)?;
            }
            for p in &outcome.curve {
                println!(
                    "epoch {} mean_objective {:.6} ({:.1}s)",
                    p.epoch, p.mean_cost, p.seconds
                );
            }
            println!("checkpoint {}", args.out.display());
            Ok(())
        }
        Command::Finetune(args) => {
            let cfg = train_config(&args.common, &file)?;
            let pretrained = load_checkpoint(&args.checkpoint)?;
            let pretrained = if cfg.variant.tsp_mode && pretrained.config.customer_features {
                // Convenience: adapt on the fly when fine-tuning for tsp.
                adapt_for_tsp(&pretrained)?
            } else {
                pretrained
            };
            let mut cfg = cfg;
            cfg.model = pretrained.config;
            let outcome = finetune(pretrained, &cfg)?;
            save_checkpoint(&outcome.params, &args.out)?;
            if let Some(curve) = &args.common.curve {
                write_curve_csv(&outcome.curve, curve)?;
            }
            for p in &outcome.curve {
                println!(
                    "epoch {} mean_objective {:.6} ({:.1}s)",
                    p.epoch, p.mean_cost, p.seconds
                );
            }
            println!("checkpoint {}", args.out.display());
            Ok(())
        }
        Command::AdaptTsp(args) => {
            let pretrained = load_checkpoint(&args.checkpoint)?;
            let adapted = adapt_for_tsp(&pretrained)?;
            save_checkpoint(&adapted, &args.out)?;
            println!("checkpoint {}", args.out.display());
            Ok(())
        }
        Command::Solve(args) => run_solve(
            &args.common,
            args.out.as_deref(),
            args.trace.as_deref(),
            &file,
        ),
        Command::Trace(args) => run_solve(&args.common, None, Some(&args.trace), &file),
        Command::Benchmark(args) => {
            if !args.refs.is_file() {
                return Err(AppError::Usage(format!(
                    "references file {} not found",
                    args.refs.display()
                )));
            }
            let common = SolveCommonArgs {
                instance: PathBuf::new(),
                mode: args.mode.clone(),
                iters: args.iters,
                seed: args.seed,
                checkpoint: args.checkpoint.clone(),
                no_augment: args.no_augment,
                max_starts: args.max_starts,
                time_budget_s: args.time_budget_s,
            };
            let mut cfg = solve_config(&common, &file)?;
            if args.iters.is_none() && file.solve.iterations.is_none() {
                cfg.ls.iterations = 250; // single-instance depth per run
            }
            let refs = vrp_solver::load_references(&args.refs)
                .map_err(|e| AppError::Usage(e.to_string()))?;
            let solver = Solver::new(cfg).map_err(|e| AppError::Runtime(e.to_string()))?;
            let report = benchmark(&args.dir, &refs, &solver, Some(&args.out_dir))
                .map_err(|e| AppError::Runtime(e.to_string()))?;
            for r in &report.instances {
                match (&r.skipped, r.objective, r.rpd) {
                    (Some(reason), _, _) => println!("{}: skipped ({reason})", r.name),
                    (None, Some(obj), Some(rpd)) => {
                        println!("{}: {:.3} (rpd {:.3}%)", r.name, obj, rpd)
                    }
                    (None, Some(obj), None) => println!("{}: {:.3}", r.name, obj),
                    _ => {}
                }
            }
            match report.mean_rpd {
                Some(mean) => println!(
                    "mean_rpd {:.3}% over {} instances ({:.1}s)",
                    mean, report.solved, report.total_seconds
                ),
                None => println!(
                    "mean_rpd undefined ({} solved, {} skipped)",
                    report.solved, report.skipped
                ),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            // Help/version go to stdout, usage errors to stderr.
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(1)
        }
        Err(AppError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
