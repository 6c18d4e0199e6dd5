//! Command-line harness: instance generation, planning, validation and
//! batch benchmarking.

pub mod bench;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use sirrt_core::io::{self, PathFile};
use sirrt_core::{
    generate_instance, incremental_extend, plan, plan_baseline_st, validate_path, GeneratorParams, PlanOutcome,
    PlannerParams, ProblemInstance, ValidationReport,
};

pub use bench::{cmd_bench, BenchRecord, BenchSummary};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PLAN_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sirrt", version, about = "Safe-interval RRT-Connect planning among moving obstacles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a suite of random instances, nested across obstacle counts.
    Generate(GenerateArgs),
    /// Plan a timed path for one instance.
    Plan(PlanArgs),
    /// Re-check a path file against its instance.
    Validate(ValidateArgs),
    /// Run planners over a directory of instances and tabulate the results.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Planner {
    #[value(name = "si-rrt")]
    SiRrt,
    #[value(name = "st-baseline")]
    StBaseline,
}

impl Planner {
    pub fn name(self) -> &'static str {
        match self {
            Planner::SiRrt => "si-rrt",
            Planner::StBaseline => "st-baseline",
        }
    }

    pub fn run(self, instance: &ProblemInstance, params: &PlannerParams) -> PlanOutcome {
        match self {
            Planner::SiRrt => plan(instance, params),
            Planner::StBaseline => plan_baseline_st(instance, params),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PlannerArgs {
    #[arg(long, default_value_t = 20.0)]
    pub budget_s: f64,
    #[arg(long, default_value_t = 1.0)]
    pub delta_planner: f64,
    #[arg(long, default_value_t = 3.0)]
    pub delta_parent: f64,
    #[arg(long, default_value_t = 1.0)]
    pub v_max: f64,
    /// Stop after this many iterations as well as on the time budget.
    #[arg(long)]
    pub max_iterations: Option<u64>,
    /// Keep the wait at the meeting point instead of trimming it.
    #[arg(long)]
    pub no_trim: bool,
}

impl PlannerArgs {
    pub fn params(&self, seed: u64) -> anyhow::Result<PlannerParams> {
        let params = PlannerParams {
            delta_planner: self.delta_planner,
            delta_parent: self.delta_parent,
            v_max: self.v_max,
            time_budget: self.budget_s,
            rng_seed: seed,
            max_iterations: self.max_iterations,
            trim: !self.no_trim,
        };
        if let Err(e) = params.check() {
            bail!("invalid planner parameters: {e}");
        }
        Ok(params)
    }
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Obstacle counts, comma separated, in increasing order.
    #[arg(long, value_delimiter = ',', required = true)]
    pub k: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    pub n_instances: usize,
    #[arg(long, default_value_t = 20.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 30.0)]
    pub freq_hz: f64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value_t = Planner::SiRrt)]
    pub planner: Planner,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub planner_args: PlannerArgs,
    /// Path file to write on success.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub path: PathBuf,
    #[arg(long)]
    pub instance: PathBuf,
    /// Sampling rate; defaults to the instance's own tick rate.
    #[arg(long)]
    pub freq_hz: Option<f64>,
    /// Speed bound; defaults to the one the path was planned with.
    #[arg(long)]
    pub v_max: Option<f64>,
    /// Where to write the JSON report; stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Directory of instance files.
    #[arg(long)]
    pub instances: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Planner::SiRrt, Planner::StBaseline])]
    pub planner: Vec<Planner>,
    #[arg(long, default_value_t = 10)]
    pub repeats: u32,
    /// Base planner seed; repeat `r` uses `seed + r`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub planner_args: PlannerArgs,
    /// Records CSV. The summary goes next to it as `<stem>.summary.json`.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write every successful path here.
    #[arg(long)]
    pub paths: Option<PathBuf>,
}

/// File name of instance `i` of the `k`-obstacle batch.
pub fn instance_file_name(k: usize, i: usize) -> String {
    format!("k{k:03}_i{i:03}.json")
}

/// Writes `n_instances` chains of instances; within a chain each count
/// extends the previous one. Instance `i` uses seed `seed + i`.
pub fn cmd_generate(args: &GenerateArgs) -> anyhow::Result<Vec<PathBuf>> {
    if args.k.windows(2).any(|w| w[1] < w[0]) {
        bail!("obstacle counts must be non-decreasing");
    }
    let mut params = GeneratorParams::default();
    params.t_max = args.t_max;
    params.frequency = args.freq_hz;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut written = Vec::new();
    for i in 0..args.n_instances {
        let seed = args.seed + i as u64;
        let mut current: Option<ProblemInstance> = None;
        for &k in &args.k {
            let inst = match &current {
                None => generate_instance(seed, k, &params),
                Some(prev) => incremental_extend(prev, k - prev.scene.dynamics.len(), &params),
            }
            .with_context(|| format!("generating K = {k}, seed {seed}"))?;
            let path = args.out.join(instance_file_name(k, i));
            io::save_instance(&path, &inst).with_context(|| format!("writing {}", path.display()))?;
            written.push(path);
            current = Some(inst);
        }
    }
    Ok(written)
}

pub fn load_instance(path: &Path) -> anyhow::Result<ProblemInstance> {
    io::load_instance(path).with_context(|| format!("reading instance {}", path.display()))
}

/// Plans one instance; the path file is written only on success.
pub fn cmd_plan(args: &PlanArgs) -> anyhow::Result<PlanOutcome> {
    let instance = load_instance(&args.instance)?;
    let params = args.planner_args.params(args.seed)?;
    let outcome = args.planner.run(&instance, &params);
    if let Some(path) = &outcome.path {
        let file = PathFile::new(args.planner.name(), path, &params, &outcome.stats);
        io::save_json(&args.out, &file).with_context(|| format!("writing {}", args.out.display()))?;
    }
    Ok(outcome)
}

pub fn cmd_validate(args: &ValidateArgs) -> anyhow::Result<ValidationReport> {
    let instance = load_instance(&args.instance)?;
    let file = io::load_path_file(&args.path).with_context(|| format!("reading path {}", args.path.display()))?;
    let freq = args.freq_hz.unwrap_or(instance.scene.grid.frequency);
    let v_max = args.v_max.unwrap_or(file.params.v_max);
    let report = validate_path(&file.path(), &instance, freq, v_max)?;
    let text = serde_json::to_string_pretty(&report)?;
    match &args.out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => println!("{text}"),
    }
    Ok(report)
}

/// Runs a parsed command line and returns the process exit status.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Generate(args) => cmd_generate(args).map(|files| {
            eprintln!("wrote {} instance files to {}", files.len(), args.out.display());
            EXIT_OK
        }),
        Command::Plan(args) => cmd_plan(args).map(|outcome| {
            let s = &outcome.stats;
            match (&outcome.path, &outcome.failure) {
                (Some(path), _) => {
                    eprintln!(
                        "solved: t_arrival {:.3} s, {} iterations, {:.3} s",
                        path.t_arrival, s.iterations, s.runtime_s
                    );
                    EXIT_OK
                }
                (None, failure) => {
                    let why = failure.as_ref().map(|f| f.to_string()).unwrap_or_default();
                    eprintln!("no path: {why} ({} iterations, {:.3} s)", s.iterations, s.runtime_s);
                    EXIT_PLAN_FAILED
                }
            }
        }),
        Command::Validate(args) => cmd_validate(args).map(|r| if r.valid { EXIT_OK } else { EXIT_INVALID }),
        Command::Bench(args) => cmd_bench(args).map(|summary| {
            eprint!("{}", summary.table());
            EXIT_OK
        }),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        EXIT_IO
    })
}
