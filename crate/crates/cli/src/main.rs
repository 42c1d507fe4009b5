use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use dagrta::carryout::{build_model, export_model, BigM, ExportFormat, Formulation, ModelOptions};
use dagrta::experiment::{dominance_violations, run_experiment, to_csv, ExperimentSpec, Sweep};
use dagrta::io::{load_taskset, save_taskset, taskset_to_json};
use dagrta::rta::{schedulability_test, Method};
use dagrta::sim::{audit, simulate, ExecPolicy, ReleasePolicy, SimConfig};
use dagrta::taskgen::{assign_priorities_dm, gen_taskset, rng_from_seed, GenConfig};
use dagrta::TaskSet;

#[derive(Parser)]
#[command(name = "dagrta", version, about = "Response-time analysis for parallel DAG tasks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random task set as JSON.
    Generate(GenerateArgs),
    /// Run the schedulability test on a task-set file (exit 0 schedulable,
    /// 1 unschedulable, 2 error).
    Analyze(AnalyzeArgs),
    /// Schedulability-ratio sweep, written as CSV.
    Sweep(SweepArgs),
    /// Export the carry-out model of one task.
    DumpModel(DumpArgs),
    /// Simulate a task set and write the schedule as JSON lines.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct GenFlags {
    /// Generator settings as JSON; flags below override single fields.
    #[arg(long, value_name = "FILE")]
    generator: Option<PathBuf>,
    /// Graphs of 10 to 20 vertices instead of 5 to 10.
    #[arg(long)]
    full_scale: bool,
    #[arg(long)]
    edge_prob: Option<f64>,
    #[arg(long)]
    n_min: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    wcet_min: Option<u64>,
    #[arg(long)]
    wcet_max: Option<u64>,
    /// Minimum task utilization.
    #[arg(long)]
    beta: Option<f64>,
}

impl GenFlags {
    fn config(&self, base: GenConfig) -> Result<GenConfig, String> {
        let mut cfg = match &self.generator {
            Some(path) => serde_json::from_str(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))?,
            None => base,
        };
        if self.full_scale {
            cfg.n_min = 10;
            cfg.n_max = 20;
        }
        cfg.edge_prob = self.edge_prob.unwrap_or(cfg.edge_prob);
        cfg.n_min = self.n_min.unwrap_or(cfg.n_min);
        cfg.n_max = self.n_max.unwrap_or(cfg.n_max);
        cfg.wcet_min = self.wcet_min.unwrap_or(cfg.wcet_min);
        cfg.wcet_max = self.wcet_max.unwrap_or(cfg.wcet_max);
        cfg.beta = self.beta.unwrap_or(cfg.beta);
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Total utilization of the set.
    #[arg(short, long)]
    utilization: f64,
    #[arg(short = 'm', long)]
    processors: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep generation order instead of sorting by deadline.
    #[arg(long)]
    keep_order: bool,
    #[command(flatten)]
    generator: GenFlags,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    file: PathBuf,
    #[arg(long, default_value = "DGA")]
    method: Method,
    /// Override the processor count stored in the file.
    #[arg(short = 'm', long)]
    processors: Option<u64>,
}

#[derive(Args)]
struct SweepArgs {
    /// Experiment spec as JSON; flags below override its fields.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Fixed processor count for a utilization sweep.
    #[arg(short = 'm', long)]
    processors: Option<u64>,
    /// Utilization grid, comma separated.
    #[arg(long, value_delimiter = ',')]
    utilizations: Vec<f64>,
    /// Processor-count grid, comma separated; utilization is `factor·m`.
    #[arg(long, value_delimiter = ',', conflicts_with = "utilizations")]
    processor_counts: Vec<u64>,
    #[arg(long, requires = "processor_counts")]
    factor: Option<f64>,
    #[arg(long)]
    sets: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    methods: Vec<Method>,
    /// Write `-` instead of mean runtimes so the CSV is reproducible.
    #[arg(long)]
    no_timing: bool,
    /// Exit 1 if DGA's ratio falls below MBB's at any point.
    #[arg(long)]
    check_dominance: bool,
    #[command(flatten)]
    generator: GenFlags,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Lp,
    Mps,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormulationArg {
    EdgeRecursive,
    PathEnumerated,
}

#[derive(Clone, Copy, ValueEnum)]
enum BigMArg {
    PerVertex,
    Span,
}

#[derive(Args)]
struct DumpArgs {
    file: PathBuf,
    /// Task index in file order.
    #[arg(long)]
    task: usize,
    /// Carry-out window length.
    #[arg(long)]
    delta: u64,
    #[arg(long, value_enum, default_value = "lp")]
    format: FormatArg,
    #[arg(long, value_enum, default_value = "edge-recursive")]
    formulation: FormulationArg,
    #[arg(long, value_enum, default_value = "per-vertex")]
    big_m: BigMArg,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReleaseArg {
    Periodic,
    Sporadic,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExecArg {
    FullWcet,
    Uniform,
}

#[derive(Args)]
struct SimulateArgs {
    file: PathBuf,
    /// Release jobs before this instant. Defaults to three times the largest period.
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long, value_enum, default_value = "periodic")]
    release: ReleaseArg,
    /// Release times per task as a JSON array of arrays; overrides `--release`.
    #[arg(long, value_name = "FILE")]
    script: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "full-wcet")]
    exec: ExecArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short = 'm', long)]
    processors: Option<u64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), String> {
    match output {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    }
}

fn load(path: &Path, processors: Option<u64>) -> Result<TaskSet, String> {
    let ts = load_taskset(path).map_err(|e| format!("{}: {e}", path.display()))?;
    match processors {
        Some(m) => TaskSet::new(ts.tasks, m).map_err(|e| e.to_string()),
        None => Ok(ts),
    }
}

fn usage_error(message: String) -> ! {
    Cli::command().error(ErrorKind::ValueValidation, message).exit()
}

fn generate(args: GenerateArgs) -> Result<u8, String> {
    let cfg = args.generator.config(GenConfig::desk())?;
    let mut rng = rng_from_seed(args.seed);
    let mut ts = gen_taskset(args.utilization, args.processors, &cfg, &mut rng).map_err(|e| e.to_string())?;
    if !args.keep_order {
        ts = assign_priorities_dm(ts);
    }
    match &args.output {
        Some(path) => save_taskset(&ts, path).map_err(|e| e.to_string())?,
        None => emit(None, &taskset_to_json(&ts))?,
    }
    Ok(0)
}

fn analyze(args: AnalyzeArgs) -> Result<u8, String> {
    let ts = load(&args.file, args.processors)?;
    let report = schedulability_test(&ts, args.method).map_err(|e| e.to_string())?;
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
    text.push('\n');
    emit(None, &text)?;
    Ok(if report.schedulable { 0 } else { 1 })
}

fn sweep_spec(args: &SweepArgs) -> Result<ExperimentSpec, String> {
    let mut spec = match &args.config {
        Some(path) => serde_json::from_str(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))?,
        None => ExperimentSpec {
            sweep: Sweep::Utilization {
                processors: 16,
                values: (1..=14).map(f64::from).collect(),
            },
            generator: GenConfig::desk(),
            sets_per_point: 100,
            seed: 0,
            methods: Method::ALL.to_vec(),
            timing: true,
        },
    };
    if !args.utilizations.is_empty() {
        let processors = match (&spec.sweep, args.processors) {
            (_, Some(m)) => m,
            (Sweep::Utilization { processors, .. }, None) => *processors,
            _ => 16,
        };
        spec.sweep = Sweep::Utilization {
            processors,
            values: args.utilizations.clone(),
        };
    } else if !args.processor_counts.is_empty() {
        let factor = match (&spec.sweep, args.factor) {
            (_, Some(f)) => f,
            (Sweep::Processors { factor, .. }, None) => *factor,
            _ => 0.5,
        };
        spec.sweep = Sweep::Processors {
            factor,
            values: args.processor_counts.clone(),
        };
    } else if let (Some(m), Sweep::Utilization { processors, .. }) = (args.processors, &mut spec.sweep) {
        *processors = m;
    }
    spec.generator = args.generator.config(spec.generator.clone())?;
    if args.generator.full_scale {
        spec.sets_per_point = 500;
    }
    spec.sets_per_point = args.sets.unwrap_or(spec.sets_per_point);
    spec.seed = args.seed.unwrap_or(spec.seed);
    if !args.methods.is_empty() {
        spec.methods = args.methods.clone();
    }
    spec.timing &= !args.no_timing;
    Ok(spec)
}

fn sweep(args: SweepArgs) -> Result<u8, String> {
    let spec = sweep_spec(&args)?;
    let rows = run_experiment(&spec).map_err(|e| e.to_string())?;
    emit(args.output.as_deref(), &to_csv(&rows))?;
    if args.check_dominance {
        let bad = dominance_violations(&rows);
        if !bad.is_empty() {
            eprintln!("DGA ratio below MBB at points: {}", bad.join(", "));
            return Ok(1);
        }
    }
    Ok(0)
}

fn dump_model(args: DumpArgs) -> Result<u8, String> {
    let ts = load(&args.file, None)?;
    let Some(task) = ts.tasks.get(args.task) else {
        usage_error(format!(
            "task index {} out of range, the set has {} tasks",
            args.task,
            ts.len()
        ));
    };
    let options = ModelOptions {
        formulation: match args.formulation {
            FormulationArg::EdgeRecursive => Formulation::EdgeRecursive,
            FormulationArg::PathEnumerated => Formulation::PathEnumerated,
        },
        big_m: match args.big_m {
            BigMArg::PerVertex => BigM::PerVertex,
            BigMArg::Span => BigM::Span,
        },
    };
    let model = build_model(task.dag(), args.delta, options).map_err(|e| e.to_string())?;
    let format = match args.format {
        FormatArg::Lp => ExportFormat::Lp,
        FormatArg::Mps => ExportFormat::Mps,
    };
    emit(args.output.as_deref(), &export_model(&model, format))?;
    Ok(0)
}

fn simulate_cmd(args: SimulateArgs) -> Result<u8, String> {
    let ts = load(&args.file, args.processors)?;
    let release = match (&args.script, args.release) {
        (Some(path), _) => {
            let times: Vec<Vec<u64>> =
                serde_json::from_str(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
            ReleasePolicy::Scripted(times)
        }
        (None, ReleaseArg::Periodic) => ReleasePolicy::Periodic,
        (None, ReleaseArg::Sporadic) => ReleasePolicy::Sporadic,
    };
    let exec = match args.exec {
        ExecArg::FullWcet => ExecPolicy::FullWcet,
        ExecArg::Uniform => ExecPolicy::Uniform,
    };
    let config = SimConfig {
        horizon: args.horizon.unwrap_or(3 * ts.max_period()),
        release,
        exec,
    };
    let result = simulate(&ts, &config, &mut rng_from_seed(args.seed)).map_err(|e| e.to_string())?;
    audit(&ts, &result).map_err(|e| format!("schedule audit failed: {e}"))?;

    let mut trace = Vec::new();
    result.write_trace(&mut trace).map_err(|e| e.to_string())?;
    emit(args.output.as_deref(), &String::from_utf8_lossy(&trace))?;

    let mut misses = 0;
    for (i, task) in ts.tasks.iter().enumerate() {
        let jobs: Vec<_> = result.jobs.iter().filter(|j| j.task == i).collect();
        let late = jobs.iter().filter(|j| j.completion > j.deadline).count();
        misses += late;
        let summary = serde_json::json!({
            "task": i,
            "jobs": jobs.len(),
            "max_response": result.max_response(i),
            "deadline": task.deadline(),
            "deadline_misses": late,
        });
        eprintln!("{summary}");
    }
    Ok(if misses == 0 { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Analyze(a) => analyze(a),
        Command::Sweep(a) => sweep(a),
        Command::DumpModel(a) => dump_model(a),
        Command::Simulate(a) => simulate_cmd(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
