//! `slmakespan`: run, compare and plot client-helper scheduling methods.
//!
//! Exit codes: 0 success, 1 infeasibility or a method that did not return
//! `ok`, 2 usage or parse error.

mod plot;
mod rows;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use slmakespan::exact::SearchBudget;
use slmakespan::instgen::{generate, GeneratorConfig, SweepConfig, SweepPoint};
use slmakespan::model::{
    read_instance, read_schedule_file, validate_assignment, validate_schedule, write_instance, write_schedule_file,
    Instance, ScheduleFile,
};
use slmakespan::pipelines::{run_method, Method, MethodRun, RunStatus};

use crate::plot::PlotKind;
use crate::rows::{comparisons, read_run_rows, summarize, write_rows, RunRow};

#[derive(Parser)]
#[command(name = "slmakespan", version, about = "Client-helper assignment and scheduling benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct BudgetArgs {
    /// Wall-clock limit per exact search, in milliseconds.
    #[arg(long, default_value_t = 10_000)]
    budget_ms: u64,
    /// Node limit per exact search.
    #[arg(long, default_value_t = 100_000_000)]
    budget_nodes: u64,
}

impl BudgetArgs {
    fn budget(self) -> Result<SearchBudget> {
        SearchBudget::new(self.budget_nodes, self.budget_ms).context("invalid search budget")
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run methods on one instance file and print one CSV row per method.
    Run {
        instance: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "approx5,equid,ed-fcfs,bg")]
        methods: Vec<Method>,
        /// Also run the exact oracle.
        #[arg(long)]
        oracle: bool,
        #[command(flatten)]
        budget: BudgetArgs,
        /// CSV output file (standard output if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory for one schedule file per successful method.
        #[arg(long)]
        schedules: Option<PathBuf>,
    },
    /// Run methods over a generated grid; writes runs.csv, comparisons.csv and summary.csv.
    Sweep {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "approx5,equid,ed-fcfs,bg")]
        methods: Vec<Method>,
        /// Also run the exact oracle.
        #[arg(long)]
        oracle: bool,
        /// Overrides the config's base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's number of seeds per grid point.
        #[arg(long)]
        repetitions: Option<u64>,
        #[command(flatten)]
        budget: BudgetArgs,
        /// Worker threads (default: logical processors).
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, default_value = "sweep-out")]
        out: PathBuf,
    },
    /// Draw an SVG chart from a runs CSV.
    Plot {
        csv: PathBuf,
        #[arg(long, value_enum)]
        kind: PlotKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check an instance file and optionally a schedule file against it.
    Validate {
        instance: PathBuf,
        #[arg(long)]
        schedule: Option<PathBuf>,
    },
    /// Generate instance files.
    Gen {
        /// Generator config file; the flags below override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        level: Option<u8>,
        #[arg(long)]
        clients: Option<usize>,
        #[arg(long)]
        helpers: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        unit_demand: bool,
        /// Number of instances, with consecutive seeds.
        #[arg(long, default_value_t = 1)]
        count: u64,
        /// Output directory (standard output if omitted and count is 1).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// An error that maps to exit code 1 rather than 2.
#[derive(Debug)]
struct Infeasible(String);

impl std::fmt::Display for Infeasible {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Infeasible {}

fn with_oracle(mut methods: Vec<Method>, oracle: bool) -> Vec<Method> {
    if oracle && !methods.contains(&Method::Oracle) {
        methods.push(Method::Oracle);
    }
    methods
}

fn row(instance_id: &str, inst: &Instance, run: &MethodRun, level: Option<u8>, seed: Option<u64>) -> RunRow {
    RunRow {
        instance_id: instance_id.to_string(),
        method: run.report.method.to_string(),
        status: run.report.status.to_string(),
        makespan: run.report.makespan,
        wall_time_ms: run.report.wall_time_ms,
        clients: inst.num_clients(),
        helpers: inst.num_helpers(),
        level,
        seed,
    }
}

fn write_csv<T: serde::Serialize>(out: Option<&Path>, rows: &[T]) -> Result<()> {
    match out {
        Some(path) => {
            let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_rows(io::BufWriter::new(file), rows)
        }
        None => write_rows(io::stdout().lock(), rows),
    }
}

fn cmd_run(
    path: &Path,
    methods: Vec<Method>,
    budget: SearchBudget,
    out: Option<&Path>,
    schedules: Option<&Path>,
) -> Result<ExitCode> {
    let inst = read_instance(path).with_context(|| format!("reading {}", path.display()))?;
    let id = path.file_stem().map_or_else(|| "instance".into(), |s| s.to_string_lossy().into_owned());
    let runs: Vec<MethodRun> = methods.iter().map(|&m| run_method(m, &inst, &budget)).collect();
    if let Some(dir) = schedules {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for run in &runs {
            if let Some(sol) = &run.solution {
                let file = ScheduleFile {
                    assignment: sol.assignment.clone(),
                    schedule: sol.schedule.clone(),
                };
                write_schedule_file(dir.join(format!("{id}.{}.json", run.report.method)), &file)?;
            }
        }
    }
    let rows: Vec<RunRow> = runs.iter().map(|r| row(&id, &inst, r, None, None)).collect();
    write_csv(out, &rows)?;
    let all_ok = runs.iter().all(|r| r.report.status == RunStatus::Ok);
    Ok(if all_ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn run_point(point: &SweepPoint, methods: &[Method], budget: &SearchBudget) -> Vec<RunRow> {
    let c = &point.config;
    match generate(c) {
        Ok(inst) => methods
            .iter()
            .map(|&m| row(&point.instance_id, &inst, &run_method(m, &inst, budget), Some(c.level), Some(c.seed)))
            .collect(),
        // a generation failure is recorded, not fatal
        Err(_) => methods
            .iter()
            .map(|m| RunRow {
                instance_id: point.instance_id.clone(),
                method: m.to_string(),
                status: RunStatus::AssignmentFailed.to_string(),
                makespan: None,
                wall_time_ms: 0.0,
                clients: c.num_clients,
                helpers: c.num_helpers,
                level: Some(c.level),
                seed: Some(c.seed),
            })
            .collect(),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    config: &Path,
    methods: Vec<Method>,
    seed: Option<u64>,
    repetitions: Option<u64>,
    budget: SearchBudget,
    jobs: Option<usize>,
    out: &Path,
) -> Result<ExitCode> {
    let mut sweep = SweepConfig::read(config)?;
    if let Some(s) = seed {
        sweep.base_seed = s;
    }
    if let Some(r) = repetitions {
        if r == 0 {
            bail!("--repetitions must be positive");
        }
        sweep.seeds = r;
    }
    let points = sweep.points();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        if n == 0 {
            bail!("--jobs must be positive");
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().context("starting worker pool")?;
    // collect keeps config order whatever the completion order
    let rows: Vec<RunRow> = pool.install(|| {
        points
            .par_iter()
            .map(|p| run_point(p, &methods, &budget))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    });
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_csv(Some(&out.join("runs.csv")), &rows)?;
    write_csv(Some(&out.join("comparisons.csv")), &comparisons(&rows))?;
    write_csv(Some(&out.join("summary.csv")), &summarize(&rows))?;
    eprintln!("{} runs over {} instances written to {}", rows.len(), points.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_plot(csv: &Path, kind: PlotKind, out: &Path) -> Result<ExitCode> {
    let file = fs::File::open(csv).with_context(|| format!("opening {}", csv.display()))?;
    let rows = read_run_rows(file).with_context(|| format!("reading {}", csv.display()))?;
    let svg = plot::render(kind, &rows)?;
    fs::write(out, svg).with_context(|| format!("writing {}", out.display()))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(instance: &Path, schedule: Option<&Path>) -> Result<ExitCode> {
    let inst = read_instance(instance).with_context(|| format!("reading {}", instance.display()))?;
    let mut stdout = io::stdout().lock();
    writeln!(
        stdout,
        "instance ok: {} clients, {} helpers, {} graph, {} demands",
        inst.num_clients(),
        inst.num_helpers(),
        if inst.is_complete() { "complete" } else { "sparse" },
        if inst.has_unit_demands() { "unit" } else { "general" }
    )?;
    let total_demand: u64 = inst.demands().iter().sum();
    let total_capacity: u64 = inst.capacities().iter().sum();
    if total_demand > total_capacity {
        writeln!(stdout, "warning: total demand {total_demand} exceeds total capacity {total_capacity}")?;
    }
    let Some(path) = schedule else {
        return Ok(ExitCode::SUCCESS);
    };
    let file = read_schedule_file(path).with_context(|| format!("reading {}", path.display()))?;
    let mut problems: Vec<String> = Vec::new();
    if let Err(v) = validate_assignment(&inst, &file.assignment) {
        problems.extend(v.iter().map(ToString::to_string));
    } else if let Err(v) = validate_schedule(&inst, &file.assignment, &file.schedule) {
        problems.extend(v.iter().map(ToString::to_string));
    }
    if problems.is_empty() {
        writeln!(stdout, "schedule ok: makespan {}", file.schedule.makespan)?;
        Ok(ExitCode::SUCCESS)
    } else {
        for p in &problems {
            writeln!(stdout, "violation: {p}")?;
        }
        Err(Infeasible(format!("{} violation(s) in {}", problems.len(), path.display())).into())
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_gen(
    config: Option<&Path>,
    level: Option<u8>,
    clients: Option<usize>,
    helpers: Option<usize>,
    seed: Option<u64>,
    unit_demand: bool,
    count: u64,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let mut base = match config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            GeneratorConfig::from_toml_str(&text)?
        }
        None => {
            let (Some(l), Some(j), Some(i)) = (level, clients, helpers) else {
                bail!("without --config, --level, --clients and --helpers are required");
            };
            GeneratorConfig::new(l, j, i, 0)
        }
    };
    base.level = level.unwrap_or(base.level);
    base.num_clients = clients.unwrap_or(base.num_clients);
    base.num_helpers = helpers.unwrap_or(base.num_helpers);
    base.seed = seed.unwrap_or(base.seed);
    base.unit_demand |= unit_demand;
    base.validate()?;
    if count == 0 {
        bail!("--count must be positive");
    }
    let Some(dir) = out else {
        if count != 1 {
            bail!("--out is required when --count is above 1");
        }
        println!("{}", generate(&base)?.to_json_string());
        return Ok(ExitCode::SUCCESS);
    };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for k in 0..count {
        let mut c = base.clone();
        c.seed = base.seed.wrapping_add(k);
        let inst = generate(&c)?;
        let name = format!("L{}-J{}-I{}-s{}.json", c.level, c.num_clients, c.num_helpers, c.seed);
        write_instance(dir.join(&name), &inst)?;
        println!("{}", dir.join(name).display());
    }
    Ok(ExitCode::SUCCESS)
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run {
            instance,
            methods,
            oracle,
            budget,
            out,
            schedules,
        } => cmd_run(
            &instance,
            with_oracle(methods, oracle),
            budget.budget()?,
            out.as_deref(),
            schedules.as_deref(),
        ),
        Command::Sweep {
            config,
            methods,
            oracle,
            seed,
            repetitions,
            budget,
            jobs,
            out,
        } => cmd_sweep(
            &config,
            with_oracle(methods, oracle),
            seed,
            repetitions,
            budget.budget()?,
            jobs,
            &out,
        ),
        Command::Plot { csv, kind, out } => cmd_plot(&csv, kind, &out),
        Command::Validate { instance, schedule } => cmd_validate(&instance, schedule.as_deref()),
        Command::Gen {
            config,
            level,
            clients,
            helpers,
            seed,
            unit_demand,
            count,
            out,
        } => cmd_gen(
            config.as_deref(),
            level,
            clients,
            helpers,
            seed,
            unit_demand,
            count,
            out.as_deref(),
        ),
    }
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<Infeasible>() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
