//! `pga-sched` command line: `gen`, `solve`, `verify` and `bench`.
//!
//! Exit codes: 0 success, 1 usage or parameter error, 2 validation or
//! infeasibility error, 3 I/O error. Primary output goes to stdout only when
//! the command succeeds; diagnostics go to stderr.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::thread;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{
    exhaustive_optimal, run_benchmark, BenchCell, BenchSuite, SuiteKind,
};
use crate::engine::{run as run_ga, run_to_convergence, GaConfig, GaResult, Mode};
use crate::error::Error;
use crate::evaluator::decode;
use crate::taskgraph::{lower_bounds, parse_graph, random_dag, serialize_graph, DagParams, TaskGraph};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_IO: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "pga-sched", version, about = "Task-graph scheduling with a master-slave genetic algorithm")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random task graph.
    Gen(GenArgs),
    /// Schedule a task graph with the GA.
    Solve(SolveArgs),
    /// Compare the GA against the exhaustive optimum on a tiny graph.
    Verify(VerifyArgs),
    /// Time sequential against master-slave runs and write a CSV report.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    tasks: usize,
    #[arg(long)]
    edge_prob: f64,
    #[arg(long)]
    tmin: u64,
    #[arg(long)]
    tmax: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GaArgs {
    /// Target processors in the scheduling problem.
    #[arg(long)]
    procs: usize,
    #[arg(long, default_value_t = 100)]
    pop: usize,
    #[arg(long, default_value_t = 200)]
    gens: usize,
    #[arg(long, default_value_t = 0.8)]
    pc: f64,
    #[arg(long, default_value_t = 0.02)]
    pm: f64,
    /// Fitness-evaluation threads (default: logical CPU count).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Par)]
    mode: ModeArg,
    /// Stop after this many generations without improvement.
    #[arg(long)]
    patience: Option<usize>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    graph: PathBuf,
    #[command(flatten)]
    ga: GaArgs,
    /// Write the best schedule as `task,processor,start,finish` rows.
    #[arg(long)]
    gantt: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    graph: PathBuf,
    #[command(flatten)]
    ga: GaArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Seq,
    Par,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Seq => Mode::Sequential,
            ModeArg::Par => Mode::MasterSlave,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SuiteArg {
    Table1,
    Table2,
    Table3,
    Custom,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    suite: SuiteArg,
    /// Shrinks the predefined grids to desk scale.
    #[arg(long, default_value_t = 0.01)]
    scale: f64,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long)]
    out: PathBuf,
    /// Evaluation threads (default: 15 for table3, logical CPU count otherwise).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.8)]
    pc: f64,
    #[arg(long, default_value_t = 0.02)]
    pm: f64,
    /// Custom suite: population size.
    #[arg(long, default_value_t = 100)]
    pop: usize,
    /// Custom suite: generations.
    #[arg(long, default_value_t = 10)]
    gens: usize,
    /// Custom suite: task count of the random graph.
    #[arg(long, default_value_t = 8)]
    tasks: usize,
    /// Custom suite: target processors.
    #[arg(long, default_value_t = 2)]
    procs: usize,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }

    fn invalid(message: impl ToString) -> Self {
        Failure {
            code: EXIT_INVALID,
            message: message.to_string(),
        }
    }

    fn io(path: &Path, err: impl ToString) -> Self {
        Failure {
            code: EXIT_IO,
            message: format!("{}: {}", path.display(), err.to_string()),
        }
    }
}

/// Maps library errors onto the exit-code contract.
impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) => EXIT_USAGE,
            Error::Io(_) | Error::Csv(_) => EXIT_IO,
            _ => EXIT_INVALID,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn default_workers() -> usize {
    thread::available_parallelism().map_or(1, usize::from)
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().ansi().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };

    let result = match cli.command {
        Command::Gen(args) => cmd_gen(&args),
        Command::Solve(args) => cmd_solve(&args),
        Command::Verify(args) => cmd_verify(&args),
        Command::Bench(args) => cmd_bench(&args),
    };
    match result {
        Ok(report) => {
            if out.write_all(report.as_bytes()).and_then(|_| out.flush()).is_err() {
                return EXIT_IO;
            }
            EXIT_OK
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::io(path, e))
}

fn load_graph(path: &Path) -> Result<TaskGraph, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    parse_graph(&text).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

fn cmd_gen(args: &GenArgs) -> Result<String, Failure> {
    let graph = random_dag(&DagParams {
        tasks: args.tasks,
        edge_prob: args.edge_prob,
        t_min: args.tmin,
        t_max: args.tmax,
        seed: args.seed,
    })
    .map_err(Failure::usage)?;
    write_file(&args.out, serialize_graph(&graph).as_bytes())?;
    Ok(format!(
        "wrote {}: {} tasks, {} edges\n",
        args.out.display(),
        graph.len(),
        graph.edges().len()
    ))
}

impl GaArgs {
    fn config(&self) -> GaConfig {
        GaConfig {
            population_size: self.pop,
            generations: self.gens,
            crossover_prob: self.pc,
            mutation_prob: self.pm,
            target_processors: self.procs,
            workers: self.workers.unwrap_or_else(default_workers),
            seed: self.seed,
        }
    }

    fn solve(&self, graph: &TaskGraph) -> Result<(GaConfig, GaResult), Failure> {
        let config = self.config();
        config.validate().map_err(Failure::usage)?;
        let mode = self.mode.into();
        let result = match self.patience {
            Some(patience) => run_to_convergence(&config, graph, mode, patience)?,
            None => run_ga(&config, graph, mode)?,
        };
        Ok((config, result))
    }

    fn header(&self, command: &str, config: &GaConfig) -> String {
        let mode: Mode = self.mode.into();
        let mut h = format!(
            "# pga-sched {command}: procs={} pop={} gens={} pc={} pm={} workers={} seed={} mode={mode}",
            config.target_processors,
            config.population_size,
            config.generations,
            config.crossover_prob,
            config.mutation_prob,
            config.workers,
            config.seed,
        );
        if let Some(p) = self.patience {
            let _ = write!(h, " patience={p}");
        }
        h.push('\n');
        h
    }
}

fn format_lists(result: &GaResult, graph: &TaskGraph) -> String {
    result
        .best_chromosome
        .to_ids(graph)
        .iter()
        .enumerate()
        .map(|(p, ids)| format!("P{p}=[{}]", ids.join(",")))
        .collect::<Vec<_>>()
        .join(" ")
}

fn cmd_solve(args: &SolveArgs) -> Result<String, Failure> {
    let graph = load_graph(&args.graph)?;
    let (config, result) = args.ga.solve(&graph)?;
    let bounds = lower_bounds(&graph, config.target_processors).map_err(Failure::usage)?;

    if let Some(path) = &args.gantt {
        let schedule = decode(&result.best_chromosome, &graph)?;
        let mut buf = Vec::new();
        schedule.write_gantt_csv(&graph, &mut buf)?;
        write_file(path, &buf)?;
    }

    let mut report = args.ga.header("solve", &config);
    let _ = writeln!(report, "tasks: {}", graph.len());
    let _ = writeln!(report, "best_makespan: {}", result.best_makespan);
    let _ = writeln!(report, "critical_path: {}", bounds.critical_path);
    let _ = writeln!(report, "work_bound: {}", bounds.work_bound);
    let _ = writeln!(report, "generations_run: {}", result.generations_run());
    let _ = writeln!(report, "evaluations: {}", result.evaluations);
    let _ = writeln!(report, "schedule: {}", format_lists(&result, &graph));
    let _ = writeln!(
        report,
        "wall_time_ms: {:.3}",
        result.wall_time.as_secs_f64() * 1e3
    );
    Ok(report)
}

fn cmd_verify(args: &VerifyArgs) -> Result<String, Failure> {
    let graph = load_graph(&args.graph)?;
    let optimum = exhaustive_optimal(&graph, args.ga.procs)?;
    let (config, result) = args.ga.solve(&graph)?;
    let gap = result.best_makespan - optimum.makespan;

    let mut report = args.ga.header("verify", &config);
    let _ = writeln!(report, "oracle_makespan: {}", optimum.makespan);
    let _ = writeln!(report, "ga_makespan: {}", result.best_makespan);
    let _ = writeln!(report, "gap: {gap}");
    if gap == 0 {
        Ok(report)
    } else {
        Err(Failure::invalid(format!(
            "GA did not reach the optimum\n{report}"
        )))
    }
}

fn cmd_bench(args: &BenchArgs) -> Result<String, Failure> {
    let suite = match args.suite {
        SuiteArg::Custom => BenchSuite {
            cells: vec![BenchCell {
                population: args.pop,
                generations: args.gens,
                tasks: args.tasks,
                target_processors: args.procs,
                workers: args.workers.unwrap_or_else(default_workers),
                seed: args.seed,
            }],
            crossover_prob: args.pc,
            mutation_prob: args.pm,
        },
        predefined => {
            let (kind, fallback) = match predefined {
                SuiteArg::Table1 => (SuiteKind::Table1, default_workers()),
                SuiteArg::Table2 => (SuiteKind::Table2, default_workers()),
                _ => (SuiteKind::Table3, 15),
            };
            BenchSuite {
                crossover_prob: args.pc,
                mutation_prob: args.pm,
                ..BenchSuite::predefined(
                    kind,
                    args.scale,
                    args.workers.unwrap_or(fallback),
                    args.seed,
                )
                .map_err(Failure::usage)?
            }
        }
    };
    let report = run_benchmark(&suite, args.reps)?;

    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    write_file(&args.out, &buf)?;

    let mut summary = format!(
        "# pga-sched bench: suite={:?} scale={} reps={} pc={} pm={} seed={}\n",
        args.suite, args.scale, args.reps, args.pc, args.pm, args.seed
    )
    .to_lowercase();
    for (seq, par) in report.cells() {
        let _ = writeln!(
            summary,
            "pop={} gens={} tasks={} m={} workers={}: seq {:.1} ms, par {:.1} ms, speedup {:.2} ({}), makespan {}",
            par.pop,
            par.gens,
            par.tasks,
            par.m,
            par.workers,
            seq.mean_wall_ms,
            par.mean_wall_ms,
            par.measured_speedup,
            par.trend_flag,
            par.best_makespan,
        );
    }
    let _ = writeln!(summary, "wrote {}", args.out.display());
    Ok(summary)
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure {
            code: EXIT_IO,
            message: e.to_string(),
        }
    }
}
