//! Matched sequential / master-slave timing runs.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Duration;

use serde::Serialize;

use super::model::{predicted_speedup, ComplexityModel};
use crate::engine::{run, GaConfig, Mode};
use crate::error::{ConfigError, Result};
use crate::taskgraph::{random_dag, DagParams};

const EDGE_PROB: f64 = 0.3;
const TIME_RANGE: (u64, u64) = (1, 10);
/// Measured speedups within this band of 1.0 are labelled neutral.
const NEUTRAL_BAND: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SuiteKind {
    /// Population sweep at two generations.
    Table1,
    /// Population and generations grown together on a small graph.
    Table2,
    /// Generation sweep on a larger graph.
    Table3,
    Custom,
}

impl FromStr for SuiteKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "table1" => Ok(SuiteKind::Table1),
            "table2" => Ok(SuiteKind::Table2),
            "table3" => Ok(SuiteKind::Table3),
            "custom" => Ok(SuiteKind::Custom),
            other => Err(ConfigError::new(format!("unknown suite `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchCell {
    pub population: usize,
    pub generations: usize,
    pub tasks: usize,
    pub target_processors: usize,
    pub workers: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSuite {
    pub cells: Vec<BenchCell>,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
}

fn scaled(value: usize, scale: f64, min: usize) -> usize {
    ((value as f64 * scale).round() as usize).max(min)
}

impl BenchSuite {
    /// One of the predefined grids, shrunk by `scale`. Generation counts of
    /// the population sweep stay at 2, since that is the fixed parameter of
    /// that grid. `workers` overrides the per-suite worker count.
    pub fn predefined(
        kind: SuiteKind,
        scale: f64,
        workers: usize,
        seed: u64,
    ) -> Result<Self, ConfigError> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(ConfigError::new("scale must be a positive number"));
        }
        let cell = |population, generations, tasks, target_processors, workers| BenchCell {
            population: scaled(population, scale, 2),
            generations,
            tasks,
            target_processors,
            workers,
            seed,
        };
        let cells = match kind {
            SuiteKind::Table1 => [10_000, 500_000, 600_000]
                .into_iter()
                .map(|p| cell(p, 2, 8, 2, workers))
                .collect(),
            SuiteKind::Table2 => [(1_000, 1_000), (10_000, 10_000)]
                .into_iter()
                .map(|(g, p)| cell(p, scaled(g, scale, 1), 8, 2, workers))
                .collect(),
            SuiteKind::Table3 => [1_000, 5_000, 10_000]
                .into_iter()
                .map(|g| cell(10_000, scaled(g, scale, 1), 18, 4, workers))
                .collect(),
            SuiteKind::Custom => {
                return Err(ConfigError::new(
                    "the custom suite is built from explicit cell parameters",
                ))
            }
        };
        Ok(BenchSuite {
            cells,
            crossover_prob: 0.8,
            mutation_prob: 0.02,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    ParallelFavored,
    SequentialFavored,
    Neutral,
}

impl Trend {
    pub fn from_speedup(speedup: f64) -> Self {
        if speedup > 1.0 + NEUTRAL_BAND {
            Trend::ParallelFavored
        } else if speedup < 1.0 - NEUTRAL_BAND {
            Trend::SequentialFavored
        } else {
            Trend::Neutral
        }
    }
}

impl fmt::Display for Trend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Trend::ParallelFavored => "parallel-favored",
            Trend::SequentialFavored => "sequential-favored",
            Trend::Neutral => "neutral",
        })
    }
}

/// One CSV row. Field order is the column order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub mode: String,
    pub pop: usize,
    pub gens: usize,
    pub tasks: usize,
    pub m: usize,
    pub workers: usize,
    pub seed: u64,
    pub reps: usize,
    pub mean_wall_ms: f64,
    pub best_makespan: u64,
    pub measured_speedup: f64,
    pub predicted_speedup_ratio: f64,
    pub paper_speedup_form: f64,
    pub cc_estimate_ms: f64,
    pub trend_flag: Trend,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    /// `(sequential, parallel)` row pairs, one per cell.
    pub fn cells(&self) -> impl Iterator<Item = (&BenchRow, &BenchRow)> {
        self.rows.chunks_exact(2).map(|pair| (&pair[0], &pair[1]))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        if self.rows.is_empty() {
            w.write_record([
                "mode",
                "pop",
                "gens",
                "tasks",
                "m",
                "workers",
                "seed",
                "reps",
                "mean_wall_ms",
                "best_makespan",
                "measured_speedup",
                "predicted_speedup_ratio",
                "paper_speedup_form",
                "cc_estimate_ms",
                "trend_flag",
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn millis(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Runs one cell `reps` times in each mode, alternating modes so slow drift
/// in machine state hits both equally.
pub fn run_cell(
    cell: &BenchCell,
    reps: usize,
    crossover_prob: f64,
    mutation_prob: f64,
) -> Result<(BenchRow, BenchRow)> {
    if reps < 1 {
        return Err(ConfigError::new("repetitions must be at least 1").into());
    }
    let graph = random_dag(&DagParams {
        tasks: cell.tasks,
        edge_prob: EDGE_PROB,
        t_min: TIME_RANGE.0,
        t_max: TIME_RANGE.1,
        seed: cell.seed,
    })?;
    let config = GaConfig {
        population_size: cell.population,
        generations: cell.generations,
        crossover_prob,
        mutation_prob,
        target_processors: cell.target_processors,
        workers: cell.workers,
        seed: cell.seed,
    };

    let mut seq_time = Duration::ZERO;
    let mut par_time = Duration::ZERO;
    let mut best = (0, 0);
    for _ in 0..reps {
        let s = run(&config, &graph, Mode::Sequential)?;
        let p = run(&config, &graph, Mode::MasterSlave)?;
        seq_time += s.wall_time;
        par_time += p.wall_time;
        best = (s.best_makespan, p.best_makespan);
    }
    let seq_ms = millis(seq_time) / reps as f64;
    let par_ms = millis(par_time) / reps as f64;
    let measured = if par_ms > 0.0 { seq_ms / par_ms } else { 1.0 };
    let trend = Trend::from_speedup(measured);

    let cc_ms = (par_ms - seq_ms / cell.workers as f64).max(0.0);
    let work_units = (cell.population * cell.generations) as f64;
    let model = ComplexityModel {
        crossover_prob,
        mutation_prob,
        ..ComplexityModel::new(
            cell.population as u64,
            cell.generations as u64,
            ((seq_ms * 1e6 / work_units).round() as u64).max(1),
            cell.workers as u64,
        )
        .with_comm_cost((cc_ms * 1e6).round() as u64)
    };
    let predicted = predicted_speedup(&model);

    let row = |mode: Mode, workers, wall, best_makespan| BenchRow {
        mode: mode.to_string(),
        pop: cell.population,
        gens: cell.generations,
        tasks: cell.tasks,
        m: cell.target_processors,
        workers,
        seed: cell.seed,
        reps,
        mean_wall_ms: wall,
        best_makespan,
        measured_speedup: 1.0,
        predicted_speedup_ratio: 1.0,
        paper_speedup_form: 1.0,
        cc_estimate_ms: 0.0,
        trend_flag: trend,
    };
    let seq = row(Mode::Sequential, 1, seq_ms, best.0);
    let par = BenchRow {
        measured_speedup: measured,
        predicted_speedup_ratio: predicted.ratio,
        paper_speedup_form: cell.workers as f64 - cc_ms,
        cc_estimate_ms: cc_ms,
        ..row(Mode::MasterSlave, cell.workers, par_ms, best.1)
    };
    Ok((seq, par))
}

/// Runs every cell of the suite, one at a time.
pub fn run_benchmark(suite: &BenchSuite, reps: usize) -> Result<BenchReport> {
    let mut report = BenchReport::default();
    for cell in &suite.cells {
        let (seq, par) = run_cell(cell, reps, suite.crossover_prob, suite.mutation_prob)?;
        report.rows.push(seq);
        report.rows.push(par);
    }
    Ok(report)
}
