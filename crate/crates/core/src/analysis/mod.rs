//! Cost model, exact small-instance oracle and the benchmark harness.

mod bench;
mod model;
mod oracle;

pub use bench::{
    run_benchmark, run_cell, BenchCell, BenchReport, BenchRow, BenchSuite, SuiteKind, Trend,
};
pub use model::{
    cost_optimality, parallel_cost, predicted_speedup, sequential_cost, ComplexityModel,
    CostOptimality, SequentialCost, Speedup, DEFAULT_DOMINANCE_THRESHOLD,
};
pub use oracle::{exhaustive_optimal, Optimum, MAX_ORACLE_PROCESSORS, MAX_ORACLE_TASKS};
