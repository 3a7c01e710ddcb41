//! Multiprocessor task scheduling with a genetic algorithm.
//!
//! A precedence-constrained task graph ([`taskgraph`]) is scheduled onto
//! `m` identical processors by evolving per-processor task lists
//! ([`genome`]). Chromosomes are decoded into timetables and scored by
//! makespan ([`evaluator`]); the generational loop ([`engine`]) can score
//! each generation on the calling thread or split it across worker threads
//! in a synchronous master-slave arrangement. Both modes produce identical
//! results for the same seed. [`analysis`] holds the run-time cost model,
//! an exact oracle for tiny instances and the benchmark harness.

pub mod analysis;
pub mod cli;
pub mod engine;
pub mod error;
pub mod evaluator;
pub mod genome;
pub mod taskgraph;

pub use engine::{run, run_to_convergence, GaConfig, GaResult, Mode};
pub use error::{ConfigError, Error, GraphError, Result};
pub use evaluator::{decode, evaluate_population, fitness_of, ScheduleResult};
pub use genome::{Chromosome, Individual, Instance, Population};
pub use taskgraph::{parse_graph, serialize_graph, TaskGraph};
