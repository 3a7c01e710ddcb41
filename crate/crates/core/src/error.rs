use std::io;

use thiserror::Error;

/// Problems found while parsing or validating a task graph.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("duplicate task id `{0}`")]
    DuplicateTask(String),
    #[error("duplicate edge `{0}` -> `{1}`")]
    DuplicateEdge(String, String),
    #[error("{}edge references unknown task `{id}`", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    UnknownTask { id: String, line: Option<usize> },
    #[error("task `{id}` has processing time {time}, must be at least 1")]
    ProcessingTime { id: String, time: i64 },
    #[error("invalid task id `{0}`: ids must be non-empty and contain no whitespace")]
    InvalidId(String),
    #[error("precedence cycle detected: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
}

/// A parameter outside its admissible range.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid configuration: {0}")]
pub struct ConfigError(pub String);

impl ConfigError {
    pub(crate) fn new(msg: impl Into<String>) -> Self {
        ConfigError(msg.into())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("instance too large for exhaustive search: {tasks} tasks on {processors} processors (limit {max_tasks} tasks, {max_processors} processors)")]
    OracleCap {
        tasks: usize,
        processors: usize,
        max_tasks: usize,
        max_processors: usize,
    },
    #[error("fitness requested from an unevaluated individual")]
    Unevaluated,
    #[error("chromosome mismatch: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
