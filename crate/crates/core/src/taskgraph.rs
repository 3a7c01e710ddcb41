//! Precedence-constrained task graphs: parsing, validation, generation and
//! the structural quantities the scheduler relies on (heights, bounds).
//!
//! Graph file format, one declaration per line:
//!
//! ```text
//! # comment
//! task <id> <time>
//! edge <pred> <succ>
//! ```
//!
//! Declarations may come in any order; edges are resolved once the whole
//! file has been read.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ConfigError, GraphError};

/// Dense index of a task inside its [`TaskGraph`].
pub type TaskIdx = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Task {
    pub id: String,
    pub time: u64,
}

/// A validated DAG of tasks. Immutable once built.
#[derive(Debug, Clone)]
pub struct TaskGraph {
    tasks: Vec<Task>,
    edges: Vec<(TaskIdx, TaskIdx)>,
    index: HashMap<String, TaskIdx>,
    preds: Vec<Vec<TaskIdx>>,
    succs: Vec<Vec<TaskIdx>>,
    topo: Vec<TaskIdx>,
}

impl PartialEq for TaskGraph {
    fn eq(&self, other: &Self) -> bool {
        self.tasks == other.tasks && self.edges == other.edges
    }
}

impl Eq for TaskGraph {}

impl TaskGraph {
    /// Builds a graph from `(id, time)` tasks and `(pred, succ)` edges.
    pub fn new<S: AsRef<str>>(
        tasks: impl IntoIterator<Item = (S, u64)>,
        edges: impl IntoIterator<Item = (S, S)>,
    ) -> Result<Self, GraphError> {
        let tasks = tasks
            .into_iter()
            .map(|(id, time)| (id.as_ref().to_owned(), time as i64))
            .collect();
        let edges = edges
            .into_iter()
            .map(|(a, b)| (a.as_ref().to_owned(), b.as_ref().to_owned(), None))
            .collect();
        Self::build(tasks, edges)
    }

    fn build(
        raw_tasks: Vec<(String, i64)>,
        raw_edges: Vec<(String, String, Option<usize>)>,
    ) -> Result<Self, GraphError> {
        let mut tasks = Vec::with_capacity(raw_tasks.len());
        let mut index = HashMap::with_capacity(raw_tasks.len());
        for (id, time) in raw_tasks {
            if id.is_empty() || id.chars().any(char::is_whitespace) {
                return Err(GraphError::InvalidId(id));
            }
            if time < 1 {
                return Err(GraphError::ProcessingTime { id, time });
            }
            if index.insert(id.clone(), tasks.len()).is_some() {
                return Err(GraphError::DuplicateTask(id));
            }
            tasks.push(Task {
                id,
                time: time as u64,
            });
        }

        let n = tasks.len();
        let mut edges = Vec::with_capacity(raw_edges.len());
        let mut seen = HashSet::with_capacity(raw_edges.len());
        let mut preds = vec![Vec::new(); n];
        let mut succs = vec![Vec::new(); n];
        for (a, b, line) in raw_edges {
            let lookup = |id: &String| {
                index.get(id).copied().ok_or_else(|| GraphError::UnknownTask {
                    id: id.clone(),
                    line,
                })
            };
            let (u, v) = (lookup(&a)?, lookup(&b)?);
            if !seen.insert((u, v)) {
                return Err(GraphError::DuplicateEdge(a, b));
            }
            edges.push((u, v));
            preds[v].push(u);
            succs[u].push(v);
        }

        let topo = topological_order(&preds, &succs).map_err(|cycle| {
            GraphError::Cycle(cycle.into_iter().map(|t| tasks[t].id.clone()).collect())
        })?;

        Ok(TaskGraph {
            tasks,
            edges,
            index,
            preds,
            succs,
            topo,
        })
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn edges(&self) -> &[(TaskIdx, TaskIdx)] {
        &self.edges
    }

    pub fn task(&self, t: TaskIdx) -> &Task {
        &self.tasks[t]
    }

    pub fn time(&self, t: TaskIdx) -> u64 {
        self.tasks[t].time
    }

    pub fn id(&self, t: TaskIdx) -> &str {
        &self.tasks[t].id
    }

    pub fn index_of(&self, id: &str) -> Option<TaskIdx> {
        self.index.get(id).copied()
    }

    pub fn predecessors(&self, t: TaskIdx) -> &[TaskIdx] {
        &self.preds[t]
    }

    pub fn successors(&self, t: TaskIdx) -> &[TaskIdx] {
        &self.succs[t]
    }

    /// A topological order of all task indices (sources first).
    pub fn topological_order(&self) -> &[TaskIdx] {
        &self.topo
    }

    pub fn total_time(&self) -> u64 {
        self.tasks.iter().map(|t| t.time).sum()
    }

    /// Longest path from each task to a sink, counting the task itself.
    pub fn bottom_levels(&self) -> Vec<u64> {
        let mut level = vec![0u64; self.len()];
        for &t in self.topo.iter().rev() {
            let tail = self.succs[t].iter().map(|&s| level[s]).max().unwrap_or(0);
            level[t] = tail + self.tasks[t].time;
        }
        level
    }
}

/// Kahn's algorithm. On failure returns the task indices of one cycle.
fn topological_order(
    preds: &[Vec<TaskIdx>],
    succs: &[Vec<TaskIdx>],
) -> Result<Vec<TaskIdx>, Vec<TaskIdx>> {
    let n = preds.len();
    let mut indegree: Vec<usize> = preds.iter().map(Vec::len).collect();
    let mut ready: Vec<TaskIdx> = (0..n).filter(|&t| indegree[t] == 0).rev().collect();
    let mut order = Vec::with_capacity(n);
    while let Some(t) = ready.pop() {
        order.push(t);
        for &s in succs[t].iter().rev() {
            indegree[s] -= 1;
            if indegree[s] == 0 {
                ready.push(s);
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }

    // Every unprocessed task still has an unprocessed predecessor, so walking
    // predecessors from any of them must eventually revisit a task.
    let start = (0..n).find(|&t| indegree[t] > 0).expect("unprocessed task");
    let mut pos = HashMap::new();
    let mut walk = Vec::new();
    let mut cur = start;
    while !pos.contains_key(&cur) {
        pos.insert(cur, walk.len());
        walk.push(cur);
        cur = *preds[cur]
            .iter()
            .find(|&&p| indegree[p] > 0)
            .expect("unprocessed predecessor");
    }
    let mut cycle = walk.split_off(pos[&cur]);
    // The walk followed predecessor links; report in edge direction.
    cycle.reverse();
    Err(cycle)
}

/// Parses the line-based graph format.
pub fn parse_graph(text: &str) -> Result<TaskGraph, GraphError> {
    let mut tasks = Vec::new();
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let syntax = |message: String| GraphError::Syntax { line, message };
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match fields.as_slice() {
            ["task", id, time] => {
                let time: i64 = time
                    .parse()
                    .map_err(|_| syntax(format!("processing time `{time}` is not an integer")))?;
                tasks.push(((*id).to_owned(), time));
            }
            ["edge", a, b] => edges.push(((*a).to_owned(), (*b).to_owned(), Some(line))),
            ["task", ..] => return Err(syntax("expected `task <id> <time>`".into())),
            ["edge", ..] => return Err(syntax("expected `edge <pred> <succ>`".into())),
            [kw, ..] => return Err(syntax(format!("unknown declaration `{kw}`"))),
            [] => unreachable!(),
        }
    }
    TaskGraph::build(tasks, edges)
}

/// Canonical text form: tasks first, then edges, both in declaration order.
pub fn serialize_graph(graph: &TaskGraph) -> String {
    let mut out = String::new();
    for task in &graph.tasks {
        let _ = writeln!(out, "task {} {}", task.id, task.time);
    }
    for &(u, v) in &graph.edges {
        let _ = writeln!(out, "edge {} {}", graph.id(u), graph.id(v));
    }
    out
}

/// Level of every task: 0 for sources, otherwise one more than the highest
/// predecessor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeightMap {
    heights: Vec<u32>,
    levels: Vec<Vec<TaskIdx>>,
}

impl HeightMap {
    pub fn height(&self, t: TaskIdx) -> u32 {
        self.heights[t]
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.heights
    }

    pub fn max_height(&self) -> u32 {
        self.levels.len().saturating_sub(1) as u32
    }

    /// Tasks grouped by height, each group in ascending index order.
    pub fn levels(&self) -> &[Vec<TaskIdx>] {
        &self.levels
    }

    /// Heights keyed by task id.
    pub fn to_map(&self, graph: &TaskGraph) -> HashMap<String, u32> {
        graph
            .tasks()
            .iter()
            .zip(&self.heights)
            .map(|(task, &h)| (task.id.clone(), h))
            .collect()
    }
}

pub fn compute_heights(graph: &TaskGraph) -> HeightMap {
    let mut heights = vec![0u32; graph.len()];
    for &t in graph.topological_order() {
        heights[t] = graph
            .predecessors(t)
            .iter()
            .map(|&p| heights[p] + 1)
            .max()
            .unwrap_or(0);
    }
    let depth = heights.iter().max().map_or(0, |&h| h as usize + 1);
    let mut levels = vec![Vec::new(); depth];
    for (t, &h) in heights.iter().enumerate() {
        levels[h as usize].push(t);
    }
    HeightMap { heights, levels }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LowerBounds {
    /// Heaviest source-to-sink path.
    pub critical_path: u64,
    /// Total work spread evenly over the processors, rounded up.
    pub work_bound: u64,
}

impl LowerBounds {
    pub fn makespan(&self) -> u64 {
        self.critical_path.max(self.work_bound)
    }
}

pub fn lower_bounds(graph: &TaskGraph, m: usize) -> Result<LowerBounds, ConfigError> {
    if m < 1 {
        return Err(ConfigError::new("processor count must be at least 1"));
    }
    let critical_path = graph.bottom_levels().into_iter().max().unwrap_or(0);
    let work_bound = graph.total_time().div_ceil(m as u64);
    Ok(LowerBounds {
        critical_path,
        work_bound,
    })
}

/// Parameters for [`random_dag`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DagParams {
    pub tasks: usize,
    pub edge_prob: f64,
    pub t_min: u64,
    pub t_max: u64,
    pub seed: u64,
}

/// Random DAG over tasks `t0..t{n-1}`: each pair `i < j` becomes the edge
/// `ti -> tj` with probability `edge_prob`.
pub fn random_dag(params: &DagParams) -> Result<TaskGraph, ConfigError> {
    let DagParams {
        tasks: n,
        edge_prob,
        t_min,
        t_max,
        seed,
    } = *params;
    if n < 1 {
        return Err(ConfigError::new("task count must be at least 1"));
    }
    if !(0.0..=1.0).contains(&edge_prob) {
        return Err(ConfigError::new(format!(
            "edge probability {edge_prob} is outside [0, 1]"
        )));
    }
    if t_min < 1 || t_min > t_max {
        return Err(ConfigError::new(format!(
            "time bounds must satisfy 1 <= tmin <= tmax (got {t_min}..{t_max})"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tasks: Vec<(String, u64)> = (0..n)
        .map(|i| (format!("t{i}"), rng.gen_range(t_min..=t_max)))
        .collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(edge_prob) {
                edges.push((format!("t{i}"), format!("t{j}")));
            }
        }
    }
    let graph = TaskGraph::new(
        tasks.iter().map(|(id, t)| (id.as_str(), *t)),
        edges.iter().map(|(a, b)| (a.as_str(), b.as_str())),
    )
    .expect("forward-only edges over fresh ids form a valid DAG");
    Ok(graph)
}
