//! Exact optimum over the chromosome search space for tiny instances.
//!
//! Enumerates every valid chromosome (processor assignment times
//! height-consistent list orders) by depth-first search, level by level.
//! Within a level each processor in turn takes an ordered selection of the
//! level's remaining tasks, so each chromosome is generated exactly once.
//! Because predecessors always sit on lower levels, start times can be
//! computed while the lists grow, which gives lower bounds for pruning.
//! Every complete chromosome that survives pruning is scored with the
//! regular decoder.

use crate::error::{Error, Result};
use crate::evaluator::decode;
use crate::genome::Chromosome;
use crate::taskgraph::{compute_heights, lower_bounds, TaskGraph, TaskIdx};

pub const MAX_ORACLE_TASKS: usize = 10;
pub const MAX_ORACLE_PROCESSORS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Optimum {
    pub makespan: u64,
    pub chromosome: Chromosome,
}

pub fn exhaustive_optimal(graph: &TaskGraph, m: usize) -> Result<Optimum> {
    if graph.len() > MAX_ORACLE_TASKS || m > MAX_ORACLE_PROCESSORS {
        return Err(Error::OracleCap {
            tasks: graph.len(),
            processors: m,
            max_tasks: MAX_ORACLE_TASKS,
            max_processors: MAX_ORACLE_PROCESSORS,
        });
    }
    let floor = lower_bounds(graph, m)?.makespan();
    let heights = compute_heights(graph);
    let levels = heights.levels().to_vec();

    let incumbent = greedy(graph, &levels, m);
    let mut search = Search {
        graph,
        levels: &levels,
        tails: graph.bottom_levels(),
        floor,
        lists: vec![Vec::new(); m],
        ready: vec![0; m],
        finish: vec![0; graph.len()],
        remaining_work: graph.total_time(),
        best: decode(&incumbent, graph)?.makespan,
        best_lists: incumbent.to_lists(),
    };
    search.level(0)?;
    Ok(Optimum {
        makespan: search.best,
        chromosome: Chromosome::new(search.best_lists),
    })
}

/// Earliest-finish list schedule, level by level; seeds the incumbent.
fn greedy(graph: &TaskGraph, levels: &[Vec<TaskIdx>], m: usize) -> Chromosome {
    let mut lists = vec![Vec::new(); m];
    let mut ready = vec![0u64; m];
    let mut finish = vec![0u64; graph.len()];
    for level in levels {
        for &t in level {
            let release = graph
                .predecessors(t)
                .iter()
                .map(|&u| finish[u])
                .max()
                .unwrap_or(0);
            let p = (0..m)
                .min_by_key(|&p| ready[p].max(release))
                .expect("m >= 1");
            finish[t] = ready[p].max(release) + graph.time(t);
            ready[p] = finish[t];
            lists[p].push(t);
        }
    }
    Chromosome::new(lists)
}

struct Search<'a> {
    graph: &'a TaskGraph,
    levels: &'a [Vec<TaskIdx>],
    tails: Vec<u64>,
    floor: u64,
    lists: Vec<Vec<TaskIdx>>,
    ready: Vec<u64>,
    finish: Vec<u64>,
    remaining_work: u64,
    best: u64,
    best_lists: Vec<Vec<TaskIdx>>,
}

impl Search<'_> {
    fn done(&self) -> bool {
        self.best <= self.floor
    }

    fn level(&mut self, li: usize) -> Result<()> {
        if li == self.levels.len() {
            return self.leaf();
        }
        let all = (1u32 << self.levels[li].len()) - 1;
        self.assign(li, 0, all)
    }

    fn leaf(&mut self) -> Result<()> {
        let chromosome = Chromosome::new(self.lists.clone());
        let makespan = decode(&chromosome, self.graph)?.makespan;
        debug_assert_eq!(makespan, self.ready.iter().copied().max().unwrap_or(0));
        if makespan < self.best {
            self.best = makespan;
            self.best_lists = chromosome.to_lists();
        }
        Ok(())
    }

    /// Processor `p` may append any remaining task of level `li`, or hand the
    /// rest over to processor `p + 1`. The last processor must take all.
    fn assign(&mut self, li: usize, p: usize, remaining: u32) -> Result<()> {
        if remaining == 0 {
            return self.level(li + 1);
        }
        if self.done() {
            return Ok(());
        }
        let m = self.lists.len();
        let mut bits = remaining;
        while bits != 0 {
            let k = bits.trailing_zeros();
            bits &= bits - 1;
            let t = self.levels[li][k as usize];
            if let Some(saved) = self.place(t, p) {
                self.assign(li, p, remaining & !(1 << k))?;
                self.unplace(t, p, saved);
                if self.done() {
                    return Ok(());
                }
            }
        }
        if p + 1 < m {
            self.assign(li, p + 1, remaining)?;
        }
        Ok(())
    }

    /// Appends `t` to processor `p` unless the result provably cannot beat
    /// the incumbent. Returns the processor's previous ready time.
    fn place(&mut self, t: TaskIdx, p: usize) -> Option<u64> {
        let release = self
            .graph
            .predecessors(t)
            .iter()
            .map(|&u| self.finish[u])
            .max()
            .unwrap_or(0);
        let start = self.ready[p].max(release);
        if start + self.tails[t] >= self.best {
            return None;
        }
        let end = start + self.graph.time(t);
        let m = self.lists.len() as u64;
        let load: u64 = self.ready.iter().sum::<u64>() - self.ready[p] + end;
        let rest = self.remaining_work - self.graph.time(t);
        if (load + rest).div_ceil(m) >= self.best {
            return None;
        }
        let saved = self.ready[p];
        self.ready[p] = end;
        self.finish[t] = end;
        self.remaining_work = rest;
        self.lists[p].push(t);
        Some(saved)
    }

    fn unplace(&mut self, t: TaskIdx, p: usize, saved: u64) {
        self.lists[p].pop();
        self.ready[p] = saved;
        self.remaining_work += self.graph.time(t);
    }
}
