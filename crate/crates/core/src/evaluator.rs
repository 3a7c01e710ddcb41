//! Chromosome decoding and (parallel) fitness evaluation.
//!
//! Decoding is a plain list schedule: each processor runs its list in order
//! and a task starts once both its processor is free and all of its
//! predecessors have finished. Everything is integer time, so two decodes
//! of the same chromosome agree exactly regardless of which thread ran them.

use std::io::Write;
use std::ops::Range;
use std::thread;

use crate::error::{ConfigError, Error, Result};
use crate::genome::{Chromosome, Evaluation, Individual, Population};
use crate::taskgraph::{TaskGraph, TaskIdx};

const UNSCHEDULED: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleResult {
    /// Indexed by task.
    pub start: Vec<u64>,
    pub finish: Vec<u64>,
    pub processor: Vec<usize>,
    pub makespan: u64,
}

impl ScheduleResult {
    pub fn start_of(&self, graph: &TaskGraph, id: &str) -> Option<u64> {
        graph.index_of(id).map(|t| self.start[t])
    }

    pub fn finish_of(&self, graph: &TaskGraph, id: &str) -> Option<u64> {
        graph.index_of(id).map(|t| self.finish[t])
    }

    /// Checks timing, precedence, overlap and makespan against the graph and
    /// the chromosome the schedule was decoded from.
    pub fn validate(&self, graph: &TaskGraph, chromosome: &Chromosome) -> Result<(), String> {
        let n = graph.len();
        if self.start.len() != n || self.finish.len() != n || self.processor.len() != n {
            return Err("schedule size does not match graph".into());
        }
        for t in 0..n {
            if self.finish[t] != self.start[t] + graph.time(t) {
                return Err(format!("task `{}` has wrong duration", graph.id(t)));
            }
        }
        for &(u, v) in graph.edges() {
            if self.start[v] < self.finish[u] {
                return Err(format!(
                    "`{}` starts before predecessor `{}` finishes",
                    graph.id(v),
                    graph.id(u)
                ));
            }
        }
        for (p, list) in chromosome.lists().enumerate() {
            if let Some(&t) = list.iter().find(|&&t| self.processor[t] != p) {
                return Err(format!("task `{}` recorded on the wrong processor", graph.id(t)));
            }
            if list.windows(2).any(|w| self.start[w[1]] < self.finish[w[0]]) {
                return Err(format!("overlapping tasks on processor {p}"));
            }
        }
        if self.makespan != self.finish.iter().copied().max().unwrap_or(0) {
            return Err("makespan is not the latest finish time".into());
        }
        Ok(())
    }

    /// Gantt rows `(task, processor, start, finish)` sorted by processor then start.
    pub fn gantt_rows<'g>(&self, graph: &'g TaskGraph) -> Vec<(&'g str, usize, u64, u64)> {
        let mut rows: Vec<_> = (0..graph.len())
            .map(|t| (graph.id(t), self.processor[t], self.start[t], self.finish[t]))
            .collect();
        rows.sort_by_key(|&(id, p, s, _)| (p, s, id));
        rows
    }

    pub fn write_gantt_csv<W: Write>(&self, graph: &TaskGraph, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["task", "processor", "start", "finish"])?;
        for (id, p, s, f) in self.gantt_rows(graph) {
            w.serialize((id, p, s, f))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reusable buffers for the makespan-only decode used in the GA hot loop.
#[derive(Debug, Default)]
pub struct Decoder {
    finish: Vec<u64>,
    cursor: Vec<usize>,
    ready_at: Vec<u64>,
}

impl Decoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn makespan(&mut self, c: &Chromosome, graph: &TaskGraph) -> Result<u64> {
        simulate(c, graph, self, |_, _, _| {})
    }
}

fn simulate(
    c: &Chromosome,
    graph: &TaskGraph,
    scratch: &mut Decoder,
    mut on_start: impl FnMut(TaskIdx, usize, u64),
) -> Result<u64> {
    let n = graph.len();
    let m = c.processors();
    let Decoder {
        finish,
        cursor,
        ready_at,
    } = scratch;
    finish.clear();
    finish.resize(n, UNSCHEDULED);
    cursor.clear();
    cursor.resize(m, 0);
    ready_at.clear();
    ready_at.resize(m, 0);
    let mut scheduled = 0usize;
    let mut makespan = 0u64;
    let total = c.task_count();

    while scheduled < total {
        let mut progressed = false;
        for p in 0..m {
            let list = c.list(p);
            while let Some(&t) = list.get(cursor[p]) {
                if t >= n {
                    return Err(Error::Mismatch(format!("task index {t} out of range")));
                }
                let mut start = ready_at[p];
                let mut blocked = false;
                for &u in graph.predecessors(t) {
                    match finish[u] {
                        UNSCHEDULED => {
                            blocked = true;
                            break;
                        }
                        f => start = start.max(f),
                    }
                }
                if blocked {
                    break;
                }
                if finish[t] != UNSCHEDULED {
                    return Err(Error::Mismatch(format!(
                        "task `{}` appears more than once",
                        graph.id(t)
                    )));
                }
                let end = start + graph.time(t);
                finish[t] = end;
                ready_at[p] = end;
                makespan = makespan.max(end);
                on_start(t, p, start);
                cursor[p] += 1;
                scheduled += 1;
                progressed = true;
            }
        }
        if !progressed {
            return Err(Error::Mismatch(
                "decode stalled: processor lists wait on each other".into(),
            ));
        }
    }
    if scheduled != n {
        return Err(Error::Mismatch(format!(
            "chromosome covers {scheduled} of {n} tasks"
        )));
    }
    Ok(makespan)
}

pub fn decode(c: &Chromosome, graph: &TaskGraph) -> Result<ScheduleResult> {
    let n = graph.len();
    let mut start = vec![0; n];
    let mut processor = vec![0; n];
    let mut scratch = Decoder::new();
    let makespan = simulate(c, graph, &mut scratch, |t, p, s| {
        start[t] = s;
        processor[t] = p;
    })?;
    Ok(ScheduleResult {
        start,
        finish: scratch.finish,
        processor,
        makespan,
    })
}

/// `(total processing time + 1) - makespan`; at least 1 for any decoded schedule.
pub fn fitness_of(result: &ScheduleResult, graph: &TaskGraph) -> u64 {
    fitness_from_makespan(result.makespan, graph.total_time())
}

pub fn fitness_from_makespan(makespan: u64, total_time: u64) -> u64 {
    (total_time + 1).saturating_sub(makespan).max(1)
}

/// Contiguous near-equal slices of `0..len`, one per worker. The first
/// `len % workers` slices are one longer; trailing slices may be empty.
pub fn partition(len: usize, workers: usize) -> Vec<Range<usize>> {
    let workers = workers.max(1);
    let base = len / workers;
    let extra = len % workers;
    let mut start = 0;
    (0..workers)
        .map(|w| {
            let size = base + usize::from(w < extra);
            let range = start..start + size;
            start += size;
            range
        })
        .collect()
}

fn evaluate_slice(individuals: &mut [Individual], graph: &TaskGraph) {
    let total = graph.total_time();
    let mut decoder = Decoder::new();
    for ind in individuals {
        let makespan = decoder
            .makespan(&ind.chromosome, graph)
            .expect("height-sorted chromosomes always decode");
        ind.evaluation = Some(Evaluation {
            makespan,
            fitness: fitness_from_makespan(makespan, total),
        });
    }
}

/// Sets the fitness of every individual. With `workers > 1` the population is
/// split by [`partition`] and each non-empty slice is decoded on its own
/// thread; the call returns only after every worker has joined.
pub fn evaluate_population(
    pop: &mut Population,
    graph: &TaskGraph,
    workers: usize,
) -> Result<(), ConfigError> {
    if workers < 1 {
        return Err(ConfigError::new("worker count must be at least 1"));
    }
    if workers == 1 {
        evaluate_slice(pop.individuals_mut(), graph);
        return Ok(());
    }

    let ranges = partition(pop.len(), workers);
    thread::scope(|scope| {
        let mut rest = pop.individuals_mut();
        for range in ranges {
            let (slice, tail) = rest.split_at_mut(range.len());
            rest = tail;
            if !slice.is_empty() {
                scope.spawn(move || evaluate_slice(slice, graph));
            }
        }
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::{init_population, Instance};
    use crate::taskgraph::{parse_graph, random_dag, DagParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chain() -> TaskGraph {
        parse_graph("task a 3\ntask b 2\nedge a b").unwrap()
    }

    #[test]
    fn chain_across_processors() {
        let g = chain();
        let c = Chromosome::from_ids(&g, &[&["a"], &["b"]]).unwrap();
        let s = decode(&c, &g).unwrap();
        assert_eq!(s.start_of(&g, "a"), Some(0));
        assert_eq!(s.start_of(&g, "b"), Some(3));
        assert_eq!(s.makespan, 5);
        assert_eq!(fitness_of(&s, &g), 1);
        s.validate(&g, &c).unwrap();
    }

    #[test]
    fn chain_on_one_processor() {
        let g = chain();
        let c = Chromosome::from_ids(&g, &[&["a", "b"], &[]]).unwrap();
        assert_eq!(decode(&c, &g).unwrap().makespan, 5);
    }

    #[test]
    fn independent_pair() {
        let g = parse_graph("task a 4\ntask b 4").unwrap();
        let c = Chromosome::from_ids(&g, &[&["a"], &["b"]]).unwrap();
        let s = decode(&c, &g).unwrap();
        assert_eq!((s.start[0], s.start[1], s.makespan), (0, 0, 4));
        assert_eq!(fitness_of(&s, &g), 5);
    }

    #[test]
    fn single_task_fitness() {
        let g = parse_graph("task a 7").unwrap();
        let c = Chromosome::from_ids(&g, &[&[], &["a"]]).unwrap();
        let s = decode(&c, &g).unwrap();
        assert_eq!((s.makespan, fitness_of(&s, &g)), (7, 1));
    }

    #[test]
    fn decode_reports_bad_chromosomes() {
        let g = parse_graph("task a 1\ntask b 1\ntask c 1\nedge a b").unwrap();
        let stalled = Chromosome::from_ids(&g, &[&["b", "a"], &["c"]]).unwrap();
        assert!(decode(&stalled, &g).is_err());
        let short = Chromosome::from_ids(&g, &[&["a", "b"], &[]]).unwrap();
        assert!(decode(&short, &g).is_err());
        let dup = Chromosome::from_ids(&g, &[&["a", "b", "c"], &["c"]]).unwrap();
        assert!(decode(&dup, &g).is_err());
    }

    #[test]
    fn gantt_csv() {
        let g = parse_graph("task a 3\ntask b 2\ntask c 1\nedge a b").unwrap();
        let c = Chromosome::from_ids(&g, &[&["c"], &["a", "b"]]).unwrap();
        let s = decode(&c, &g).unwrap();
        let mut out = Vec::new();
        s.write_gantt_csv(&g, &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "task,processor,start,finish\nc,0,0,1\na,1,0,3\nb,1,3,5\n"
        );
    }

    #[test]
    fn partition_shapes() {
        assert_eq!(partition(10, 1), vec![0..10]);
        assert_eq!(partition(10, 3), vec![0..4, 4..7, 7..10]);
        let p = partition(3, 8);
        assert_eq!(p.iter().filter(|r| !r.is_empty()).count(), 3);
        assert_eq!(p.len(), 8);
        assert_eq!(p.last().unwrap().end, 3);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let g = random_dag(&DagParams {
            tasks: 25,
            edge_prob: 0.15,
            t_min: 1,
            t_max: 20,
            seed: 17,
        })
        .unwrap();
        let inst = Instance::new(g.clone(), 4).unwrap();
        let base = init_population(&inst, 37, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let mut serial = base.clone();
        evaluate_population(&mut serial, &g, 1).unwrap();
        let expected = serial.fitness_vector();
        assert!(expected.iter().all(Option::is_some));
        for workers in [2, 3, 4, 8, 64] {
            let mut pop = base.clone();
            evaluate_population(&mut pop, &g, workers).unwrap();
            assert_eq!(pop.fitness_vector(), expected, "workers = {workers}");
        }
    }

    #[test]
    fn more_workers_than_individuals() {
        let g = chain();
        let inst = Instance::new(g.clone(), 2).unwrap();
        let mut pop = init_population(&inst, 3, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        evaluate_population(&mut pop, &g, 8).unwrap();
        assert!(pop.individuals().iter().all(|i| i.makespan() == Some(5)));
        assert!(evaluate_population(&mut pop, &g, 0).is_err());
    }

    #[test]
    fn evaluation_matches_full_decode() {
        let g = chain();
        let mut pop = Population::new(vec![Individual::new(
            Chromosome::from_ids(&g, &[&["a", "b"], &[]]).unwrap(),
        )]);
        evaluate_population(&mut pop, &g, 1).unwrap();
        let ind = &pop.individuals()[0];
        let full = decode(&ind.chromosome, &g).unwrap();
        assert_eq!(ind.makespan(), Some(full.makespan));
        assert_eq!(ind.fitness(), Some(fitness_of(&full, &g)));
    }
}
