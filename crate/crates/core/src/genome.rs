//! Chromosome encoding and the genetic operators.
//!
//! A chromosome holds one ordered task list per target processor. Every
//! list is sorted by task height, which is enough to make any chromosome
//! decodable without deadlock. The operators below never break that
//! ordering, so no repair step is needed anywhere.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{ConfigError, Error, Result};
use crate::taskgraph::{compute_heights, HeightMap, TaskGraph, TaskIdx};

/// A task graph paired with a target processor count, plus the derived data
/// the operators need on every call.
#[derive(Debug, Clone)]
pub struct Instance {
    graph: TaskGraph,
    heights: HeightMap,
    processors: usize,
    /// Heights that hold at least two tasks (mutation candidates).
    swappable: Vec<u32>,
}

impl Instance {
    pub fn new(graph: TaskGraph, processors: usize) -> Result<Self, ConfigError> {
        if processors < 1 {
            return Err(ConfigError::new("target processor count must be at least 1"));
        }
        let heights = compute_heights(&graph);
        let swappable = heights
            .levels()
            .iter()
            .enumerate()
            .filter(|(_, level)| level.len() >= 2)
            .map(|(h, _)| h as u32)
            .collect();
        Ok(Instance {
            graph,
            heights,
            processors,
            swappable,
        })
    }

    pub fn graph(&self) -> &TaskGraph {
        &self.graph
    }

    pub fn heights(&self) -> &HeightMap {
        &self.heights
    }

    pub fn processors(&self) -> usize {
        self.processors
    }
}

/// Per-processor task lists, stored back to back in one buffer.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chromosome {
    tasks: Vec<TaskIdx>,
    /// `ends[p]` is one past the last position of list `p`.
    ends: Vec<usize>,
}

impl Chromosome {
    pub fn new(lists: Vec<Vec<TaskIdx>>) -> Self {
        let mut tasks = Vec::with_capacity(lists.iter().map(Vec::len).sum());
        let ends = lists
            .iter()
            .map(|l| {
                tasks.extend_from_slice(l);
                tasks.len()
            })
            .collect();
        Chromosome { tasks, ends }
    }

    /// Builds a chromosome from task ids, one slice per processor.
    pub fn from_ids(graph: &TaskGraph, lists: &[&[&str]]) -> Result<Self> {
        let lists = lists
            .iter()
            .map(|list| {
                list.iter()
                    .map(|id| {
                        graph
                            .index_of(id)
                            .ok_or_else(|| Error::Mismatch(format!("unknown task `{id}`")))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        Ok(Self::new(lists))
    }

    pub fn list(&self, p: usize) -> &[TaskIdx] {
        let start = if p == 0 { 0 } else { self.ends[p - 1] };
        &self.tasks[start..self.ends[p]]
    }

    pub fn lists(&self) -> impl ExactSizeIterator<Item = &[TaskIdx]> + '_ {
        (0..self.ends.len()).map(|p| self.list(p))
    }

    pub fn to_lists(&self) -> Vec<Vec<TaskIdx>> {
        self.lists().map(<[TaskIdx]>::to_vec).collect()
    }

    pub fn processors(&self) -> usize {
        self.ends.len()
    }

    pub fn task_count(&self) -> usize {
        self.tasks.len()
    }

    pub fn to_ids<'g>(&self, graph: &'g TaskGraph) -> Vec<Vec<&'g str>> {
        self.lists()
            .map(|l| l.iter().map(|&t| graph.id(t)).collect())
            .collect()
    }

    /// Checks the partition and height-order invariants.
    pub fn validate(&self, inst: &Instance) -> Result<()> {
        if self.processors() != inst.processors {
            return Err(Error::Mismatch(format!(
                "{} lists for {} processors",
                self.processors(),
                inst.processors
            )));
        }
        let n = inst.graph.len();
        let mut seen = vec![false; n];
        for (p, list) in self.lists().enumerate() {
            for &t in list {
                if t >= n {
                    return Err(Error::Mismatch(format!("task index {t} out of range")));
                }
                if std::mem::replace(&mut seen[t], true) {
                    return Err(Error::Mismatch(format!(
                        "task `{}` appears more than once",
                        inst.graph.id(t)
                    )));
                }
            }
            if list
                .windows(2)
                .any(|w| inst.heights.height(w[0]) > inst.heights.height(w[1]))
            {
                return Err(Error::Mismatch(format!(
                    "list {p} is not sorted by height"
                )));
            }
        }
        if let Some(t) = seen.iter().position(|s| !s) {
            return Err(Error::Mismatch(format!(
                "task `{}` is missing",
                inst.graph.id(t)
            )));
        }
        Ok(())
    }

    fn check_shape(&self, inst: &Instance) -> Result<()> {
        if self.processors() != inst.processors || self.task_count() != inst.graph.len() {
            return Err(Error::Mismatch(format!(
                "chromosome has {} lists / {} tasks, instance expects {} / {}",
                self.processors(),
                self.task_count(),
                inst.processors,
                inst.graph.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Evaluation {
    pub makespan: u64,
    pub fitness: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Individual {
    pub chromosome: Chromosome,
    pub evaluation: Option<Evaluation>,
}

impl Individual {
    pub fn new(chromosome: Chromosome) -> Self {
        Individual {
            chromosome,
            evaluation: None,
        }
    }

    pub fn fitness(&self) -> Option<u64> {
        self.evaluation.map(|e| e.fitness)
    }

    pub fn makespan(&self) -> Option<u64> {
        self.evaluation.map(|e| e.makespan)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Population {
    individuals: Vec<Individual>,
}

impl Population {
    pub fn new(individuals: Vec<Individual>) -> Self {
        Population { individuals }
    }

    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    pub fn individuals(&self) -> &[Individual] {
        &self.individuals
    }

    pub fn individuals_mut(&mut self) -> &mut [Individual] {
        &mut self.individuals
    }

    pub fn into_individuals(self) -> Vec<Individual> {
        self.individuals
    }

    pub fn fitness_vector(&self) -> Vec<Option<u64>> {
        self.individuals.iter().map(Individual::fitness).collect()
    }

    /// Index of the evaluated individual with the smallest makespan (first on ties).
    pub fn best_index(&self) -> Option<usize> {
        self.individuals
            .iter()
            .enumerate()
            .filter_map(|(i, ind)| ind.makespan().map(|m| (m, i)))
            .min()
            .map(|(_, i)| i)
    }

    /// Index of the evaluated individual with the largest makespan (first on ties).
    pub fn worst_index(&self) -> Option<usize> {
        self.individuals
            .iter()
            .enumerate()
            .filter_map(|(i, ind)| ind.makespan().map(|m| (m, std::cmp::Reverse(i))))
            .max()
            .map(|(_, std::cmp::Reverse(i))| i)
    }
}

/// One random chromosome: tasks visited level by level (ties shuffled), each
/// appended to a uniformly chosen processor.
pub fn random_chromosome<R: Rng + ?Sized>(inst: &Instance, rng: &mut R) -> Chromosome {
    let mut lists = vec![Vec::new(); inst.processors];
    let mut level_buf = Vec::new();
    for level in inst.heights.levels() {
        level_buf.clear();
        level_buf.extend_from_slice(level);
        level_buf.shuffle(rng);
        for &t in &level_buf {
            lists[rng.gen_range(0..inst.processors)].push(t);
        }
    }
    Chromosome::new(lists)
}

pub fn init_population<R: Rng + ?Sized>(
    inst: &Instance,
    size: usize,
    rng: &mut R,
) -> Result<Population, ConfigError> {
    if size < 2 {
        return Err(ConfigError::new("population size must be at least 2"));
    }
    Ok(Population::new(
        (0..size)
            .map(|_| Individual::new(random_chromosome(inst, rng)))
            .collect(),
    ))
}

/// Fitness-proportional sampler over an evaluated population.
#[derive(Debug, Clone)]
pub struct Roulette {
    wheel: WeightedIndex<u64>,
}

impl Roulette {
    pub fn new(pop: &Population) -> Result<Self> {
        let weights = pop
            .individuals()
            .iter()
            .map(|ind| ind.fitness().ok_or(Error::Unevaluated))
            .collect::<Result<Vec<_>>>()?;
        if weights.is_empty() {
            return Err(ConfigError::new("cannot select from an empty population").into());
        }
        let wheel = WeightedIndex::new(weights)
            .map_err(|e| ConfigError::new(format!("invalid fitness weights: {e}")))?;
        Ok(Roulette { wheel })
    }

    pub fn spin<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.wheel.sample(rng)
    }

    /// Two independent spins; the indices may coincide.
    pub fn pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        (self.spin(rng), self.spin(rng))
    }
}

pub fn select_parents<'p, R: Rng + ?Sized>(
    pop: &'p Population,
    rng: &mut R,
) -> Result<(&'p Individual, &'p Individual)> {
    let (i, j) = Roulette::new(pop)?.pair(rng);
    Ok((&pop.individuals[i], &pop.individuals[j]))
}

/// Height-cut crossover at a random cut in `0..=max_height`.
pub fn crossover<R: Rng + ?Sized>(
    a: &Chromosome,
    b: &Chromosome,
    inst: &Instance,
    rng: &mut R,
) -> Result<(Chromosome, Chromosome)> {
    let cut = rng.gen_range(0..=inst.heights.max_height());
    crossover_at(a, b, inst, cut)
}

/// Child 1 keeps `a`'s tasks of height `<= cut` and takes `b`'s tasks above
/// the cut, list by list; child 2 is the mirror image.
pub fn crossover_at(
    a: &Chromosome,
    b: &Chromosome,
    inst: &Instance,
    cut: u32,
) -> Result<(Chromosome, Chromosome)> {
    a.check_shape(inst)?;
    b.check_shape(inst)?;
    let h = inst.heights.as_slice();
    let splice = |low: &Chromosome, high: &Chromosome| {
        let mut tasks = Vec::with_capacity(low.tasks.len());
        let ends = low
            .lists()
            .zip(high.lists())
            .map(|(lo, hi)| {
                tasks.extend(lo.iter().copied().filter(|&t| h[t] <= cut));
                tasks.extend(hi.iter().copied().filter(|&t| h[t] > cut));
                tasks.len()
            })
            .collect();
        Chromosome { tasks, ends }
    };
    Ok((splice(a, b), splice(b, a)))
}

/// Swaps two distinct tasks of a randomly chosen height level. Chromosomes of
/// graphs whose levels are all singletons come back unchanged.
pub fn mutate<R: Rng + ?Sized>(c: &Chromosome, inst: &Instance, rng: &mut R) -> Chromosome {
    let mut out = c.clone();
    mutate_in_place(&mut out, inst, rng);
    out
}

pub fn mutate_in_place<R: Rng + ?Sized>(c: &mut Chromosome, inst: &Instance, rng: &mut R) {
    let Some(&height) = inst.swappable.choose(rng) else {
        return;
    };
    let level = &inst.heights.levels()[height as usize];
    let i = rng.gen_range(0..level.len());
    let mut j = rng.gen_range(0..level.len() - 1);
    if j >= i {
        j += 1;
    }
    swap_tasks(c, level[i], level[j]);
}

/// Exchanges the positions of tasks `x` and `y`.
pub fn swap_tasks(c: &mut Chromosome, x: TaskIdx, y: TaskIdx) {
    let ix = c.tasks.iter().position(|&t| t == x);
    let iy = c.tasks.iter().position(|&t| t == y);
    if let (Some(ix), Some(iy)) = (ix, iy) {
        c.tasks.swap(ix, iy);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taskgraph::parse_graph;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn inst(text: &str, m: usize) -> Instance {
        Instance::new(parse_graph(text).unwrap(), m).unwrap()
    }

    fn evaluated(fitness: &[u64]) -> Population {
        Population::new(
            fitness
                .iter()
                .enumerate()
                .map(|(i, &f)| Individual {
                    chromosome: Chromosome::new(vec![vec![i]]),
                    evaluation: Some(Evaluation {
                        makespan: 100 - f,
                        fitness: f,
                    }),
                })
                .collect(),
        )
    }

    #[test]
    fn init_single_task() {
        let inst = inst("task a 3", 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pop = init_population(&inst, 3, &mut rng).unwrap();
        assert_eq!(pop.len(), 3);
        for ind in pop.individuals() {
            assert_eq!(ind.chromosome.processors(), 2);
            assert_eq!(ind.chromosome.task_count(), 1);
            assert!(ind.fitness().is_none());
            ind.chromosome.validate(&inst).unwrap();
        }
    }

    #[test]
    fn init_is_deterministic_and_valid() {
        let inst = inst(
            "task a 1\ntask b 2\ntask c 3\ntask d 4\ntask e 1\nedge a b\nedge a c\nedge b d\nedge c d\n",
            3,
        );
        let a = init_population(&inst, 20, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = init_population(&inst, 20, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        for ind in a.individuals() {
            ind.chromosome.validate(&inst).unwrap();
        }
        assert!(init_population(&inst, 1, &mut ChaCha8Rng::seed_from_u64(9)).is_err());
    }

    #[test]
    fn validate_catches_defects() {
        let inst = inst("task a 3\ntask b 2\nedge a b", 2);
        let g = inst.graph();
        let ok = Chromosome::from_ids(g, &[&["a", "b"], &[]]).unwrap();
        ok.validate(&inst).unwrap();
        let unsorted = Chromosome::from_ids(g, &[&["b", "a"], &[]]).unwrap();
        assert!(unsorted.validate(&inst).is_err());
        let missing = Chromosome::from_ids(g, &[&["a"], &[]]).unwrap();
        assert!(missing.validate(&inst).is_err());
        let twice = Chromosome::from_ids(g, &[&["a", "b"], &["b"]]).unwrap();
        assert!(twice.validate(&inst).is_err());
        let wrong_m = Chromosome::from_ids(g, &[&["a", "b"]]).unwrap();
        assert!(wrong_m.validate(&inst).is_err());
    }

    #[test]
    fn roulette_frequency_three_to_one() {
        let pop = evaluated(&[3, 1]);
        let wheel = Roulette::new(&pop).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let draws = 10_000;
        let first = (0..draws).filter(|_| wheel.spin(&mut rng) == 0).count();
        let freq = first as f64 / draws as f64;
        assert!((freq - 0.75).abs() <= 0.02, "frequency {freq}");
    }

    #[test]
    fn roulette_symmetric_and_total() {
        let pop = evaluated(&[1, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let wheel = Roulette::new(&pop).unwrap();
        let first = (0..10_000).filter(|_| wheel.spin(&mut rng) == 0).count();
        assert!((first as f64 / 10_000.0 - 0.5).abs() <= 0.02);
        let (a, b) = select_parents(&pop, &mut rng).unwrap();
        assert!(pop.individuals().contains(a) && pop.individuals().contains(b));
    }

    #[test]
    fn roulette_requires_evaluation() {
        let pop = Population::new(vec![
            Individual::new(Chromosome::new(vec![vec![0]])),
            Individual::new(Chromosome::new(vec![vec![1]])),
        ]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            select_parents(&pop, &mut rng),
            Err(Error::Unevaluated)
        ));
    }

    #[test]
    fn crossover_equal_parents_is_identity() {
        let inst = inst("task a 1\ntask b 1\ntask c 1\nedge a c\nedge b c", 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = random_chromosome(&inst, &mut rng);
        for _ in 0..20 {
            let (x, y) = crossover(&c, &c, &inst, &mut rng).unwrap();
            assert_eq!(x, c);
            assert_eq!(y, c);
        }
    }

    #[test]
    fn crossover_cut_above_everything_returns_parents() {
        let inst = inst("task a 1\ntask b 1\ntask c 1\nedge a c\nedge b c", 2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_chromosome(&inst, &mut rng);
        let b = random_chromosome(&inst, &mut rng);
        let (x, y) = crossover_at(&a, &b, &inst, inst.heights().max_height()).unwrap();
        assert_eq!((x, y), (a, b));
    }

    #[test]
    fn crossover_chain_by_hand() {
        let inst = inst("task a 3\ntask b 2\nedge a b", 2);
        let g = inst.graph();
        let pa = Chromosome::from_ids(g, &[&["a", "b"], &[]]).unwrap();
        let pb = Chromosome::from_ids(g, &[&["a"], &["b"]]).unwrap();
        let (c1, c2) = crossover_at(&pa, &pb, &inst, 0).unwrap();
        assert_eq!(c1, Chromosome::from_ids(g, &[&["a"], &["b"]]).unwrap());
        assert_eq!(c2, Chromosome::from_ids(g, &[&["a", "b"], &[]]).unwrap());
    }

    #[test]
    fn crossover_rejects_mismatch() {
        let inst = inst("task a 3\ntask b 2\nedge a b", 2);
        let good = Chromosome::new(vec![vec![0, 1], vec![]]);
        let bad = Chromosome::new(vec![vec![0, 1]]);
        assert!(crossover_at(&good, &bad, &inst, 0).is_err());
        let short = Chromosome::new(vec![vec![0], vec![]]);
        assert!(crossover_at(&short, &good, &inst, 0).is_err());
    }

    #[test]
    fn mutate_chain_is_noop() {
        let inst = inst("task a 3\ntask b 2\ntask c 1\nedge a b\nedge b c", 2);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let c = random_chromosome(&inst, &mut rng);
        for _ in 0..10 {
            assert_eq!(mutate(&c, &inst, &mut rng), c);
        }
    }

    #[test]
    fn mutate_two_independent_tasks() {
        let inst = inst("task x 1\ntask y 1", 2);
        let g = inst.graph();
        let c = Chromosome::from_ids(g, &[&["x"], &["y"]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let swapped = mutate(&c, &inst, &mut rng);
        assert_eq!(swapped, Chromosome::from_ids(g, &[&["y"], &["x"]]).unwrap());
    }

    #[test]
    fn mutate_within_one_list() {
        let inst = inst("task x 1\ntask y 2\ntask z 3\nedge x z\nedge y z", 1);
        let g = inst.graph();
        let c = Chromosome::from_ids(g, &[&["x", "y", "z"]]).unwrap();
        let out = mutate(&c, &inst, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(out, Chromosome::from_ids(g, &[&["y", "x", "z"]]).unwrap());
        out.validate(&inst).unwrap();
    }

    #[test]
    fn best_and_worst() {
        let pop = evaluated(&[3, 7, 7, 1, 1]);
        assert_eq!(pop.best_index(), Some(1));
        assert_eq!(pop.worst_index(), Some(3));
    }
}
