//! Generational GA main loop.
//!
//! The master owns the population and the single seeded RNG stream; the
//! only work handed to other threads is fitness evaluation. Because workers
//! never touch the RNG and decoding is exact integer arithmetic, a
//! master-slave run follows the same trajectory as a sequential run with
//! the same seed.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ConfigError, Result};
use crate::evaluator::evaluate_population;
use crate::genome::{
    crossover, init_population, mutate_in_place, Chromosome, Individual, Instance, Population,
    Roulette,
};
use crate::taskgraph::TaskGraph;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    /// Processors in the scheduling problem.
    pub target_processors: usize,
    /// Threads evaluating fitness in master-slave mode.
    pub workers: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 100,
            generations: 200,
            crossover_prob: 0.8,
            mutation_prob: 0.02,
            target_processors: 2,
            workers: 1,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if self.population_size < 2 {
            return Err(ConfigError::new("population size must be at least 2"));
        }
        if self.generations < 1 {
            return Err(ConfigError::new("generation count must be at least 1"));
        }
        if !prob(self.crossover_prob) {
            return Err(ConfigError::new("crossover probability must lie in [0, 1]"));
        }
        if !prob(self.mutation_prob) {
            return Err(ConfigError::new("mutation probability must lie in [0, 1]"));
        }
        if self.target_processors < 1 {
            return Err(ConfigError::new("target processor count must be at least 1"));
        }
        if self.workers < 1 {
            return Err(ConfigError::new("worker count must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Sequential,
    MasterSlave,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Sequential => "seq",
            Mode::MasterSlave => "par",
        })
    }
}

impl FromStr for Mode {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "seq" | "sequential" => Ok(Mode::Sequential),
            "par" | "parallel" | "master-slave" | "master_slave" => Ok(Mode::MasterSlave),
            other => Err(ConfigError::new(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GaResult {
    pub best_chromosome: Chromosome,
    pub best_makespan: u64,
    /// Best makespan after each generation.
    pub history: Vec<u64>,
    pub wall_time: Duration,
    pub evaluations: u64,
}

impl GaResult {
    pub fn generations_run(&self) -> usize {
        self.history.len()
    }
}

impl PartialEq for GaResult {
    /// Ignores `wall_time`.
    fn eq(&self, other: &Self) -> bool {
        self.best_chromosome == other.best_chromosome
            && self.best_makespan == other.best_makespan
            && self.history == other.history
            && self.evaluations == other.evaluations
    }
}

/// Runs exactly `config.generations` generations.
pub fn run(config: &GaConfig, graph: &TaskGraph, mode: Mode) -> Result<GaResult> {
    evolve(config, graph, mode, None)
}

/// Like [`run`], but stops once the best makespan has gone `patience`
/// generations without improving.
pub fn run_to_convergence(
    config: &GaConfig,
    graph: &TaskGraph,
    mode: Mode,
    patience: usize,
) -> Result<GaResult> {
    if patience < 1 {
        return Err(ConfigError::new("patience must be at least 1").into());
    }
    evolve(config, graph, mode, Some(patience))
}

fn evolve(
    config: &GaConfig,
    graph: &TaskGraph,
    mode: Mode,
    patience: Option<usize>,
) -> Result<GaResult> {
    config.validate()?;
    let started = Instant::now();
    let inst = Instance::new(graph.clone(), config.target_processors)?;
    let workers = match mode {
        Mode::Sequential => 1,
        Mode::MasterSlave => config.workers,
    };
    let p = config.population_size;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut pop = init_population(&inst, p, &mut rng)?;
    evaluate_population(&mut pop, graph, workers)?;
    let mut evaluations = p as u64;
    let mut best = current_best(&pop);
    let mut history = Vec::with_capacity(config.generations);
    let mut stalled = 0;

    for _ in 0..config.generations {
        let elite = pop.individuals()[pop.best_index().expect("evaluated population")].clone();
        let mut offspring = breed(&pop, &inst, config, &mut rng)?;
        evaluate_population(&mut offspring, graph, workers)?;
        evaluations += p as u64;

        let worst = offspring.worst_index().expect("evaluated offspring");
        offspring.individuals_mut()[worst] = elite;
        pop = offspring;

        let gen_best = current_best(&pop);
        if gen_best < best {
            best = gen_best;
            stalled = 0;
        } else {
            stalled += 1;
        }
        history.push(gen_best);
        if patience.is_some_and(|limit| stalled >= limit) {
            break;
        }
    }

    let best_ind = &pop.individuals()[pop.best_index().expect("evaluated population")];
    Ok(GaResult {
        best_chromosome: best_ind.chromosome.clone(),
        best_makespan: *history.last().expect("at least one generation"),
        history,
        wall_time: started.elapsed(),
        evaluations,
    })
}

fn current_best(pop: &Population) -> u64 {
    pop.individuals()
        .iter()
        .filter_map(Individual::makespan)
        .min()
        .expect("evaluated population")
}

/// Produces exactly `P` unevaluated offspring. All randomness is drawn here,
/// on the master, in a fixed order.
fn breed<R: Rng + ?Sized>(
    pop: &Population,
    inst: &Instance,
    config: &GaConfig,
    rng: &mut R,
) -> Result<Population> {
    let p = config.population_size;
    let wheel = Roulette::new(pop)?;
    let parents = pop.individuals();
    let mut children = Vec::with_capacity(p);
    while children.len() < p {
        let (i, j) = wheel.pair(rng);
        let (a, b) = (&parents[i].chromosome, &parents[j].chromosome);
        let (c1, c2) = if rng.gen_bool(config.crossover_prob) {
            crossover(a, b, inst, rng)?
        } else {
            (a.clone(), b.clone())
        };
        for mut child in [c1, c2] {
            if children.len() == p {
                break;
            }
            if rng.gen_bool(config.mutation_prob) {
                mutate_in_place(&mut child, inst, rng);
            }
            children.push(Individual::new(child));
        }
    }
    Ok(Population::new(children))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taskgraph::{lower_bounds, parse_graph, random_dag, DagParams};

    fn config(p: usize, g: usize, m: usize) -> GaConfig {
        GaConfig {
            population_size: p,
            generations: g,
            target_processors: m,
            ..GaConfig::default()
        }
    }

    #[test]
    fn single_task_no_evolution() {
        let g = parse_graph("task a 7").unwrap();
        let cfg = GaConfig {
            crossover_prob: 0.0,
            mutation_prob: 0.0,
            ..config(2, 1, 2)
        };
        let r = run(&cfg, &g, Mode::Sequential).unwrap();
        assert_eq!(r.best_makespan, 7);
        assert_eq!(r.history, vec![7]);
        assert_eq!(r.evaluations, 4);
    }

    #[test]
    fn chain_reaches_critical_path() {
        let g = parse_graph("task a 3\ntask b 2\nedge a b").unwrap();
        let r = run(&config(20, 50, 2), &g, Mode::Sequential).unwrap();
        assert_eq!(r.best_makespan, 5);
        assert_eq!(r.history.len(), 50);
        assert_eq!(r.evaluations, 20 * 51);
    }

    #[test]
    fn modes_agree() {
        let g = random_dag(&DagParams {
            tasks: 20,
            edge_prob: 0.2,
            t_min: 1,
            t_max: 10,
            seed: 4,
        })
        .unwrap();
        let cfg = GaConfig {
            workers: 4,
            seed: 99,
            ..config(30, 40, 3)
        };
        let seq = run(&cfg, &g, Mode::Sequential).unwrap();
        let par = run(&cfg, &g, Mode::MasterSlave).unwrap();
        assert_eq!(seq, par);
        assert!(seq.history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(seq.best_makespan, *seq.history.last().unwrap());
        let lb = lower_bounds(&g, 3).unwrap().makespan();
        assert!(seq.best_makespan >= lb);
    }

    #[test]
    fn odd_population_size() {
        let g = parse_graph("task a 1\ntask b 2\ntask c 3").unwrap();
        let r = run(&config(5, 3, 2), &g, Mode::Sequential).unwrap();
        assert_eq!(r.evaluations, 5 * 4);
    }

    #[test]
    fn convergence_stops_early() {
        let single = parse_graph("task a 7").unwrap();
        let r = run_to_convergence(&config(4, 30, 2), &single, Mode::Sequential, 1).unwrap();
        assert_eq!(r.history, vec![7]);
        assert_eq!(r.evaluations, 4 * 2);

        // Any chromosome of the chain is optimal, so the best is fixed from
        // the initial population on.
        let chain = parse_graph("task a 3\ntask b 2\nedge a b").unwrap();
        let r = run_to_convergence(&config(10, 100, 2), &chain, Mode::Sequential, 7).unwrap();
        assert_eq!(r.history.len(), 7);
        assert_eq!(r.evaluations, 10 * 8);
    }

    #[test]
    fn generous_patience_matches_run() {
        let g = random_dag(&DagParams {
            tasks: 12,
            edge_prob: 0.25,
            t_min: 1,
            t_max: 9,
            seed: 1,
        })
        .unwrap();
        let cfg = config(16, 20, 3);
        let plain = run(&cfg, &g, Mode::Sequential).unwrap();
        let patient = run_to_convergence(&cfg, &g, Mode::Sequential, 20).unwrap();
        assert_eq!(plain, patient);
        assert!(run_to_convergence(&cfg, &g, Mode::Sequential, 0).is_err());
    }

    #[test]
    fn rejects_bad_config() {
        let g = parse_graph("task a 1").unwrap();
        for bad in [
            config(1, 1, 1),
            config(2, 0, 1),
            config(2, 1, 0),
            GaConfig {
                crossover_prob: 1.5,
                ..config(2, 1, 1)
            },
            GaConfig {
                mutation_prob: -0.1,
                ..config(2, 1, 1)
            },
            GaConfig {
                workers: 0,
                ..config(2, 1, 1)
            },
        ] {
            assert!(run(&bad, &g, Mode::Sequential).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("seq".parse::<Mode>().unwrap(), Mode::Sequential);
        assert_eq!("par".parse::<Mode>().unwrap(), Mode::MasterSlave);
        assert!("fast".parse::<Mode>().is_err());
        assert_eq!(Mode::MasterSlave.to_string(), "par");
    }
}
