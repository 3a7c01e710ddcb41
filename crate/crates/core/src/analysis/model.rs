//! Analytical run-time model of the sequential and master-slave GA.
//!
//! Costs are integer time units (the benchmark harness uses nanoseconds).
//! Everything that can be kept in integers is, so identities such as
//! `workers * parallel = sequential` when communication is free hold exactly.

use crate::error::ConfigError;

/// Overhead fraction of the sequential work under which a run still counts
/// as cost optimal.
pub const DEFAULT_DOMINANCE_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityModel {
    pub population: u64,
    pub generations: u64,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    /// Cost of one fitness evaluation.
    pub t_fitness: u64,
    pub t_crossover: u64,
    pub t_mutation: u64,
    pub workers: u64,
    /// Communication cost added to every parallel run.
    pub comm_cost: u64,
}

impl ComplexityModel {
    /// Model with unit operator costs, no communication cost and the default
    /// crossover/mutation probabilities.
    pub fn new(population: u64, generations: u64, t_fitness: u64, workers: u64) -> Self {
        ComplexityModel {
            population,
            generations,
            crossover_prob: 0.8,
            mutation_prob: 0.02,
            t_fitness,
            t_crossover: 1,
            t_mutation: 1,
            workers,
            comm_cost: 0,
        }
    }

    pub fn with_comm_cost(self, comm_cost: u64) -> Self {
        ComplexityModel { comm_cost, ..self }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.population < 1 || self.generations < 1 || self.workers < 1 {
            return Err(ConfigError::new(
                "population, generations and workers must all be at least 1",
            ));
        }
        if !(0.0..=1.0).contains(&self.crossover_prob) || !(0.0..=1.0).contains(&self.mutation_prob)
        {
            return Err(ConfigError::new("probabilities must lie in [0, 1]"));
        }
        Ok(())
    }

    /// `P * G * t_fitness`.
    fn work(&self) -> u128 {
        self.population as u128 * self.generations as u128 * self.t_fitness as u128
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequentialCost {
    /// `P * G * t_fitness * (Pc * t_crossover + Pm * t_mutation)`.
    pub full: f64,
    /// `P * G * t_fitness`.
    pub simplified: u128,
}

pub fn sequential_cost(model: &ComplexityModel) -> SequentialCost {
    let work = model.work();
    let operators = model.crossover_prob * model.t_crossover as f64
        + model.mutation_prob * model.t_mutation as f64;
    SequentialCost {
        full: work as f64 * operators,
        simplified: work,
    }
}

/// `P * G * t_fitness / workers + CC`.
pub fn parallel_cost(model: &ComplexityModel) -> f64 {
    debug_assert!(model.workers >= 1);
    model.work() as f64 / model.workers as f64 + model.comm_cost as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Speedup {
    /// Sequential (simplified) cost over parallel cost.
    pub ratio: f64,
    /// The closed form `workers - CC`, reported for comparison only: it
    /// subtracts a time from a dimensionless ratio and drifts from `ratio`
    /// as soon as CC is non-zero.
    pub paper_form: f64,
}

impl Speedup {
    pub fn divergence(&self) -> f64 {
        self.paper_form - self.ratio
    }
}

pub fn predicted_speedup(model: &ComplexityModel) -> Speedup {
    let parallel = parallel_cost(model);
    let sequential = sequential_cost(model).simplified as f64;
    // Zero work and zero communication: nothing to speed up.
    let ratio = if parallel == 0.0 { 1.0 } else { sequential / parallel };
    Speedup {
        ratio,
        paper_form: model.workers as f64 - model.comm_cost as f64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostOptimality {
    /// `workers * parallel cost = P * G * t_fitness + CC * workers`.
    pub cost: u128,
    /// `CC * workers`.
    pub overhead: u128,
    pub is_optimal: bool,
}

/// Processor-time product of the parallel run. It counts as optimal when
/// the communication overhead is at most `threshold` times the sequential
/// work.
pub fn cost_optimality(model: &ComplexityModel, threshold: f64) -> CostOptimality {
    let work = model.work();
    let overhead = model.comm_cost as u128 * model.workers as u128;
    CostOptimality {
        cost: work + overhead,
        overhead,
        is_optimal: overhead as f64 <= threshold * work as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_examples() {
        let unit = ComplexityModel::new(1, 1, 1, 1);
        assert_eq!(sequential_cost(&unit).simplified, 1);

        let t1 = ComplexityModel::new(10_000, 2, 1, 1);
        assert_eq!(sequential_cost(&t1).simplified, 20_000);

        let m = ComplexityModel {
            t_crossover: 3,
            t_mutation: 5,
            ..ComplexityModel::new(7, 3, 2, 1)
        };
        let doubled = ComplexityModel {
            generations: 6,
            ..m
        };
        let (a, b) = (sequential_cost(&m), sequential_cost(&doubled));
        assert_eq!(b.simplified, 2 * a.simplified);
        assert_eq!(b.full, 2.0 * a.full);
        // 7 * 3 * 2 * (0.8 * 3 + 0.02 * 5)
        assert!((a.full - 42.0 * 2.5).abs() < 1e-9);
    }

    #[test]
    fn parallel_examples() {
        let m = ComplexityModel::new(13, 4, 3, 1);
        assert_eq!(parallel_cost(&m), sequential_cost(&m).simplified as f64);
        assert_eq!(parallel_cost(&ComplexityModel::new(4, 1, 1, 4)), 1.0);
        let base = ComplexityModel::new(100, 9, 2, 3);
        assert_eq!(
            parallel_cost(&base.with_comm_cost(5)),
            parallel_cost(&base) + 5.0
        );
    }

    #[test]
    fn speedup_examples() {
        let s = predicted_speedup(&ComplexityModel::new(50, 10, 1, 2));
        assert_eq!((s.ratio, s.paper_form), (2.0, 2.0));
        let s = predicted_speedup(&ComplexityModel::new(50, 10, 1, 1));
        assert_eq!(s.ratio, 1.0);
        let s = predicted_speedup(&ComplexityModel::new(1000, 10, 1, 4).with_comm_cost(500));
        assert!((s.ratio - 10_000.0 / 3_000.0).abs() < 1e-12);
        // The closed form subtracts the raw communication cost.
        assert_eq!(s.paper_form, 4.0 - 500.0);
        assert!(s.divergence() < 0.0);
    }

    #[test]
    fn cost_examples() {
        let m = ComplexityModel::new(40, 25, 3, 8);
        let c = cost_optimality(&m, DEFAULT_DOMINANCE_THRESHOLD);
        assert_eq!(c.cost, sequential_cost(&m).simplified);
        assert!(c.is_optimal);

        // CC * workers equals the sequential work.
        let heavy = ComplexityModel::new(40, 25, 4, 8).with_comm_cost(500);
        let c = cost_optimality(&heavy, DEFAULT_DOMINANCE_THRESHOLD);
        assert_eq!(c.overhead, sequential_cost(&heavy).simplified);
        assert!(!c.is_optimal);

        let single = ComplexityModel::new(100, 10, 1, 1).with_comm_cost(100);
        assert!(cost_optimality(&single, DEFAULT_DOMINANCE_THRESHOLD).is_optimal);
        let over = single.with_comm_cost(101);
        assert!(!cost_optimality(&over, DEFAULT_DOMINANCE_THRESHOLD).is_optimal);
    }

    #[test]
    fn validation() {
        assert!(ComplexityModel::new(1, 1, 0, 1).validate().is_ok());
        assert!(ComplexityModel::new(0, 1, 1, 1).validate().is_err());
        assert!(ComplexityModel::new(1, 1, 1, 0).validate().is_err());
        let bad = ComplexityModel {
            crossover_prob: 2.0,
            ..ComplexityModel::new(1, 1, 1, 1)
        };
        assert!(bad.validate().is_err());
    }
}
