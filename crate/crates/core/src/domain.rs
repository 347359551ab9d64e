//! Search-space contract shared by every engine: descriptors, evaluation
//! records, individuals with lineage, and the domain trait.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type IndividualId = u64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("malformed genome: {0}")]
    Malformed(String),
    #[error("descriptor entry {index} is not finite ({value})")]
    NonFiniteDescriptor { index: usize, value: f64 },
    #[error("fitness {0} outside [0, 1]")]
    FitnessOutOfRange(f64),
    #[error("infeasibility {infeasibility} inconsistent with feasible={feasible}")]
    Infeasibility { feasible: bool, infeasibility: f64 },
}

/// Fixed-length behavior vector measured on an evaluated genome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BehaviorDescriptor(Vec<f64>);

impl BehaviorDescriptor {
    pub fn new(values: Vec<f64>) -> Result<Self, EvalError> {
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(EvalError::NonFiniteDescriptor { index, value });
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dims(&self) -> usize {
        self.0.len()
    }
}

impl TryFrom<Vec<f64>> for BehaviorDescriptor {
    type Error = EvalError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

impl From<BehaviorDescriptor> for Vec<f64> {
    fn from(d: BehaviorDescriptor) -> Self {
        d.0
    }
}

/// Outcome of evaluating one genome.
///
/// `feasible` holds exactly when `infeasibility == 0`; fitness is normalized
/// into `[0, 1]` by every domain so aggregate scores compare across domains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub fitness: f64,
    pub descriptor: BehaviorDescriptor,
    pub feasible: bool,
    pub infeasibility: f64,
}

impl Evaluation {
    pub fn feasible(fitness: f64, descriptor: BehaviorDescriptor) -> Result<Self, EvalError> {
        Self::new(fitness, descriptor, 0.0)
    }

    /// Builds an evaluation whose feasibility follows from `infeasibility`.
    pub fn new(
        fitness: f64,
        descriptor: BehaviorDescriptor,
        infeasibility: f64,
    ) -> Result<Self, EvalError> {
        let eval = Self {
            fitness,
            descriptor,
            feasible: infeasibility == 0.0,
            infeasibility,
        };
        eval.validate()?;
        Ok(eval)
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if !(0.0..=1.0).contains(&self.fitness) {
            return Err(EvalError::FitnessOutOfRange(self.fitness));
        }
        if !self.infeasibility.is_finite()
            || self.infeasibility < 0.0
            || self.feasible != (self.infeasibility == 0.0)
        {
            return Err(EvalError::Infeasibility {
                feasible: self.feasible,
                infeasibility: self.infeasibility,
            });
        }
        Ok(())
    }
}

/// How an individual came to exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Seed,
    Mutation,
    Crossover,
}

impl Origin {
    pub fn from_parent_count(n: usize) -> Self {
        match n {
            0 => Origin::Seed,
            1 => Origin::Mutation,
            _ => Origin::Crossover,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual<G> {
    pub id: IndividualId,
    pub genome: G,
    pub evaluation: Evaluation,
    pub parents: Vec<IndividualId>,
    pub birth_generation: u64,
}

impl<G> Individual<G> {
    pub fn fitness(&self) -> f64 {
        self.evaluation.fitness
    }

    pub fn descriptor(&self) -> &[f64] {
        self.evaluation.descriptor.values()
    }

    pub fn is_feasible(&self) -> bool {
        self.evaluation.feasible
    }

    pub fn infeasibility(&self) -> f64 {
        self.evaluation.infeasibility
    }

    pub fn origin(&self) -> Origin {
        Origin::from_parent_count(self.parents.len())
    }
}

/// A content-generation search space.
///
/// Implementations own the genome encoding and its variation operators;
/// engines only ask for random genomes, offspring, and evaluations.
/// `evaluate` must be deterministic for a fixed genome.
pub trait Domain: Send + Sync {
    type Genome: Clone + Send + Sync + fmt::Debug;

    fn name(&self) -> &'static str;

    fn descriptor_dims(&self) -> usize;

    /// Per-dimension `[lo, hi)` bounds of the descriptors `evaluate` returns.
    fn descriptor_bounds(&self) -> Vec<(f64, f64)>;

    fn random_genome<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Genome;

    fn mutate<R: Rng + ?Sized>(&self, genome: &Self::Genome, rng: &mut R) -> Self::Genome;

    fn crossover<R: Rng + ?Sized>(
        &self,
        a: &Self::Genome,
        b: &Self::Genome,
        rng: &mut R,
    ) -> Self::Genome;

    fn evaluate(&self, genome: &Self::Genome) -> Result<Evaluation, EvalError>;

    /// Text form of a genome, parseable by [`Domain::parse`].
    fn render(&self, genome: &Self::Genome) -> String;

    fn parse(&self, text: &str) -> Result<Self::Genome, EvalError>;

    /// Point in the space where novelty distances are measured. Defaults to
    /// the behavior descriptor.
    fn novelty_point(&self, _genome: &Self::Genome, evaluation: &Evaluation) -> Vec<f64> {
        evaluation.descriptor.values().to_vec()
    }

    /// Distance between two novelty points. Defaults to Euclidean.
    fn novelty_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        crate::divergence::euclidean(a, b)
    }
}

/// Produces a child genome: crossover with `parent_b` when given, then
/// mutation.
pub fn vary<D: Domain, R: Rng + ?Sized>(
    domain: &D,
    parent_a: &D::Genome,
    parent_b: Option<&D::Genome>,
    rng: &mut R,
) -> D::Genome {
    match parent_b {
        Some(b) => {
            let child = domain.crossover(parent_a, b, rng);
            domain.mutate(&child, rng)
        }
        None => domain.mutate(parent_a, rng),
    }
}

/// Varies and evaluates a child of one or two parents.
pub fn spawn_offspring<D: Domain, R: Rng + ?Sized>(
    domain: &D,
    id: IndividualId,
    generation: u64,
    parent_a: &Individual<D::Genome>,
    parent_b: Option<&Individual<D::Genome>>,
    rng: &mut R,
) -> Result<Individual<D::Genome>, EvalError> {
    let genome = vary(domain, &parent_a.genome, parent_b.map(|b| &b.genome), rng);
    let evaluation = domain.evaluate(&genome)?;
    let mut parents = vec![parent_a.id];
    parents.extend(parent_b.map(|b| b.id));
    Ok(Individual {
        id,
        genome,
        evaluation,
        parents,
        birth_generation: generation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::deceptive::{DeceptiveConfig, DeceptiveDomain};
    use crate::streams::sub_stream;

    fn seed_individual(domain: &DeceptiveDomain, id: u64, seed: u64) -> Individual<Vec<f64>> {
        let genome = domain.random_genome(&mut sub_stream(seed, 0));
        let evaluation = domain.evaluate(&genome).unwrap();
        Individual {
            id,
            genome,
            evaluation,
            parents: vec![],
            birth_generation: 0,
        }
    }

    #[test]
    fn evaluation_rejects_inconsistent_feasibility() {
        let d = BehaviorDescriptor::new(vec![0.5]).unwrap();
        assert!(Evaluation::new(0.5, d.clone(), 0.0).unwrap().feasible);
        assert!(!Evaluation::new(0.5, d.clone(), 0.2).unwrap().feasible);
        assert!(Evaluation::new(1.5, d.clone(), 0.0).is_err());
        assert!(Evaluation::new(0.5, d.clone(), -0.1).is_err());
        let bad = Evaluation {
            fitness: 0.5,
            descriptor: d,
            feasible: true,
            infeasibility: 0.3,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn descriptor_rejects_non_finite() {
        assert!(matches!(
            BehaviorDescriptor::new(vec![0.0, f64::NAN]),
            Err(EvalError::NonFiniteDescriptor { index: 1, .. })
        ));
        assert!(BehaviorDescriptor::new(vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn mutation_only_child_records_one_parent() {
        let domain = DeceptiveDomain::new(DeceptiveConfig::default());
        let p = seed_individual(&domain, 7, 1);
        let mut rng = sub_stream(9, 1);
        let child = spawn_offspring(&domain, 8, 1, &p, None, &mut rng).unwrap();
        assert_eq!(child.parents, vec![7]);
        assert_eq!(child.origin(), Origin::Mutation);
        assert_eq!(child.evaluation, domain.evaluate(&child.genome).unwrap());
    }

    #[test]
    fn crossover_child_records_both_parents() {
        let domain = DeceptiveDomain::new(DeceptiveConfig::default());
        let a = seed_individual(&domain, 3, 1);
        let b = seed_individual(&domain, 9, 2);
        let mut rng = sub_stream(9, 1);
        let child = spawn_offspring(&domain, 10, 1, &a, Some(&b), &mut rng).unwrap();
        assert_eq!(child.parents, vec![3, 9]);
        assert_eq!(child.origin(), Origin::Crossover);
    }

    #[test]
    fn same_seed_gives_identical_child() {
        let domain = DeceptiveDomain::new(DeceptiveConfig::default());
        let a = seed_individual(&domain, 3, 1);
        let b = seed_individual(&domain, 9, 2);
        let c1 = spawn_offspring(&domain, 10, 1, &a, Some(&b), &mut sub_stream(5, 1)).unwrap();
        let c2 = spawn_offspring(&domain, 10, 1, &a, Some(&b), &mut sub_stream(5, 1)).unwrap();
        let bits = |g: &[f64]| g.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&c1.genome), bits(&c2.genome));
    }
}
