//! Quality components: per-cell elitism, k-nearest local competition, and the
//! feasible/infeasible two-population machinery.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::divergence::{self, DivergenceError};
use crate::domain::{Individual, IndividualId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QualityError {
    #[error("individual {0} is feasible; the infeasible objective does not apply")]
    FeasibleIndividual(IndividualId),
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Winner {
    Incumbent,
    Challenger,
}

/// Single-elite cell rule: an empty cell takes the challenger; otherwise
/// strictly higher fitness wins and exact ties keep the incumbent.
pub fn cell_compete<G>(incumbent: Option<&Individual<G>>, challenger: &Individual<G>) -> Winner {
    match incumbent {
        None => Winner::Challenger,
        Some(inc) if challenger.fitness() > inc.fitness() => Winner::Challenger,
        Some(_) => Winner::Incumbent,
    }
}

/// Number of neighbors whose fitness is strictly below `subject_fitness`.
pub fn local_competition_score<I>(subject_fitness: f64, neighbor_fitness: I) -> usize
where
    I: IntoIterator<Item = f64>,
{
    neighbor_fitness
        .into_iter()
        .filter(|&f| f < subject_fitness)
        .count()
}

/// Constrained-novelty variant deciding what the infeasible population
/// optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InfeasibleMode {
    /// Minimize distance to feasibility.
    Fins,
    /// Maximize novelty within the infeasible population.
    Fi2ns,
}

/// FINS objective: `-infeasibility`, so selection always maximizes.
pub fn infeasible_objective<G>(ind: &Individual<G>) -> Result<f64, QualityError> {
    if ind.is_feasible() {
        return Err(QualityError::FeasibleIndividual(ind.id));
    }
    Ok(-ind.infeasibility())
}

/// Objectives for a whole infeasible population. Under FI2NS each member is
/// scored by its novelty among the other infeasible members (`points` holds
/// their novelty-space coordinates).
pub fn infeasible_objectives<G, F>(
    population: &[Individual<G>],
    points: &[Vec<f64>],
    mode: InfeasibleMode,
    k: usize,
    distance: F,
) -> Result<Vec<f64>, QualityError>
where
    F: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    for ind in population {
        if ind.is_feasible() {
            return Err(QualityError::FeasibleIndividual(ind.id));
        }
    }
    match mode {
        InfeasibleMode::Fins => population.iter().map(infeasible_objective).collect(),
        InfeasibleMode::Fi2ns => {
            if population.len() < 2 {
                return Ok(vec![0.0; population.len()]);
            }
            Ok(divergence::population_novelty(points, None, k, distance)?)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PopulationTag {
    Feasible,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    pub population: PopulationTag,
    pub accepted: bool,
    pub evicted: Option<IndividualId>,
}

/// Feasible and infeasible populations with separate capacities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoPopulations<G> {
    pub feasible: Vec<Individual<G>>,
    pub infeasible: Vec<Individual<G>>,
    pub feasible_capacity: usize,
    pub infeasible_capacity: usize,
}

impl<G> TwoPopulations<G> {
    pub fn new(feasible_capacity: usize, infeasible_capacity: usize) -> Self {
        Self {
            feasible: Vec::new(),
            infeasible: Vec::new(),
            feasible_capacity,
            infeasible_capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.feasible.len() + self.infeasible.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn population(&self, tag: PopulationTag) -> &[Individual<G>] {
        match tag {
            PopulationTag::Feasible => &self.feasible,
            PopulationTag::Infeasible => &self.infeasible,
        }
    }

    /// Every member sits in the population matching its feasibility flag.
    pub fn is_pure(&self) -> bool {
        self.feasible.iter().all(Individual::is_feasible)
            && self.infeasible.iter().all(|i| !i.is_feasible())
    }

    /// Best feasible member by fitness (first on ties).
    pub fn best_feasible(&self) -> Option<&Individual<G>> {
        self.feasible.iter().fold(None, |best, ind| match best {
            Some(b) if ind.fitness() <= b.fitness() => Some(b),
            _ => Some(ind),
        })
    }

    /// Places `child` by its own feasibility. When the target population is
    /// full the member scoring lowest under that population's objective is
    /// evicted, unless the child itself scores no better than it.
    pub fn route_offspring<FF, FI>(
        &mut self,
        child: Individual<G>,
        feasible_objective: FF,
        infeasible_objective: FI,
    ) -> Placement
    where
        FF: Fn(&Individual<G>) -> f64,
        FI: Fn(&Individual<G>) -> f64,
    {
        let (tag, members, capacity): (_, &mut Vec<Individual<G>>, usize) = if child.is_feasible()
        {
            (PopulationTag::Feasible, &mut self.feasible, self.feasible_capacity)
        } else {
            (
                PopulationTag::Infeasible,
                &mut self.infeasible,
                self.infeasible_capacity,
            )
        };
        let objective = |ind: &Individual<G>| match tag {
            PopulationTag::Feasible => feasible_objective(ind),
            PopulationTag::Infeasible => infeasible_objective(ind),
        };
        if members.len() < capacity {
            members.push(child);
            return Placement {
                population: tag,
                accepted: true,
                evicted: None,
            };
        }
        let worst = members
            .iter()
            .enumerate()
            .map(|(i, m)| (i, objective(m)))
            // last of the equally worst, so older members survive ties
            .min_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
        match worst {
            Some((i, w)) if objective(&child) > w => {
                let evicted = members[i].id;
                members[i] = child;
                Placement {
                    population: tag,
                    accepted: true,
                    evicted: Some(evicted),
                }
            }
            _ => Placement {
                population: tag,
                accepted: false,
                evicted: None,
            },
        }
    }
}

/// Default FI-2Pop objectives: fitness for feasible, `-infeasibility` for
/// infeasible members.
pub fn fitness_objective<G>(ind: &Individual<G>) -> f64 {
    ind.fitness()
}

pub fn feasibility_distance_objective<G>(ind: &Individual<G>) -> f64 {
    -ind.infeasibility()
}

/// Indices of `scores` sorted best first; ties keep the earlier index.
pub fn rank_descending(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{BehaviorDescriptor, Evaluation};
    use proptest::prelude::*;

    fn ind(id: u64, fitness: f64, infeasibility: f64) -> Individual<()> {
        Individual {
            id,
            genome: (),
            evaluation: Evaluation::new(
                fitness,
                BehaviorDescriptor::new(vec![0.5, 0.5]).unwrap(),
                infeasibility,
            )
            .unwrap(),
            parents: vec![],
            birth_generation: 0,
        }
    }

    #[test]
    fn compete_rules() {
        let c = ind(1, 0.6, 0.0);
        assert_eq!(cell_compete(None, &c), Winner::Challenger);
        assert_eq!(cell_compete(Some(&ind(2, 0.8, 0.0)), &c), Winner::Incumbent);
        assert_eq!(
            cell_compete(Some(&ind(2, 0.7, 0.0)), &ind(3, 0.7, 0.0)),
            Winner::Incumbent
        );
        assert_eq!(cell_compete(Some(&ind(2, 0.5, 0.0)), &c), Winner::Challenger);
    }

    #[test]
    fn local_competition_counts() {
        assert_eq!(local_competition_score(0.9, [0.1, 0.2, 0.3]), 3);
        assert_eq!(local_competition_score(0.0, [0.1, 0.2, 0.3]), 0);
        assert_eq!(local_competition_score(0.6, [0.1, 0.5, 0.9]), 2);
        assert_eq!(local_competition_score(0.5, [0.5]), 0);
    }

    #[test]
    fn infeasible_objective_sign() {
        assert_eq!(infeasible_objective(&ind(1, 0.0, 0.4)).unwrap(), -0.4);
        let a = infeasible_objective(&ind(1, 0.0, 0.1)).unwrap();
        let b = infeasible_objective(&ind(2, 0.0, 0.9)).unwrap();
        assert!(a > b);
        assert_eq!(
            infeasible_objective(&ind(3, 0.5, 0.0)),
            Err(QualityError::FeasibleIndividual(3))
        );
    }

    #[test]
    fn fi2ns_identical_descriptors_score_zero() {
        let pop = vec![ind(1, 0.0, 0.2), ind(2, 0.0, 0.5)];
        let pts = vec![vec![0.5, 0.5]; 2];
        let s = infeasible_objectives(&pop, &pts, InfeasibleMode::Fi2ns, 15, divergence::euclidean)
            .unwrap();
        assert_eq!(s, vec![0.0, 0.0]);
        let s = infeasible_objectives(&pop, &pts, InfeasibleMode::Fins, 15, divergence::euclidean)
            .unwrap();
        assert_eq!(s, vec![-0.2, -0.5]);
    }

    #[test]
    fn migration_follows_child_feasibility() {
        let mut pops: TwoPopulations<()> = TwoPopulations::new(4, 4);
        let mut child = ind(10, 0.5, 0.0);
        child.parents = vec![1, 2];
        let p = pops.route_offspring(child, fitness_objective, feasibility_distance_objective);
        assert_eq!(p.population, PopulationTag::Feasible);
        let p = pops.route_offspring(
            ind(11, 0.0, 0.3),
            fitness_objective,
            feasibility_distance_objective,
        );
        assert_eq!(p.population, PopulationTag::Infeasible);
        assert!(pops.is_pure());
    }

    #[test]
    fn full_population_evicts_largest_infeasibility() {
        let mut pops: TwoPopulations<()> = TwoPopulations::new(3, 3);
        for (id, d) in [(1, 0.2), (2, 0.7), (3, 0.4)] {
            pops.route_offspring(ind(id, 0.0, d), fitness_objective, feasibility_distance_objective);
        }
        let stored: Vec<f64> = pops.infeasible.iter().map(|i| i.infeasibility()).collect();
        let worst_id = pops.infeasible
            [stored.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0]
            .id;
        let p = pops.route_offspring(
            ind(4, 0.0, 0.1),
            fitness_objective,
            feasibility_distance_objective,
        );
        assert_eq!(p.evicted, Some(worst_id));
        assert_eq!(pops.infeasible.len(), 3);
        // a child worse than every member is rejected
        let p = pops.route_offspring(
            ind(5, 0.0, 0.95),
            fitness_objective,
            feasibility_distance_objective,
        );
        assert!(!p.accepted);
        assert_eq!(pops.infeasible.len(), 3);
    }

    #[test]
    fn best_feasible_prefers_first_on_ties() {
        let mut pops: TwoPopulations<()> = TwoPopulations::new(3, 3);
        pops.feasible = vec![ind(1, 0.4, 0.0), ind(2, 0.9, 0.0), ind(3, 0.9, 0.0)];
        assert_eq!(pops.best_feasible().unwrap().id, 2);
    }

    proptest! {
        #[test]
        fn local_competition_bounded_and_order_only(
            subject in 0.0f64..1.0,
            others in prop::collection::vec(0.0f64..1.0, 0..20),
        ) {
            let s = local_competition_score(subject, others.iter().copied());
            prop_assert!(s <= others.len());
            // strictly monotone transform leaves the count unchanged
            let t = |x: f64| (3.0 * x).exp() - 7.0;
            prop_assert_eq!(s, local_competition_score(t(subject), others.iter().map(|&x| t(x))));
        }
    }
}
