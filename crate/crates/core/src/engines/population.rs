//! Constrained novelty search (FINS and FI2NS infeasible objectives) and
//! constrained surprise search over a feasible/infeasible pair of
//! populations.

use rand::Rng;

use super::selection::score_tournament;
use super::{Algorithm, Engine, EngineError, Pairing, SelectionObjective, Store};
use crate::divergence::{summarize_generation, surprise_score, DivergenceError};
use crate::domain::{Domain, Individual};
use crate::quality::{infeasible_objectives, rank_descending, InfeasibleMode, PopulationTag, TwoPopulations};

impl<D: Domain> Engine<D> {
    fn infeasible_mode(&self) -> InfeasibleMode {
        match self.config.algorithm {
            Algorithm::ConstrainedNoveltyFi2ns => InfeasibleMode::Fi2ns,
            _ => InfeasibleMode::Fins,
        }
    }

    /// Feasible-population selection scores, `None` meaning uniform
    /// selection (surprise search before two summaries exist).
    fn feasible_scores(
        &self,
        members: &[Individual<D::Genome>],
    ) -> Result<(SelectionObjective, Option<Vec<f64>>), EngineError> {
        if self.config.algorithm == Algorithm::ConstrainedSurprise {
            let model = self.state.surprise.as_ref().expect("CSS keeps a surprise model");
            if !model.can_predict() {
                return Ok((SelectionObjective::Uniform, None));
            }
            let predicted = model.predict()?;
            let scores = members
                .iter()
                .map(|m| surprise_score(m.descriptor(), &predicted))
                .collect::<Result<Vec<f64>, DivergenceError>>()?;
            return Ok((SelectionObjective::Surprise, Some(scores)));
        }
        let points: Vec<Vec<f64>> = members.iter().map(|m| self.novelty_point(m)).collect();
        Ok((
            SelectionObjective::Novelty,
            Some(self.novelty_of(&points, self.state.novelty.as_ref())?),
        ))
    }

    fn infeasible_scores(&self, members: &[Individual<D::Genome>]) -> Result<Vec<f64>, EngineError> {
        let points: Vec<Vec<f64>> = match self.infeasible_mode() {
            InfeasibleMode::Fi2ns => members.iter().map(|m| self.novelty_point(m)).collect(),
            InfeasibleMode::Fins => Vec::new(),
        };
        Ok(infeasible_objectives(
            members,
            &points,
            self.infeasible_mode(),
            self.config.novelty_k,
            |a, b| self.domain.novelty_distance(a, b),
        )?)
    }

    pub(crate) fn step_two_populations(&mut self) -> Result<(), EngineError> {
        let n = (self.config.population_size as u64).min(self.remaining()) as usize;
        let Store::TwoPop(pops) = &self.state.store else {
            unreachable!("two-population engine without its store")
        };
        let (f, i) = (pops.feasible.len(), pops.infeasible.len());
        // offspring split in proportion to population sizes
        let from_feasible = if i == 0 {
            n
        } else if f == 0 {
            0
        } else {
            ((n * f) as f64 / (f + i) as f64).round() as usize
        };
        let from_infeasible = n - from_feasible;

        let (feasible_objective, feasible_scores) = self.feasible_scores(&pops.feasible)?;
        let infeasible_scores = if from_infeasible > 0 {
            self.infeasible_scores(&pops.infeasible)?
        } else {
            Vec::new()
        };
        let t = self.config.tournament_size;
        let mut picks = Vec::with_capacity(n);
        for k in 0..n {
            let (tag, len, scores) = if k < from_feasible {
                (PopulationTag::Feasible, f, feasible_scores.as_deref())
            } else {
                (PopulationTag::Infeasible, i, Some(infeasible_scores.as_slice()))
            };
            let draw = |rng: &mut rand_chacha::ChaCha8Rng| match scores {
                Some(s) => score_tournament(s, t, rng),
                None => rng.random_range(0..len),
            };
            let a = draw(&mut self.streams.selection);
            let b = if self.streams.variation.random_bool(self.config.crossover_rate) {
                Some(draw(&mut self.streams.selection))
            } else {
                None
            };
            picks.push((tag, a, b));
        }
        let pairings: Vec<_> = picks
            .iter()
            .map(|&(tag, a, b)| {
                let members = pops.population(tag);
                Pairing::of(&members[a], b.map(|b| &members[b]))
            })
            .collect();

        let infeasible_objective = match self.infeasible_mode() {
            InfeasibleMode::Fins => SelectionObjective::FeasibilityDistance,
            InfeasibleMode::Fi2ns => SelectionObjective::InfeasibleNovelty,
        };
        self.log_selection(PopulationTag::Feasible, feasible_objective, from_feasible);
        self.log_selection(PopulationTag::Infeasible, infeasible_objective, from_infeasible);

        let children = self.breed(pairings);
        self.settle_two_populations(children)
    }

    /// Routes `children` by feasibility, scores each union of old members and
    /// children, updates the novelty archive from the children's scores, and
    /// truncates both populations to capacity.
    pub(crate) fn settle_two_populations(
        &mut self,
        children: Vec<Individual<D::Genome>>,
    ) -> Result<(), EngineError> {
        let Store::TwoPop(pops) = &mut self.state.store else {
            unreachable!()
        };
        let capacity = pops.feasible_capacity;
        let old_feasible = pops.feasible.len();
        let old_infeasible = pops.infeasible.len();
        let mut feasible = std::mem::take(&mut pops.feasible);
        let mut infeasible = std::mem::take(&mut pops.infeasible);
        for c in children {
            if c.is_feasible() {
                feasible.push(c);
            } else {
                infeasible.push(c);
            }
        }

        let feasible_scores = if self.config.algorithm == Algorithm::ConstrainedSurprise {
            match self.feasible_scores(&feasible)? {
                (_, Some(s)) => s,
                // cold start: keep the newest
                (_, None) => feasible.iter().map(|m| m.id as f64).collect(),
            }
        } else {
            let points: Vec<Vec<f64>> = feasible.iter().map(|m| self.novelty_point(m)).collect();
            let scores = self.novelty_of(&points, self.state.novelty.as_ref())?;
            let entries: Vec<_> = feasible[old_feasible..]
                .iter()
                .zip(&scores[old_feasible..])
                .map(|(m, &s)| (self.archive_entry(m), s))
                .collect();
            let archive_infeasible = if self.config.archive_infeasible {
                let points: Vec<Vec<f64>> =
                    infeasible.iter().map(|m| self.novelty_point(m)).collect();
                let scores = self.novelty_of(&points, self.state.novelty.as_ref())?;
                infeasible[old_infeasible..]
                    .iter()
                    .zip(&scores[old_infeasible..])
                    .map(|(m, &s)| (self.archive_entry(m), s))
                    .collect()
            } else {
                Vec::new()
            };
            let archive = self.state.novelty.as_mut().expect("CNS keeps an archive");
            for (entry, score) in entries.into_iter().chain(archive_infeasible) {
                archive.consider(entry, score);
            }
            scores
        };
        let infeasible_scores = self.infeasible_scores(&infeasible)?;

        let feasible = truncate(feasible, &feasible_scores, capacity);
        let infeasible = truncate(infeasible, &infeasible_scores, capacity);

        if let Some(model) = self.state.surprise.as_mut() {
            if !feasible.is_empty() {
                let descriptors: Vec<Vec<f64>> =
                    feasible.iter().map(|m| m.descriptor().to_vec()).collect();
                model.push(summarize_generation(
                    &descriptors,
                    self.config.surprise_centroids,
                    &mut self.streams.summary,
                )?);
            }
        }

        let Store::TwoPop(pops) = &mut self.state.store else {
            unreachable!()
        };
        *pops = TwoPopulations {
            feasible,
            infeasible,
            feasible_capacity: capacity,
            infeasible_capacity: capacity,
        };
        Ok(())
    }
}

/// Keeps the `capacity` best by `scores`, preserving the original order.
pub(crate) fn truncate<T>(members: Vec<T>, scores: &[f64], capacity: usize) -> Vec<T> {
    if members.len() <= capacity {
        return members;
    }
    let mut keep = rank_descending(scores);
    keep.truncate(capacity);
    keep.sort_unstable();
    let mut slots: Vec<Option<T>> = members.into_iter().map(Some).collect();
    keep.into_iter()
        .map(|i| slots[i].take().expect("indices are distinct"))
        .collect()
}
