//! Novelty search and surprise search with local competition: two
//! objectives (divergence, local competition score) under non-dominated
//! sorting.

use rayon::prelude::*;

use super::pareto::{crowded_cmp, crowding_distances, non_dominated_ranks, nsga_select};
use super::selection::tournament;
use super::{Algorithm, Engine, EngineError, Pairing, SelectionObjective, Store};
use crate::divergence::{euclidean, summarize_generation, surprise_score, DivergenceError};
use crate::domain::{Domain, Individual};
use crate::quality::{local_competition_score, PopulationTag};

impl<D: Domain> Engine<D> {
    /// `[divergence, local competition]` for every member. Local competition
    /// looks at the K nearest by descriptor among the other members and the
    /// novelty archive.
    fn lc_objectives(&self, members: &[Individual<D::Genome>]) -> Result<Vec<Vec<f64>>, EngineError> {
        let divergence: Vec<f64> = if self.config.algorithm == Algorithm::NoveltyLocalCompetition {
            let points: Vec<Vec<f64>> = members.iter().map(|m| self.novelty_point(m)).collect();
            self.novelty_of(&points, self.state.novelty.as_ref())?
        } else {
            let model = self.state.surprise.as_ref().expect("SS-LC keeps a surprise model");
            if model.can_predict() {
                let predicted = model.predict()?;
                members
                    .iter()
                    .map(|m| surprise_score(m.descriptor(), &predicted))
                    .collect::<Result<Vec<f64>, DivergenceError>>()?
            } else {
                vec![0.0; members.len()]
            }
        };
        let archive: Vec<(&[f64], f64)> = self
            .state
            .novelty
            .iter()
            .flat_map(|a| a.entries())
            .map(|e| (e.descriptor.as_slice(), e.fitness))
            .collect();
        let k = self.config.lc_neighbors;
        let lc: Vec<f64> = (0..members.len())
            .into_par_iter()
            .map(|i| {
                let subject = members[i].descriptor();
                let mut near: Vec<(f64, f64)> = members
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, m)| (m.descriptor(), m.fitness()))
                    .chain(archive.iter().copied())
                    .map(|(d, f)| (euclidean(subject, d), f))
                    .collect();
                let k = k.min(near.len());
                if k > 0 && k < near.len() {
                    near.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0));
                }
                local_competition_score(members[i].fitness(), near[..k].iter().map(|n| n.1)) as f64
            })
            .collect();
        Ok(divergence.into_iter().zip(lc).map(|(d, l)| vec![d, l]).collect())
    }

    pub(crate) fn step_local_competition(&mut self) -> Result<(), EngineError> {
        let n = (self.config.population_size as u64).min(self.remaining()) as usize;
        let Store::Population(pop) = &self.state.store else {
            unreachable!("population engine without a population")
        };
        let objectives = self.lc_objectives(pop)?;
        let ranks = non_dominated_ranks(&objectives);
        let crowd = crowding_distances(&objectives, &ranks);
        let better = |a: usize, b: usize| crowded_cmp(b, a, &ranks, &crowd);
        let t = self.config.tournament_size;
        let mut picks = Vec::with_capacity(n);
        for _ in 0..n {
            let a = tournament(pop.len(), t, &mut self.streams.selection, better);
            let b = if rand::Rng::random_bool(&mut self.streams.variation, self.config.crossover_rate) {
                Some(tournament(pop.len(), t, &mut self.streams.selection, better))
            } else {
                None
            };
            picks.push((a, b));
        }
        let pairings: Vec<_> = picks
            .iter()
            .map(|&(a, b)| Pairing::of(&pop[a], b.map(|b| &pop[b])))
            .collect();
        let objective = if self.config.algorithm == Algorithm::NoveltyLocalCompetition {
            SelectionObjective::Novelty
        } else {
            SelectionObjective::Surprise
        };
        self.log_selection(PopulationTag::Feasible, objective, n);
        let children = self.breed(pairings);
        self.settle_local_competition(children)
    }

    /// Scores old members plus children together, archives novel children
    /// (scored before any of them enter the archive) and keeps the best
    /// population by non-dominated sorting.
    pub(crate) fn settle_local_competition(
        &mut self,
        children: Vec<Individual<D::Genome>>,
    ) -> Result<(), EngineError> {
        let Store::Population(pop) = &mut self.state.store else {
            unreachable!()
        };
        let mut union = std::mem::take(pop);
        let old = union.len();
        union.extend(children);
        let objectives = self.lc_objectives(&union)?;
        if self.config.algorithm == Algorithm::NoveltyLocalCompetition {
            let entries: Vec<_> = union[old..]
                .iter()
                .zip(&objectives[old..])
                .map(|(m, o)| (self.archive_entry(m), o[0]))
                .collect();
            let archive = self.state.novelty.as_mut().expect("NS-LC keeps an archive");
            for (entry, score) in entries {
                archive.consider(entry, score);
            }
        }
        let keep = nsga_select(&objectives, self.config.population_size);
        let mut slots: Vec<Option<Individual<D::Genome>>> = union.into_iter().map(Some).collect();
        let survivors: Vec<_> = keep
            .into_iter()
            .map(|i| slots[i].take().expect("indices are distinct"))
            .collect();
        if let Some(model) = self.state.surprise.as_mut() {
            let descriptors: Vec<Vec<f64>> = survivors.iter().map(|m| m.descriptor().to_vec()).collect();
            model.push(summarize_generation(
                &descriptors,
                self.config.surprise_centroids,
                &mut self.streams.summary,
            )?);
        }
        self.state.store = Store::Population(survivors);
        Ok(())
    }
}
