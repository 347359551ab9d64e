//! Objective-only generational GA with elitism, used as a baseline.

use rand::Rng;

use super::selection::score_tournament;
use super::{Engine, EngineError, Pairing, Store};
use crate::domain::{Domain, Individual};
use crate::quality::rank_descending;

impl<D: Domain> Engine<D> {
    pub(crate) fn step_ga(&mut self) -> Result<(), EngineError> {
        let n = (self.config.population_size as u64).min(self.remaining()) as usize;
        let Store::Population(pop) = &self.state.store else {
            unreachable!("GA without a population")
        };
        let fitness: Vec<f64> = pop.iter().map(Individual::fitness).collect();
        let t = self.config.tournament_size;
        let mut picks = Vec::with_capacity(n);
        for _ in 0..n {
            let a = score_tournament(&fitness, t, &mut self.streams.selection);
            let b = if self.streams.variation.random_bool(self.config.crossover_rate) {
                Some(score_tournament(&fitness, t, &mut self.streams.selection))
            } else {
                None
            };
            picks.push((a, b));
        }
        let pairings: Vec<_> = picks
            .iter()
            .map(|&(a, b)| Pairing::of(&pop[a], b.map(|b| &pop[b])))
            .collect();
        let children = self.breed(pairings);
        self.settle_ga(children);
        Ok(())
    }

    /// Children replace the population; the best old member survives if no
    /// child beats it, and a short final generation is topped up with the
    /// best old members.
    pub(crate) fn settle_ga(&mut self, children: Vec<Individual<D::Genome>>) {
        let p = self.config.population_size;
        let Store::Population(pop) = &mut self.state.store else {
            unreachable!()
        };
        let old = std::mem::take(pop);
        let mut next = children;
        if old.is_empty() {
            let scores: Vec<f64> = next.iter().map(Individual::fitness).collect();
            *pop = super::population::truncate(next, &scores, p);
            return;
        }
        let old_scores: Vec<f64> = old.iter().map(Individual::fitness).collect();
        let order = rank_descending(&old_scores);
        let best_child = next.iter().map(Individual::fitness).fold(f64::NEG_INFINITY, f64::max);
        let mut slots: Vec<Option<Individual<D::Genome>>> = old.into_iter().map(Some).collect();
        let elite = order[0];
        if next.is_empty() || old_scores[elite] > best_child {
            if next.len() >= p {
                let scores: Vec<f64> = next.iter().map(Individual::fitness).collect();
                next = super::population::truncate(next, &scores, p - 1);
            }
            next.insert(0, slots[elite].take().expect("taken once"));
        }
        for i in order {
            if next.len() >= p {
                break;
            }
            if let Some(m) = slots[i].take() {
                next.push(m);
            }
        }
        *pop = next;
    }
}
