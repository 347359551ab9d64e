//! MAP-Elites, its novelty-weighted and sliding-boundary variants, and
//! constrained MAP-Elites.

use rand::Rng;

use super::selection::select_weighted;
use super::{Algorithm, Engine, EngineError, Pairing, Store};
use crate::divergence::ArchiveEntry;
use crate::domain::{Domain, Individual};
use crate::partition::CellIndex;
use crate::quality::{cell_compete, feasibility_distance_objective, fitness_objective, TwoPopulations, Winner};

impl<D: Domain> Engine<D> {
    /// Offspring in the next map batch. Sliding-boundary batches stop at the
    /// next recomputation point.
    fn map_batch_size(&self) -> usize {
        let mut n = (self.config.batch_size as u64).min(self.remaining());
        if self.config.algorithm == Algorithm::SlidingBoundaries {
            let since = self.state.evaluations - self.state.last_recompute_at;
            n = n.min(self.config.sliding_interval.saturating_sub(since).max(1));
        }
        n as usize
    }

    pub(crate) fn step_map(&mut self) -> Result<(), EngineError> {
        let n = self.map_batch_size();
        let Store::Map { cells, .. } = &self.state.store else {
            unreachable!("map engine without a map store")
        };
        let keys: Vec<CellIndex> = cells.keys().cloned().collect();
        let mut weights: Vec<f64> = keys.iter().map(|c| self.preference(c)).collect();
        if self.config.algorithm == Algorithm::MapElitesNovelty {
            let points: Vec<Vec<f64>> = cells.values().map(|e| self.novelty_point(e)).collect();
            let novelty = self.novelty_of(&points, self.state.novelty.as_ref())?;
            for (w, v) in weights.iter_mut().zip(novelty) {
                *w *= v.max(self.config.selection_epsilon);
            }
        }

        let mut picks = Vec::with_capacity(n);
        for _ in 0..n {
            let a = select_weighted(&weights, &mut self.streams.selection);
            let b = if self.wants_crossover() {
                Some(select_weighted(&weights, &mut self.streams.selection))
            } else {
                None
            };
            picks.push((a, b));
        }
        let Store::Map { cells, .. } = &self.state.store else {
            unreachable!()
        };
        let pairings: Vec<_> = picks
            .iter()
            .map(|&(a, b)| Pairing::of(&cells[&keys[a]], b.map(|b| &cells[&keys[b]])))
            .collect();
        for &(a, b) in &picks {
            *self.state.selection_counts.entry(keys[a].clone()).or_default() += 1;
            if let Some(b) = b {
                *self.state.selection_counts.entry(keys[b].clone()).or_default() += 1;
            }
        }

        let children = self.breed(pairings);
        self.absorb_map(children)
    }

    /// Places evaluated individuals into the map, then handles the novelty
    /// archive and boundary recomputation.
    pub(crate) fn absorb_map(&mut self, batch: Vec<Individual<D::Genome>>) -> Result<(), EngineError> {
        match self.config.algorithm {
            Algorithm::MapElitesNovelty => {
                let entries: Vec<ArchiveEntry> = batch.iter().map(|i| self.archive_entry(i)).collect();
                let archive = self.state.novelty.as_mut().expect("ME-NOV keeps an archive");
                for e in entries {
                    archive.push(e);
                }
            }
            Algorithm::SlidingBoundaries => {
                self.state
                    .descriptor_buffer
                    .extend(batch.iter().map(|i| i.descriptor().to_vec()));
            }
            _ => {}
        }
        let Store::Map { partition, cells } = &mut self.state.store else {
            unreachable!()
        };
        for child in batch {
            let cell = partition.cell_of(child.descriptor())?;
            if cell_compete(cells.get(&cell), &child) == Winner::Challenger {
                cells.insert(cell, child);
            }
        }
        if self.config.algorithm == Algorithm::SlidingBoundaries
            && self.state.evaluations - self.state.last_recompute_at >= self.config.sliding_interval
            && self.state.evaluations < self.config.budget
        {
            self.recompute_boundaries()?;
        }
        Ok(())
    }

    /// New boundaries from every descriptor seen so far; all elites are then
    /// re-binned and compete again for their new cells.
    fn recompute_boundaries(&mut self) -> Result<(), EngineError> {
        let Store::Map { partition, cells } = &mut self.state.store else {
            unreachable!()
        };
        partition.recompute(self.state.descriptor_buffer.iter().map(Vec::as_slice))?;
        let old = std::mem::take(cells);
        for (_, elite) in old {
            let cell = partition.cell_of(elite.descriptor())?;
            if cell_compete(cells.get(&cell), &elite) == Winner::Challenger {
                cells.insert(cell, elite);
            }
        }
        self.state.partition_epoch += 1;
        self.state.last_recompute_at = self.state.evaluations;
        Ok(())
    }

    pub(crate) fn step_constrained_map(&mut self) -> Result<(), EngineError> {
        let n = self.map_batch_size();
        let Store::Constrained { cells, .. } = &self.state.store else {
            unreachable!("CME without a constrained store")
        };
        // one slot per nonempty (cell, population)
        let mut slots = Vec::new();
        for (cell, pops) in cells {
            for (tag, members) in [
                (crate::quality::PopulationTag::Feasible, &pops.feasible),
                (crate::quality::PopulationTag::Infeasible, &pops.infeasible),
            ] {
                if !members.is_empty() {
                    slots.push((cell.clone(), tag, members.len()));
                }
            }
        }
        let weights: Vec<f64> = slots.iter().map(|(c, _, _)| self.preference(c)).collect();

        let mut picks = Vec::with_capacity(n);
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
            let s = select_weighted(&weights, rng);
            let len = slots[s].2;
            let m = if len > 1 { rng.random_range(0..len) } else { 0 };
            (s, m)
        };
        for _ in 0..n {
            let a = draw(&mut self.streams.selection);
            let b = if self.streams.variation.random_bool(self.config.crossover_rate) {
                Some(draw(&mut self.streams.selection))
            } else {
                None
            };
            picks.push((a, b));
        }
        let member = |(s, m): (usize, usize)| {
            let (cell, tag, _) = &slots[s];
            &cells[cell].population(*tag)[m]
        };
        let pairings: Vec<_> = picks
            .iter()
            .map(|&(a, b)| Pairing::of(member(a), b.map(member)))
            .collect();
        for &(a, b) in &picks {
            *self.state.selection_counts.entry(slots[a.0].0.clone()).or_default() += 1;
            if let Some(b) = b {
                *self.state.selection_counts.entry(slots[b.0].0.clone()).or_default() += 1;
            }
        }

        let children = self.breed(pairings);
        self.absorb_constrained_map(children)
    }

    pub(crate) fn absorb_constrained_map(
        &mut self,
        batch: Vec<Individual<D::Genome>>,
    ) -> Result<(), EngineError> {
        let capacity = self.config.cell_capacity;
        let Store::Constrained { partition, cells } = &mut self.state.store else {
            unreachable!()
        };
        for child in batch {
            let cell = partition.cell_of(child.descriptor())?;
            cells
                .entry(cell)
                .or_insert_with(|| TwoPopulations::new(capacity, capacity))
                .route_offspring(child, fitness_objective, feasibility_distance_objective);
        }
        Ok(())
    }
}
