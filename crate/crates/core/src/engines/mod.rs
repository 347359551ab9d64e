//! Search engines assembled from the divergence and quality components.
//!
//! An [`Engine`] owns one run: its domain, configuration, random streams and
//! state. Each [`Engine::step`] performs one iteration (initialization first,
//! then one batch or generation) and appends a [`MetricsRecord`].

mod config;
mod ga;
mod lc;
mod map;
pub mod pareto;
mod population;
pub mod selection;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{Algorithm, Components, ConfigIssue, EngineConfig, GridRequirement};

use crate::analysis::{
    lineage_trace, project, AnalysisError, CellRecord, ExpressivityReport, LineageNode,
    LineageTree,
};
use crate::divergence::{population_novelty, ArchiveEntry, DivergenceError, NoveltyArchive, SurpriseModel};
use crate::domain::{vary, Domain, EvalError, Evaluation, Individual, IndividualId};
use crate::partition::{Axis, CellIndex, GridSpec, Partition, PartitionError};
use crate::quality::{PopulationTag, QualityError, TwoPopulations};
use crate::streams::RunStreams;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("invalid configuration: {}", join_issues(.0))]
    InvalidConfig(Vec<ConfigIssue>),
    #[error("initialization produced no valid individual ({failures} evaluation failures, last: {last})")]
    EmptyAfterInit { failures: u64, last: String },
    #[error("{0} has no feature map to steer")]
    Unsupported(Algorithm),
    #[error("invalid preference: {0}")]
    InvalidPreference(String),
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
    #[error(transparent)]
    Quality(#[from] QualityError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

fn join_issues(issues: &[ConfigIssue]) -> String {
    issues
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Budget,
    TargetCoverage,
}

/// Per-iteration progress line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub iteration: u64,
    pub evaluations: u64,
    pub coverage: f64,
    pub qd_score: f64,
    pub filled_cells: usize,
    pub best_fitness: Option<f64>,
    pub feasible_count: usize,
    pub infeasible_count: usize,
    pub archive_size: usize,
    pub evaluation_failures: u64,
    pub partition_epoch: u64,
}

/// Objective driving one population's parent selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionObjective {
    Uniform,
    Novelty,
    Surprise,
    FeasibilityDistance,
    InfeasibleNovelty,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionEvent {
    pub iteration: u64,
    pub population: PopulationTag,
    pub objective: SelectionObjective,
    pub draws: usize,
}

/// Where an engine keeps its individuals.
#[derive(Debug, Clone)]
pub enum Store<G> {
    /// One elite per cell.
    Map {
        partition: Partition,
        cells: BTreeMap<CellIndex, Individual<G>>,
    },
    /// A feasible and an infeasible population per cell.
    Constrained {
        partition: Partition,
        cells: BTreeMap<CellIndex, TwoPopulations<G>>,
    },
    TwoPop(TwoPopulations<G>),
    Population(Vec<Individual<G>>),
}

#[derive(Debug, Clone)]
pub struct RunState<G> {
    pub iteration: u64,
    pub evaluations: u64,
    pub next_id: IndividualId,
    pub store: Store<G>,
    pub novelty: Option<NoveltyArchive>,
    pub surprise: Option<SurpriseModel>,
    /// Every successfully evaluated individual, for lineage queries.
    pub history: BTreeMap<IndividualId, Individual<G>>,
    pub metrics: Vec<MetricsRecord>,
    pub selection_counts: BTreeMap<CellIndex, u64>,
    pub selection_log: Vec<SelectionEvent>,
    pub preferences: BTreeMap<CellIndex, f64>,
    pub partition_epoch: u64,
    pub last_recompute_at: u64,
    pub descriptor_buffer: Vec<Vec<f64>>,
    pub evaluation_failures: u64,
    pub last_evaluation_error: Option<String>,
    pub stop: Option<StopReason>,
}

/// Parents of one planned child: ids plus genome copies.
pub(crate) struct Pairing<G> {
    pub a: (IndividualId, G),
    pub b: Option<(IndividualId, G)>,
}

impl<G: Clone> Pairing<G> {
    pub fn of(a: &Individual<G>, b: Option<&Individual<G>>) -> Self {
        Self {
            a: (a.id, a.genome.clone()),
            b: b.map(|b| (b.id, b.genome.clone())),
        }
    }
}

/// Stored individual as exposed to persistence and the service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveRecord {
    pub id: IndividualId,
    pub genome: String,
    pub evaluation: Evaluation,
    pub cell: Option<CellIndex>,
    pub population: Option<PopulationTag>,
    pub role: MemberRole,
    pub parents: Vec<IndividualId>,
    pub birth_generation: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemberRole {
    Elite,
    Member,
    NoveltyArchive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndividualView {
    pub id: IndividualId,
    pub genome: String,
    pub evaluation: Evaluation,
    pub parents: Vec<IndividualId>,
    pub birth_generation: u64,
    pub lineage: LineageTree,
}

pub struct Engine<D: Domain> {
    pub(crate) domain: D,
    pub(crate) config: EngineConfig,
    pub(crate) streams: RunStreams,
    pub(crate) state: RunState<D::Genome>,
}

impl<D: Domain> Engine<D> {
    pub fn new(domain: D, config: EngineConfig, seed: u64) -> Result<Self, EngineError> {
        config
            .validate(Some(domain.descriptor_dims()))
            .map_err(EngineError::InvalidConfig)?;
        let alg = config.algorithm;
        let p = config.population_size;
        let store = match alg {
            Algorithm::MapElites | Algorithm::MapElitesNovelty | Algorithm::SlidingBoundaries => {
                Store::Map {
                    partition: Partition::new(config.grid.clone().expect("validated"))?,
                    cells: BTreeMap::new(),
                }
            }
            Algorithm::ConstrainedMapElites => Store::Constrained {
                partition: Partition::new(config.grid.clone().expect("validated"))?,
                cells: BTreeMap::new(),
            },
            Algorithm::ConstrainedNoveltyFins
            | Algorithm::ConstrainedNoveltyFi2ns
            | Algorithm::ConstrainedSurprise => Store::TwoPop(TwoPopulations::new(p, p)),
            Algorithm::NoveltyLocalCompetition
            | Algorithm::SurpriseLocalCompetition
            | Algorithm::ObjectiveGa => Store::Population(Vec::new()),
        };
        let state = RunState {
            iteration: 0,
            evaluations: 0,
            next_id: 0,
            store,
            novelty: alg
                .uses_novelty_archive()
                .then(|| NoveltyArchive::new(config.novelty_threshold)),
            surprise: alg.uses_surprise().then(SurpriseModel::new),
            history: BTreeMap::new(),
            metrics: Vec::new(),
            selection_counts: BTreeMap::new(),
            selection_log: Vec::new(),
            preferences: BTreeMap::new(),
            partition_epoch: 0,
            last_recompute_at: 0,
            descriptor_buffer: Vec::new(),
            evaluation_failures: 0,
            last_evaluation_error: None,
            stop: None,
        };
        Ok(Self {
            domain,
            config,
            streams: RunStreams::from_master(seed),
            state,
        })
    }

    pub fn domain(&self) -> &D {
        &self.domain
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn state(&self) -> &RunState<D::Genome> {
        &self.state
    }

    pub fn stop_reason(&self) -> Option<StopReason> {
        self.state.stop
    }

    /// Runs one iteration. Returns `false` once the run has stopped.
    pub fn step(&mut self) -> Result<bool, EngineError> {
        if self.state.stop.is_some() {
            return Ok(false);
        }
        if self.state.iteration == 0 {
            self.initialize()?;
        } else {
            match self.config.algorithm {
                Algorithm::MapElites
                | Algorithm::MapElitesNovelty
                | Algorithm::SlidingBoundaries => self.step_map()?,
                Algorithm::ConstrainedMapElites => self.step_constrained_map()?,
                Algorithm::ConstrainedNoveltyFins
                | Algorithm::ConstrainedNoveltyFi2ns
                | Algorithm::ConstrainedSurprise => self.step_two_populations()?,
                Algorithm::NoveltyLocalCompetition | Algorithm::SurpriseLocalCompetition => {
                    self.step_local_competition()?
                }
                Algorithm::ObjectiveGa => self.step_ga()?,
            }
        }
        self.state.iteration += 1;
        self.finish_iteration();
        Ok(true)
    }

    /// Steps until the budget or target coverage stops the run.
    pub fn run(&mut self) -> Result<(), EngineError> {
        while self.step()? {}
        Ok(())
    }

    fn initialize(&mut self) -> Result<(), EngineError> {
        let n = (self.config.init_count as u64).min(self.config.budget) as usize;
        let items: Vec<_> = (0..n)
            .map(|_| (self.domain.random_genome(&mut self.streams.init), Vec::new()))
            .collect();
        let initial = self.evaluate_all(items);
        if initial.is_empty() {
            return Err(EngineError::EmptyAfterInit {
                failures: self.state.evaluation_failures,
                last: self.state.last_evaluation_error.clone().unwrap_or_default(),
            });
        }
        match self.config.algorithm {
            Algorithm::MapElites | Algorithm::MapElitesNovelty | Algorithm::SlidingBoundaries => {
                self.absorb_map(initial)?
            }
            Algorithm::ConstrainedMapElites => self.absorb_constrained_map(initial)?,
            Algorithm::ConstrainedNoveltyFins
            | Algorithm::ConstrainedNoveltyFi2ns
            | Algorithm::ConstrainedSurprise => self.settle_two_populations(initial)?,
            Algorithm::NoveltyLocalCompetition | Algorithm::SurpriseLocalCompetition => {
                self.settle_local_competition(initial)?
            }
            Algorithm::ObjectiveGa => self.settle_ga(initial),
        }
        Ok(())
    }

    pub(crate) fn remaining(&self) -> u64 {
        self.config.budget.saturating_sub(self.state.evaluations)
    }

    /// Evaluates genomes in parallel, assigning ids in input order. Failed
    /// evaluations count against the budget and are dropped.
    pub(crate) fn evaluate_all(
        &mut self,
        items: Vec<(D::Genome, Vec<IndividualId>)>,
    ) -> Vec<Individual<D::Genome>> {
        let generation = self.state.iteration;
        let first = self.state.next_id;
        self.state.next_id += items.len() as u64;
        self.state.evaluations += items.len() as u64;
        let domain = &self.domain;
        let dims = domain.descriptor_dims();
        let results: Vec<Result<Individual<D::Genome>, EvalError>> = items
            .into_par_iter()
            .enumerate()
            .map(|(i, (genome, parents))| {
                let evaluation = domain.evaluate(&genome)?;
                evaluation.validate()?;
                if evaluation.descriptor.dims() != dims {
                    return Err(EvalError::Malformed(format!(
                        "descriptor has {} dimensions, expected {dims}",
                        evaluation.descriptor.dims()
                    )));
                }
                Ok(Individual {
                    id: first + i as u64,
                    genome,
                    evaluation,
                    parents,
                    birth_generation: generation,
                })
            })
            .collect();
        let mut out = Vec::with_capacity(results.len());
        for r in results {
            match r {
                Ok(ind) => {
                    self.state.history.insert(ind.id, ind.clone());
                    out.push(ind);
                }
                Err(e) => {
                    self.state.evaluation_failures += 1;
                    self.state.last_evaluation_error = Some(e.to_string());
                }
            }
        }
        out
    }

    /// Varies each pairing on the variation stream (sequentially) and
    /// evaluates the children.
    pub(crate) fn breed(&mut self, pairings: Vec<Pairing<D::Genome>>) -> Vec<Individual<D::Genome>> {
        let items: Vec<_> = pairings
            .into_iter()
            .map(|p| {
                let genome = vary(
                    &self.domain,
                    &p.a.1,
                    p.b.as_ref().map(|b| &b.1),
                    &mut self.streams.variation,
                );
                let mut parents = vec![p.a.0];
                parents.extend(p.b.map(|b| b.0));
                (genome, parents)
            })
            .collect();
        self.evaluate_all(items)
    }

    pub(crate) fn wants_crossover(&mut self) -> bool {
        use rand::Rng;
        self.streams.variation.random_bool(self.config.crossover_rate)
    }

    pub(crate) fn novelty_point(&self, ind: &Individual<D::Genome>) -> Vec<f64> {
        self.domain.novelty_point(&ind.genome, &ind.evaluation)
    }

    pub(crate) fn archive_entry(&self, ind: &Individual<D::Genome>) -> ArchiveEntry {
        ArchiveEntry {
            id: Some(ind.id),
            point: self.novelty_point(ind),
            descriptor: ind.descriptor().to_vec(),
            fitness: ind.fitness(),
        }
    }

    /// Novelty of each point against the others plus `archive`; zero when
    /// there is nothing to compare against.
    pub(crate) fn novelty_of(
        &self,
        points: &[Vec<f64>],
        archive: Option<&NoveltyArchive>,
    ) -> Result<Vec<f64>, EngineError> {
        let has_refs = points.len() > 1 || archive.is_some_and(|a| !a.is_empty());
        if !has_refs {
            return Ok(vec![0.0; points.len()]);
        }
        Ok(population_novelty(
            points,
            archive,
            self.config.novelty_k,
            |a, b| self.domain.novelty_distance(a, b),
        )?)
    }

    pub(crate) fn preference(&self, cell: &CellIndex) -> f64 {
        self.state.preferences.get(cell).copied().unwrap_or(1.0)
    }

    pub(crate) fn log_selection(
        &mut self,
        population: PopulationTag,
        objective: SelectionObjective,
        draws: usize,
    ) {
        if draws > 0 {
            self.state.selection_log.push(SelectionEvent {
                iteration: self.state.iteration,
                population,
                objective,
                draws,
            });
        }
    }

    /// Sets the selection weight of a cell (weights below 1 are rejected;
    /// weight 1 restores the default).
    pub fn set_preference(&mut self, cell: CellIndex, weight: f64) -> Result<(), EngineError> {
        let resolutions = match &self.state.store {
            Store::Map { partition, .. } | Store::Constrained { partition, .. } => {
                partition.resolutions()
            }
            _ => return Err(EngineError::Unsupported(self.config.algorithm)),
        };
        if !weight.is_finite() || weight < 1.0 {
            return Err(EngineError::InvalidPreference(format!(
                "weight {weight} must be finite and at least 1"
            )));
        }
        if !cell.is_within(&resolutions) {
            return Err(EngineError::InvalidPreference(format!(
                "cell {cell} outside a grid of {resolutions:?}"
            )));
        }
        if weight == 1.0 {
            self.state.preferences.remove(&cell);
        } else {
            self.state.preferences.insert(cell, weight);
        }
        Ok(())
    }

    fn archive_individuals(&self) -> impl Iterator<Item = &Individual<D::Genome>> {
        self.state
            .novelty
            .iter()
            .flat_map(|a| a.entries())
            .filter_map(|e| e.id.and_then(|id| self.state.history.get(&id)))
    }

    /// Individuals a report describes: map elites, best feasible member per
    /// constrained cell, or the feasible members of a population (plus the
    /// novelty archive where the population engine keeps one).
    pub fn reported_members(&self) -> Vec<&Individual<D::Genome>> {
        match &self.state.store {
            Store::Map { cells, .. } => cells.values().collect(),
            Store::Constrained { cells, .. } => {
                cells.values().filter_map(TwoPopulations::best_feasible).collect()
            }
            Store::TwoPop(pops) => pops
                .feasible
                .iter()
                .chain(self.archive_individuals().filter(|i| i.is_feasible()))
                .collect(),
            Store::Population(pop) => {
                let archive: Box<dyn Iterator<Item = _>> =
                    if self.config.algorithm == Algorithm::NoveltyLocalCompetition {
                        Box::new(self.archive_individuals())
                    } else {
                        Box::new(std::iter::empty())
                    };
                pop.iter()
                    .chain(archive)
                    .filter(|i| i.is_feasible())
                    .collect()
            }
        }
    }

    pub fn reference_grid(&self, resolution: usize) -> GridSpec {
        GridSpec::uniform(
            self.domain
                .descriptor_bounds()
                .into_iter()
                .map(|(lo, hi)| Axis::new(lo, hi, resolution))
                .collect(),
        )
    }

    pub fn report(&self) -> ExpressivityReport {
        let (cells, resolutions, projected) = match &self.state.store {
            Store::Map { partition, cells } => (
                cells
                    .iter()
                    .map(|(cell, e)| CellRecord {
                        cell: cell.clone(),
                        fitness: e.fitness(),
                        elite_id: e.id,
                    })
                    .collect(),
                partition.resolutions(),
                false,
            ),
            Store::Constrained { partition, cells } => (
                cells
                    .iter()
                    .filter_map(|(cell, pops)| {
                        pops.best_feasible().map(|e| CellRecord {
                            cell: cell.clone(),
                            fitness: e.fitness(),
                            elite_id: e.id,
                        })
                    })
                    .collect(),
                partition.resolutions(),
                false,
            ),
            _ => {
                let grid = self.reference_grid(self.config.reference_resolution);
                (
                    project(self.reported_members(), &grid),
                    grid.resolutions(),
                    true,
                )
            }
        };
        self.assemble_report(cells, resolutions, projected)
    }

    /// Report of the same members projected onto a uniform grid of
    /// `resolution` bins per dimension, for comparing engines on equal terms.
    pub fn projected_report(&self, resolution: usize) -> ExpressivityReport {
        let grid = self.reference_grid(resolution);
        let cells = project(self.reported_members(), &grid);
        self.assemble_report(cells, grid.resolutions(), true)
    }

    fn assemble_report(
        &self,
        cells: Vec<CellRecord>,
        resolutions: Vec<usize>,
        projected: bool,
    ) -> ExpressivityReport {
        let members = self.reported_members();
        ExpressivityReport::build(
            self.state.iteration,
            self.state.evaluations,
            resolutions,
            projected,
            cells,
            members.iter().map(|m| m.descriptor()),
            &self.domain.descriptor_bounds(),
        )
    }

    fn population_counts(&self) -> (usize, usize) {
        let count = |members: &mut dyn Iterator<Item = &Individual<D::Genome>>| {
            members.fold((0, 0), |(f, i), m| {
                if m.is_feasible() {
                    (f + 1, i)
                } else {
                    (f, i + 1)
                }
            })
        };
        match &self.state.store {
            Store::Map { cells, .. } => count(&mut cells.values()),
            Store::Constrained { cells, .. } => (
                cells.values().map(|c| c.feasible.len()).sum(),
                cells.values().map(|c| c.infeasible.len()).sum(),
            ),
            Store::TwoPop(p) => (p.feasible.len(), p.infeasible.len()),
            Store::Population(p) => count(&mut p.iter()),
        }
    }

    fn finish_iteration(&mut self) {
        let report = self.report();
        let (feasible_count, infeasible_count) = self.population_counts();
        self.state.metrics.push(MetricsRecord {
            iteration: self.state.iteration,
            evaluations: self.state.evaluations,
            coverage: report.coverage,
            qd_score: report.qd_score,
            filled_cells: report.filled_cells,
            best_fitness: report.best_fitness,
            feasible_count,
            infeasible_count,
            archive_size: self.state.novelty.as_ref().map_or(0, NoveltyArchive::len),
            evaluation_failures: self.state.evaluation_failures,
            partition_epoch: self.state.partition_epoch,
        });
        if self.state.evaluations >= self.config.budget {
            self.state.stop = Some(StopReason::Budget);
        } else if self
            .config
            .target_coverage
            .is_some_and(|t| report.coverage >= t)
        {
            self.state.stop = Some(StopReason::TargetCoverage);
        }
    }

    pub fn individual(&self, id: IndividualId) -> Option<&Individual<D::Genome>> {
        self.state.history.get(&id)
    }

    pub fn lineage(&self, id: IndividualId) -> Result<LineageTree, AnalysisError> {
        lineage_trace(id, |i| self.state.history.get(&i).map(LineageNode::of))
    }

    fn record(
        &self,
        ind: &Individual<D::Genome>,
        cell: Option<CellIndex>,
        population: Option<PopulationTag>,
        role: MemberRole,
    ) -> ArchiveRecord {
        ArchiveRecord {
            id: ind.id,
            genome: self.domain.render(&ind.genome),
            evaluation: ind.evaluation.clone(),
            cell,
            population,
            role,
            parents: ind.parents.clone(),
            birth_generation: ind.birth_generation,
        }
    }

    /// Every stored individual in a stable order.
    pub fn archive_records(&self) -> Vec<ArchiveRecord> {
        let mut out = Vec::new();
        match &self.state.store {
            Store::Map { cells, .. } => {
                for (cell, e) in cells {
                    out.push(self.record(e, Some(cell.clone()), None, MemberRole::Elite));
                }
            }
            Store::Constrained { cells, .. } => {
                for (cell, pops) in cells {
                    for tag in [PopulationTag::Feasible, PopulationTag::Infeasible] {
                        for m in pops.population(tag) {
                            out.push(self.record(m, Some(cell.clone()), Some(tag), MemberRole::Member));
                        }
                    }
                }
            }
            Store::TwoPop(pops) => {
                for tag in [PopulationTag::Feasible, PopulationTag::Infeasible] {
                    for m in pops.population(tag) {
                        out.push(self.record(m, None, Some(tag), MemberRole::Member));
                    }
                }
            }
            Store::Population(pop) => {
                for m in pop {
                    out.push(self.record(m, None, None, MemberRole::Member));
                }
            }
        }
        if !matches!(self.state.store, Store::Map { .. }) {
            for m in self.archive_individuals() {
                out.push(self.record(m, None, None, MemberRole::NoveltyArchive));
            }
        }
        out
    }

    pub fn lineage_records(&self) -> Vec<LineageNode> {
        self.state.history.values().map(LineageNode::of).collect()
    }

    pub fn individual_view(&self, id: IndividualId) -> Option<IndividualView> {
        let ind = self.state.history.get(&id)?;
        Some(IndividualView {
            id,
            genome: self.domain.render(&ind.genome),
            evaluation: ind.evaluation.clone(),
            parents: ind.parents.clone(),
            birth_generation: ind.birth_generation,
            lineage: self.lineage(id).ok()?,
        })
    }
}

/// Object-safe view of a run, independent of the domain type.
pub trait SteerableRun: Send {
    fn algorithm(&self) -> Algorithm;
    fn domain_name(&self) -> &'static str;
    fn step(&mut self) -> Result<bool, EngineError>;
    fn iteration(&self) -> u64;
    fn evaluations(&self) -> u64;
    fn stop_reason(&self) -> Option<StopReason>;
    fn report(&self) -> ExpressivityReport;
    fn projected_report(&self, resolution: usize) -> ExpressivityReport;
    fn set_preference(&mut self, cell: CellIndex, weight: f64) -> Result<(), EngineError>;
    fn preferences(&self) -> &BTreeMap<CellIndex, f64>;
    fn metrics(&self) -> &[MetricsRecord];
    fn selection_counts(&self) -> &BTreeMap<CellIndex, u64>;
    fn selection_log(&self) -> &[SelectionEvent];
    fn individual(&self, id: IndividualId) -> Option<IndividualView>;
    fn lineage(&self, id: IndividualId) -> Result<LineageTree, AnalysisError>;
    fn archive_records(&self) -> Vec<ArchiveRecord>;
    fn lineage_records(&self) -> Vec<LineageNode>;
    fn novelty_archive_len(&self) -> usize;
}

impl<D: Domain + 'static> SteerableRun for Engine<D> {
    fn algorithm(&self) -> Algorithm {
        self.config.algorithm
    }

    fn domain_name(&self) -> &'static str {
        self.domain.name()
    }

    fn step(&mut self) -> Result<bool, EngineError> {
        Engine::step(self)
    }

    fn iteration(&self) -> u64 {
        self.state.iteration
    }

    fn evaluations(&self) -> u64 {
        self.state.evaluations
    }

    fn stop_reason(&self) -> Option<StopReason> {
        self.state.stop
    }

    fn report(&self) -> ExpressivityReport {
        Engine::report(self)
    }

    fn projected_report(&self, resolution: usize) -> ExpressivityReport {
        Engine::projected_report(self, resolution)
    }

    fn set_preference(&mut self, cell: CellIndex, weight: f64) -> Result<(), EngineError> {
        Engine::set_preference(self, cell, weight)
    }

    fn preferences(&self) -> &BTreeMap<CellIndex, f64> {
        &self.state.preferences
    }

    fn metrics(&self) -> &[MetricsRecord] {
        &self.state.metrics
    }

    fn selection_counts(&self) -> &BTreeMap<CellIndex, u64> {
        &self.state.selection_counts
    }

    fn selection_log(&self) -> &[SelectionEvent] {
        &self.state.selection_log
    }

    fn individual(&self, id: IndividualId) -> Option<IndividualView> {
        self.individual_view(id)
    }

    fn lineage(&self, id: IndividualId) -> Result<LineageTree, AnalysisError> {
        Engine::lineage(self, id)
    }

    fn archive_records(&self) -> Vec<ArchiveRecord> {
        Engine::archive_records(self)
    }

    fn lineage_records(&self) -> Vec<LineageNode> {
        Engine::lineage_records(self)
    }

    fn novelty_archive_len(&self) -> usize {
        self.state.novelty.as_ref().map_or(0, NoveltyArchive::len)
    }
}
