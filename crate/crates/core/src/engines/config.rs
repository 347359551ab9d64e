use std::fmt;

use serde::{Deserialize, Serialize};

use crate::partition::{GridKind, GridSpec};

/// The search algorithms, plus an objective-only GA kept as a baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "ME")]
    MapElites,
    #[serde(rename = "ME-NOV")]
    MapElitesNovelty,
    #[serde(rename = "MESB")]
    SlidingBoundaries,
    #[serde(rename = "CNS-FINS")]
    ConstrainedNoveltyFins,
    #[serde(rename = "CNS-FI2NS")]
    ConstrainedNoveltyFi2ns,
    #[serde(rename = "CSS")]
    ConstrainedSurprise,
    #[serde(rename = "CME")]
    ConstrainedMapElites,
    #[serde(rename = "NS-LC")]
    NoveltyLocalCompetition,
    #[serde(rename = "SS-LC")]
    SurpriseLocalCompetition,
    #[serde(rename = "GA")]
    ObjectiveGa,
}

/// Which building blocks an algorithm combines: behavior-space distance,
/// behavior-space partitioning, local competition, constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Components {
    pub distance: bool,
    pub partition: bool,
    pub local_competition: bool,
    pub constraints: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridRequirement {
    /// Uniform or binary grid.
    Fixed,
    Sliding,
    /// Must not be given a grid.
    None,
}

impl Algorithm {
    pub const ALL: [Algorithm; 10] = [
        Algorithm::MapElites,
        Algorithm::MapElitesNovelty,
        Algorithm::SlidingBoundaries,
        Algorithm::ConstrainedNoveltyFins,
        Algorithm::ConstrainedNoveltyFi2ns,
        Algorithm::ConstrainedSurprise,
        Algorithm::ConstrainedMapElites,
        Algorithm::NoveltyLocalCompetition,
        Algorithm::SurpriseLocalCompetition,
        Algorithm::ObjectiveGa,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Algorithm::MapElites => "ME",
            Algorithm::MapElitesNovelty => "ME-NOV",
            Algorithm::SlidingBoundaries => "MESB",
            Algorithm::ConstrainedNoveltyFins => "CNS-FINS",
            Algorithm::ConstrainedNoveltyFi2ns => "CNS-FI2NS",
            Algorithm::ConstrainedSurprise => "CSS",
            Algorithm::ConstrainedMapElites => "CME",
            Algorithm::NoveltyLocalCompetition => "NS-LC",
            Algorithm::SurpriseLocalCompetition => "SS-LC",
            Algorithm::ObjectiveGa => "GA",
        }
    }

    pub fn components(self) -> Components {
        let c = |distance, partition, local_competition, constraints| Components {
            distance,
            partition,
            local_competition,
            constraints,
        };
        match self {
            Algorithm::MapElites => c(false, true, true, false),
            Algorithm::MapElitesNovelty => c(true, true, true, false),
            Algorithm::SlidingBoundaries => c(false, true, true, false),
            Algorithm::ConstrainedNoveltyFins | Algorithm::ConstrainedNoveltyFi2ns => {
                c(true, false, false, true)
            }
            Algorithm::ConstrainedSurprise => c(true, false, false, true),
            Algorithm::ConstrainedMapElites => c(false, true, true, true),
            Algorithm::NoveltyLocalCompetition | Algorithm::SurpriseLocalCompetition => {
                c(true, false, true, false)
            }
            Algorithm::ObjectiveGa => c(false, false, false, false),
        }
    }

    pub fn grid_requirement(self) -> GridRequirement {
        match self {
            Algorithm::MapElites | Algorithm::MapElitesNovelty | Algorithm::ConstrainedMapElites => {
                GridRequirement::Fixed
            }
            Algorithm::SlidingBoundaries => GridRequirement::Sliding,
            _ => GridRequirement::None,
        }
    }

    pub fn is_map_based(self) -> bool {
        self.components().partition
    }

    /// Keeps a novelty archive.
    pub fn uses_novelty_archive(self) -> bool {
        matches!(
            self,
            Algorithm::MapElitesNovelty
                | Algorithm::ConstrainedNoveltyFins
                | Algorithm::ConstrainedNoveltyFi2ns
                | Algorithm::NoveltyLocalCompetition
        )
    }

    pub fn uses_surprise(self) -> bool {
        matches!(
            self,
            Algorithm::ConstrainedSurprise | Algorithm::SurpriseLocalCompetition
        )
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A problem found while validating a configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigIssue {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub algorithm: Algorithm,
    /// Maximum number of evaluations.
    pub budget: u64,
    /// Random genomes evaluated before the first iteration.
    pub init_count: usize,
    /// Offspring per iteration of the map-based engines.
    pub batch_size: usize,
    /// Population size of the generational engines (per population for the
    /// two-population engines).
    pub population_size: usize,
    pub crossover_rate: f64,
    /// Neighbors averaged by the novelty score.
    pub novelty_k: usize,
    /// Novelty archive admission threshold.
    pub novelty_threshold: f64,
    /// Centroids per generation summary for surprise.
    pub surprise_centroids: usize,
    /// Evaluations between sliding-boundary recomputations.
    pub sliding_interval: u64,
    /// Neighbors considered by local competition.
    pub lc_neighbors: usize,
    /// Per-population capacity of constrained MAP-Elites cells.
    pub cell_capacity: usize,
    /// Novelty floor in ME-NOV parent selection.
    pub selection_epsilon: f64,
    pub tournament_size: usize,
    /// Stop once coverage reaches this fraction.
    pub target_coverage: Option<f64>,
    pub grid: Option<GridSpec>,
    /// Per-dimension resolution of the grid used to report population-based
    /// runs.
    pub reference_resolution: usize,
    /// Let infeasible individuals into the novelty archive.
    pub archive_infeasible: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::MapElites,
            budget: 10_000,
            init_count: 100,
            batch_size: 100,
            population_size: 100,
            crossover_rate: 0.5,
            novelty_k: 15,
            novelty_threshold: 0.05,
            surprise_centroids: 10,
            sliding_interval: 100,
            lc_neighbors: 15,
            cell_capacity: 10,
            selection_epsilon: 1e-6,
            tournament_size: 2,
            target_coverage: None,
            grid: None,
            reference_resolution: 10,
            archive_infeasible: false,
        }
    }
}

impl EngineConfig {
    /// Checks internal consistency and the algorithm's grid requirement.
    /// `descriptor_dims`, when known, is checked against the grid.
    pub fn validate(&self, descriptor_dims: Option<usize>) -> Result<(), Vec<ConfigIssue>> {
        let mut issues = Vec::new();
        let mut bad = |field: &str, message: String| {
            issues.push(ConfigIssue {
                field: format!("engine.{field}"),
                message,
            })
        };
        if self.init_count == 0 {
            bad("init_count", "must be at least 1".into());
        }
        if self.budget < self.init_count as u64 {
            bad(
                "budget",
                format!("must be at least init_count ({})", self.init_count),
            );
        }
        if self.batch_size == 0 {
            bad("batch_size", "must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            bad("crossover_rate", "must lie in [0, 1]".into());
        }
        if self.novelty_k == 0 {
            bad("novelty_k", "must be at least 1".into());
        }
        if !(self.novelty_threshold > 0.0 && self.novelty_threshold.is_finite()) {
            bad("novelty_threshold", "must be positive".into());
        }
        if self.surprise_centroids == 0 {
            bad("surprise_centroids", "must be at least 1".into());
        }
        if self.sliding_interval == 0 {
            bad("sliding_interval", "must be at least 1".into());
        }
        if self.lc_neighbors == 0 {
            bad("lc_neighbors", "must be at least 1".into());
        }
        if self.cell_capacity == 0 {
            bad("cell_capacity", "must be at least 1".into());
        }
        if !(self.selection_epsilon > 0.0) {
            bad("selection_epsilon", "must be positive".into());
        }
        if self.tournament_size == 0 {
            bad("tournament_size", "must be at least 1".into());
        }
        if self.reference_resolution == 0 {
            bad("reference_resolution", "must be at least 1".into());
        }
        if let Some(t) = self.target_coverage {
            if !(t > 0.0 && t <= 1.0) {
                bad("target_coverage", "must lie in (0, 1]".into());
            }
        }
        if !self.algorithm.is_map_based() && self.population_size < 2 {
            bad("population_size", "must be at least 2".into());
        }
        match (self.algorithm.grid_requirement(), &self.grid) {
            (GridRequirement::None, Some(_)) => bad(
                "grid",
                format!("{} does not partition behavior space; remove the grid", self.algorithm),
            ),
            (GridRequirement::Fixed | GridRequirement::Sliding, None) => {
                bad("grid", format!("{} requires a grid", self.algorithm))
            }
            (GridRequirement::Fixed, Some(g)) if g.kind == GridKind::Sliding => bad(
                "grid.kind",
                format!("{} needs a uniform or binary grid", self.algorithm),
            ),
            (GridRequirement::Sliding, Some(g)) if g.kind != GridKind::Sliding => {
                bad("grid.kind", format!("{} needs a sliding grid", self.algorithm))
            }
            _ => {}
        }
        if let Some(g) = &self.grid {
            if let Err(e) = g.validate() {
                bad("grid", e.to_string());
            }
            if let Some(dims) = descriptor_dims {
                if g.dims() != dims {
                    bad(
                        "grid.axes",
                        format!("grid has {} axes, domain descriptors have {dims}", g.dims()),
                    );
                }
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(issues)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::Axis;

    fn uniform() -> GridSpec {
        GridSpec::uniform(vec![Axis::new(0.0, 1.0, 4); 2])
    }

    fn sliding() -> GridSpec {
        GridSpec::sliding(vec![Axis::new(0.0, 1.0, 4); 2])
    }

    #[test]
    fn component_table() {
        let c = Algorithm::ConstrainedNoveltyFins.components();
        assert!(c.distance && c.constraints && !c.partition && !c.local_competition);
        let c = Algorithm::ConstrainedMapElites.components();
        assert!(c.partition && c.local_competition && c.constraints && !c.distance);
        let c = Algorithm::NoveltyLocalCompetition.components();
        assert!(c.distance && c.local_competition && !c.partition && !c.constraints);
    }

    #[test]
    fn grid_requirements_table() {
        for alg in Algorithm::ALL {
            for (grid, label) in [(None, "none"), (Some(uniform()), "uniform"), (Some(sliding()), "sliding")] {
                let cfg = EngineConfig {
                    algorithm: alg,
                    grid,
                    ..EngineConfig::default()
                };
                let ok = cfg.validate(Some(2)).is_ok();
                let expected = match (alg.grid_requirement(), label) {
                    (GridRequirement::None, "none") => true,
                    (GridRequirement::Fixed, "uniform") => true,
                    (GridRequirement::Sliding, "sliding") => true,
                    _ => false,
                };
                assert_eq!(ok, expected, "{alg} with {label} grid");
            }
        }
    }

    #[test]
    fn cns_with_grid_rejected_naming_field() {
        let cfg = EngineConfig {
            algorithm: Algorithm::ConstrainedNoveltyFins,
            grid: Some(uniform()),
            ..EngineConfig::default()
        };
        let issues = cfg.validate(None).unwrap_err();
        assert_eq!(issues[0].field, "engine.grid");
    }

    #[test]
    fn numeric_fields_checked() {
        let cfg = EngineConfig {
            budget: 5,
            init_count: 10,
            crossover_rate: 2.0,
            grid: Some(GridSpec::uniform(vec![Axis::new(0.0, 1.0, 4); 3])),
            ..EngineConfig::default()
        };
        let fields: Vec<String> = cfg
            .validate(Some(2))
            .unwrap_err()
            .into_iter()
            .map(|i| i.field)
            .collect();
        assert!(fields.contains(&"engine.budget".to_string()));
        assert!(fields.contains(&"engine.crossover_rate".to_string()));
        assert!(fields.contains(&"engine.grid.axes".to_string()));
    }

    #[test]
    fn algorithm_names_round_trip() {
        for alg in Algorithm::ALL {
            let s = serde_json::to_string(&alg).unwrap();
            assert_eq!(s, format!("\"{}\"", alg.label()));
            assert_eq!(serde_json::from_str::<Algorithm>(&s).unwrap(), alg);
        }
    }
}
