//! Experiment configuration: a domain, an engine configuration and a seed,
//! turned into a type-erased run.

use serde::{Deserialize, Serialize};

use crate::domain::{Domain, EvalError, Evaluation};
use crate::domains::{DeceptiveConfig, DeceptiveDomain, LevelConfig, LevelDomain, LevelFeatures};
use crate::engines::{ConfigIssue, Engine, EngineConfig, EngineError, SteerableRun};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DomainConfig {
    Deceptive(DeceptiveConfig),
    Level(LevelConfig),
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig::Deceptive(DeceptiveConfig::default())
    }
}

impl DomainConfig {
    pub fn descriptor_dims(&self) -> usize {
        match self {
            DomainConfig::Deceptive(_) => 2,
            DomainConfig::Level(c) => match c.features {
                LevelFeatures::Continuous => 3,
                LevelFeatures::Binary => 8,
            },
        }
    }

    pub fn validate(&self) -> Vec<ConfigIssue> {
        let mut issues = Vec::new();
        let mut bad = |field: &str, message: &str| {
            issues.push(ConfigIssue {
                field: format!("domain.{field}"),
                message: message.into(),
            })
        };
        let unit = |p: f64| (0.0..=1.0).contains(&p);
        match self {
            DomainConfig::Deceptive(c) => {
                if c.dims < 2 {
                    bad("dims", "must be at least 2");
                }
                if !(c.scale > 0.0) {
                    bad("scale", "must be positive");
                }
                if !(c.moat_inner <= c.moat_outer) {
                    bad("moat_inner", "must not exceed moat_outer");
                }
                if !unit(c.moat_factor) {
                    bad("moat_factor", "must lie in [0, 1]");
                }
                if !(c.mutation_sigma > 0.0) {
                    bad("mutation_sigma", "must be positive");
                }
                if !unit(c.mutation_rate) {
                    bad("mutation_rate", "must lie in [0, 1]");
                }
            }
            DomainConfig::Level(c) => {
                if c.width * c.height < 2 {
                    bad("width", "a level needs at least 2 tiles");
                }
                for (field, p) in [
                    ("wall_density", c.wall_density),
                    ("treasure_density", c.treasure_density),
                    ("flip_to_wall", c.flip_to_wall),
                    ("flip_to_treasure", c.flip_to_treasure),
                ] {
                    if !unit(p) {
                        bad(field, "must lie in [0, 1]");
                    }
                }
                if c.wall_density + c.treasure_density > 1.0 {
                    bad("treasure_density", "wall and treasure densities exceed 1");
                }
                if c.flip_to_wall + c.flip_to_treasure > 1.0 {
                    bad("flip_to_treasure", "flip probabilities exceed 1");
                }
            }
        }
        issues
    }

    /// Parses a rendered genome and evaluates it again.
    pub fn reevaluate(&self, genome: &str) -> Result<Evaluation, EvalError> {
        match self {
            DomainConfig::Deceptive(c) => {
                let d = DeceptiveDomain::new(c.clone());
                d.evaluate(&d.parse(genome)?)
            }
            DomainConfig::Level(c) => {
                let d = LevelDomain::new(c.clone());
                d.evaluate(&d.parse(genome)?)
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub domain: DomainConfig,
    pub engine: EngineConfig,
    /// Where the runner writes artifacts unless told otherwise.
    pub output: Option<std::path::PathBuf>,
    /// Iterations between intermediate report snapshots; 0 writes only the
    /// final report.
    pub report_every: u64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), Vec<ConfigIssue>> {
        let mut issues = self.domain.validate();
        if let Err(more) = self.engine.validate(Some(self.domain.descriptor_dims())) {
            issues.extend(more);
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(issues)
        }
    }

    pub fn build(&self) -> Result<Box<dyn SteerableRun>, EngineError> {
        self.validate().map_err(EngineError::InvalidConfig)?;
        Ok(match &self.domain {
            DomainConfig::Deceptive(c) => Box::new(Engine::new(
                DeceptiveDomain::new(c.clone()),
                self.engine.clone(),
                self.seed,
            )?),
            DomainConfig::Level(c) => Box::new(Engine::new(
                LevelDomain::new(c.clone()),
                self.engine.clone(),
                self.seed,
            )?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engines::Algorithm;
    use crate::partition::{Axis, GridSpec};

    #[test]
    fn parses_tagged_domain() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"seed": 3, "domain": {"kind": "level", "width": 8},
                "engine": {"algorithm": "CNS-FINS", "budget": 500}}"#,
        )
        .unwrap();
        assert!(matches!(&cfg.domain, DomainConfig::Level(c) if c.width == 8 && c.height == 10));
        assert_eq!(cfg.engine.algorithm, Algorithm::ConstrainedNoveltyFins);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_fields_rejected() {
        let r: Result<RunConfig, _> = serde_json::from_str(r#"{"engine": {"budgett": 5}}"#);
        assert!(r.is_err());
    }

    #[test]
    fn grid_dimensions_follow_domain() {
        let mut cfg = RunConfig {
            domain: DomainConfig::Level(LevelConfig::default()),
            engine: EngineConfig {
                grid: Some(GridSpec::uniform(vec![Axis::new(0.0, 1.0, 5); 2])),
                ..EngineConfig::default()
            },
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
        cfg.engine.grid = Some(GridSpec::uniform(vec![Axis::new(0.0, 1.0, 5); 3]));
        cfg.validate().unwrap();
    }

    #[test]
    fn builds_and_steps() {
        let cfg = RunConfig {
            engine: EngineConfig {
                algorithm: Algorithm::NoveltyLocalCompetition,
                budget: 300,
                ..EngineConfig::default()
            },
            ..RunConfig::default()
        };
        let mut run = cfg.build().unwrap();
        while run.step().unwrap() {}
        assert_eq!(run.evaluations(), 300);
        for rec in run.archive_records() {
            assert_eq!(cfg.domain.reevaluate(&rec.genome).unwrap(), rec.evaluation);
        }
    }
}
