//! Compositional quality-diversity search.
//!
//! Divergence components ([`divergence`], [`partition`]) and quality
//! components ([`quality`]) are assembled by [`engines`] into MAP-Elites and
//! its variants, constrained novelty/surprise search, and novelty/surprise
//! search with local competition. [`domains`] provides two content domains
//! and [`analysis`] the online expressivity reports and lineage queries.

pub mod analysis;
pub mod divergence;
pub mod domain;
pub mod domains;
pub mod engines;
pub mod partition;
pub mod quality;
pub mod setup;
pub mod streams;

pub use domain::{
    spawn_offspring, BehaviorDescriptor, Domain, EvalError, Evaluation, Individual, IndividualId,
    Origin,
};
pub use engines::{Algorithm, Engine, EngineConfig, EngineError, SteerableRun};
pub use partition::{CellIndex, GridKind, GridSpec};
pub use setup::{DomainConfig, RunConfig};
pub use streams::RunStreams;
