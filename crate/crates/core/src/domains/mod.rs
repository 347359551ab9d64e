//! Built-in content domains.

pub mod deceptive;
pub mod level;

pub use deceptive::{DeceptiveConfig, DeceptiveDomain};
pub use level::{LevelConfig, LevelDomain, LevelFeatures, LevelNovelty, TileLevel};
