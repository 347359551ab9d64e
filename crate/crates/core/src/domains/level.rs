//! Tile-based level domain.
//!
//! A level is a `W x H` grid with exactly one start and one exit. It is
//! feasible when the exit and every treasure can be reached from the start by
//! 4-connected moves over non-wall tiles.

use std::collections::VecDeque;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{BehaviorDescriptor, Domain, EvalError, Evaluation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tile {
    Wall,
    Floor,
    Start,
    Exit,
    Treasure,
}

impl Tile {
    pub fn symbol(self) -> char {
        match self {
            Tile::Wall => '#',
            Tile::Floor => '.',
            Tile::Start => 'S',
            Tile::Exit => 'E',
            Tile::Treasure => 'T',
        }
    }

    pub fn from_symbol(c: char) -> Option<Tile> {
        Some(match c {
            '#' => Tile::Wall,
            '.' => Tile::Floor,
            'S' => Tile::Start,
            'E' => Tile::Exit,
            'T' => Tile::Treasure,
            _ => return None,
        })
    }

    pub fn is_passable(self) -> bool {
        self != Tile::Wall
    }

    fn code(self) -> f64 {
        match self {
            Tile::Wall => 0.0,
            Tile::Floor => 1.0,
            Tile::Start => 2.0,
            Tile::Exit => 3.0,
            Tile::Treasure => 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LevelError {
    #[error("level must have exactly one start, found {0}")]
    StartCount(usize),
    #[error("level must have exactly one exit, found {0}")]
    ExitCount(usize),
    #[error("level size {got_w}x{got_h} does not match {want_w}x{want_h}")]
    Dimensions {
        want_w: usize,
        want_h: usize,
        got_w: usize,
        got_h: usize,
    },
    #[error("unknown tile symbol {0:?}")]
    Symbol(char),
    #[error("ragged level text: row {row} has {got} tiles, expected {want}")]
    Ragged { row: usize, want: usize, got: usize },
    #[error("empty level")]
    Empty,
}

impl From<LevelError> for EvalError {
    fn from(e: LevelError) -> Self {
        EvalError::Malformed(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TileLevel {
    width: usize,
    height: usize,
    tiles: Vec<Tile>,
}

impl TileLevel {
    /// Builds a level and checks the one-start/one-exit rule.
    pub fn new(width: usize, height: usize, tiles: Vec<Tile>) -> Result<Self, LevelError> {
        if width == 0 || height == 0 {
            return Err(LevelError::Empty);
        }
        if tiles.len() != width * height {
            return Err(LevelError::Dimensions {
                want_w: width,
                want_h: height,
                got_w: width,
                got_h: tiles.len() / width,
            });
        }
        let level = Self {
            width,
            height,
            tiles,
        };
        level.validate()?;
        Ok(level)
    }

    pub fn validate(&self) -> Result<(), LevelError> {
        let starts = self.tiles.iter().filter(|&&t| t == Tile::Start).count();
        if starts != 1 {
            return Err(LevelError::StartCount(starts));
        }
        let exits = self.tiles.iter().filter(|&&t| t == Tile::Exit).count();
        if exits != 1 {
            return Err(LevelError::ExitCount(exits));
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }

    pub fn get(&self, x: usize, y: usize) -> Tile {
        self.tiles[y * self.width + x]
    }

    fn position(&self, tile: Tile) -> usize {
        self.tiles.iter().position(|&t| t == tile).expect("validated")
    }

    pub fn start(&self) -> usize {
        self.position(Tile::Start)
    }

    pub fn exit(&self) -> usize {
        self.position(Tile::Exit)
    }

    fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let (x, y) = (i % self.width, i / self.width);
        let w = self.width;
        [
            (x > 0).then(|| i - 1),
            (x + 1 < w).then(|| i + 1),
            (y > 0).then(|| i - w),
            (y + 1 < self.height).then(|| i + w),
        ]
        .into_iter()
        .flatten()
    }

    /// Breadth-first distances (in steps) from the start over passable tiles.
    pub fn distances_from_start(&self) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.tiles.len()];
        let s = self.start();
        dist[s] = Some(0);
        let mut queue = VecDeque::from([s]);
        while let Some(i) = queue.pop_front() {
            let d = dist[i].expect("queued tiles have distances");
            for n in self.neighbors(i) {
                if dist[n].is_none() && self.tiles[n].is_passable() {
                    dist[n] = Some(d + 1);
                    queue.push_back(n);
                }
            }
        }
        dist
    }

    pub fn parse(text: &str) -> Result<Self, LevelError> {
        let rows: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        let width = rows.first().map(|r| r.trim_end().chars().count()).ok_or(LevelError::Empty)?;
        let mut tiles = Vec::with_capacity(width * rows.len());
        for (row, line) in rows.iter().enumerate() {
            let line = line.trim_end();
            let got = line.chars().count();
            if got != width {
                return Err(LevelError::Ragged {
                    row,
                    want: width,
                    got,
                });
            }
            for c in line.chars() {
                tiles.push(Tile::from_symbol(c).ok_or(LevelError::Symbol(c))?);
            }
        }
        Self::new(width, rows.len(), tiles)
    }
}

impl fmt::Display for TileLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (y, row) in self.tiles.chunks(self.width).enumerate() {
            if y > 0 {
                writeln!(f)?;
            }
            for t in row {
                write!(f, "{}", t.symbol())?;
            }
        }
        Ok(())
    }
}

/// Reachability verdict and distance from feasibility.
pub fn level_feasibility(level: &TileLevel) -> (bool, f64) {
    let dist = level.distances_from_start();
    let required: Vec<usize> = level
        .tiles
        .iter()
        .enumerate()
        .filter(|(_, &t)| t == Tile::Exit || t == Tile::Treasure)
        .map(|(i, _)| i)
        .collect();
    let unreachable = required.iter().filter(|&&i| dist[i].is_none()).count();
    if unreachable == 0 {
        (true, 0.0)
    } else {
        (false, unreachable as f64 / (1 + required.len()) as f64)
    }
}

pub fn wall_fraction(level: &TileLevel) -> f64 {
    let walls = level.tiles.iter().filter(|&&t| t == Tile::Wall).count();
    walls as f64 / level.tiles.len() as f64
}

/// Tiles on a shortest start-to-exit path (start and exit included), over
/// the level area. Zero when the exit is unreachable.
pub fn path_ratio(level: &TileLevel) -> f64 {
    match level.distances_from_start()[level.exit()] {
        Some(steps) => (steps + 1) as f64 / level.tiles.len() as f64,
        None => 0.0,
    }
}

/// Fraction of left-right mirror pairs `(x, W-1-x)` that agree on wall versus
/// passable. The centre column of odd widths has no partner and is skipped.
pub fn mirror_symmetry(level: &TileLevel) -> f64 {
    let w = level.width;
    let pairs_per_row = w / 2;
    if pairs_per_row == 0 {
        return 1.0;
    }
    let mut equal = 0usize;
    for y in 0..level.height {
        for x in 0..pairs_per_row {
            let a = level.get(x, y).is_passable();
            let b = level.get(w - 1 - x, y).is_passable();
            if a == b {
                equal += 1;
            }
        }
    }
    equal as f64 / (pairs_per_row * level.height) as f64
}

/// `(wall fraction, shortest-path ratio, mirror symmetry)`. Infeasible levels
/// get a path ratio of 0.
pub fn level_descriptor(level: &TileLevel) -> Vec<f64> {
    let (feasible, _) = level_feasibility(level);
    vec![
        wall_fraction(level),
        if feasible { path_ratio(level) } else { 0.0 },
        mirror_symmetry(level),
    ]
}

/// Eight on/off features of a level, for 256-cell binary maps.
pub fn level_features(level: &TileLevel) -> [bool; 8] {
    let treasures = level.tiles.iter().filter(|&&t| t == Tile::Treasure).count();
    let (feasible, _) = level_feasibility(level);
    let path = if feasible { path_ratio(level) } else { 0.0 };
    let w = level.width;
    let start = level.start();
    let exit = level.exit();
    let dead_end = level.tiles.iter().enumerate().any(|(i, t)| {
        *t == Tile::Floor && level.neighbors(i).filter(|&n| level.tiles[n].is_passable()).count() == 1
    });
    [
        treasures > 0,
        treasures >= 3,
        wall_fraction(level) >= 0.3,
        path >= 0.15,
        mirror_symmetry(level) >= 0.75,
        start % w < w / 2,
        exit / w >= level.height / 2,
        dead_end,
    ]
}

/// Simplicity score: `1 - wall fraction` when feasible, else 0.
pub fn level_fitness(level: &TileLevel) -> f64 {
    if level_feasibility(level).0 {
        1.0 - wall_fraction(level)
    } else {
        0.0
    }
}

/// Number of positions whose tiles differ.
pub fn level_distance(a: &TileLevel, b: &TileLevel) -> Result<usize, LevelError> {
    if a.width != b.width || a.height != b.height {
        return Err(LevelError::Dimensions {
            want_w: a.width,
            want_h: a.height,
            got_w: b.width,
            got_h: b.height,
        });
    }
    Ok(a.tiles.iter().zip(&b.tiles).filter(|(x, y)| x != y).count())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LevelFeatures {
    /// Wall fraction, path ratio, symmetry.
    Continuous,
    /// Eight binary features.
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LevelNovelty {
    /// Fraction of differing tiles.
    Tiles,
    /// Euclidean distance between descriptors.
    Descriptor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LevelConfig {
    pub width: usize,
    pub height: usize,
    /// Wall probability for random levels.
    pub wall_density: f64,
    /// Treasure probability for random levels.
    pub treasure_density: f64,
    /// Tiles flipped per mutation.
    pub mutation_flips: usize,
    /// Probability a flipped tile becomes a wall, and a treasure.
    pub flip_to_wall: f64,
    pub flip_to_treasure: f64,
    pub features: LevelFeatures,
    pub novelty: LevelNovelty,
}

impl Default for LevelConfig {
    fn default() -> Self {
        Self {
            width: 10,
            height: 10,
            wall_density: 0.35,
            treasure_density: 0.03,
            mutation_flips: 3,
            flip_to_wall: 0.45,
            flip_to_treasure: 0.05,
            features: LevelFeatures::Continuous,
            novelty: LevelNovelty::Tiles,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LevelDomain {
    config: LevelConfig,
}

impl LevelDomain {
    pub fn new(config: LevelConfig) -> Self {
        assert!(
            config.width * config.height >= 2,
            "a level needs room for a start and an exit"
        );
        Self { config }
    }

    pub fn config(&self) -> &LevelConfig {
        &self.config
    }

    fn check(&self, level: &TileLevel) -> Result<(), LevelError> {
        if level.width != self.config.width || level.height != self.config.height {
            return Err(LevelError::Dimensions {
                want_w: self.config.width,
                want_h: self.config.height,
                got_w: level.width,
                got_h: level.height,
            });
        }
        level.validate()
    }

    fn random_fill<R: Rng + ?Sized>(&self, rng: &mut R) -> Tile {
        let r: f64 = rng.random();
        if r < self.config.flip_to_wall {
            Tile::Wall
        } else if r < self.config.flip_to_wall + self.config.flip_to_treasure {
            Tile::Treasure
        } else {
            Tile::Floor
        }
    }
}

impl Domain for LevelDomain {
    type Genome = TileLevel;

    fn name(&self) -> &'static str {
        "level"
    }

    fn descriptor_dims(&self) -> usize {
        match self.config.features {
            LevelFeatures::Continuous => 3,
            LevelFeatures::Binary => 8,
        }
    }

    fn descriptor_bounds(&self) -> Vec<(f64, f64)> {
        vec![(0.0, 1.0); self.descriptor_dims()]
    }

    fn random_genome<R: Rng + ?Sized>(&self, rng: &mut R) -> TileLevel {
        let n = self.config.width * self.config.height;
        let mut tiles: Vec<Tile> = (0..n)
            .map(|_| {
                let r: f64 = rng.random();
                if r < self.config.wall_density {
                    Tile::Wall
                } else if r < self.config.wall_density + self.config.treasure_density {
                    Tile::Treasure
                } else {
                    Tile::Floor
                }
            })
            .collect();
        let start = rng.random_range(0..n);
        let mut exit = rng.random_range(0..n - 1);
        if exit >= start {
            exit += 1;
        }
        tiles[start] = Tile::Start;
        tiles[exit] = Tile::Exit;
        TileLevel {
            width: self.config.width,
            height: self.config.height,
            tiles,
        }
    }

    /// Rewrites `mutation_flips` random tiles other than start and exit.
    fn mutate<R: Rng + ?Sized>(&self, genome: &TileLevel, rng: &mut R) -> TileLevel {
        let mut child = genome.clone();
        let n = child.tiles.len();
        for _ in 0..self.config.mutation_flips {
            let i = rng.random_range(0..n);
            let fill = self.random_fill(rng);
            if !matches!(child.tiles[i], Tile::Start | Tile::Exit) {
                child.tiles[i] = fill;
            }
        }
        child
    }

    /// Copies a random rectangle of `b` into `a`. The child keeps `a`'s start
    /// and exit; `b`'s start and exit inside the patch are copied as floor.
    fn crossover<R: Rng + ?Sized>(&self, a: &TileLevel, b: &TileLevel, rng: &mut R) -> TileLevel {
        let (w, h) = (a.width, a.height);
        let x0 = rng.random_range(0..w);
        let x1 = rng.random_range(x0..w);
        let y0 = rng.random_range(0..h);
        let y1 = rng.random_range(y0..h);
        let mut child = a.clone();
        for y in y0..=y1 {
            for x in x0..=x1 {
                let i = y * w + x;
                if matches!(a.tiles[i], Tile::Start | Tile::Exit) {
                    continue;
                }
                child.tiles[i] = match b.tiles[i] {
                    Tile::Start | Tile::Exit => Tile::Floor,
                    t => t,
                };
            }
        }
        child
    }

    fn evaluate(&self, genome: &TileLevel) -> Result<Evaluation, EvalError> {
        self.check(genome)?;
        let (_, infeasibility) = level_feasibility(genome);
        let descriptor = match self.config.features {
            LevelFeatures::Continuous => level_descriptor(genome),
            LevelFeatures::Binary => level_features(genome)
                .iter()
                .map(|&f| if f { 1.0 } else { 0.0 })
                .collect(),
        };
        Evaluation::new(
            level_fitness(genome),
            BehaviorDescriptor::new(descriptor)?,
            infeasibility,
        )
    }

    fn render(&self, genome: &TileLevel) -> String {
        genome.to_string()
    }

    fn parse(&self, text: &str) -> Result<TileLevel, EvalError> {
        let level = TileLevel::parse(text)?;
        self.check(&level)?;
        Ok(level)
    }

    fn novelty_point(&self, genome: &TileLevel, evaluation: &Evaluation) -> Vec<f64> {
        match self.config.novelty {
            LevelNovelty::Tiles => genome.tiles.iter().map(|t| t.code()).collect(),
            LevelNovelty::Descriptor => evaluation.descriptor.values().to_vec(),
        }
    }

    fn novelty_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.config.novelty {
            LevelNovelty::Tiles => {
                let differing = a.iter().zip(b).filter(|(x, y)| x != y).count();
                differing as f64 / a.len().max(1) as f64
            }
            LevelNovelty::Descriptor => crate::divergence::euclidean(a, b),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streams::sub_stream;
    use proptest::prelude::*;

    fn lvl(text: &str) -> TileLevel {
        TileLevel::parse(text).unwrap()
    }

    /// Stack-based flood fill, independent of the breadth-first search.
    fn flood_reachable(level: &TileLevel) -> bool {
        let (w, h) = (level.width(), level.height());
        let mut seen = vec![false; w * h];
        let mut stack = vec![level.start()];
        while let Some(i) = stack.pop() {
            if seen[i] || level.tiles()[i] == Tile::Wall {
                continue;
            }
            seen[i] = true;
            let (x, y) = (i % w, i / w);
            if x > 0 {
                stack.push(i - 1);
            }
            if x + 1 < w {
                stack.push(i + 1);
            }
            if y > 0 {
                stack.push(i - w);
            }
            if y + 1 < h {
                stack.push(i + w);
            }
        }
        level
            .tiles()
            .iter()
            .enumerate()
            .all(|(i, t)| !matches!(t, Tile::Exit | Tile::Treasure) || seen[i])
    }

    #[test]
    fn open_corridor_is_feasible() {
        let l = lvl("S...E");
        assert_eq!(level_feasibility(&l), (true, 0.0));
    }

    #[test]
    fn sealed_exit() {
        let l = lvl("S.#E\n..##");
        assert_eq!(level_feasibility(&l), (false, 0.5));
    }

    #[test]
    fn one_unreachable_treasure_of_two() {
        let l = lvl("S.T.E\n###.#\nT#...");
        let (f, d) = level_feasibility(&l);
        assert!(!f);
        assert_eq!(d, 0.25);
    }

    #[test]
    fn all_floor_descriptor() {
        let l = lvl("S...\n....\n...E");
        let d = level_descriptor(&l);
        assert_eq!(d[0], 0.0);
        assert_eq!(d[2], 1.0);
        assert_eq!(level_fitness(&l), 1.0);
    }

    #[test]
    fn corridor_path_ratio() {
        let mut rows = vec!["S........E".to_string()];
        rows.extend((0..9).map(|_| "##########".to_string()));
        let l = lvl(&rows.join("\n"));
        assert_eq!(l.distances_from_start()[l.exit()], Some(9));
        assert_eq!(path_ratio(&l), 0.1);
        assert_eq!(level_descriptor(&l)[1], 0.1);
    }

    #[test]
    fn checkerboard_symmetry_matches_pair_count() {
        let (w, h) = (7, 4);
        let mut tiles: Vec<Tile> = (0..w * h)
            .map(|i| if (i % w + i / w) % 2 == 0 { Tile::Wall } else { Tile::Floor })
            .collect();
        tiles[1] = Tile::Start;
        tiles[w * h - 2] = Tile::Exit;
        let l = TileLevel::new(w, h, tiles).unwrap();
        let mut equal = 0;
        let mut total = 0;
        for y in 0..h {
            for x in 0..w {
                let m = w - 1 - x;
                if x < m {
                    total += 1;
                    if (l.get(x, y) == Tile::Wall) == (l.get(m, y) == Tile::Wall) {
                        equal += 1;
                    }
                }
            }
        }
        assert_eq!(mirror_symmetry(&l), equal as f64 / total as f64);
    }

    #[test]
    fn fitness_cases() {
        // 4 walls of 10 tiles, open path
        let l = lvl("S...E\n##.##");
        assert!((level_fitness(&l) - 0.6).abs() < 1e-12);
        assert_eq!(level_fitness(&lvl("S#E")), 0.0);
    }

    #[test]
    fn distance_cases() {
        let a = lvl("S.#\n..E");
        assert_eq!(level_distance(&a, &a).unwrap(), 0);
        let b = lvl("S##\n..E");
        assert_eq!(level_distance(&a, &b).unwrap(), 1);
        let c = lvl("E#.\n#S.");
        assert_eq!(level_distance(&a, &c).unwrap(), 6);
        assert!(level_distance(&a, &lvl("SE")).is_err());
    }

    #[test]
    fn structural_errors() {
        assert_eq!(TileLevel::parse("S..").unwrap_err(), LevelError::ExitCount(0));
        assert_eq!(TileLevel::parse("SSE").unwrap_err(), LevelError::StartCount(2));
        assert!(matches!(TileLevel::parse("S.\n.E."), Err(LevelError::Ragged { .. })));
        assert_eq!(TileLevel::parse("S?E").unwrap_err(), LevelError::Symbol('?'));
        let d = LevelDomain::new(LevelConfig::default());
        let err = d.evaluate(&lvl("S.E")).unwrap_err();
        assert!(matches!(err, EvalError::Malformed(m) if m.contains("size")));
    }

    #[test]
    fn evaluation_is_deterministic_and_round_trips() {
        let d = LevelDomain::new(LevelConfig::default());
        let g = d.random_genome(&mut sub_stream(3, 0));
        assert_eq!(d.evaluate(&g).unwrap(), d.evaluate(&g).unwrap());
        assert_eq!(d.parse(&d.render(&g)).unwrap(), g);
    }

    #[test]
    fn binary_features_fill_eight_dims() {
        let d = LevelDomain::new(LevelConfig {
            features: LevelFeatures::Binary,
            ..LevelConfig::default()
        });
        let g = d.random_genome(&mut sub_stream(3, 0));
        let e = d.evaluate(&g).unwrap();
        assert_eq!(e.descriptor.dims(), 8);
        assert!(e.descriptor.values().iter().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn feasibility_agrees_with_flood_fill() {
        let d = LevelDomain::new(LevelConfig {
            wall_density: 0.4,
            treasure_density: 0.05,
            ..LevelConfig::default()
        });
        let mut rng = sub_stream(17, 0);
        let mut feasible = 0;
        for _ in 0..1000 {
            let g = d.random_genome(&mut rng);
            let (f, _) = level_feasibility(&g);
            assert_eq!(f, flood_reachable(&g), "{g}");
            feasible += usize::from(f);
        }
        // both verdicts actually occur
        assert!(feasible > 0 && feasible < 1000);
    }

    proptest! {
        #[test]
        fn distance_is_a_metric(sa in 0u64..500, sb in 0u64..500, sc in 0u64..500) {
            let d = LevelDomain::new(LevelConfig { width: 6, height: 5, ..LevelConfig::default() });
            let a = d.random_genome(&mut sub_stream(sa, 0));
            let b = d.random_genome(&mut sub_stream(sb, 0));
            let c = d.random_genome(&mut sub_stream(sc, 0));
            let ab = level_distance(&a, &b).unwrap();
            prop_assert_eq!(level_distance(&a, &a).unwrap(), 0);
            prop_assert_eq!(ab, level_distance(&b, &a).unwrap());
            prop_assert_eq!(ab == 0, a == b);
            prop_assert!(level_distance(&a, &c).unwrap() <= ab + level_distance(&b, &c).unwrap());
        }

        #[test]
        fn variation_preserves_structure(seed in 0u64..2000) {
            let d = LevelDomain::new(LevelConfig { width: 8, height: 6, ..LevelConfig::default() });
            let mut rng = sub_stream(seed, 1);
            let a = d.random_genome(&mut rng);
            let b = d.random_genome(&mut rng);
            let m = d.mutate(&a, &mut rng);
            prop_assert!(m.validate().is_ok());
            prop_assert_eq!(m.start(), a.start());
            let c = d.crossover(&a, &b, &mut rng);
            prop_assert!(c.validate().is_ok());
            prop_assert_eq!(c.exit(), a.exit());
            let e = d.evaluate(&c).unwrap();
            prop_assert!(e.descriptor.values().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
