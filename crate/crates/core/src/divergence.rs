//! Behavior-space distance scoring: k-nearest-neighbor novelty against a
//! growing archive, and surprise as deviation from a linear extrapolation of
//! the last two generation summaries.

use std::collections::VecDeque;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::IndividualId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DivergenceError {
    #[error("novelty undefined for empty reference set")]
    EmptyReference,
    #[error("insufficient history: surprise prediction needs 2 summaries, have {0}")]
    InsufficientHistory(usize),
    #[error("surprise undefined for an empty prediction")]
    EmptyPrediction,
    #[error("cannot summarize an empty population")]
    EmptyPopulation,
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Mean distance from `subject` to its `k` nearest references. Fewer than `k`
/// references are averaged in full.
pub fn mean_knn_distance<'a, I, F>(
    subject: &[f64],
    references: I,
    k: usize,
    distance: F,
) -> Result<f64, DivergenceError>
where
    I: IntoIterator<Item = &'a [f64]>,
    F: Fn(&[f64], &[f64]) -> f64,
{
    let mut dists: Vec<f64> = references
        .into_iter()
        .map(|r| distance(subject, r))
        .collect();
    if dists.is_empty() {
        return Err(DivergenceError::EmptyReference);
    }
    let k = k.max(1).min(dists.len());
    if k < dists.len() {
        dists.select_nth_unstable_by(k - 1, f64::total_cmp);
    }
    Ok(dists[..k].iter().sum::<f64>() / k as f64)
}

/// One retained entry of the novelty archive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub id: Option<IndividualId>,
    /// Coordinates in the novelty space (the descriptor unless the domain
    /// overrides it).
    pub point: Vec<f64>,
    pub descriptor: Vec<f64>,
    pub fitness: f64,
}

impl ArchiveEntry {
    pub fn from_descriptor(descriptor: Vec<f64>) -> Self {
        Self {
            id: None,
            point: descriptor.clone(),
            descriptor,
            fitness: 0.0,
        }
    }
}

/// Past behaviors used as novelty references. Only ever grows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoveltyArchive {
    entries: Vec<ArchiveEntry>,
    threshold: f64,
}

impl NoveltyArchive {
    pub fn new(threshold: f64) -> Self {
        assert!(threshold > 0.0, "admission threshold must be positive");
        Self {
            entries: Vec::new(),
            threshold,
        }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ArchiveEntry] {
        &self.entries
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + Clone {
        self.entries.iter().map(|e| e.point.as_slice())
    }

    /// Unconditional append.
    pub fn push(&mut self, entry: ArchiveEntry) {
        self.entries.push(entry);
    }

    /// Appends `entry` iff `score` exceeds the admission threshold.
    pub fn consider(&mut self, entry: ArchiveEntry, score: f64) -> bool {
        if score > self.threshold {
            self.entries.push(entry);
            true
        } else {
            false
        }
    }
}

pub fn archive_consider(subject: ArchiveEntry, score: f64, archive: &mut NoveltyArchive) -> bool {
    archive.consider(subject, score)
}

/// Euclidean novelty of `subject` against `population` and the archive.
///
/// `population` must not contain the subject's own slot; callers scoring a
/// member of a population pass the other members (see [`population_novelty`]).
pub fn novelty_score(
    subject: &[f64],
    population: &[Vec<f64>],
    archive: &NoveltyArchive,
    k: usize,
) -> Result<f64, DivergenceError> {
    let refs = population.iter().map(Vec::as_slice).chain(archive.points());
    mean_knn_distance(subject, refs, k, euclidean)
}

/// Novelty of every member of `points`, each scored against the other members
/// plus `archive` under `distance`.
pub fn population_novelty<F>(
    points: &[Vec<f64>],
    archive: Option<&NoveltyArchive>,
    k: usize,
    distance: F,
) -> Result<Vec<f64>, DivergenceError>
where
    F: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    (0..points.len())
        .into_par_iter()
        .map(|i| {
            let others = points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, p)| p.as_slice());
            let refs = others.chain(archive.into_iter().flat_map(|a| a.points()));
            mean_knn_distance(&points[i], refs, k, &distance)
        })
        .collect()
}

/// Indices of the `k` references closest to `subject`, nearest first. Ties
/// resolve to the lower index.
pub fn nearest_indices<F>(subject: &[f64], references: &[&[f64]], k: usize, distance: F) -> Vec<usize>
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    let mut scored: Vec<(f64, usize)> = references
        .iter()
        .enumerate()
        .map(|(i, r)| (distance(subject, r), i))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    scored.into_iter().take(k).map(|(_, i)| i).collect()
}

/// Summary of one generation: `m` centroid descriptors.
pub type GenerationSummary = Vec<Vec<f64>>;

const KMEANS_MAX_ITERATIONS: usize = 50;

/// Summarizes a population by k-means with `m` centroids (clamped to the
/// population size). The first centroid is a seeded random member; the rest
/// are placed by farthest-point selection before Lloyd iterations.
pub fn summarize_generation<R: Rng + ?Sized>(
    population: &[Vec<f64>],
    m: usize,
    rng: &mut R,
) -> Result<GenerationSummary, DivergenceError> {
    if population.is_empty() {
        return Err(DivergenceError::EmptyPopulation);
    }
    let m = m.max(1).min(population.len());
    let first = rng.random_range(0..population.len());
    let mut centroids = vec![population[first].clone()];
    let mut nearest_sq: Vec<f64> = population
        .iter()
        .map(|p| squared(p, &centroids[0]))
        .collect();
    while centroids.len() < m {
        let (far, _) = nearest_sq
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &d)| {
                if d > best.1 {
                    (i, d)
                } else {
                    best
                }
            });
        let c = population[far].clone();
        for (slot, p) in nearest_sq.iter_mut().zip(population) {
            *slot = slot.min(squared(p, &c));
        }
        centroids.push(c);
    }

    let dims = population[0].len();
    let mut assignment = vec![usize::MAX; population.len()];
    for _ in 0..KMEANS_MAX_ITERATIONS {
        let mut changed = false;
        for (slot, p) in assignment.iter_mut().zip(population) {
            let best = closest(p, &centroids);
            if *slot != best {
                *slot = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dims]; m];
        let mut counts = vec![0usize; m];
        for (&c, p) in assignment.iter().zip(population) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p) {
                *s += v;
            }
        }
        for ((centroid, sum), &count) in centroids.iter_mut().zip(sums).zip(&counts) {
            if count > 0 {
                *centroid = sum.into_iter().map(|s| s / count as f64).collect();
            }
        }
    }
    Ok(centroids)
}

fn squared(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn closest(p: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = squared(p, c);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

pub const SURPRISE_HISTORY_WINDOW: usize = 2;

/// Rolling window of the last two generation summaries.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SurpriseModel {
    history: VecDeque<GenerationSummary>,
}

impl SurpriseModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, summary: GenerationSummary) {
        self.history.push_back(summary);
        while self.history.len() > SURPRISE_HISTORY_WINDOW {
            self.history.pop_front();
        }
    }

    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    pub fn history(&self) -> impl Iterator<Item = &GenerationSummary> {
        self.history.iter()
    }

    pub fn can_predict(&self) -> bool {
        self.history.len() >= SURPRISE_HISTORY_WINDOW
    }

    pub fn predict(&self) -> Result<GenerationSummary, DivergenceError> {
        surprise_predict(self)
    }
}

/// Greedy minimal-distance matching between two centroid sets: repeatedly
/// pairs the globally closest unmatched `(older, newer)` couple. Returns, for
/// each newer centroid, the index of its older partner if matched.
pub fn pair_centroids(older: &[Vec<f64>], newer: &[Vec<f64>]) -> Vec<Option<usize>> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(older.len() * newer.len());
    for (j, n) in newer.iter().enumerate() {
        for (i, o) in older.iter().enumerate() {
            pairs.push((squared(o, n), j, i));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut partner = vec![None; newer.len()];
    let mut used = vec![false; older.len()];
    for (_, j, i) in pairs {
        if partner[j].is_none() && !used[i] {
            partner[j] = Some(i);
            used[i] = true;
        }
    }
    partner
}

/// Extrapolates each centroid one generation ahead: `2·c[t-1] − c[t-2]` for
/// matched pairs (the least-squares line through two points, one step on).
/// Unmatched newer centroids are predicted to stay put.
pub fn surprise_predict(model: &SurpriseModel) -> Result<GenerationSummary, DivergenceError> {
    if !model.can_predict() {
        return Err(DivergenceError::InsufficientHistory(model.history_len()));
    }
    let n = model.history.len();
    let older = &model.history[n - 2];
    let newer = &model.history[n - 1];
    let partners = pair_centroids(older, newer);
    Ok(newer
        .iter()
        .zip(partners)
        .map(|(c1, partner)| match partner {
            Some(i) => c1
                .iter()
                .zip(&older[i])
                .map(|(a, b)| 2.0 * a - b)
                .collect(),
            None => c1.clone(),
        })
        .collect())
}

/// Distance from `subject` to the nearest predicted centroid.
pub fn surprise_score(subject: &[f64], predicted: &[Vec<f64>]) -> Result<f64, DivergenceError> {
    predicted
        .iter()
        .map(|c| euclidean(subject, c))
        .min_by(f64::total_cmp)
        .ok_or(DivergenceError::EmptyPrediction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streams::sub_stream;
    use proptest::prelude::*;
    use rand::Rng;

    /// Exhaustive reference: sort every distance, average the first k.
    fn brute_knn(subject: &[f64], refs: &[Vec<f64>], k: usize) -> f64 {
        let mut d: Vec<f64> = refs
            .iter()
            .map(|r| {
                r.iter()
                    .zip(subject)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let k = k.min(d.len());
        d[..k].iter().sum::<f64>() / k as f64
    }

    fn random_points(seed: u64, n: usize, dims: usize) -> Vec<Vec<f64>> {
        let mut rng = sub_stream(seed, 0);
        (0..n)
            .map(|_| (0..dims).map(|_| rng.random::<f64>()).collect())
            .collect()
    }

    #[test]
    fn single_reference_distance() {
        let archive = NoveltyArchive::new(0.1);
        let s = novelty_score(&[3.0, 4.0], &[vec![0.0, 0.0]], &archive, 1).unwrap();
        assert_eq!(s, 5.0);
    }

    #[test]
    fn identical_references_score_zero() {
        let mut archive = NoveltyArchive::new(0.1);
        archive.push(ArchiveEntry::from_descriptor(vec![0.3, 0.3]));
        let pop = vec![vec![0.3, 0.3]; 4];
        assert_eq!(novelty_score(&[0.3, 0.3], &pop, &archive, 3).unwrap(), 0.0);
    }

    #[test]
    fn empty_reference_set_is_an_error() {
        let archive = NoveltyArchive::new(0.1);
        assert_eq!(
            novelty_score(&[0.0], &[], &archive, 3),
            Err(DivergenceError::EmptyReference)
        );
        assert_eq!(
            DivergenceError::EmptyReference.to_string(),
            "novelty undefined for empty reference set"
        );
    }

    #[test]
    fn fewer_than_k_averages_all() {
        let archive = NoveltyArchive::new(0.1);
        let s = novelty_score(&[0.0], &[vec![1.0], vec![3.0]], &archive, 15).unwrap();
        assert_eq!(s, 2.0);
    }

    #[test]
    fn uniform_points_match_exhaustive_knn() {
        let pts = random_points(11, 100, 2);
        let archive = NoveltyArchive::new(0.1);
        let scores = population_novelty(&pts, Some(&archive), 15, euclidean).unwrap();
        for (i, s) in scores.iter().enumerate() {
            let others: Vec<Vec<f64>> = pts
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, p)| p.clone())
                .collect();
            assert!((s - brute_knn(&pts[i], &others, 15)).abs() <= 1e-9);
        }
    }

    #[test]
    fn archive_admission_threshold() {
        let mut a = NoveltyArchive::new(0.1);
        assert!(!a.consider(ArchiveEntry::from_descriptor(vec![0.0]), 0.0));
        assert_eq!(a.len(), 0);
        assert!(archive_consider(ArchiveEntry::from_descriptor(vec![0.0]), 0.5, &mut a));
        assert_eq!(a.len(), 1);
    }

    #[test]
    fn repeated_descriptor_admitted_once() {
        let mut a = NoveltyArchive::new(0.1);
        a.push(ArchiveEntry::from_descriptor(vec![9.0, 9.0]));
        let subject = vec![0.5, 0.5];
        for _ in 0..5 {
            let score = novelty_score(&subject, &[], &a, 1).unwrap();
            a.consider(ArchiveEntry::from_descriptor(subject.clone()), score);
        }
        // the first admission makes every later score zero
        assert_eq!(a.len(), 2);
    }

    fn model(older: Vec<Vec<f64>>, newer: Vec<Vec<f64>>) -> SurpriseModel {
        let mut m = SurpriseModel::new();
        m.push(older);
        m.push(newer);
        m
    }

    #[test]
    fn one_dimensional_extrapolation() {
        let p = surprise_predict(&model(vec![vec![0.2]], vec![vec![0.4]])).unwrap();
        assert_eq!(p, vec![vec![2.0 * 0.4 - 0.2]]);
        assert!((p[0][0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn constant_history_is_identity() {
        let s = vec![vec![0.1, 0.9], vec![0.7, 0.3]];
        assert_eq!(surprise_predict(&model(s.clone(), s.clone())).unwrap(), s);
    }

    #[test]
    fn two_centroids_match_least_squares_line() {
        let older = vec![vec![0.0, 0.0], vec![5.0, 5.0]];
        let newer = vec![vec![5.5, 4.5], vec![0.25, 0.5]];
        let p = surprise_predict(&model(older.clone(), newer.clone())).unwrap();
        // least-squares fit through (t=0, y0), (t=1, y1) evaluated at t=2
        let lsq = |y0: f64, y1: f64| {
            let (tm, ym) = (0.5, (y0 + y1) / 2.0);
            let slope = ((0.0 - tm) * (y0 - ym) + (1.0 - tm) * (y1 - ym)) / 0.5;
            ym + slope * (2.0 - tm)
        };
        let expected = [
            [lsq(5.0, 5.5), lsq(5.0, 4.5)],
            [lsq(0.0, 0.25), lsq(0.0, 0.5)],
        ];
        for (pc, ec) in p.iter().zip(expected) {
            for (a, b) in pc.iter().zip(ec) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn prediction_needs_two_summaries() {
        let mut m = SurpriseModel::new();
        assert_eq!(
            surprise_predict(&m),
            Err(DivergenceError::InsufficientHistory(0))
        );
        m.push(vec![vec![0.0]]);
        assert!(surprise_predict(&m).is_err());
        m.push(vec![vec![0.0]]);
        m.push(vec![vec![1.0]]);
        assert_eq!(m.history_len(), 2);
    }

    #[test]
    fn surprise_nearest_centroid() {
        assert_eq!(surprise_score(&[0.4, 0.4], &[vec![0.4, 0.4]]).unwrap(), 0.0);
        let s = surprise_score(&[1.0, 0.0], &[vec![0.0, 0.0], vec![4.0, 0.0]]).unwrap();
        assert_eq!(s, 1.0);
        assert_eq!(
            surprise_score(&[0.0], &[]),
            Err(DivergenceError::EmptyPrediction)
        );
    }

    #[test]
    fn surprise_matches_exhaustive_min() {
        let subjects = random_points(3, 50, 3);
        let centroids = random_points(4, 7, 3);
        for s in &subjects {
            let brute = centroids
                .iter()
                .map(|c| brute_knn(s, std::slice::from_ref(c), 1))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(surprise_score(s, &centroids).unwrap(), brute);
        }
    }

    #[test]
    fn one_means_is_the_mean() {
        let pts = random_points(5, 40, 2);
        let s = summarize_generation(&pts, 1, &mut sub_stream(1, 4)).unwrap();
        for d in 0..2 {
            let mean = pts.iter().map(|p| p[d]).sum::<f64>() / pts.len() as f64;
            assert!((s[0][d] - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_points_collapse() {
        let pts = vec![vec![0.25, 0.75]; 6];
        let s = summarize_generation(&pts, 4, &mut sub_stream(1, 4)).unwrap();
        assert_eq!(s.len(), 4);
        assert!(s.iter().all(|c| c == &pts[0]));
    }

    #[test]
    fn centroids_clamped_to_population_size() {
        let pts = random_points(6, 3, 2);
        let s = summarize_generation(&pts, 10, &mut sub_stream(1, 4)).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(
            summarize_generation(&[], 2, &mut sub_stream(1, 4)),
            Err(DivergenceError::EmptyPopulation)
        );
    }

    #[test]
    fn separated_clusters_recover_means() {
        let mut rng = sub_stream(8, 0);
        let a: Vec<Vec<f64>> = (0..30)
            .map(|_| vec![rng.random_range(0.0..0.1), rng.random_range(0.0..0.1)])
            .collect();
        let b: Vec<Vec<f64>> = (0..20)
            .map(|_| vec![rng.random_range(0.9..1.0), rng.random_range(0.9..1.0)])
            .collect();
        let mean = |c: &[Vec<f64>]| -> Vec<f64> {
            (0..2)
                .map(|d| c.iter().map(|p| p[d]).sum::<f64>() / c.len() as f64)
                .collect()
        };
        let (ma, mb) = (mean(&a), mean(&b));
        let pts: Vec<Vec<f64>> = a.iter().chain(&b).cloned().collect();
        for seed in 0..5 {
            let s = summarize_generation(&pts, 2, &mut sub_stream(seed, 4)).unwrap();
            for target in [&ma, &mb] {
                let hit = s
                    .iter()
                    .any(|c| c.iter().zip(target.iter()).all(|(x, y)| (x - y).abs() < 1e-6));
                assert!(hit, "no centroid near {target:?}: {s:?}");
            }
        }
    }

    #[test]
    fn drifting_population_is_led_by_delta() {
        let delta = 0.05;
        let base = random_points(9, 30, 2);
        let shifted = |g: usize| -> Vec<Vec<f64>> {
            base.iter()
                .map(|p| vec![p[0] + delta * g as f64, p[1]])
                .collect()
        };
        let mut m = SurpriseModel::new();
        for g in 0..2 {
            // same seed each generation so centroids move rigidly
            m.push(summarize_generation(&shifted(g), 3, &mut sub_stream(2, 4)).unwrap());
        }
        let current: Vec<Vec<f64>> = m.history().last().unwrap().clone();
        let predicted = m.predict().unwrap();
        for (p, c) in predicted.iter().zip(&current) {
            assert!((p[0] - c[0] - delta).abs() < 1e-9);
            assert!((p[1] - c[1]).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn novelty_permutation_and_translation_invariant(
            pts in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 2..30),
            shift in prop::collection::vec(-3.0f64..3.0, 3),
            k in 1usize..8,
            rot in 0usize..30,
        ) {
            let archive = NoveltyArchive::new(0.1);
            let subject = pts[0].clone();
            let mut refs: Vec<Vec<f64>> = pts[1..].to_vec();
            let base = novelty_score(&subject, &refs, &archive, k).unwrap();
            let r = rot % refs.len();
            refs.rotate_left(r);
            refs.reverse();
            prop_assert!((novelty_score(&subject, &refs, &archive, k).unwrap() - base).abs() < 1e-9);
            let mv = |p: &Vec<f64>| p.iter().zip(&shift).map(|(a, b)| a + b).collect::<Vec<f64>>();
            let moved: Vec<Vec<f64>> = refs.iter().map(mv).collect();
            prop_assert!((novelty_score(&mv(&subject), &moved, &archive, k).unwrap() - base).abs() < 1e-9);
        }

        #[test]
        fn surprise_is_a_minimum(
            subject in prop::collection::vec(-1.0f64..1.0, 2),
            cents in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 2), 1..10),
        ) {
            let s = surprise_score(&subject, &cents).unwrap();
            for c in &cents {
                prop_assert!(s <= euclidean(&subject, c));
            }
        }

        #[test]
        fn archive_never_shrinks(scores in prop::collection::vec(0.0f64..1.0, 0..50)) {
            let mut a = NoveltyArchive::new(0.3);
            let mut last = 0;
            for s in scores {
                a.consider(ArchiveEntry::from_descriptor(vec![s]), s);
                prop_assert!(a.len() >= last);
                last = a.len();
            }
        }
    }
}
