//! Parent selection primitives shared by the engines.

use std::cmp::Ordering;

use rand::Rng;

/// Probability of each index under weighted selection.
pub fn selection_probabilities(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| w / total).collect()
}

/// Index drawn with probability proportional to its weight. Equal weights
/// take a single uniform integer draw.
pub fn select_weighted<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    assert!(!weights.is_empty(), "selection over an empty set");
    let first = weights[0];
    if weights.iter().all(|&w| w == first) {
        return rng.random_range(0..weights.len());
    }
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    // rounding left a sliver past the last weight
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1)
}

/// Tournament of `size` uniform draws; the best by `better` wins and the
/// earlier draw wins ties.
pub fn tournament<R, F>(n: usize, size: usize, rng: &mut R, cmp: F) -> usize
where
    R: Rng + ?Sized,
    F: Fn(usize, usize) -> Ordering,
{
    let mut best = rng.random_range(0..n);
    for _ in 1..size {
        let c = rng.random_range(0..n);
        if cmp(c, best) == Ordering::Greater {
            best = c;
        }
    }
    best
}

/// Tournament maximizing `scores`.
pub fn score_tournament<R: Rng + ?Sized>(scores: &[f64], size: usize, rng: &mut R) -> usize {
    tournament(scores.len(), size, rng, |a, b| scores[a].total_cmp(&scores[b]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streams::sub_stream;

    #[test]
    fn probabilities_normalize() {
        assert_eq!(selection_probabilities(&[1.0, 3.0]), vec![0.25, 0.75]);
    }

    #[test]
    fn weighted_frequencies() {
        let mut rng = sub_stream(5, 0);
        let weights = [1.0, 3.0];
        let n = 40_000;
        let hits = (0..n).filter(|_| select_weighted(&weights, &mut rng) == 1).count();
        let p = hits as f64 / n as f64;
        let se = (0.75f64 * 0.25 / n as f64).sqrt();
        assert!((p - 0.75).abs() < 4.0 * se, "{p}");
    }

    #[test]
    fn zero_weight_never_drawn() {
        let mut rng = sub_stream(6, 0);
        for _ in 0..1000 {
            assert_ne!(select_weighted(&[0.0, 1.0, 0.0], &mut rng), 0);
        }
    }

    #[test]
    fn tournament_picks_the_better() {
        let mut rng = sub_stream(8, 0);
        let scores = [0.0, 1.0];
        let wins = (0..1000).filter(|_| score_tournament(&scores, 2, &mut rng) == 1).count();
        // index 1 loses only when drawn zero times: probability 1/4
        assert!((700..800).contains(&wins), "{wins}");
    }
}
