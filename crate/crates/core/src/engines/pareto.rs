//! Non-dominated sorting and crowding distance (NSGA-II style) over
//! objectives that are all maximized.

use std::cmp::Ordering;

/// `a` is at least as good as `b` everywhere and strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return false;
        }
        if x > y {
            strictly = true;
        }
    }
    strictly
}

/// Front index of every point (0 for the non-dominated set).
pub fn non_dominated_ranks(objectives: &[Vec<f64>]) -> Vec<usize> {
    let n = objectives.len();
    let mut dominated_by = vec![0usize; n];
    let mut dominating: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates(&objectives[i], &objectives[j]) {
                dominating[i].push(j);
                dominated_by[j] += 1;
            } else if dominates(&objectives[j], &objectives[i]) {
                dominating[j].push(i);
                dominated_by[i] += 1;
            }
        }
    }
    let mut ranks = vec![usize::MAX; n];
    let mut front: Vec<usize> = (0..n).filter(|&i| dominated_by[i] == 0).collect();
    let mut rank = 0;
    while !front.is_empty() {
        let mut next = Vec::new();
        for &i in &front {
            ranks[i] = rank;
            for &j in &dominating[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        front = next;
        rank += 1;
    }
    ranks
}

/// Crowding distance within each front. Boundary points get infinity.
pub fn crowding_distances(objectives: &[Vec<f64>], ranks: &[usize]) -> Vec<f64> {
    let n = objectives.len();
    let mut crowd = vec![0.0; n];
    let Some(&max_rank) = ranks.iter().max() else {
        return crowd;
    };
    let dims = objectives.first().map_or(0, Vec::len);
    for r in 0..=max_rank {
        let members: Vec<usize> = (0..n).filter(|&i| ranks[i] == r).collect();
        if members.len() <= 2 {
            for &i in &members {
                crowd[i] = f64::INFINITY;
            }
            continue;
        }
        for m in 0..dims {
            let mut sorted = members.clone();
            sorted.sort_by(|&a, &b| objectives[a][m].total_cmp(&objectives[b][m]).then(a.cmp(&b)));
            let lo = objectives[sorted[0]][m];
            let hi = objectives[sorted[sorted.len() - 1]][m];
            crowd[sorted[0]] = f64::INFINITY;
            crowd[sorted[sorted.len() - 1]] = f64::INFINITY;
            if hi <= lo {
                continue;
            }
            for w in 1..sorted.len() - 1 {
                let gap = objectives[sorted[w + 1]][m] - objectives[sorted[w - 1]][m];
                crowd[sorted[w]] += gap / (hi - lo);
            }
        }
    }
    crowd
}

/// Crowded-comparison order: lower rank first, then larger crowding.
pub fn crowded_cmp(i: usize, j: usize, ranks: &[usize], crowd: &[f64]) -> Ordering {
    ranks[i]
        .cmp(&ranks[j])
        .then_with(|| crowd[j].total_cmp(&crowd[i]))
}

/// Indices of the `n` survivors: whole fronts in order, the last partial
/// front filled by crowding distance. Returned in ascending index order.
pub fn nsga_select(objectives: &[Vec<f64>], n: usize) -> Vec<usize> {
    let ranks = non_dominated_ranks(objectives);
    let crowd = crowding_distances(objectives, &ranks);
    let mut order: Vec<usize> = (0..objectives.len()).collect();
    order.sort_by(|&a, &b| crowded_cmp(a, b, &ranks, &crowd).then(a.cmp(&b)));
    order.truncate(n);
    order.sort_unstable();
    order
}
