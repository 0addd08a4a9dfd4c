//! Seeded k-means++ initialization followed by Lloyd iterations.

use serde::{Deserialize, Serialize};

use super::{IntentEmbedding, IntentError, Result};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentCluster {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub k: usize,
    pub sse: f64,
    pub iterations: usize,
    /// SSE after each centroid update, in order.
    pub sse_history: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    best
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut SplitMix64) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![rng.next_index(n)];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.next_f64() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                if d <= 0.0 {
                    continue;
                }
                acc += d;
                if acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave `target` just past the last positive weight
            pick.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).expect("total > 0"))
        } else {
            (0..n).find(|i| !chosen.contains(i)).expect("k <= n")
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &points[next]));
        }
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

fn update_centroids(points: &[Vec<f64>], assignments: &[usize], centroids: &mut [Vec<f64>]) {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; centroids.len()];
    let mut counts = vec![0usize; centroids.len()];
    for (p, &a) in points.iter().zip(assignments) {
        counts[a] += 1;
        sums[a].iter_mut().zip(p).for_each(|(s, x)| *s += x);
    }
    for (j, c) in centroids.iter_mut().enumerate() {
        // an empty cluster keeps its previous centroid
        if counts[j] > 0 {
            *c = sums[j].iter().map(|s| s / counts[j] as f64).collect();
        }
    }
}

fn sse(points: &[Vec<f64>], assignments: &[usize], centroids: &[Vec<f64>]) -> f64 {
    points.iter().zip(assignments).map(|(p, &a)| sq_dist(p, &centroids[a])).sum()
}

/// k-means over raw points in the given order.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, max_iters: usize) -> Result<IntentCluster> {
    if k == 0 || k > points.len() {
        return Err(IntentError::Domain(format!("k = {k} outside [1, {}]", points.len())));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim || p.iter().any(|v| !v.is_finite())) {
        return Err(IntentError::Domain("points must share one dimension and be finite".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let mut centroids = plus_plus_init(points, k, &mut rng);
    let mut assignments: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
    update_centroids(points, &assignments, &mut centroids);
    let mut sse_history = vec![sse(points, &assignments, &centroids)];
    let mut iterations = 1;
    while iterations < max_iters.max(1) {
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
        if next == assignments {
            break;
        }
        assignments = next;
        update_centroids(points, &assignments, &mut centroids);
        sse_history.push(sse(points, &assignments, &centroids));
        iterations += 1;
    }
    Ok(IntentCluster {
        sse: *sse_history.last().expect("non-empty"),
        assignments,
        centroids,
        k,
        iterations,
        sse_history,
    })
}

/// Clusters embeddings. Points are processed in ascending id order so the
/// result does not depend on input order; assignments are reported in input
/// order.
pub fn cluster_intents(embeddings: &[IntentEmbedding], k: usize, seed: u64, max_iters: usize) -> Result<IntentCluster> {
    let mut order: Vec<usize> = (0..embeddings.len()).collect();
    order.sort_by_key(|&i| embeddings[i].id);
    let points: Vec<Vec<f64>> = order.iter().map(|&i| embeddings[i].vector.clone()).collect();
    let mut out = kmeans(&points, k, seed, max_iters)?;
    let mut assignments = vec![0; embeddings.len()];
    for (canon, &orig) in order.iter().enumerate() {
        assignments[orig] = out.assignments[canon];
    }
    out.assignments = assignments;
    Ok(out)
}
