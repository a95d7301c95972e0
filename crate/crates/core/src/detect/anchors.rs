//! K-means anchor priors under the `1 - IOU` distance of co-centred boxes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 100;

/// IOU of two (width, height) boxes sharing a centre.
pub fn shape_iou(a: (f64, f64), b: (f64, f64)) -> f64 {
    let inter = a.0.min(b.0) * a.1.min(b.1);
    inter / (a.0 * a.1 + b.0 * b.1 - inter)
}

fn distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    1.0 - shape_iou(a, b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// Sorted by area, ascending.
    pub anchors: Vec<(f64, f64)>,
    /// Cluster index of every input box, relative to the sorted anchors.
    pub assignments: Vec<usize>,
    /// Total distance after each assignment pass.
    pub distance_history: Vec<f64>,
}

impl KMeansResult {
    pub fn total_distance(&self) -> f64 {
        self.distance_history.last().copied().unwrap_or(0.0)
    }
}

fn nearest(b: (f64, f64), centroids: &[(f64, f64)]) -> (usize, f64) {
    centroids
        .iter()
        .enumerate()
        .map(|(i, &c)| (i, distance(b, c)))
        .fold((0, f64::INFINITY), |best, x| if x.1 < best.1 { x } else { best })
}

fn seed_centroids(boxes: &[(f64, f64)], k: usize, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let mut centroids = vec![boxes[rng.random_range(0..boxes.len())]];
    while centroids.len() < k {
        let weights: Vec<f64> = boxes
            .iter()
            .map(|&b| nearest(b, &centroids).1.powi(2))
            .collect();
        let total: f64 = weights.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut pick = boxes.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            if *w > 0.0 && target < *w {
                pick = i;
                break;
            }
            target -= w;
        }
        // Rounding can land on the tail; never reuse an existing centroid.
        if weights[pick] == 0.0 {
            pick = weights
                .iter()
                .rposition(|&w| w > 0.0)
                .expect("distinct boxes remain");
        }
        centroids.push(boxes[pick]);
    }
    centroids
}

pub fn kmeans_anchors_detailed(boxes: &[(f64, f64)], k: usize, seed: u64) -> Result<KMeansResult> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if boxes.iter().any(|b| !(b.0 > 0.0 && b.1 > 0.0)) {
        return Err(Error::Data("box sizes must be positive".into()));
    }
    let mut distinct: Vec<(f64, f64)> = boxes.to_vec();
    distinct.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    distinct.dedup();
    if distinct.len() < k {
        return Err(Error::Data(format!(
            "{} distinct box sizes cannot seed {k} anchors",
            distinct.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(boxes, k, &mut rng);
    let mut assignments: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    for _ in 0..MAX_ITERATIONS {
        let pass: Vec<(usize, f64)> = boxes.iter().map(|&b| nearest(b, &centroids)).collect();
        history.push(pass.iter().map(|x| x.1).sum());
        let next: Vec<usize> = pass.iter().map(|x| x.0).collect();
        if next == assignments {
            break;
        }
        assignments = next;
        let mut sums = vec![(0.0, 0.0, 0usize); k];
        for (b, &a) in boxes.iter().zip(&assignments) {
            sums[a].0 += b.0;
            sums[a].1 += b.1;
            sums[a].2 += 1;
        }
        for (ci, (c, s)) in centroids.iter_mut().zip(&sums).enumerate() {
            if s.2 == 0 {
                continue;
            }
            let mean = (s.0 / s.2 as f64, s.1 / s.2 as f64);
            // The mean does not minimise 1 - IOU; keep the old centroid when
            // moving would raise this cluster's cost.
            let cost = |centre: (f64, f64)| -> f64 {
                boxes
                    .iter()
                    .zip(&assignments)
                    .filter(|(_, &a)| a == ci)
                    .map(|(&b, _)| distance(b, centre))
                    .sum()
            };
            if cost(mean) <= cost(*c) {
                *c = mean;
            }
        }
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (centroids[a], centroids[b]);
        (x.0 * x.1).total_cmp(&(y.0 * y.1)).then(x.0.total_cmp(&y.0))
    });
    let mut rank = vec![0; k];
    for (new, &old) in order.iter().enumerate() {
        rank[old] = new;
    }
    Ok(KMeansResult {
        anchors: order.iter().map(|&i| centroids[i]).collect(),
        assignments: assignments.iter().map(|&a| rank[a]).collect(),
        distance_history: history,
    })
}

/// `k` anchor (width, height) pairs, sorted by area.
pub fn kmeans_anchors(boxes: &[(f64, f64)], k: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    Ok(kmeans_anchors_detailed(boxes, k, seed)?.anchors)
}
