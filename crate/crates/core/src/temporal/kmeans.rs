//! Seeded k-means on 2-D points with distance-weighted initialization and
//! restarts. Used to cluster mixture-component centers across dates.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::seed;

#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub centroids: Vec<[f64; 2]>,
    pub assignments: Vec<usize>,
    /// Sum of squared Euclidean distances to assigned centroids.
    pub inertia: f64,
    /// Inertia after each Lloyd iteration of the winning restart.
    pub inertia_trace: Vec<f64>,
}

fn sq_dist(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

fn init_centroids(points: &[[f64; 2]], k: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    let n = points.len();
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..n)]);
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                u -= w;
                if u <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.push(points[pick]);
        let last = *centroids.last().expect("just pushed");
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &last));
        }
    }
    centroids
}

fn lloyd(points: &[[f64; 2]], mut centroids: Vec<[f64; 2]>, max_iter: usize) -> KMeansFit {
    let n = points.len();
    let k = centroids.len();
    let mut assignments = vec![0usize; n];
    let mut trace = Vec::new();

    for _ in 0..max_iter {
        let mut changed = false;
        let mut inertia = 0.0;
        for (i, p) in points.iter().enumerate() {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let d = sq_dist(p, centroid);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if assignments[i] != best {
                assignments[i] = best;
                changed = true;
            }
            inertia += best_d;
        }
        trace.push(inertia);

        let mut sums = vec![[0.0f64; 2]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            let c = assignments[i];
            sums[c][0] += p[0];
            sums[c][1] += p[1];
            counts[c] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = [sums[c][0] / counts[c] as f64, sums[c][1] / counts[c] as f64];
            } else {
                // Empty cluster: move its centroid to the point farthest
                // from its current position (deterministic).
                let cur = centroids[c];
                let far = points
                    .iter()
                    .enumerate()
                    .max_by(|(_, a), (_, b)| {
                        sq_dist(a, &cur).partial_cmp(&sq_dist(b, &cur)).expect("finite")
                    })
                    .map(|(i, _)| i)
                    .expect("nonempty points");
                centroids[c] = points[far];
            }
        }
        if !changed && trace.len() > 1 {
            break;
        }
    }

    // Final assignment pass against the last centroids.
    let mut inertia = 0.0;
    for (i, p) in points.iter().enumerate() {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (c, centroid) in centroids.iter().enumerate() {
            let d = sq_dist(p, centroid);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        assignments[i] = best;
        inertia += best_d;
    }
    trace.push(inertia);

    KMeansFit {
        centroids,
        assignments,
        inertia,
        inertia_trace: trace,
    }
}

/// K-means with `restarts` distance-weighted seeded initializations; the
/// restart with the lowest inertia wins. Requires `1 <= k <= points.len()`.
pub fn kmeans(points: &[[f64; 2]], k: usize, restarts: usize, seed_base: u64) -> KMeansFit {
    assert!(k >= 1 && k <= points.len(), "k must be in 1..=n");
    let max_iter = 200;
    let mut best: Option<KMeansFit> = None;
    for r in 0..restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed::mix(seed_base, r as u64));
        let fit = lloyd(points, init_centroids(points, k, &mut rng), max_iter);
        let better = match &best {
            Some(b) => fit.inertia < b.inertia,
            None => true,
        };
        if better {
            best = Some(fit);
        }
    }
    best.expect("at least one restart")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_obvious_clusters() {
        let mut points = Vec::new();
        for i in 0..10 {
            points.push([0.001 * i as f64, 0.0]);
            points.push([1.0 + 0.001 * i as f64, 1.0]);
        }
        let fit = kmeans(&points, 2, 5, 11);
        // Points alternate between the two clusters by construction.
        let first = fit.assignments[0];
        for (i, &a) in fit.assignments.iter().enumerate() {
            if i % 2 == 0 {
                assert_eq!(a, first);
            } else {
                assert_ne!(a, first);
            }
        }
        assert!(fit.inertia < 1e-3);
    }

    #[test]
    fn objective_is_non_increasing() {
        let points: Vec<[f64; 2]> = (0..50)
            .map(|i| {
                let t = i as f64;
                [(t * 0.7).sin(), (t * 1.3).cos()]
            })
            .collect();
        let fit = kmeans(&points, 4, 3, 5);
        for w in fit.inertia_trace.windows(2) {
            assert!(
                w[1] <= w[0] + 1e-9,
                "inertia increased: {} -> {}",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let points: Vec<[f64; 2]> = (0..30).map(|i| [(i as f64).sin(), (i as f64).cos()]).collect();
        let a = kmeans(&points, 3, 4, 9);
        let b = kmeans(&points, 3, 4, 9);
        assert_eq!(a.centroids, b.centroids);
        assert_eq!(a.assignments, b.assignments);
    }
}
