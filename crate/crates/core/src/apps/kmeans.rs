//! Seeded k-means++ / Lloyd quantization.

use ndarray::{Array1, Array2, ArrayView1};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const MAX_ROUNDS: usize = 100;
const MOVEMENT_TOL: f64 = 1e-6;

/// Centroids, their empirical weights and which centroid each input point
/// belongs to.
#[derive(Clone, Debug, PartialEq)]
pub struct ColorHistogram {
    pub centroids: Array2<f64>,
    pub weights: Array1<f64>,
    pub assignments: Vec<usize>,
}

impl ColorHistogram {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: ArrayView1<f64>, centroids: &Array2<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centroids.rows().into_iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

fn seed_centroids(points: &Array2<f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = points.nrows();
    let mut centroids = Array2::zeros((k, points.ncols()));
    centroids.row_mut(0).assign(&points.row(rng.random_range(0..n)));
    let mut d2: Vec<f64> = points.rows().into_iter().map(|p| sq_dist(p, centroids.row(0))).collect();
    for c in 1..k {
        let pick = match WeightedIndex::new(&d2) {
            Ok(dist) => dist.sample(rng),
            // Every point already coincides with a centroid.
            Err(_) => rng.random_range(0..n),
        };
        centroids.row_mut(c).assign(&points.row(pick));
        for (d, p) in d2.iter_mut().zip(points.rows()) {
            *d = d.min(sq_dist(p, centroids.row(c)));
        }
    }
    centroids
}

/// Quantizes the rows of `points` to `k` centroids.
pub fn kmeans_quantize(points: &Array2<f64>, k: usize, seed: u64) -> Result<ColorHistogram> {
    let n = points.nrows();
    if k == 0 || n < k {
        return Err(Error::EmptyInput);
    }
    let dim = points.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(points, k, &mut rng);
    let mut assignments = vec![0; n];

    for _ in 0..MAX_ROUNDS {
        for (a, p) in assignments.iter_mut().zip(points.rows()) {
            *a = nearest(p, &centroids).0;
        }
        let mut sums = Array2::<f64>::zeros((k, dim));
        let mut counts = vec![0usize; k];
        for (&a, p) in assignments.iter().zip(points.rows()) {
            sums.row_mut(a).scaled_add(1.0, &p);
            counts[a] += 1;
        }
        let mut movement = 0.0f64;
        for ((sum, &count), mut centroid) in sums.rows().into_iter().zip(&counts).zip(centroids.rows_mut()) {
            if count > 0 {
                let mean = sum.mapv(|v| v / count as f64);
                movement = movement.max(sq_dist(mean.view(), centroid.view()).sqrt());
                centroid.assign(&mean);
            }
        }
        if movement < MOVEMENT_TOL {
            break;
        }
    }
    for (a, p) in assignments.iter_mut().zip(points.rows()) {
        *a = nearest(p, &centroids).0;
    }
    let mut weights = Array1::zeros(k);
    for &a in &assignments {
        weights[a] += 1.0;
    }
    weights /= n as f64;
    Ok(ColorHistogram {
        centroids,
        weights,
        assignments,
    })
}
