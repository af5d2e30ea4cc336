//! Seeded synthetic data: random POT instances, images and point clouds.

use nalgebra::Vector3;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::problem::PotInstance;

use super::color::{normalize_max, squared_distances};
use super::ppm::PixelImage;
use super::procrustes::RigidTransform;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random `m×n` instance with positive marginals of random total mass in
/// `[0.5, 1.5]`, uniform costs rescaled to `‖C‖_∞ = 1` and a budget between
/// 10% and 90% of the smaller mass.
pub fn random_instance(rng: &mut impl Rng, m: usize, n: usize) -> Result<PotInstance> {
    let mut marginal = |k: usize| -> Array1<f64> {
        let raw = Array1::from_shape_fn(k, |_| rng.random_range(0.05..1.0));
        let mass: f64 = rng.random_range(0.5..1.5);
        &raw * (mass / raw.sum())
    };
    let r = marginal(m);
    let c = marginal(n);
    let cost = normalize_max(Array2::from_shape_fn((m, n), |_| rng.random::<f64>()));
    let frac: f64 = rng.random_range(0.1..0.9);
    let s = frac * r.sum().min(c.sum());
    PotInstance::new(r, c, cost, s)
}

/// Two random point sets in the unit square with masses `‖x‖₁ = 5` and
/// `‖y‖₁ = 3`, squared-Euclidean cost scaled to max 1 and `s = 0.2·min`.
pub fn scaling_instance(n: usize, seed: u64) -> Result<PotInstance> {
    let mut rng = rng(seed);
    let pts_a = Array2::from_shape_fn((n, 2), |_| rng.random::<f64>());
    let pts_b = Array2::from_shape_fn((n, 2), |_| rng.random::<f64>());
    let mut weights = |mass: f64| -> Array1<f64> {
        let raw = Array1::from_shape_fn(n, |_| rng.random_range(0.1..1.0));
        &raw * (mass / raw.sum())
    };
    let r = weights(5.0);
    let c = weights(3.0);
    let cost = normalize_max(squared_distances(&pts_a, &pts_b));
    PotInstance::new(r, c, cost, 0.2 * 3.0)
}

/// A smooth color-gradient image with a few blotches, parameterized by a
/// palette of four corner colors.
pub fn gradient_image(width: u32, height: u32, corners: [[f64; 3]; 4], seed: u64) -> PixelImage {
    let mut rng = rng(seed);
    let blobs: Vec<(f64, f64, f64, [f64; 3])> = (0..4)
        .map(|_| {
            (
                rng.random::<f64>(),
                rng.random::<f64>(),
                rng.random_range(0.05..0.2),
                [rng.random(), rng.random(), rng.random()],
            )
        })
        .collect();
    let (w, h) = (width as usize, height as usize);
    let mut pixels = Array2::zeros((w * h, 3));
    for y in 0..h {
        for x in 0..w {
            let (fx, fy) = (x as f64 / (w.max(2) - 1) as f64, y as f64 / (h.max(2) - 1) as f64);
            let mut row = pixels.row_mut(y * w + x);
            for ch in 0..3 {
                let top = corners[0][ch] * (1.0 - fx) + corners[1][ch] * fx;
                let bottom = corners[2][ch] * (1.0 - fx) + corners[3][ch] * fx;
                row[ch] = top * (1.0 - fy) + bottom * fy;
            }
            for &(bx, by, radius, color) in &blobs {
                let d2 = (fx - bx).powi(2) + (fy - by).powi(2);
                let a = (-d2 / (radius * radius)).exp();
                for ch in 0..3 {
                    row[ch] = (1.0 - a) * row[ch] + a * color[ch];
                }
            }
            let noise = 0.02 * rng.sample::<f64, _>(StandardNormal);
            row.mapv_inplace(|v| (v + noise).clamp(0.0, 1.0));
        }
    }
    PixelImage {
        width,
        height,
        pixels,
    }
}

/// Anisotropic Gaussian cloud with axis scales `(3, 1.5, 0.5)` plus a bent
/// "tail" so that no rotation symmetry survives.
pub fn anisotropic_cloud(n: usize, seed: u64) -> Array2<f64> {
    let mut rng = rng(seed);
    let mut pts = Array2::zeros((n, 3));
    for mut row in pts.rows_mut() {
        let x: f64 = rng.sample::<f64, _>(StandardNormal) * 1.0;
        let y: f64 = rng.sample::<f64, _>(StandardNormal) * 0.5;
        let z: f64 = rng.sample::<f64, _>(StandardNormal) * 0.2;
        row[0] = x;
        row[1] = y + 0.3 * x * x;
        row[2] = z + 0.2 * x.max(0.0).powi(2);
    }
    pts
}

/// A registration test case: `p` is the fixed cloud, `q` is a rotated and
/// translated cloud sharing `overlap` of its points with `p`.
pub struct RegistrationCase {
    pub p: Array2<f64>,
    pub q: Array2<f64>,
    /// Maps `p`-frame points to the frame of `q`.
    pub truth: RigidTransform,
    pub diameter: f64,
}

/// Builds clouds of `n` points each from a common pool of
/// `n·(2 − overlap)` points; `q`'s points are moved by a rotation of
/// `angle_deg` about a tilted axis and a translation.
pub fn registration_case(n: usize, overlap: f64, angle_deg: f64, seed: u64) -> RegistrationCase {
    let shared = (n as f64 * overlap).round() as usize;
    let pool = anisotropic_cloud(2 * n - shared, seed);
    let p = pool.slice(ndarray::s![..n, ..]).to_owned();
    let q_raw = pool.slice(ndarray::s![n - shared.., ..]).to_owned();
    let truth = RigidTransform::from_axis_angle(
        Vector3::new(0.2, 0.3, 1.0),
        angle_deg.to_radians(),
        Vector3::new(0.3, -0.2, 0.1),
    );
    let q = truth.apply(&q_raw);
    let diameter = cloud_diameter(&p);
    RegistrationCase { p, q, truth, diameter }
}

/// Largest pairwise distance.
pub fn cloud_diameter(points: &Array2<f64>) -> f64 {
    squared_distances(points, points).iter().fold(0.0f64, |m, &d| m.max(d)).sqrt()
}
