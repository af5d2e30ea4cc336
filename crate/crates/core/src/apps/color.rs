//! Color transfer between two quantized images via POT.

use ndarray::{Array1, Array2, Axis};

use crate::config::SolverConfig;
use crate::error::{accept_partial, Error, Result};
use crate::problem::PotInstance;
use crate::solvers::{solve, SolveOutcome, SolverKind};

use super::kmeans::ColorHistogram;

/// Pairwise squared distances between the rows of `a` and `b`.
pub fn squared_distances(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    Array2::from_shape_fn((a.nrows(), b.nrows()), |(i, j)| {
        a.row(i).iter().zip(b.row(j)).map(|(x, y)| (x - y) * (x - y)).sum()
    })
}

/// Divides by the largest entry, leaving an all-zero matrix untouched.
pub fn normalize_max(mut c: Array2<f64>) -> Array2<f64> {
    let max = c.iter().fold(0.0f64, |m, &x| m.max(x));
    if max > 0.0 {
        c /= max;
    }
    c
}

/// POT instance between two histograms: weights scaled by the larger total
/// mass, squared color distance scaled to max 1, budget `s_frac·min mass`.
pub fn color_transfer_instance(source: &ColorHistogram, target: &ColorHistogram, s_frac: f64) -> Result<PotInstance> {
    if source.is_empty() || target.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(0.0..=1.0).contains(&s_frac) {
        return Err(Error::InvalidConfig("s_frac must lie in [0, 1]"));
    }
    let scale = source.weights.sum().max(target.weights.sum());
    let r = &source.weights / scale;
    let c = &target.weights / scale;
    let s = s_frac * r.sum().min(c.sum());
    let cost = normalize_max(squared_distances(&source.centroids, &target.centroids));
    PotInstance::new(r, c, cost, s)
}

/// `â_i = Σ_j X_ij b_j / Σ_j X_ij`; rows that carry no mass keep their
/// source color.
pub fn barycentric_projection(x: &Array2<f64>, source: &Array2<f64>, target: &Array2<f64>) -> Array2<f64> {
    let mut out = source.clone();
    let mass = x.sum_axis(Axis(1));
    let moved = x.dot(target);
    for (i, &m) in mass.iter().enumerate() {
        if m > 0.0 {
            out.row_mut(i).assign(&(&moved.row(i) / m));
        }
    }
    out
}

/// Replaces every pixel by its centroid's new color.
pub fn recolor_pixels(hist: &ColorHistogram, recolored: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros((hist.assignments.len(), recolored.ncols()));
    for (mut row, &a) in out.rows_mut().into_iter().zip(&hist.assignments) {
        row.assign(&recolored.row(a));
    }
    out
}

#[derive(Clone, Debug)]
pub struct ColorTransferResult {
    pub recolored: Array2<f64>,
    pub outcome: SolveOutcome,
}

/// Solves the color POT problem and projects each source centroid. A run
/// that stops at `config.max_iterations` is still used; its outcome has
/// `converged = false`.
pub fn color_transfer(
    source: &ColorHistogram,
    target: &ColorHistogram,
    s_frac: f64,
    solver: SolverKind,
    config: &SolverConfig,
) -> Result<ColorTransferResult> {
    let instance = color_transfer_instance(source, target, s_frac)?;
    let outcome = accept_partial(solve(solver, &instance, config))?;
    let recolored = barycentric_projection(outcome.plan.matrix(), &source.centroids, &target.centroids);
    Ok(ColorTransferResult { recolored, outcome })
}

/// Uniform weights for a set of centroids, handy when no pixel data exists.
pub fn uniform_histogram(centroids: Array2<f64>) -> ColorHistogram {
    let k = centroids.nrows();
    ColorHistogram {
        centroids,
        weights: Array1::from_elem(k, 1.0 / k as f64),
        assignments: (0..k).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn symmetric_row_projects_to_midpoint() {
        let x = array![[0.2, 0.2]];
        let target = array![[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]];
        let out = barycentric_projection(&x, &array![[0.3, 0.3, 0.3]], &target);
        assert_eq!(out, array![[0.5, 0.5, 0.5]]);
    }

    #[test]
    fn empty_row_keeps_source_color() {
        let x = array![[0.0, 0.0], [0.1, 0.0]];
        let src = array![[0.9, 0.1, 0.2], [0.5, 0.5, 0.5]];
        let target = array![[0.0, 1.0, 0.0], [1.0, 1.0, 1.0]];
        let out = barycentric_projection(&x, &src, &target);
        assert_eq!(out.row(0), src.row(0));
        assert_eq!(out.row(1), target.row(0));
    }

    #[test]
    fn self_transfer_keeps_colors() {
        let cents = array![[0.1, 0.2, 0.3], [0.9, 0.1, 0.1], [0.2, 0.8, 0.4], [0.5, 0.5, 0.9]];
        let h = uniform_histogram(cents.clone());
        let config = SolverConfig::with_epsilon(0.01);
        let res = color_transfer(&h, &h, 0.5, SolverKind::Aspot, &config).unwrap();
        let x = res.outcome.plan.matrix();
        let off: f64 = x.indexed_iter().filter(|((i, j), _)| i != j).map(|(_, v)| v).sum();
        assert!(off < 0.02 * x.sum(), "off-diagonal mass {off}");
        for i in 0..4 {
            if x.row(i).sum() > 0.0 {
                for k in 0..3 {
                    assert!((res.recolored[[i, k]] - cents[[i, k]]).abs() < 0.1);
                }
            }
        }
    }

    #[test]
    fn instance_normalization() {
        let a = uniform_histogram(array![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
        let b = uniform_histogram(array![[0.0, 0.5, 0.0]]);
        let inst = color_transfer_instance(&a, &b, 0.2, ).unwrap();
        assert_eq!(inst.max_cost(), 1.0);
        assert!((inst.budget() - 0.2).abs() < 1e-15);
    }
}
