//! Weighted rigid alignment from a soft correspondence.

use nalgebra::{Matrix3, Vector3};
use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::error::{Error, Result};

/// `F(y) = R·y + t` with `R` a proper rotation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Rotation by `angle` radians about `axis`.
    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64, translation: Vector3<f64>) -> Self {
        let rot = nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle);
        RigidTransform {
            rotation: *rot.matrix(),
            translation,
        }
    }

    pub fn apply_point(&self, p: ArrayView1<f64>) -> Vector3<f64> {
        self.rotation * Vector3::new(p[0], p[1], p[2]) + self.translation
    }

    /// Transforms every row of an `N×3` array.
    pub fn apply(&self, points: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(points.dim());
        for (mut dst, src) in out.rows_mut().into_iter().zip(points.rows()) {
            let q = self.apply_point(src);
            dst.assign(&Array1::from(vec![q.x, q.y, q.z]));
        }
        out
    }

    /// `self ∘ inner`: apply `inner` first.
    pub fn compose(&self, inner: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * inner.rotation,
            translation: self.rotation * inner.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Angle in degrees of the relative rotation `selfᵀ·other`.
    pub fn angle_to(&self, other: &RigidTransform) -> f64 {
        let rel = self.rotation.transpose() * other.rotation;
        ((rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos().to_degrees()
    }

    /// `‖R − I‖_F + ‖t‖`.
    pub fn distance_from_identity(&self) -> f64 {
        (self.rotation - Matrix3::identity()).norm() + self.translation.norm()
    }

    /// `max(‖RᵀR − I‖_max, |det R − 1|)`.
    pub fn orthogonality_error(&self) -> f64 {
        let g = self.rotation.transpose() * self.rotation - Matrix3::identity();
        g.abs().max().max((self.rotation.determinant() - 1.0).abs())
    }
}

fn check_cloud(points: &Array2<f64>) -> Result<()> {
    if points.ncols() != 3 {
        return Err(Error::DimensionMismatch {
            expected: (points.nrows(), 3),
            found: points.dim(),
        });
    }
    Ok(())
}

fn weighted_mean(points: &Array2<f64>, w: &Array1<f64>, total: f64) -> Vector3<f64> {
    let m = w.dot(points) / total;
    Vector3::new(m[0], m[1], m[2])
}

/// Fits `F` so that `F(y_j) ≈ x_i` wherever `π_ij` is large, minimizing
/// `Σ π_ij ‖x_i − R y_j − t‖²`.
pub fn fit_rigid(pi: &Array2<f64>, x: &Array2<f64>, y: &Array2<f64>) -> Result<RigidTransform> {
    check_cloud(x)?;
    check_cloud(y)?;
    if pi.dim() != (x.nrows(), y.nrows()) {
        return Err(Error::DimensionMismatch {
            expected: (x.nrows(), y.nrows()),
            found: pi.dim(),
        });
    }
    let total = pi.sum();
    if !(total > 0.0) {
        return Err(Error::ZeroMassPlan);
    }
    let ux = weighted_mean(x, &pi.sum_axis(Axis(1)), total);
    let uy = weighted_mean(y, &pi.sum_axis(Axis(0)), total);
    let center = |pts: &Array2<f64>, u: &Vector3<f64>| {
        let mut out = pts.clone();
        for mut row in out.rows_mut() {
            for k in 0..3 {
                row[k] -= u[k];
            }
        }
        out
    };
    let xc = center(x, &ux);
    let yc = center(y, &uy);
    // H = Ŷᵀ πᵀ X̂ = Σ π_ij ŷ_j x̂_iᵀ
    let h = yc.t().dot(&pi.t().dot(&xc));
    let h = Matrix3::from_fn(|i, j| h[[i, j]]);

    let svd = h.svd(true, true);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    if !(sv[0] > 0.0) || sv[1] <= 1e-12 * sv[0] {
        return Err(Error::DegenerateSvd);
    }
    let u = svd.u.ok_or(Error::DegenerateSvd)?;
    let v = svd.v_t.ok_or(Error::DegenerateSvd)?.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let rotation = v * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * u.transpose();
    let translation = ux - rotation * uy;
    Ok(RigidTransform { rotation, translation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(n: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, 3), |(_, k)| rng.random::<f64>() * (k + 1) as f64)
    }

    #[test]
    fn identity_alignment() {
        let x = cloud(10, 1);
        let pi = Array2::from_diag(&Array1::from_elem(10, 0.1));
        let f = fit_rigid(&pi, &x, &x).unwrap();
        assert!((f.rotation - Matrix3::identity()).abs().max() < 1e-10);
        assert!(f.translation.norm() < 1e-10);
    }

    #[test]
    fn recovers_known_transform() {
        let x = cloud(25, 2);
        let truth = RigidTransform::from_axis_angle(Vector3::new(0.3, -1.0, 0.5), 0.7, Vector3::new(1.0, -2.0, 0.5));
        let y = truth.inverse().apply(&x);
        let pi = Array2::from_diag(&Array1::from_elem(25, 1.0 / 25.0));
        let f = fit_rigid(&pi, &x, &y).unwrap();
        assert!((f.rotation - truth.rotation).abs().max() < 1e-8);
        assert!((f.translation - truth.translation).abs().max() < 1e-8);
    }

    #[test]
    fn reflection_is_corrected() {
        // y is a mirror image of x, so the unconstrained optimum is a reflection.
        let x = cloud(12, 3);
        let mut y = x.clone();
        y.column_mut(2).mapv_inplace(|v| -v);
        let pi = Array2::from_diag(&Array1::from_elem(12, 1.0));
        let f = fit_rigid(&pi, &x, &y).unwrap();
        assert!((f.rotation.determinant() - 1.0).abs() < 1e-9);
        assert!(f.orthogonality_error() < 1e-9);
    }

    #[test]
    fn degenerate_inputs() {
        let x = cloud(4, 4);
        assert!(matches!(fit_rigid(&Array2::zeros((4, 4)), &x, &x), Err(Error::ZeroMassPlan)));
        let line = array![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]];
        let pi = Array2::from_diag(&Array1::from_elem(3, 1.0));
        assert!(matches!(fit_rigid(&pi, &line, &line), Err(Error::DegenerateSvd)));
    }

    #[test]
    fn compose_and_inverse() {
        let a = RigidTransform::from_axis_angle(Vector3::z(), 0.4, Vector3::new(1.0, 0.0, 0.0));
        let id = a.compose(&a.inverse());
        assert!(id.distance_from_identity() < 1e-12);
        assert!((a.angle_to(&RigidTransform::identity()) - 0.4f64.to_degrees()).abs() < 1e-9);
    }
}
