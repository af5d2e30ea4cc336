//! The entropic POT dual
//!
//! ```text
//! φ(z) = ‖B(z)‖₁ + Σ exp(u_i) + Σ exp(v_j) − ⟨u, r⟩ − ⟨v, c⟩ − w·s
//! B_ij(z) = exp(−C_ij/γ + u_i + v_j + w)
//! ```
//!
//! The kernel is kept in log form; exponentials are taken only after the
//! potentials are added, so tiny `γ` does not flush whole rows to zero.

use ndarray::{Array1, Array2, Axis, Zip};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::problem::PotInstance;

/// Largest exponent accepted before a value is reported as overflow.
pub const MAX_EXPONENT: f64 = 700.0;

/// Dual potentials `z = (u, v, w)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualPoint {
    pub u: Array1<f64>,
    pub v: Array1<f64>,
    pub w: f64,
}

impl DualPoint {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DualPoint {
            u: Array1::zeros(rows),
            v: Array1::zeros(cols),
            w: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.w.is_finite() && self.u.iter().chain(&self.v).all(|x| x.is_finite())
    }

    /// `a·self + b·other`.
    pub fn lincomb(&self, a: f64, other: &DualPoint, b: f64) -> DualPoint {
        DualPoint {
            u: &self.u * a + &other.u * b,
            v: &self.v * a + &other.v * b,
            w: a * self.w + b * other.w,
        }
    }

    /// `self + scale·dir`.
    pub fn step(&self, scale: f64, dir: &DualPoint) -> DualPoint {
        self.lincomb(1.0, dir, scale)
    }

    pub fn l1_norm(&self) -> f64 {
        l1(&self.u) + l1(&self.v) + self.w.abs()
    }

    pub fn max_abs_diff(&self, other: &DualPoint) -> f64 {
        let du = self.u.iter().zip(&other.u).map(|(a, b)| (a - b).abs());
        let dv = self.v.iter().zip(&other.v).map(|(a, b)| (a - b).abs());
        du.chain(dv).fold((self.w - other.w).abs(), f64::max)
    }
}

pub(crate) fn l1(x: &Array1<f64>) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

/// An instance paired with a regularization strength and the log kernel
/// `−C/γ`.
#[derive(Clone, Debug)]
pub struct EntropicContext {
    instance: PotInstance,
    gamma: f64,
    log_kernel: Array2<f64>,
    parallel: bool,
}

impl EntropicContext {
    pub fn new(instance: PotInstance, gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidConfig("gamma must be positive"));
        }
        let log_kernel = instance.cost().mapv(|c| -c / gamma);
        Ok(EntropicContext {
            instance,
            gamma,
            log_kernel,
            parallel: false,
        })
    }

    /// Allows row-parallel matrix evaluation. Rows are independent, so the
    /// numbers produced are the same either way.
    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn instance(&self) -> &PotInstance {
        &self.instance
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn log_kernel(&self) -> &Array2<f64> {
        &self.log_kernel
    }

    fn check_dims(&self, z: &DualPoint) -> Result<()> {
        let expected = (self.instance.rows(), self.instance.cols());
        let found = (z.u.len(), z.v.len());
        if expected != found {
            return Err(Error::DimensionMismatch { expected, found });
        }
        Ok(())
    }

    /// Computes `B(z)` and the sums every dual quantity is built from.
    pub fn evaluate(&self, z: &DualPoint) -> Result<Evaluation> {
        self.check_dims(z)?;
        if !z.is_finite() {
            return Err(Error::NonFiniteDual);
        }
        let exp_u = exp_checked(&z.u)?;
        let exp_v = exp_checked(&z.v)?;

        let (m, n) = self.log_kernel.dim();
        let mut b = Array2::<f64>::zeros((m, n));
        let mut row_sums = Array1::<f64>::zeros(m);
        let v = z.v.as_slice().expect("owned vectors are contiguous");

        let lk = &self.log_kernel;
        if self.parallel {
            b.axis_iter_mut(Axis(0))
                .into_par_iter()
                .zip(row_sums.as_slice_mut().expect("contiguous").par_iter_mut())
                .enumerate()
                .try_for_each(|(i, (mut out, rs))| {
                    let lk_row = lk.row(i);
                    *rs = fill_row(
                        z.u[i] + z.w,
                        lk_row.as_slice().expect("standard layout"),
                        v,
                        out.as_slice_mut().expect("standard layout"),
                    )?;
                    Ok::<(), Error>(())
                })?;
        } else {
            for (i, (mut out, rs)) in b.axis_iter_mut(Axis(0)).zip(row_sums.iter_mut()).enumerate() {
                let lk_row = lk.row(i);
                *rs = fill_row(
                    z.u[i] + z.w,
                    lk_row.as_slice().expect("standard layout"),
                    v,
                    out.as_slice_mut().expect("standard layout"),
                )?;
            }
        }

        let col_sums = column_sums(&b);
        let mass = row_sums.sum();
        Ok(Evaluation {
            point: z.clone(),
            b,
            row_sums,
            col_sums,
            mass,
            exp_u,
            exp_v,
        })
    }
}

/// Writes `exp(lk_j + shift + v_j)` into `out` and returns the row sum.
fn fill_row(shift: f64, lk: &[f64], v: &[f64], out: &mut [f64]) -> Result<f64> {
    let mut sum = 0.0;
    let mut worst = f64::NEG_INFINITY;
    for ((o, &l), &vj) in out.iter_mut().zip(lk).zip(v) {
        let e = l + shift + vj;
        worst = worst.max(e);
        let x = e.exp();
        *o = x;
        sum += x;
    }
    if worst > MAX_EXPONENT {
        return Err(Error::Overflow { exponent: worst });
    }
    Ok(sum)
}

fn exp_checked(x: &Array1<f64>) -> Result<Array1<f64>> {
    if let Some(&worst) = x.iter().find(|&&e| e > MAX_EXPONENT) {
        return Err(Error::Overflow { exponent: worst });
    }
    Ok(x.mapv(f64::exp))
}

pub(crate) fn column_sums(b: &Array2<f64>) -> Array1<f64> {
    let mut cols = Array1::<f64>::zeros(b.ncols());
    let acc = cols.as_slice_mut().expect("contiguous");
    for row in b.rows() {
        for (a, &x) in acc.iter_mut().zip(row.as_slice().expect("standard layout")) {
            *a += x;
        }
    }
    cols
}

/// `B(z)` with its row sums, column sums and total mass at a dual point.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub(crate) point: DualPoint,
    pub(crate) b: Array2<f64>,
    pub(crate) row_sums: Array1<f64>,
    pub(crate) col_sums: Array1<f64>,
    pub(crate) mass: f64,
    pub(crate) exp_u: Array1<f64>,
    pub(crate) exp_v: Array1<f64>,
}

impl Evaluation {
    pub fn point(&self) -> &DualPoint {
        &self.point
    }

    pub fn b(&self) -> &Array2<f64> {
        &self.b
    }

    pub fn into_b(self) -> Array2<f64> {
        self.b
    }

    pub fn row_sums(&self) -> &Array1<f64> {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &Array1<f64> {
        &self.col_sums
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// `(B1)_i + e^{u_i}`, the row marginal the u-block is matched against.
    pub fn row_marginal(&self) -> Array1<f64> {
        &self.row_sums + &self.exp_u
    }

    pub fn col_marginal(&self) -> Array1<f64> {
        &self.col_sums + &self.exp_v
    }

    pub fn phi(&self, instance: &PotInstance) -> f64 {
        let z = &self.point;
        self.mass + self.exp_u.sum() + self.exp_v.sum()
            - z.u.dot(instance.r())
            - z.v.dot(instance.c())
            - z.w * instance.budget()
    }

    pub fn gradient(&self, instance: &PotInstance) -> DualPoint {
        let mut u = self.row_marginal();
        u -= instance.r();
        let mut v = self.col_marginal();
        v -= instance.c();
        DualPoint {
            u,
            v,
            w: self.mass - instance.budget(),
        }
    }

    /// `E = |1ᵀB1 − s| + ‖B1 + e^u − r‖₁ + ‖Bᵀ1 + e^v − c‖₁`, evaluated as
    /// the ℓ₁ norm of the gradient.
    pub fn feasibility_error(&self, instance: &PotInstance) -> f64 {
        gradient_l1(&self.gradient(instance))
    }
}

/// `‖∇_u‖₁ + ‖∇_v‖₁ + |∇_w|`.
pub fn gradient_l1(g: &DualPoint) -> f64 {
    l1(&g.u) + l1(&g.v) + g.w.abs()
}

pub fn b_matrix(ctx: &EntropicContext, z: &DualPoint) -> Result<Array2<f64>> {
    Ok(ctx.evaluate(z)?.into_b())
}

pub fn dual_objective(ctx: &EntropicContext, z: &DualPoint) -> Result<f64> {
    Ok(ctx.evaluate(z)?.phi(ctx.instance()))
}

pub fn dual_gradient(ctx: &EntropicContext, z: &DualPoint) -> Result<DualPoint> {
    Ok(ctx.evaluate(z)?.gradient(ctx.instance()))
}

pub fn feasibility_error(ctx: &EntropicContext, z: &DualPoint) -> Result<f64> {
    Ok(ctx.evaluate(z)?.feasibility_error(ctx.instance()))
}

/// `ρ(a, b) = b − a + a·log(a/b)` for positive `a`, `b`.
pub fn rho(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::NonPositiveArgument(a, b));
    }
    Ok(rho_unchecked(a, b))
}

#[inline]
pub(crate) fn rho_unchecked(a: f64, b: f64) -> f64 {
    b - a + a * (a / b).ln()
}

/// `Σ_i ρ(a_i, b_i)`.
pub(crate) fn rho_sum(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    Zip::from(a).and(b).fold(0.0, |acc, &x, &y| acc + rho_unchecked(x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn unit_ctx(gamma: f64, cost: f64) -> EntropicContext {
        let inst = PotInstance::new(array![1.0], array![1.0], array![[cost]], 0.5).unwrap();
        EntropicContext::new(inst, gamma).unwrap()
    }

    #[test]
    fn b_matrix_examples() {
        let ctx = unit_ctx(1.0, 0.0);
        let b = b_matrix(&ctx, &DualPoint::zeros(1, 1)).unwrap();
        assert_eq!(b[[0, 0]], 1.0);

        let z = DualPoint { u: array![2f64.ln()], v: array![0.0], w: 3f64.ln() };
        let b = b_matrix(&ctx, &z).unwrap();
        assert!((b[[0, 0]] - 6.0).abs() < 1e-14);

        for gamma in [0.01, 1.0, 7.5] {
            let ctx = unit_ctx(gamma, gamma * 4f64.ln());
            let b = b_matrix(&ctx, &DualPoint::zeros(1, 1)).unwrap();
            assert!((b[[0, 0]] - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn b_matrix_reports_overflow() {
        let ctx = unit_ctx(1.0, 0.0);
        let z = DualPoint { u: array![400.0], v: array![400.0], w: 0.0 };
        assert!(matches!(b_matrix(&ctx, &z), Err(Error::Overflow { .. })));
        let z = DualPoint { u: array![800.0], v: array![-800.0], w: 0.0 };
        assert!(matches!(b_matrix(&ctx, &z), Err(Error::Overflow { .. })));
    }

    #[test]
    fn log_kernel_survives_tiny_gamma() {
        // exp(−1/1e-4) underflows, but the shifted exponent does not.
        let ctx = unit_ctx(1e-4, 1.0);
        let z = DualPoint { u: array![0.0], v: array![0.0], w: 1e4 - 1.0 };
        let b = b_matrix(&ctx, &z).unwrap();
        assert!((b[[0, 0]] - (-1f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let ctx = unit_ctx(1.0, 0.0);
        assert!(matches!(
            dual_objective(&ctx, &DualPoint::zeros(2, 1)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn objective_examples() {
        let ctx = unit_ctx(1.0, 0.0);
        assert!((dual_objective(&ctx, &DualPoint::zeros(1, 1)).unwrap() - 3.0).abs() < 1e-15);

        let inst =
            PotInstance::new(array![0.7, 0.1], array![0.2, 0.3], Array2::zeros((2, 2)), 0.2).unwrap();
        let ctx = EntropicContext::new(inst, 1.0).unwrap();
        assert_eq!(dual_objective(&ctx, &DualPoint::zeros(2, 2)).unwrap(), 8.0);
    }

    #[test]
    fn gradient_and_error_examples() {
        let ctx = unit_ctx(1.0, 0.0);
        let g = dual_gradient(&ctx, &DualPoint::zeros(1, 1)).unwrap();
        assert_eq!(g.u[0], 1.0);
        assert_eq!(g.v[0], 1.0);
        assert_eq!(g.w, 0.5);
        assert_eq!(feasibility_error(&ctx, &DualPoint::zeros(1, 1)).unwrap(), 2.5);
    }

    #[test]
    fn error_vanishes_at_stationary_point() {
        // B = 0.5, e^u = e^v = 0.5 solves all three equations with r = c = 1, s = 0.5.
        let ctx = unit_ctx(1.0, 0.0);
        let half = 0.5f64.ln();
        let z = DualPoint { u: array![half], v: array![half], w: -half };
        assert!(feasibility_error(&ctx, &z).unwrap() < 1e-15);
    }

    #[test]
    fn rho_examples() {
        assert_eq!(rho(1.0, 1.0).unwrap(), 0.0);
        assert!((rho(1.0, std::f64::consts::E).unwrap() - 0.718_281_828_459_045).abs() < 1e-14);
        assert!((rho(2.0, 1.0).unwrap() - 0.386_294_361_119_890_6).abs() < 1e-14);
        assert!(matches!(rho(0.0, 1.0), Err(Error::NonPositiveArgument(..))));
        assert!(matches!(rho(1.0, -2.0), Err(Error::NonPositiveArgument(..))));
    }

    #[test]
    fn parallel_evaluation_matches_serial() {
        let cost = Array2::from_shape_fn((7, 5), |(i, j)| ((i * 3 + j) % 4) as f64 * 0.25);
        let inst = PotInstance::new(Array1::from_elem(7, 0.1), Array1::from_elem(5, 0.14), cost, 0.3)
            .unwrap();
        let z = DualPoint {
            u: Array1::linspace(-1.0, 0.5, 7),
            v: Array1::linspace(0.2, -0.4, 5),
            w: 0.1,
        };
        let serial = EntropicContext::new(inst.clone(), 0.05).unwrap().evaluate(&z).unwrap();
        let par = EntropicContext::new(inst, 0.05)
            .unwrap()
            .with_parallel(true)
            .evaluate(&z)
            .unwrap();
        assert_eq!(serial.b, par.b);
        assert_eq!(serial.row_sums, par.row_sums);
    }
}
