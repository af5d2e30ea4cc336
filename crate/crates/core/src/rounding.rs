//! Rounding approximate plans onto exact feasible sets.

use ndarray::{Array1, Array2, Axis};

use crate::dual::column_sums;
use crate::error::{Error, Result};
use crate::problem::{PotInstance, TransportPlan};

/// Rounds `x` onto the balanced transport polytope `U(r, c)`: clip rows to
/// `r`, clip columns to `c`, then spread the leftover mass as a rank-one
/// term `err_r·err_cᵀ/‖err_r‖₁`.
pub fn round_balanced(x: &Array2<f64>, r: &Array1<f64>, c: &Array1<f64>) -> Result<Array2<f64>> {
    if x.dim() != (r.len(), c.len()) {
        return Err(Error::DimensionMismatch {
            expected: (r.len(), c.len()),
            found: x.dim(),
        });
    }
    let (mr, mc) = (r.sum(), c.sum());
    if (mr - mc).abs() > 1e-12 * mr.max(1.0) {
        return Err(Error::UnbalancedMarginals(mr, mc));
    }
    let mut out = x.mapv(|v| v.max(0.0));
    clip_rows(&mut out, r);
    clip_cols(&mut out, c);

    let err_r = (r - &out.sum_axis(Axis(1))).mapv(|v| v.max(0.0));
    let err_c = (c - &column_sums(&out)).mapv(|v| v.max(0.0));
    let norm = err_r.sum();
    if norm > 0.0 {
        for (i, mut row) in out.rows_mut().into_iter().enumerate() {
            let a = err_r[i] / norm;
            if a > 0.0 {
                row.scaled_add(a, &err_c);
            }
        }
    }
    Ok(out)
}

/// Rounds `x` onto `U(r, c, s)`:
///
/// 1. scale the whole matrix down so its mass is at most `s`;
/// 2. clip each row to `r_i`;
/// 3. clip each column to `c_j`;
/// 4. fill the deficit `Δ = s − ‖X‖₁` with `Δ·(a/‖a‖₁)(b/‖b‖₁)ᵀ` where
///    `a = r − X1`, `b = c − Xᵀ1`.
///
/// Steps 1–3 only remove mass, and `‖a‖₁ ≥ Δ`, `‖b‖₁ ≥ Δ` because
/// `s ≤ min(‖r‖₁, ‖c‖₁)`, so the fill never breaks the caps.
pub fn round_pot(x: &Array2<f64>, instance: &PotInstance) -> Result<TransportPlan> {
    let expected = (instance.rows(), instance.cols());
    if x.dim() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: x.dim(),
        });
    }
    let s = instance.budget();
    let mut out = x.mapv(|v| if v.is_finite() { v.max(0.0) } else { 0.0 });

    let mass = out.sum();
    if mass > s {
        out *= s / mass;
    }
    clip_rows(&mut out, instance.r());
    clip_cols(&mut out, instance.c());

    let deficit = s - out.sum();
    if deficit > 0.0 {
        let a = (instance.r() - &out.sum_axis(Axis(1))).mapv(|v| v.max(0.0));
        let b = (instance.c() - &column_sums(&out)).mapv(|v| v.max(0.0));
        let (na, nb) = (a.sum(), b.sum());
        if na > 0.0 && nb > 0.0 {
            let scale = deficit / (na * nb);
            for (i, mut row) in out.rows_mut().into_iter().enumerate() {
                let ai = a[i] * scale;
                if ai > 0.0 {
                    row.scaled_add(ai, &b);
                }
            }
        }
    }
    TransportPlan::new(out, instance)
}

fn clip_rows(x: &mut Array2<f64>, r: &Array1<f64>) {
    for (mut row, &cap) in x.rows_mut().into_iter().zip(r) {
        let sum = row.sum();
        if sum > cap && sum > 0.0 {
            row *= cap / sum;
        }
    }
}

fn clip_cols(x: &mut Array2<f64>, c: &Array1<f64>) {
    let sums = column_sums(x);
    let factors: Vec<f64> = sums
        .iter()
        .zip(c)
        .map(|(&sum, &cap)| if sum > cap && sum > 0.0 { cap / sum } else { 1.0 })
        .collect();
    if factors.iter().all(|&f| f == 1.0) {
        return;
    }
    for mut row in x.rows_mut() {
        for (v, f) in row.iter_mut().zip(&factors) {
            *v *= f;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::plan_feasibility_gap;
    use ndarray::array;

    fn max_abs(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
        (a - b).iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    #[test]
    fn balanced_keeps_feasible_input() {
        let x = array![[0.1, 0.2], [0.3, 0.1]];
        let r = x.sum_axis(Axis(1));
        let c = x.sum_axis(Axis(0));
        let out = round_balanced(&x, &r, &c).unwrap();
        assert!(max_abs(&out, &x) < 1e-16);
    }

    #[test]
    fn balanced_scalar_example() {
        let out = round_balanced(&array![[1.0]], &array![0.5], &array![0.5]).unwrap();
        assert_eq!(out, array![[0.5]]);
    }

    #[test]
    fn balanced_rejects_unequal_masses() {
        assert!(matches!(
            round_balanced(&array![[1.0]], &array![0.5], &array![0.6]),
            Err(Error::UnbalancedMarginals(..))
        ));
    }

    #[test]
    fn pot_examples() {
        let inst = PotInstance::new(array![1.0], array![1.0], array![[0.0]], 0.5).unwrap();
        let out = round_pot(&array![[2.0]], &inst).unwrap();
        assert_eq!(out.matrix(), &array![[0.5]]);

        let feasible = array![[0.5]];
        assert_eq!(round_pot(&feasible, &inst).unwrap().matrix(), &feasible);

        let inst = PotInstance::new(array![0.6, 0.4], array![0.5, 0.5], Array2::zeros((2, 2)), 0.5)
            .unwrap();
        let out = round_pot(&Array2::zeros((2, 2)), &inst).unwrap();
        let expected = array![[0.15, 0.15], [0.1, 0.1]];
        assert!(max_abs(out.matrix(), &expected) < 1e-15);
        assert!(plan_feasibility_gap(&out, &inst).unwrap() < 1e-15);
    }

    #[test]
    fn pot_handles_zero_rows() {
        let inst = PotInstance::new(
            array![0.0, 0.6],
            array![0.3, 0.3],
            array![[1.0, 1.0], [0.0, 1.0]],
            0.4,
        )
        .unwrap();
        let out = round_pot(&array![[0.3, 0.0], [0.0, 0.0]], &inst).unwrap();
        assert!(plan_feasibility_gap(&out, &inst).unwrap() < 1e-15);
        assert_eq!(out.matrix().row(0).sum(), 0.0);
    }
}
