use ndarray::Array1;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::PotInstance;

/// Momentum weight update `θ' = θ(√(θ² + 4) − θ)/2`, the positive root of
/// `θ'² = θ²(1 − θ')`.
pub fn theta_next(theta: f64) -> f64 {
    debug_assert!(theta > 0.0 && theta <= 1.0);
    theta * ((theta * theta + 4.0).sqrt() - theta) / 2.0
}

/// Shannon entropy `−Σ x_i log x_i` with `0·log 0 = 0`.
pub fn entropy(x: &Array1<f64>) -> f64 {
    -x.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>()
}

/// Constants of the ASPOT iteration bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TheoryBounds {
    /// Radius bound on the optimal dual point.
    #[serde(rename = "R")]
    pub radius: f64,
    /// Smoothness constant `‖A‖²_{1→2}/μ_f` with `‖A‖²_{1→2} = 3`.
    #[serde(rename = "L")]
    pub lipschitz: f64,
    pub mu_f: f64,
    /// `1 + (12√(14nL)·R/ε')^{2/3}`.
    pub iteration_bound: f64,
}

/// Squared `1→2` norm of the POT constraint matrix: each plan column has
/// unit entries in one row constraint, one column constraint and the mass row.
pub const CONSTRAINT_NORM_SQ: f64 = 3.0;

pub fn theory_bounds(instance: &PotInstance, gamma: f64, eps_prime: f64) -> Result<TheoryBounds> {
    if !(gamma > 0.0 && eps_prime > 0.0) {
        return Err(Error::InvalidConfig("gamma and eps' must be positive"));
    }
    let (rm, cm, s) = (instance.r_mass(), instance.c_mass(), instance.budget());
    let max_mass = rm.max(cm);
    if max_mass - s <= 0.0 {
        return Err(Error::DegenerateInstance("max marginal mass equals the budget"));
    }
    let min_entry = instance
        .r()
        .iter()
        .chain(instance.c())
        .copied()
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !min_entry.is_finite() {
        return Err(Error::DegenerateInstance("marginals have no positive entry"));
    }
    let radius = instance.max_cost() * max_mass / (gamma * (max_mass - s)) - min_entry.ln();
    let mu_f = gamma / (rm + cm - s);
    let lipschitz = CONSTRAINT_NORM_SQ / mu_f;
    let n = instance.support_size() as f64;
    let iteration_bound = 1.0 + (12.0 * (14.0 * n * lipschitz).sqrt() * radius / eps_prime).powf(2.0 / 3.0);
    Ok(TheoryBounds {
        radius,
        lipschitz,
        mu_f,
        iteration_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn theta_from_one() {
        let expected = (5f64.sqrt() - 1.0) / 2.0;
        assert!((theta_next(1.0) - expected).abs() < 1e-15);
        assert!((theta_next(1.0) - 0.618_033_988_7).abs() < 1e-10);
    }

    #[test]
    fn theta_ratio_identity() {
        for theta in [1.0, 0.5, 0.1] {
            let next = theta_next(theta);
            assert!((next / theta - (1.0 - next).sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn theta_decay_bound() {
        let mut theta = 1.0;
        for t in 0..=10_000usize {
            assert!(theta <= 2.0 / (t as f64 + 2.0) + 1e-15, "t={t}");
            theta = theta_next(theta);
        }
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&array![1.0]), 0.0);
        assert!((entropy(&array![0.5, 0.5]) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(entropy(&array![0.5, 0.0, 0.5]), entropy(&array![0.5, 0.5]));
    }

    #[test]
    fn radius_example() {
        let inst = PotInstance::new(
            array![0.25, 0.75],
            array![0.5, 0.5],
            array![[0.0, 1.0], [1.0, 0.0]],
            0.5,
        )
        .unwrap();
        let b = theory_bounds(&inst, 1.0, 0.1).unwrap();
        assert!((b.radius - (2.0 + 4f64.ln())).abs() < 1e-12);
        assert!((b.radius - 3.386_294_361_1).abs() < 1e-9);
    }

    #[test]
    fn lipschitz_matches_closed_form() {
        let inst = PotInstance::new(
            array![0.2, 0.3, 0.1],
            array![0.3, 0.3, 0.2],
            array![[0.0, 1.0, 0.5], [1.0, 0.0, 0.2], [0.3, 0.9, 0.0]],
            0.4,
        )
        .unwrap();
        let eps = 0.1;
        let n = 3f64;
        let gamma = eps / (4.0 * n.ln());
        let b = theory_bounds(&inst, gamma, eps / 8.0).unwrap();
        let closed = 12.0 * n.ln() * (0.6 + 0.8 - 0.4) / eps;
        assert!((b.lipschitz - closed).abs() < 1e-9 * closed);
        assert!((b.lipschitz * b.mu_f - 3.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_budget() {
        let inst = PotInstance::new(array![0.5, 0.5], array![0.5, 0.5], ndarray::Array2::zeros((2, 2)), 1.0)
            .unwrap();
        assert!(matches!(theory_bounds(&inst, 1.0, 0.1), Err(Error::DegenerateInstance(_))));
    }
}
