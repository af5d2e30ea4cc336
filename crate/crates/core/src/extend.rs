//! Dummy-node reduction of POT to balanced OT.
//!
//! ```text
//! C̃ = [ C  0 ]     r̃ = [ r ; ‖c‖₁ − s ]
//!     [ 0ᵀ A ]     c̃ = [ c ; ‖r‖₁ − s ]
//! ```

use ndarray::{s, Array1, Array2};

use crate::error::{Error, Result};
use crate::problem::PotInstance;

/// Allowed difference between the two extended masses.
pub const MASS_BALANCE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedOtInstance {
    pub cost: Array2<f64>,
    pub r: Array1<f64>,
    pub c: Array1<f64>,
    pub penalty: f64,
}

impl ExtendedOtInstance {
    /// Views the balanced problem as a POT instance transporting all mass.
    pub fn as_pot(&self) -> Result<PotInstance> {
        let s = self.r.sum().min(self.c.sum());
        PotInstance::new(self.r.clone(), self.c.clone(), self.cost.clone(), s)
    }
}

/// Default dummy-node penalty `8‖C‖_∞/ε`, falling back to 1 for an all-zero cost.
pub fn default_penalty(instance: &PotInstance, epsilon: f64) -> f64 {
    let max_cost = instance.max_cost();
    if max_cost > 0.0 {
        8.0 * max_cost / epsilon
    } else {
        1.0
    }
}

pub fn extend(instance: &PotInstance, penalty: f64) -> Result<ExtendedOtInstance> {
    let max_cost = instance.max_cost();
    if !(penalty.is_finite() && penalty > max_cost) {
        return Err(Error::PenaltyTooSmall { penalty, max_cost });
    }
    let (m, n) = (instance.rows(), instance.cols());
    let s = instance.budget();

    let mut cost = Array2::zeros((m + 1, n + 1));
    cost.slice_mut(s![..m, ..n]).assign(instance.cost());
    cost[[m, n]] = penalty;

    let mut r = Array1::zeros(m + 1);
    r.slice_mut(s![..m]).assign(instance.r());
    r[m] = (instance.c_mass() - s).max(0.0);
    let mut c = Array1::zeros(n + 1);
    c.slice_mut(s![..n]).assign(instance.c());
    c[n] = (instance.r_mass() - s).max(0.0);

    let (mr, mc) = (r.sum(), c.sum());
    if (mr - mc).abs() > MASS_BALANCE_TOL * mr.max(1.0) {
        return Err(Error::UnbalancedMarginals(mr, mc));
    }
    Ok(ExtendedOtInstance { cost, r, c, penalty })
}

/// The pieces of an extended plan.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtractedBlock {
    /// Top-left m×n block: transport between real points.
    pub block: Array2<f64>,
    /// Last column without the corner: mass each source sends to the dummy.
    pub dummy_column: Array1<f64>,
    /// Last row without the corner: mass each target receives from the dummy.
    pub dummy_row: Array1<f64>,
    pub corner: f64,
}

pub fn extract_block(x_ext: &Array2<f64>) -> Result<ExtractedBlock> {
    let (rows, cols) = x_ext.dim();
    if rows < 2 || cols < 2 {
        return Err(Error::DimensionMismatch {
            expected: (2, 2),
            found: (rows, cols),
        });
    }
    let (m, n) = (rows - 1, cols - 1);
    Ok(ExtractedBlock {
        block: x_ext.slice(s![..m, ..n]).to_owned(),
        dummy_column: x_ext.slice(s![..m, n]).to_owned(),
        dummy_row: x_ext.slice(s![m, ..n]).to_owned(),
        corner: x_ext[[m, n]],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn small() -> PotInstance {
        PotInstance::new(
            array![0.3, 0.2],
            array![0.4, 0.1],
            array![[0.0, 1.0], [0.5, 0.25]],
            0.1,
        )
        .unwrap()
    }

    #[test]
    fn marginals_and_block_structure() {
        let ext = extend(&small(), 2.0).unwrap();
        assert!((&ext.r - &array![0.3, 0.2, 0.4]).iter().all(|d| d.abs() < 1e-15));
        assert!((&ext.c - &array![0.4, 0.1, 0.4]).iter().all(|d| d.abs() < 1e-15));
        assert!((ext.r.sum() - 0.9).abs() < 1e-15);
        assert!((ext.c.sum() - 0.9).abs() < 1e-15);
        assert_eq!(ext.cost[[2, 2]], 2.0);
        for k in 0..2 {
            assert_eq!(ext.cost[[k, 2]], 0.0);
            assert_eq!(ext.cost[[2, k]], 0.0);
        }
        assert_eq!(ext.cost[[0, 1]], 1.0);
    }

    #[test]
    fn full_budget_has_no_dummy_mass() {
        let inst = PotInstance::new(array![0.5, 0.5], array![0.25, 0.75], Array2::zeros((2, 2)), 1.0)
            .unwrap();
        let ext = extend(&inst, 1.0).unwrap();
        assert_eq!(ext.r[2], 0.0);
        assert_eq!(ext.c[2], 0.0);
    }

    #[test]
    fn penalty_must_exceed_max_cost() {
        assert!(matches!(extend(&small(), 1.0), Err(Error::PenaltyTooSmall { .. })));
        assert!(matches!(extend(&small(), 0.5), Err(Error::PenaltyTooSmall { .. })));
    }

    #[test]
    fn extract_pieces() {
        let x = array![[0.1, 0.0, 0.2], [0.0, 0.05, 0.15], [0.3, 0.05, 0.0]];
        let parts = extract_block(&x).unwrap();
        assert_eq!(parts.block, array![[0.1, 0.0], [0.0, 0.05]]);
        assert_eq!(parts.dummy_column, array![0.2, 0.15]);
        assert_eq!(parts.dummy_row, array![0.3, 0.05]);
        assert_eq!(parts.corner, 0.0);

        let mut corner_only = Array2::zeros((3, 3));
        corner_only[[2, 2]] = 0.7;
        assert_eq!(extract_block(&corner_only).unwrap().block, Array2::<f64>::zeros((2, 2)));

        assert!(extract_block(&Array2::zeros((1, 3))).is_err());
    }
}
