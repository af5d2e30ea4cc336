//! Exact POT solutions for small instances, used as ground truth.
//!
//! The plan is written as the linear program
//!
//! ```text
//! min ⟨d, x⟩  s.t.  A x = b,  x ≥ 0,   x = (vec(X); p; q)
//! X1 + p = r,   Xᵀ1 + q = c,   1ᵀX1 = s
//! ```
//!
//! and solved with a dense two-phase simplex.

mod simplex;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::problem::{PotInstance, TransportPlan};

pub use simplex::{simplex, LpSolution, PIVOT_TOL};

/// Largest support size the dense simplex accepts.
pub const EXACT_SIZE_LIMIT: usize = 15;

/// Equality-form LP of a POT instance. Plan variables are column-stacked:
/// `X_ij` sits at index `j·m + i`.
#[derive(Clone, Debug, PartialEq)]
pub struct LpForm {
    pub a: Array2<f64>,
    pub b: Array1<f64>,
    pub d: Array1<f64>,
}

pub fn lp_form(instance: &PotInstance) -> LpForm {
    let (m, n) = (instance.rows(), instance.cols());
    let vars = m * n + m + n;
    let mut a = Array2::zeros((m + n + 1, vars));
    let mut d = Array1::zeros(vars);
    for j in 0..n {
        for i in 0..m {
            let k = j * m + i;
            a[[i, k]] = 1.0;
            a[[m + j, k]] = 1.0;
            a[[m + n, k]] = 1.0;
            d[k] = instance.cost()[[i, j]];
        }
    }
    for i in 0..m {
        a[[i, m * n + i]] = 1.0;
    }
    for j in 0..n {
        a[[m + j, m * n + m + j]] = 1.0;
    }
    let mut b = Array1::zeros(m + n + 1);
    b.slice_mut(ndarray::s![..m]).assign(instance.r());
    b.slice_mut(ndarray::s![m..m + n]).assign(instance.c());
    b[m + n] = instance.budget();
    LpForm { a, b, d }
}

#[derive(Clone, Debug)]
pub struct ExactSolution {
    pub value: f64,
    pub plan: TransportPlan,
}

/// Optimal value and a vertex-optimal plan. Rejects instances with more than
/// [`EXACT_SIZE_LIMIT`] points on either side.
pub fn solve_exact(instance: &PotInstance) -> Result<ExactSolution> {
    solve_exact_with_limit(instance, EXACT_SIZE_LIMIT)
}

/// [`solve_exact`] with a caller-chosen size limit. The tableau has
/// `(m+n+1)·(mn+m+n)` entries, so sizes around 64 still take well under a
/// second but the cost grows quickly beyond that.
pub fn solve_exact_with_limit(instance: &PotInstance, limit: usize) -> Result<ExactSolution> {
    let size = instance.support_size();
    if size > limit {
        return Err(Error::SizeLimitExceeded(size, limit));
    }
    let lp = lp_form(instance);
    let sol = simplex(&lp.a, &lp.b, &lp.d)?;
    let (m, n) = (instance.rows(), instance.cols());
    let x = Array2::from_shape_fn((m, n), |(i, j)| sol.x[j * m + i].max(0.0));
    let plan = TransportPlan::new(x, instance)?;
    Ok(ExactSolution {
        value: sol.value,
        plan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::plan_feasibility_gap;
    use ndarray::array;

    #[test]
    fn single_point_form() {
        let inst = PotInstance::new(array![1.0], array![2.0], array![[3.0]], 0.5).unwrap();
        let lp = lp_form(&inst);
        assert_eq!(lp.a, array![[1.0, 1.0, 0.0], [1.0, 0.0, 1.0], [1.0, 0.0, 0.0]]);
        assert_eq!(lp.b, array![1.0, 2.0, 0.5]);
        assert_eq!(lp.d, array![3.0, 0.0, 0.0]);
    }

    #[test]
    fn column_structure() {
        let inst = PotInstance::new(array![0.2, 0.3, 0.5], array![0.6, 0.4], Array2::ones((3, 2)), 0.5).unwrap();
        let lp = lp_form(&inst);
        for (k, col) in lp.a.columns().into_iter().enumerate() {
            let l1: f64 = col.sum();
            assert_eq!(l1, if k < 6 { 3.0 } else { 1.0 });
            assert!(col.iter().map(|x| x * x).sum::<f64>() <= crate::solvers::CONSTRAINT_NORM_SQ);
        }
    }

    #[test]
    fn single_point_solution() {
        let inst = PotInstance::new(array![1.0], array![1.0], array![[3.0]], 0.5).unwrap();
        let sol = solve_exact(&inst).unwrap();
        assert!((sol.value - 1.5).abs() < 1e-12);
        assert!((sol.plan.matrix()[[0, 0]] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn forced_off_diagonal() {
        let inst = PotInstance::new(array![1.0, 0.0], array![0.0, 1.0], array![[0.0, 1.0], [1.0, 0.0]], 0.5).unwrap();
        let sol = solve_exact(&inst).unwrap();
        assert!((sol.value - 0.5).abs() < 1e-12);
        let x = sol.plan.matrix();
        assert!((x[[0, 1]] - 0.5).abs() < 1e-12);
        assert_eq!(x[[0, 0]] + x[[1, 0]] + x[[1, 1]], 0.0);
        assert!(plan_feasibility_gap(&sol.plan, &inst).unwrap() <= 1e-10);
    }

    #[test]
    fn picks_cheapest_pairs() {
        let inst = PotInstance::new(
            array![0.5, 0.5],
            array![0.5, 0.5],
            array![[0.9, 0.1], [0.4, 0.8]],
            0.6,
        )
        .unwrap();
        // 0.5 on the 0.1 entry, the remaining 0.1 on the 0.4 entry.
        let sol = solve_exact(&inst).unwrap();
        assert!((sol.value - 0.09).abs() < 1e-12);
    }

    #[test]
    fn size_limit() {
        let inst = PotInstance::new(Array1::ones(16), Array1::ones(16), Array2::zeros((16, 16)), 1.0).unwrap();
        assert!(matches!(solve_exact(&inst), Err(Error::SizeLimitExceeded(16, 15))));
    }
}
