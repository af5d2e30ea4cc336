//! Dense two-phase tableau simplex with Bland's least-index rule.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Entries smaller than this are treated as zero when pivoting.
pub const PIVOT_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub x: Array1<f64>,
}

struct Tableau {
    /// Constraint rows followed by the reduced-cost row; last column is the
    /// right-hand side (negated objective in the cost row).
    t: Array2<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn rows(&self) -> usize {
        self.basis.len()
    }

    fn rhs(&self) -> usize {
        self.t.ncols() - 1
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.t[[row, col]];
        self.t.row_mut(row).mapv_inplace(|x| x / p);
        let pivot_row = self.t.row(row).to_owned();
        for i in 0..self.t.nrows() {
            if i != row {
                let f = self.t[[i, col]];
                if f != 0.0 {
                    self.t.row_mut(i).scaled_add(-f, &pivot_row);
                }
            }
        }
        self.basis[row] = col;
    }

    /// Runs Bland pivots over columns `< allowed` until optimal.
    fn optimize(&mut self, allowed: usize) -> Result<()> {
        let obj = self.rows();
        let rhs = self.rhs();
        loop {
            let Some(col) = (0..allowed).find(|&j| self.t[[obj, j]] < -PIVOT_TOL) else {
                return Ok(());
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..obj {
                let a = self.t[[i, col]];
                if a > PIVOT_TOL {
                    let ratio = self.t[[i, rhs]] / a;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - PIVOT_TOL || (ratio <= br + PIVOT_TOL && self.basis[i] < self.basis[bi]) {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((row, _)) = best else {
                return Err(Error::Unbounded);
            };
            self.pivot(row, col);
        }
    }

    fn remove_row(&mut self, row: usize) {
        let keep: Vec<usize> = (0..self.t.nrows()).filter(|&i| i != row).collect();
        self.t = self.t.select(ndarray::Axis(0), &keep);
        self.basis.remove(row);
    }
}

/// Solves `min ⟨d, x⟩ s.t. A x = b, x ≥ 0`.
pub fn simplex(a: &Array2<f64>, b: &Array1<f64>, d: &Array1<f64>) -> Result<LpSolution> {
    let (rows, vars) = a.dim();
    if b.len() != rows || d.len() != vars {
        return Err(Error::DimensionMismatch {
            expected: (rows, vars),
            found: (b.len(), d.len()),
        });
    }
    // Phase 1: one artificial per row, rows flipped so that b ≥ 0.
    let width = vars + rows + 1;
    let mut t = Array2::zeros((rows + 1, width));
    for i in 0..rows {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..vars {
            t[[i, j]] = sign * a[[i, j]];
        }
        t[[i, vars + i]] = 1.0;
        t[[i, width - 1]] = sign * b[i];
    }
    for j in 0..vars {
        t[[rows, j]] = -(0..rows).map(|i| t[[i, j]]).sum::<f64>();
    }
    t[[rows, width - 1]] = -(0..rows).map(|i| t[[i, width - 1]]).sum::<f64>();
    let mut tab = Tableau {
        t,
        basis: (vars..vars + rows).collect(),
    };
    tab.optimize(vars + rows)?;
    let scale = b.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    if -tab.t[[tab.rows(), width - 1]] > 1e-9 * scale {
        return Err(Error::Infeasible);
    }

    // Drive artificials out of the basis; rows where that is impossible are
    // redundant.
    let mut i = 0;
    while i < tab.rows() {
        if tab.basis[i] >= vars {
            match (0..vars).find(|&j| tab.t[[i, j]].abs() > PIVOT_TOL) {
                Some(j) => {
                    tab.pivot(i, j);
                    i += 1;
                }
                None => tab.remove_row(i),
            }
        } else {
            i += 1;
        }
    }

    // Phase 2: reduced costs for the true objective.
    let obj = tab.rows();
    for j in 0..width {
        let basic: f64 = (0..obj)
            .map(|i| {
                let bj = tab.basis[i];
                if bj < vars {
                    d[bj] * tab.t[[i, j]]
                } else {
                    0.0
                }
            })
            .sum();
        let cj = if j < vars { d[j] } else { 0.0 };
        tab.t[[obj, j]] = if j == width - 1 { -basic } else { cj - basic };
    }
    tab.optimize(vars)?;

    let mut x = Array1::zeros(vars);
    for (i, &bj) in tab.basis.iter().enumerate() {
        if bj < vars {
            x[bj] = tab.t[[i, width - 1]];
        }
    }
    let value = d.dot(&x);
    Ok(LpSolution { value, x })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn textbook_problem() {
        // min −x − y  s.t. x + s1 = 2, y + s2 = 3, x + y + s3 = 4
        let a = array![
            [1.0, 0.0, 1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 1.0, 0.0],
            [1.0, 1.0, 0.0, 0.0, 1.0]
        ];
        let sol = simplex(&a, &array![2.0, 3.0, 4.0], &array![-1.0, -1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((sol.value + 4.0).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible() {
        let a = array![[1.0, 1.0], [1.0, 1.0]];
        assert!(matches!(simplex(&a, &array![1.0, 2.0], &array![0.0, 0.0]), Err(Error::Infeasible)));
    }

    #[test]
    fn detects_unbounded() {
        let a = array![[1.0, -1.0]];
        assert!(matches!(simplex(&a, &array![1.0], &array![0.0, -1.0]), Err(Error::Unbounded)));
    }

    #[test]
    fn redundant_rows_are_dropped() {
        let a = array![[1.0, 1.0], [2.0, 2.0]];
        let sol = simplex(&a, &array![1.0, 2.0], &array![1.0, 3.0]).unwrap();
        assert!((sol.value - 1.0).abs() < 1e-12);
        assert!((sol.x[0] - 1.0).abs() < 1e-12);
    }
}
