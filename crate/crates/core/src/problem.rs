//! Partial optimal transport instances and transport plans.
//!
//! An instance is a pair of nonnegative marginals `r` (length m) and `c`
//! (length n), a nonnegative m×n ground cost and a transport budget `s`.
//! A plan `X` is feasible when `X ≥ 0`, `X1 ≤ r`, `Xᵀ1 ≤ c` and `1ᵀX1 = s`.
//! Square instances (m = n) are the common case; rectangular ones arise in
//! point-cloud registration.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Field, Result, Violation};

/// Slack allowed on `s ≤ min(‖r‖₁, ‖c‖₁)`; budgets are often computed as a
/// product of the masses.
pub const BUDGET_SLACK: f64 = 1e-12;

/// Relative tolerance used when a plan is declared feasible.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct PotInstance {
    r: Array1<f64>,
    c: Array1<f64>,
    cost: Array2<f64>,
    s: f64,
}

impl PotInstance {
    /// Builds and validates an instance.
    pub fn new(r: Array1<f64>, c: Array1<f64>, cost: Array2<f64>, s: f64) -> Result<Self> {
        validate(PotInstance { r, c, cost, s })
    }

    /// Builds from plain vectors; `cost` is row-major with `r.len()` rows.
    pub fn from_vecs(r: Vec<f64>, c: Vec<f64>, cost: Vec<Vec<f64>>, s: f64) -> Result<Self> {
        let rows = cost.len();
        let cols = cost.first().map_or(0, Vec::len);
        if cost.iter().any(|row| row.len() != cols) {
            return Err(Error::InvalidInstance(vec![Violation::DimensionMismatch {
                expected: (r.len(), c.len()),
                found: (rows, cols),
            }]));
        }
        let flat: Vec<f64> = cost.into_iter().flatten().collect();
        let cost = Array2::from_shape_vec((rows, cols), flat).expect("shape checked above");
        Self::new(Array1::from(r), Array1::from(c), cost, s)
    }

    pub fn r(&self) -> &Array1<f64> {
        &self.r
    }

    pub fn c(&self) -> &Array1<f64> {
        &self.c
    }

    pub fn cost(&self) -> &Array2<f64> {
        &self.cost
    }

    pub fn budget(&self) -> f64 {
        self.s
    }

    pub fn rows(&self) -> usize {
        self.r.len()
    }

    pub fn cols(&self) -> usize {
        self.c.len()
    }

    /// Support size used in the `log n` factors: `max(m, n)`.
    pub fn support_size(&self) -> usize {
        self.rows().max(self.cols())
    }

    pub fn r_mass(&self) -> f64 {
        self.r.sum()
    }

    pub fn c_mass(&self) -> f64 {
        self.c.sum()
    }

    /// `‖C‖_∞`, the largest cost entry.
    pub fn max_cost(&self) -> f64 {
        self.cost.iter().copied().fold(0.0, f64::max)
    }

    /// Same cost and budget with different marginals.
    pub fn with_marginals(&self, r: Array1<f64>, c: Array1<f64>) -> Result<Self> {
        Self::new(r, c, self.cost.clone(), self.s)
    }

    pub fn with_budget(&self, s: f64) -> Result<Self> {
        Self::new(self.r.clone(), self.c.clone(), self.cost.clone(), s)
    }

    /// Reads the JSON document `{"r": [...], "c": [...], "C": [[...]], "s": x}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: InstanceDoc = serde_json::from_str(text)?;
        doc.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&InstanceDoc::from(self)).expect("plain numbers serialize")
    }
}

/// On-disk form of an instance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceDoc {
    pub r: Vec<f64>,
    pub c: Vec<f64>,
    #[serde(rename = "C")]
    pub cost: Vec<Vec<f64>>,
    pub s: f64,
}

impl TryFrom<InstanceDoc> for PotInstance {
    type Error = Error;

    fn try_from(doc: InstanceDoc) -> Result<Self> {
        PotInstance::from_vecs(doc.r, doc.c, doc.cost, doc.s)
    }
}

impl From<&PotInstance> for InstanceDoc {
    fn from(inst: &PotInstance) -> Self {
        InstanceDoc {
            r: inst.r.to_vec(),
            c: inst.c.to_vec(),
            cost: inst.cost.rows().into_iter().map(|row| row.to_vec()).collect(),
            s: inst.s,
        }
    }
}

/// Checks every instance invariant and reports all violations at once.
pub fn validate(instance: PotInstance) -> Result<PotInstance> {
    let mut violations = Vec::new();
    let (m, n) = (instance.r.len(), instance.c.len());
    if m == 0 || n == 0 {
        violations.push(Violation::Empty);
    }
    if instance.cost.dim() != (m, n) {
        violations.push(Violation::DimensionMismatch {
            expected: (m, n),
            found: instance.cost.dim(),
        });
    }
    let fields = [
        (Field::SourceMarginal, instance.r.as_slice().unwrap_or(&[])),
        (Field::TargetMarginal, instance.c.as_slice().unwrap_or(&[])),
    ];
    for (field, values) in fields {
        check_entries(field, values.iter().copied(), &mut violations);
    }
    check_entries(Field::Cost, instance.cost.iter().copied(), &mut violations);
    check_entries(Field::Budget, std::iter::once(instance.s), &mut violations);

    let min_mass = instance.r.sum().min(instance.c.sum());
    if instance.s.is_finite() && min_mass.is_finite() && instance.s > min_mass + BUDGET_SLACK {
        violations.push(Violation::BudgetExceedsMass {
            budget: instance.s,
            min_mass,
        });
    }

    if violations.is_empty() {
        Ok(instance)
    } else {
        Err(Error::InvalidInstance(violations))
    }
}

fn check_entries(field: Field, values: impl Iterator<Item = f64>, out: &mut Vec<Violation>) {
    for (index, value) in values.enumerate() {
        if !value.is_finite() {
            out.push(Violation::NonFiniteEntry { field, index });
        } else if value < 0.0 {
            out.push(Violation::NegativeEntry { field, index, value });
        }
    }
}

/// A nonnegative plan together with its slacks against the instance it was
/// built for.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan {
    x: Array2<f64>,
    row_slack: Array1<f64>,
    col_slack: Array1<f64>,
    mass: f64,
}

impl TransportPlan {
    pub fn new(x: Array2<f64>, instance: &PotInstance) -> Result<Self> {
        let expected = (instance.rows(), instance.cols());
        if x.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: x.dim(),
            });
        }
        if let Some(index) = x.iter().position(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidPlanEntry(index));
        }
        let row_slack = instance.r() - &x.sum_axis(Axis(1));
        let col_slack = instance.c() - &x.sum_axis(Axis(0));
        let mass = x.sum();
        Ok(TransportPlan {
            x,
            row_slack,
            col_slack,
            mass,
        })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn into_matrix(self) -> Array2<f64> {
        self.x
    }

    /// `r − X1`.
    pub fn row_slack(&self) -> &Array1<f64> {
        &self.row_slack
    }

    /// `c − Xᵀ1`.
    pub fn col_slack(&self) -> &Array1<f64> {
        &self.col_slack
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// `⟨C, X⟩`.
    pub fn cost(&self, cost: &Array2<f64>) -> f64 {
        (&self.x * cost).sum()
    }
}

/// Largest violation of the three POT constraint groups:
/// `max(max_i (X1−r)_i⁺, max_j (Xᵀ1−c)_j⁺, |1ᵀX1 − s|)`.
pub fn plan_feasibility_gap(plan: &TransportPlan, instance: &PotInstance) -> Result<f64> {
    matrix_feasibility_gap(plan.matrix(), instance)
}

/// [`plan_feasibility_gap`] on a raw matrix.
pub fn matrix_feasibility_gap(x: &Array2<f64>, instance: &PotInstance) -> Result<f64> {
    let expected = (instance.rows(), instance.cols());
    if x.dim() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: x.dim(),
        });
    }
    let row_excess = x
        .sum_axis(Axis(1))
        .iter()
        .zip(instance.r())
        .map(|(got, cap)| (got - cap).max(0.0))
        .fold(0.0, f64::max);
    let col_excess = x
        .sum_axis(Axis(0))
        .iter()
        .zip(instance.c())
        .map(|(got, cap)| (got - cap).max(0.0))
        .fold(0.0, f64::max);
    let mass_gap = (x.sum() - instance.budget()).abs();
    Ok(row_excess.max(col_excess).max(mass_gap))
}
