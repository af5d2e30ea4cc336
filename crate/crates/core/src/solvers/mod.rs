//! POT solvers: accelerated Sinkhorn (ASPOT), feasible Sinkhorn on the
//! dummy-node extension, and Sinkhorn with the entropy-tuned γ.

mod aspot;
mod greenkhorn;
mod sinkhorn;
mod theory;

use std::fmt;
use std::str::FromStr;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

pub use aspot::{aspot_setup, aspot_solve, AspotIteration, AspotSetup, AspotSolver, AspotState};
pub use greenkhorn::{greenkhorn_step, greenkhorn_update, select_block, Block};
pub use sinkhorn::{feasible_sinkhorn_solve, sinkhorn_extended, tuned_gamma, tuned_sinkhorn_solve, SinkhornRun};
pub use theory::{entropy, theory_bounds, theta_next, TheoryBounds, CONSTRAINT_NORM_SQ};

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::problem::{PotInstance, TransportPlan};
use crate::trace::ConvergenceTrace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Aspot,
    Sinkhorn,
    TunedSinkhorn,
}

impl SolverKind {
    pub const ALL: [SolverKind; 3] = [SolverKind::Aspot, SolverKind::Sinkhorn, SolverKind::TunedSinkhorn];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Aspot => "aspot",
            SolverKind::Sinkhorn => "sinkhorn",
            SolverKind::TunedSinkhorn => "tuned-sinkhorn",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown solver '{s}'")))
    }
}

/// Everything a solve produces. Returned inside
/// [`Error::MaxIterationsExceeded`] when the iteration cap is hit.
#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub solver: SolverKind,
    pub plan: TransportPlan,
    pub trace: ConvergenceTrace,
    pub iterations: usize,
    pub converged: bool,
    /// Stopping quantity at the last iterate.
    pub final_error: f64,
    /// Threshold the stopping quantity was compared against.
    pub tolerance: f64,
    pub gamma: f64,
    /// Dummy-node penalty, for the extended-OT solvers.
    pub penalty: Option<f64>,
    /// Minimal marginal entropy, for the tuned solver.
    pub h_min: Option<f64>,
    /// Entropic accuracy the stopping rule targets (ε̃ or ε').
    pub eps_prime: f64,
    /// Iteration-bound constants (ASPOT only).
    pub theory: Option<TheoryBounds>,
    /// Which iterate the stopping rule was evaluated at.
    pub stopping_iterate: &'static str,
    /// Number of momentum steps that had to be shrunk (ASPOT only).
    pub step_halvings: usize,
    pub elapsed: f64,
}

impl SolveOutcome {
    pub(crate) fn into_result(self) -> Result<SolveOutcome> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::MaxIterationsExceeded(Box::new(self)))
        }
    }
}

/// Runs the solver named by `kind`. The tuned solver reads its exponent from
/// `config.tuning_exponent_p`.
pub fn solve(kind: SolverKind, instance: &PotInstance, config: &SolverConfig) -> Result<SolveOutcome> {
    match kind {
        SolverKind::Aspot => aspot_solve(instance, config),
        SolverKind::Sinkhorn => feasible_sinkhorn_solve(instance, config),
        SolverKind::TunedSinkhorn => tuned_sinkhorn_solve(instance, config),
    }
}

/// A solve whose budget is zero: the only feasible plan is empty.
pub(crate) fn zero_budget_outcome(kind: SolverKind, instance: &PotInstance) -> Result<SolveOutcome> {
    let plan = TransportPlan::new(ndarray::Array2::zeros((instance.rows(), instance.cols())), instance)?;
    Ok(SolveOutcome {
        solver: kind,
        plan,
        trace: ConvergenceTrace::new(),
        iterations: 0,
        converged: true,
        final_error: 0.0,
        tolerance: 0.0,
        gamma: f64::NAN,
        penalty: None,
        h_min: None,
        eps_prime: 0.0,
        theory: None,
        stopping_iterate: "none",
        step_halvings: 0,
        elapsed: 0.0,
    })
}

pub(crate) fn log_support(instance: &PotInstance) -> Result<f64> {
    let n = instance.support_size();
    if n < 2 {
        return Err(Error::DegenerateInstance("support size must be at least 2 (log n = 0)"));
    }
    Ok((n as f64).ln())
}

pub(crate) fn all_positive(x: &Array1<f64>) -> bool {
    x.iter().all(|&v| v > 0.0)
}
