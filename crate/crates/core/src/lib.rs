//! Entropic partial optimal transport.
//!
//! Given marginals `r`, `c`, a cost `C` and a budget `s`, find a plan `X ≥ 0`
//! with `X1 ≤ r`, `Xᵀ1 ≤ c` and total mass `s` that (approximately) minimizes
//! `⟨C, X⟩`. The crate provides an accelerated Sinkhorn solver ([`aspot_solve`]),
//! Sinkhorn baselines on the dummy-node extension, rounding onto the exact
//! feasible set, an exact simplex oracle for small instances, and the
//! color-transfer, registration and scaling pipelines in [`apps`].

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod apps;
pub mod config;
pub mod dual;
pub mod error;
pub mod extend;
pub mod oracle;
pub mod problem;
pub mod rounding;
pub mod solvers;
pub mod trace;

pub use config::{BlockRule, SolverConfig};
pub use dual::{DualPoint, EntropicContext, Evaluation};
pub use error::{accept_partial, Error, Result};
pub use extend::{extend, extract_block, ExtendedOtInstance};
pub use oracle::{lp_form, solve_exact, solve_exact_with_limit, ExactSolution, LpForm};
pub use problem::{plan_feasibility_gap, PotInstance, TransportPlan};
pub use rounding::{round_balanced, round_pot};
pub use solvers::{
    aspot_solve, feasible_sinkhorn_solve, solve, tuned_sinkhorn_solve, SolveOutcome, SolverKind, TheoryBounds,
};
pub use trace::{ConvergenceTrace, TraceRecord};
