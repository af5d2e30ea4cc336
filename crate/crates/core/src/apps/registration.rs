//! Rigid point-cloud registration by alternating POT matching and
//! Procrustes fitting.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::config::{BlockRule, SolverConfig};
use crate::error::{accept_partial, Error, Result};
use crate::problem::PotInstance;
use crate::solvers::{solve, SolverKind};

use super::color::{normalize_max, squared_distances};
use super::procrustes::{fit_rigid, RigidTransform};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegistrationConfig {
    /// Fraction of the smaller cloud's mass that is matched.
    pub alpha: f64,
    /// Regularization of the first matching.
    pub gamma0: f64,
    /// Factor applied to γ after each registration.
    pub anneal_rate: f64,
    /// Stop once `‖ΔR − I‖_F + ‖Δt‖` falls below this.
    pub transform_threshold: f64,
    pub max_registrations: usize,
    /// Accuracy handed to the inner POT solver.
    pub solver_epsilon: f64,
    /// Iteration cap of each inner solve.
    pub max_inner_iterations: usize,
    pub block_rule: BlockRule,
}

impl Default for RegistrationConfig {
    fn default() -> Self {
        RegistrationConfig {
            alpha: 0.4,
            gamma0: 4.4e-3,
            anneal_rate: 0.83,
            transform_threshold: 1e-5,
            max_registrations: 60,
            solver_epsilon: 0.01,
            max_inner_iterations: 1000,
            block_rule: BlockRule::Greedy,
        }
    }
}

impl RegistrationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidConfig("alpha must lie in (0, 1]"));
        }
        if !(self.gamma0.is_finite() && self.gamma0 > 0.0) {
            return Err(Error::InvalidConfig("gamma0 must be positive"));
        }
        if !(self.anneal_rate > 0.0 && self.anneal_rate < 1.0) {
            return Err(Error::InvalidConfig("anneal_rate must lie in (0, 1)"));
        }
        if !(self.transform_threshold > 0.0) {
            return Err(Error::InvalidConfig("transform_threshold must be positive"));
        }
        if self.max_registrations == 0 || self.max_inner_iterations == 0 {
            return Err(Error::InvalidConfig("iteration limits must be at least 1"));
        }
        if !(self.solver_epsilon > 0.0) {
            return Err(Error::InvalidConfig("solver_epsilon must be positive"));
        }
        Ok(())
    }
}

/// One outer registration step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegistrationRecord {
    pub registration: usize,
    pub gamma: f64,
    pub inner_iterations: usize,
    pub accumulated_iterations: usize,
    pub inner_converged: bool,
    /// `⟨C, X⟩` of the matching, in normalized cost units.
    pub matching_cost: f64,
    pub increment: f64,
}

#[derive(Clone, Debug)]
pub struct RegistrationResult {
    /// Maps the moving cloud `q` onto the fixed cloud `p`.
    pub transform: RigidTransform,
    pub records: Vec<RegistrationRecord>,
    pub converged: bool,
}

/// POT instance between `p` and the current `q`: uniform weights
/// `1/max(m, n)`, budget `α·min(m, n)/max(m, n)`, squared distances scaled to
/// max 1.
pub fn registration_instance(p: &Array2<f64>, q: &Array2<f64>, alpha: f64) -> Result<PotInstance> {
    let (m, n) = (p.nrows(), q.nrows());
    let big = m.max(n) as f64;
    let s = alpha * m.min(n) as f64 / big;
    PotInstance::new(
        Array1::from_elem(m, 1.0 / big),
        Array1::from_elem(n, 1.0 / big),
        normalize_max(squared_distances(p, q)),
        s,
    )
}

/// Aligns `q` to `p`. Returns [`Error::NoConvergence`] with the partial
/// result when the registration limit is reached first.
pub fn register_point_clouds(
    p: &Array2<f64>,
    q: &Array2<f64>,
    config: &RegistrationConfig,
    solver: SolverKind,
) -> Result<RegistrationResult> {
    config.validate()?;
    if p.ncols() != 3 || q.ncols() != 3 {
        return Err(Error::DimensionMismatch {
            expected: (p.nrows(), 3),
            found: if p.ncols() != 3 { p.dim() } else { q.dim() },
        });
    }
    if p.nrows() < 3 || q.nrows() < 3 {
        return Err(Error::EmptyInput);
    }
    let mut transform = RigidTransform::identity();
    let mut gamma = config.gamma0;
    let mut records = Vec::new();
    let mut accumulated = 0;
    for k in 1..=config.max_registrations {
        let moved = transform.apply(q);
        let instance = registration_instance(p, &moved, config.alpha)?;
        let solver_config = SolverConfig {
            epsilon: config.solver_epsilon,
            gamma_override: Some(gamma),
            max_iterations: config.max_inner_iterations,
            block_rule: config.block_rule,
            log_every: config.max_inner_iterations,
            ..Default::default()
        };
        let outcome = accept_partial(solve(solver, &instance, &solver_config))?;
        let step = fit_rigid(outcome.plan.matrix(), p, &moved)?;
        transform = step.compose(&transform);
        accumulated += outcome.iterations;
        let increment = step.distance_from_identity();
        records.push(RegistrationRecord {
            registration: k,
            gamma,
            inner_iterations: outcome.iterations,
            accumulated_iterations: accumulated,
            inner_converged: outcome.converged,
            matching_cost: outcome.plan.cost(instance.cost()),
            increment,
        });
        gamma *= config.anneal_rate;
        if increment < config.transform_threshold {
            return Ok(RegistrationResult {
                transform,
                records,
                converged: true,
            });
        }
    }
    Err(Error::NoConvergence(Box::new(RegistrationResult {
        transform,
        records,
        converged: false,
    })))
}
