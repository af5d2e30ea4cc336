use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Block selection for the Greenkhorn step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockRule {
    /// Update the block with the largest ρ-divergence violation.
    #[default]
    Greedy,
    /// Cycle u, v, w by the iteration counter.
    RoundRobin,
}

/// Solver knobs. Missing fields in a config file fall back to [`Default`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Target accuracy ε of the ε-approximation.
    pub epsilon: f64,
    /// Replaces the derived regularization γ.
    pub gamma_override: Option<f64>,
    /// Replaces the derived stopping tolerance (ε̃ for the accelerated and
    /// feasible solvers, ε' for the tuned one).
    pub tolerance_override: Option<f64>,
    /// Replaces the dummy-node penalty `8‖C‖_∞/ε`.
    pub penalty_override: Option<f64>,
    pub max_iterations: usize,
    pub block_rule: BlockRule,
    /// Exponent p of the tuned Sinkhorn γ.
    pub tuning_exponent_p: f64,
    /// When false, matrix evaluations may run on the rayon pool.
    pub deterministic: bool,
    /// Record a trace row every this many iterations (the last one is always kept).
    pub log_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            epsilon: 0.1,
            gamma_override: None,
            tolerance_override: None,
            penalty_override: None,
            max_iterations: 100_000,
            block_rule: BlockRule::Greedy,
            tuning_exponent_p: 1.0,
            deterministic: true,
            log_every: 1,
        }
    }
}

impl SolverConfig {
    pub fn with_epsilon(epsilon: f64) -> Self {
        SolverConfig {
            epsilon,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.epsilon) {
            return Err(Error::InvalidConfig("epsilon must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1"));
        }
        if self.log_every == 0 {
            return Err(Error::InvalidConfig("log_every must be at least 1"));
        }
        if !(self.tuning_exponent_p.is_finite() && self.tuning_exponent_p >= 1.0) {
            return Err(Error::InvalidConfig("tuning exponent p must be >= 1"));
        }
        if self.gamma_override.is_some_and(|g| !positive(g)) {
            return Err(Error::InvalidConfig("gamma override must be positive"));
        }
        if self.tolerance_override.is_some_and(|t| !positive(t)) {
            return Err(Error::InvalidConfig("tolerance override must be positive"));
        }
        if self.penalty_override.is_some_and(|a| !positive(a)) {
            return Err(Error::InvalidConfig("penalty override must be positive"));
        }
        Ok(())
    }
}
