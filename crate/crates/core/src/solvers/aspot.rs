//! Accelerated Sinkhorn for POT.
//!
//! Each iteration takes a Nesterov-style gradient step on the entropic dual,
//! polishes the extrapolated point with one Greenkhorn block update, keeps
//! whichever of that point and the previous iterate has smaller φ, and
//! applies one more block update to get the next iterate `ž`.

use std::time::Instant;

use ndarray::Array1;
use serde::Serialize;

use crate::config::SolverConfig;
use crate::dual::{DualPoint, EntropicContext, Evaluation};
use crate::error::{Error, Result};
use crate::problem::{PotInstance, TransportPlan};
use crate::rounding::round_pot;
use crate::trace::{ConvergenceTrace, TraceRecord};

use super::greenkhorn::{greenkhorn_update, Block};
use super::theory::{theory_bounds, theta_next, TheoryBounds};
use super::{all_positive, log_support, zero_budget_outcome, SolveOutcome, SolverKind};

/// How many times a momentum step may be halved before giving up.
const MAX_HALVINGS: usize = 60;

/// Derived quantities shared by ASPOT and the feasible Sinkhorn baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct AspotSetup {
    /// `ε / (4 log n)`.
    pub gamma: f64,
    /// Target accuracy on the entropic problem, `ε / (8‖C‖_∞)` after clamping.
    pub eps_tilde: f64,
    /// `(1 − ε̃/8)·r + ε̃/(8m)·1`.
    pub mixed_r: Array1<f64>,
    /// `(1 − ε̃/8)·c + ε̃/(8n)·1`.
    pub mixed_c: Array1<f64>,
}

impl AspotSetup {
    /// The instance with mixed marginals.
    pub fn mixed_instance(&self, instance: &PotInstance) -> Result<PotInstance> {
        instance.with_marginals(self.mixed_r.clone(), self.mixed_c.clone())
    }
}

pub fn aspot_setup(instance: &PotInstance, epsilon: f64) -> Result<AspotSetup> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidConfig("epsilon must be positive"));
    }
    let gamma = epsilon / (4.0 * log_support(instance)?);
    let s = instance.budget();
    let mut eps_tilde = epsilon / (8.0 * instance.max_cost());
    for mass in [instance.r_mass(), instance.c_mass()] {
        if mass > 1.0 {
            eps_tilde = eps_tilde.min(8.0 * (mass - s) / (mass - 1.0));
        }
    }
    // Keeps the mixing weights in [7/8, 1] even when ‖C‖_∞ is tiny or zero.
    eps_tilde = eps_tilde.min(1.0);
    if !(eps_tilde > 0.0) {
        return Err(Error::DegenerateInstance("budget equals a marginal mass above 1"));
    }
    let mix = |x: &Array1<f64>| {
        let k = x.len() as f64;
        x * (1.0 - eps_tilde / 8.0) + eps_tilde / (8.0 * k)
    };
    Ok(AspotSetup {
        gamma,
        eps_tilde,
        mixed_r: mix(instance.r()),
        mixed_c: mix(instance.c()),
    })
}

/// The three sequences carried between iterations.
#[derive(Clone, Debug, PartialEq)]
pub struct AspotState {
    /// Completed iterations.
    pub t: usize,
    /// Momentum weight θ_t.
    pub theta: f64,
    /// Gradient-step sequence `z̃`.
    pub z_tilde: DualPoint,
    /// Main iterate `ž`.
    pub z_check: DualPoint,
}

/// What happened during one iteration, for inspection and testing.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AspotIteration {
    /// Index of the iterate produced (`t + 1`).
    pub t: usize,
    pub theta: f64,
    pub theta_next: f64,
    /// φ at the extrapolated point `z̀`.
    pub phi_grave: f64,
    /// φ after polishing `z̀`.
    pub phi_hat: f64,
    /// φ at the previous main iterate.
    pub phi_check: f64,
    /// φ at the better of the two.
    pub phi_best: f64,
    /// φ at the new main iterate.
    pub phi_check_next: f64,
    pub took_hat: bool,
    pub hat_block: Block,
    pub check_block: Block,
    /// Stopping quantity at the new main iterate.
    pub error: f64,
    /// Halvings of the momentum step in this iteration.
    pub halvings: usize,
    /// True when the interpolated point was out of range and momentum was reset.
    pub restarted: bool,
}

/// Step-by-step ASPOT driver. [`aspot_solve`] runs it to completion.
pub struct AspotSolver {
    original: PotInstance,
    ctx: EntropicContext,
    setup: AspotSetup,
    config: SolverConfig,
    gamma: f64,
    tolerance: f64,
    step_base: f64,
    theory: Option<TheoryBounds>,
    state: AspotState,
    check: Evaluation,
    phi_check: f64,
    error: f64,
    gk_calls: usize,
    halvings: usize,
    trace: ConvergenceTrace,
    start: Instant,
}

impl AspotSolver {
    pub fn new(instance: &PotInstance, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        if instance.budget() <= 0.0 {
            return Err(Error::DegenerateInstance("budget must be positive"));
        }
        let start = Instant::now();
        let setup = aspot_setup(instance, config.epsilon)?;
        let gamma = config.gamma_override.unwrap_or(setup.gamma);
        let mixed = setup.mixed_instance(instance)?;
        if !(all_positive(mixed.r()) && all_positive(mixed.c())) {
            return Err(Error::NonPositiveMarginal);
        }
        let tolerance = config.tolerance_override.unwrap_or(setup.eps_tilde);
        let denom = mixed.r_mass() + mixed.c_mass() - mixed.budget();
        let step_base = gamma / (3.0 * denom);
        let theory = theory_bounds(&mixed, gamma, setup.eps_tilde).ok();
        let ctx = EntropicContext::new(mixed, gamma)?.with_parallel(!config.deterministic);

        let z0 = DualPoint::zeros(instance.rows(), instance.cols());
        let check = ctx.evaluate(&z0)?;
        let phi_check = check.phi(ctx.instance());
        let error = check.feasibility_error(ctx.instance());
        let mut solver = AspotSolver {
            original: instance.clone(),
            ctx,
            setup,
            config: config.clone(),
            gamma,
            tolerance,
            step_base,
            theory,
            state: AspotState {
                t: 0,
                theta: 1.0,
                z_tilde: z0.clone(),
                z_check: z0,
            },
            check,
            phi_check,
            error,
            gk_calls: 0,
            halvings: 0,
            trace: ConvergenceTrace::new(),
            start,
        };
        solver.record()?;
        Ok(solver)
    }

    pub fn state(&self) -> &AspotState {
        &self.state
    }

    pub fn setup(&self) -> &AspotSetup {
        &self.setup
    }

    pub fn context(&self) -> &EntropicContext {
        &self.ctx
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Stopping quantity `‖∇φ(ž)‖₁`.
    pub fn error(&self) -> f64 {
        self.error
    }

    /// φ at the current main iterate.
    pub fn phi(&self) -> f64 {
        self.phi_check
    }

    pub fn is_converged(&self) -> bool {
        self.error <= self.tolerance
    }

    pub fn trace(&self) -> &ConvergenceTrace {
        &self.trace
    }

    /// The rounded plan at the current main iterate, feasible for the
    /// original instance.
    pub fn current_plan(&self) -> Result<TransportPlan> {
        round_pot(self.check.b(), &self.original)
    }

    /// Runs one iteration and returns its report.
    pub fn step(&mut self) -> Result<AspotIteration> {
        let ctx = &self.ctx;
        let inst = ctx.instance();
        let rule = self.config.block_rule;
        let mut calls = self.gk_calls;
        let mut greenkhorn = |eval: &Evaluation| {
            let out = greenkhorn_update(ctx, eval, rule, calls);
            calls += 1;
            out
        };
        let theta = self.state.theta;

        let mut restarted = false;
        let mut z_bar = self.state.z_check.lincomb(1.0 - theta, &self.state.z_tilde, theta);
        let grad = match ctx.evaluate(&z_bar) {
            Ok(e) => e.gradient(inst),
            Err(e) if e.is_numerical_range() => {
                self.state.z_tilde = self.state.z_check.clone();
                z_bar = self.state.z_check.clone();
                restarted = true;
                self.check.gradient(inst)
            }
            Err(e) => return Err(e),
        };

        let base = self.step_base / theta;
        let mut halvings = 0;
        let (z_tilde_next, phi_grave, hat_block, hat) = loop {
            let scale = base * 0.5f64.powi(halvings as i32);
            let z_next = z_bar.step(-scale, &grad);
            let delta = z_next.lincomb(1.0, &self.state.z_tilde, -1.0);
            let z_grave = z_bar.step(theta, &delta);
            let attempt = ctx
                .evaluate(&z_grave)
                .and_then(|g| greenkhorn(&g).map(|(blk, h)| (g.phi(inst), blk, h)));
            match attempt {
                Ok((phi, blk, h)) => break (z_next, phi, blk, h),
                Err(e) if e.is_numerical_range() => {
                    if halvings == MAX_HALVINGS {
                        return Err(Error::StepSizeUnderflow);
                    }
                    halvings += 1;
                }
                Err(e) => return Err(e),
            }
        };

        let phi_hat = hat.phi(inst);
        let phi_check = self.phi_check;
        let took_hat = phi_hat < phi_check;
        let best = if took_hat { &hat } else { &self.check };
        let phi_best = phi_hat.min(phi_check);
        let (check_block, next) = greenkhorn(best)?;
        drop(hat);
        let phi_next = next.phi(inst);
        let error = next.feasibility_error(inst);

        self.gk_calls = calls;
        self.halvings += halvings;
        let theta_next = theta_next(theta);
        self.state.t += 1;
        self.state.theta = theta_next;
        self.state.z_tilde = z_tilde_next;
        self.state.z_check = next.point().clone();
        self.phi_check = phi_next;
        self.error = error;
        self.check = next;

        let t = self.state.t;
        if t % self.config.log_every == 0 || self.is_converged() || t == self.config.max_iterations {
            self.record()?;
        }
        Ok(AspotIteration {
            t,
            theta,
            theta_next,
            phi_grave,
            phi_hat,
            phi_check,
            phi_best,
            phi_check_next: self.phi_check,
            took_hat,
            hat_block,
            check_block,
            error: self.error,
            halvings,
            restarted,
        })
    }

    fn record(&mut self) -> Result<()> {
        let cost = self.current_plan()?.cost(self.original.cost());
        self.trace.push(TraceRecord {
            t: self.state.t,
            error: self.error,
            phi: self.phi_check,
            rounded_cost: Some(cost),
            elapsed: self.start.elapsed().as_secs_f64(),
        })
    }

    /// Iterates until the stopping rule holds or the cap is reached.
    pub fn run(mut self) -> Result<SolveOutcome> {
        while !self.is_converged() && self.state.t < self.config.max_iterations {
            self.step()?;
        }
        self.finish()
    }

    /// Rounds the current iterate and packages the outcome without checking
    /// convergence.
    pub fn finish(self) -> Result<SolveOutcome> {
        let plan = self.current_plan()?;
        Ok(SolveOutcome {
            solver: SolverKind::Aspot,
            plan,
            trace: self.trace,
            iterations: self.state.t,
            converged: self.error <= self.tolerance,
            final_error: self.error,
            tolerance: self.tolerance,
            gamma: self.gamma,
            penalty: None,
            h_min: None,
            eps_prime: self.setup.eps_tilde,
            theory: self.theory,
            stopping_iterate: "z_check",
            step_halvings: self.halvings,
            elapsed: self.start.elapsed().as_secs_f64(),
        })
    }
}

/// Solves POT to accuracy `config.epsilon`. Returns
/// [`Error::MaxIterationsExceeded`] carrying the last rounded plan when the
/// cap is hit.
pub fn aspot_solve(instance: &PotInstance, config: &SolverConfig) -> Result<SolveOutcome> {
    config.validate()?;
    if instance.budget() == 0.0 {
        return zero_budget_outcome(SolverKind::Aspot, instance);
    }
    AspotSolver::new(instance, config)?.run()?.into_result()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::BlockRule;
    use crate::problem::FEASIBILITY_TOL;
    use ndarray::{array, Array2};

    fn small() -> PotInstance {
        PotInstance::new(
            array![0.3, 0.2, 0.5],
            array![0.4, 0.4, 0.2],
            array![[0.0, 1.0, 0.5], [1.0, 0.0, 0.3], [0.2, 0.7, 0.0]],
            0.6,
        )
        .unwrap()
    }

    #[test]
    fn setup_uniform_example() {
        let inst = PotInstance::new(array![0.5, 0.5], array![0.5, 0.5], Array2::ones((2, 2)), 0.5).unwrap();
        let st = aspot_setup(&inst, 0.1).unwrap();
        assert!((st.gamma - 0.1 / (4.0 * 2f64.ln())).abs() < 1e-15);
        assert!((st.eps_tilde - 0.0125).abs() < 1e-15);
        for x in st.mixed_r.iter().chain(&st.mixed_c) {
            assert!((x - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn setup_clamps_for_heavy_marginals() {
        let inst = PotInstance::new(array![1.0, 1.0], array![1.0, 1.0], Array2::ones((2, 2)) * 0.01, 1.9).unwrap();
        let st = aspot_setup(&inst, 0.1).unwrap();
        // ε/(8‖C‖) = 1.25, clamp 8·0.1/1 = 0.8.
        assert!((st.eps_tilde - 0.8).abs() < 1e-12);
        let mixed = st.mixed_instance(&inst).unwrap();
        assert!(mixed.budget() <= mixed.r_mass().min(mixed.c_mass()));
    }

    #[test]
    fn setup_rejects_single_point() {
        let inst = PotInstance::new(array![1.0], array![1.0], array![[0.0]], 0.5).unwrap();
        assert!(matches!(aspot_setup(&inst, 0.1), Err(Error::DegenerateInstance(_))));
    }

    #[test]
    fn solves_small_instance() {
        let inst = small();
        let out = aspot_solve(&inst, &SolverConfig::with_epsilon(0.05)).unwrap();
        assert!(out.converged);
        assert!(out.final_error <= out.tolerance);
        let x = out.plan.matrix();
        assert!((x.sum() - 0.6).abs() < FEASIBILITY_TOL);
        // Cheapest diagonal can carry everything at zero cost.
        assert!(out.plan.cost(inst.cost()) <= 0.05);
    }

    #[test]
    fn chain_ordering_holds() {
        for rule in [BlockRule::Greedy, BlockRule::RoundRobin] {
            let config = SolverConfig {
                epsilon: 0.05,
                block_rule: rule,
                ..Default::default()
            };
            let mut solver = AspotSolver::new(&small(), &config).unwrap();
            for _ in 0..200 {
                let it = solver.step().unwrap();
                let tol = 1e-12 * it.phi_grave.abs().max(1.0);
                assert!(it.phi_check_next <= it.phi_best + tol, "{it:?}");
                assert!(it.phi_best <= it.phi_hat + tol);
                assert!(it.phi_hat <= it.phi_grave + tol);
                assert!(it.phi_best <= it.phi_check + tol);
                assert!(it.theta_next < it.theta);
            }
        }
    }

    #[test]
    fn zero_budget_gives_empty_plan() {
        let inst = small().with_budget(0.0).unwrap();
        let out = aspot_solve(&inst, &SolverConfig::default()).unwrap();
        assert_eq!(out.plan.matrix().sum(), 0.0);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn iteration_cap_carries_partial_result() {
        let config = SolverConfig {
            epsilon: 1e-3,
            max_iterations: 3,
            ..Default::default()
        };
        match aspot_solve(&small(), &config) {
            Err(Error::MaxIterationsExceeded(out)) => {
                assert_eq!(out.iterations, 3);
                assert!(!out.converged);
                assert_eq!(out.trace.last().unwrap().t, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parallel_matches_serial() {
        let mut cfg = SolverConfig::with_epsilon(0.05);
        let a = aspot_solve(&small(), &cfg).unwrap();
        cfg.deterministic = false;
        let b = aspot_solve(&small(), &cfg).unwrap();
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.plan.matrix(), b.plan.matrix());
    }
}
