//! Sinkhorn on the dummy-node extension, in two flavours: the feasible
//! baseline (mixed marginals, γ = ε/(4 log n)) and the entropy-tuned variant.

use std::time::Instant;

use ndarray::{Array1, Array2, Zip};

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::extend::{default_penalty, extend, extract_block, ExtendedOtInstance};
use crate::problem::{PotInstance, TransportPlan};
use crate::rounding::{round_balanced, round_pot};
use crate::trace::{ConvergenceTrace, TraceRecord};

use super::aspot::aspot_setup;
use super::theory::entropy;
use super::{log_support, zero_budget_outcome, SolveOutcome, SolverKind};

/// Log-domain Sinkhorn state on a balanced problem.
///
/// `B_ij = exp(−C_ij/γ + u_i + v_j)`. The row log-sum-exp for the current
/// `v` is cached, so each iteration costs two passes over the matrix.
#[derive(Clone, Debug)]
pub struct SinkhornRun {
    log_kernel: Array2<f64>,
    r: Array1<f64>,
    c: Array1<f64>,
    pub u: Array1<f64>,
    pub v: Array1<f64>,
    row_lse: Array1<f64>,
    col_lse: Array1<f64>,
    pub iterations: usize,
    /// `‖B1 − r‖₁ + ‖Bᵀ1 − c‖₁` at the current potentials.
    pub error: f64,
}

fn log_sum_exp<'a>(xs: impl Iterator<Item = f64> + Clone + 'a) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn log_or_neg_inf(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        f64::NEG_INFINITY
    }
}

impl SinkhornRun {
    pub fn new(ext: &ExtendedOtInstance, gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidConfig("gamma must be positive"));
        }
        let (m, n) = ext.cost.dim();
        let mut run = SinkhornRun {
            log_kernel: ext.cost.mapv(|c| -c / gamma),
            r: ext.r.clone(),
            c: ext.c.clone(),
            u: Array1::zeros(m),
            v: Array1::zeros(n),
            row_lse: Array1::zeros(m),
            col_lse: Array1::zeros(n),
            iterations: 0,
            error: f64::INFINITY,
        };
        run.refresh_row_lse();
        run.refresh_col_lse();
        run.update_error();
        Ok(run)
    }

    fn refresh_row_lse(&mut self) {
        let v = &self.v;
        for (lse, row) in self.row_lse.iter_mut().zip(self.log_kernel.rows()) {
            *lse = log_sum_exp(row.iter().zip(v).map(|(k, vj)| k + vj));
        }
    }

    fn refresh_col_lse(&mut self) {
        let u = &self.u;
        let mut max = Array1::from_elem(self.c.len(), f64::NEG_INFINITY);
        for (row, ui) in self.log_kernel.rows().into_iter().zip(u) {
            Zip::from(&mut max).and(&row).for_each(|m, k| *m = m.max(k + ui));
        }
        let mut acc = Array1::<f64>::zeros(self.c.len());
        for (row, ui) in self.log_kernel.rows().into_iter().zip(u) {
            if *ui == f64::NEG_INFINITY {
                continue;
            }
            Zip::from(&mut acc)
                .and(&row)
                .and(&max)
                .for_each(|a, k, m| *a += (k + ui - m).exp());
        }
        Zip::from(&mut self.col_lse)
            .and(&acc)
            .and(&max)
            .for_each(|l, a, m| *l = if *m == f64::NEG_INFINITY { *m } else { m + a.ln() });
    }

    fn update_error(&mut self) {
        let rows: f64 = Zip::from(&self.u)
            .and(&self.row_lse)
            .and(&self.r)
            .fold(0.0, |acc, u, l, r| acc + ((u + l).exp() - r).abs());
        let cols: f64 = Zip::from(&self.v)
            .and(&self.col_lse)
            .and(&self.c)
            .fold(0.0, |acc, v, l, c| acc + ((v + l).exp() - c).abs());
        self.error = rows + cols;
    }

    /// Matches row sums to `r`.
    pub fn update_u(&mut self) {
        Zip::from(&mut self.u)
            .and(&self.r)
            .and(&self.row_lse)
            .for_each(|u, &r, l| *u = log_or_neg_inf(r) - l);
        self.refresh_col_lse();
    }

    /// Matches column sums to `c`.
    pub fn update_v(&mut self) {
        Zip::from(&mut self.v)
            .and(&self.c)
            .and(&self.col_lse)
            .for_each(|v, &c, l| *v = log_or_neg_inf(c) - l);
        self.refresh_row_lse();
    }

    /// One full iteration: a row then a column update.
    pub fn iterate(&mut self) {
        self.update_u();
        self.update_v();
        self.iterations += 1;
        self.update_error();
    }

    pub fn row_sums(&self) -> Array1<f64> {
        Zip::from(&self.u).and(&self.row_lse).map_collect(|u, l| (u + l).exp())
    }

    pub fn col_sums(&self) -> Array1<f64> {
        Zip::from(&self.v).and(&self.col_lse).map_collect(|v, l| (v + l).exp())
    }

    /// Balanced dual `‖B‖₁ − ⟨u, r⟩ − ⟨v, c⟩`, skipping zero-mass entries.
    pub fn objective(&self) -> f64 {
        let dot = |p: &Array1<f64>, q: &Array1<f64>| -> f64 {
            p.iter().zip(q).filter(|(_, &q)| q > 0.0).map(|(p, q)| p * q).sum()
        };
        self.row_sums().sum() - dot(&self.u, &self.r) - dot(&self.v, &self.c)
    }

    pub fn matrix(&self) -> Array2<f64> {
        let mut b = self.log_kernel.clone();
        for (mut row, ui) in b.rows_mut().into_iter().zip(&self.u) {
            Zip::from(&mut row).and(&self.v).for_each(|x, vj| *x = (*x + ui + vj).exp());
        }
        b
    }

    /// Rounds the current matrix onto the extended polytope, keeps the real
    /// block and rounds that onto the original POT constraints.
    pub fn plan(&self, original: &PotInstance) -> Result<TransportPlan> {
        let balanced = round_balanced(&self.matrix(), &self.r, &self.c)?;
        let block = extract_block(&balanced)?.block;
        round_pot(&block, original)
    }
}

/// Runs Sinkhorn on an extended instance until the marginal error drops to
/// `tolerance` or `max_iterations` is reached.
pub fn sinkhorn_extended(ext: &ExtendedOtInstance, gamma: f64, tolerance: f64, max_iterations: usize) -> Result<SinkhornRun> {
    let mut run = SinkhornRun::new(ext, gamma)?;
    while run.error > tolerance && run.iterations < max_iterations {
        run.iterate();
    }
    Ok(run)
}

struct Plan<'a> {
    kind: SolverKind,
    original: &'a PotInstance,
    ext: ExtendedOtInstance,
    gamma: f64,
    tolerance: f64,
    eps_prime: f64,
    h_min: Option<f64>,
}

fn drive(p: Plan<'_>, config: &SolverConfig, start: Instant) -> Result<SolveOutcome> {
    let mut run = SinkhornRun::new(&p.ext, p.gamma)?;
    let mut trace = ConvergenceTrace::new();
    let record = |run: &SinkhornRun, trace: &mut ConvergenceTrace| -> Result<()> {
        let cost = run.plan(p.original)?.cost(p.original.cost());
        trace.push(TraceRecord {
            t: run.iterations,
            error: run.error,
            phi: run.objective(),
            rounded_cost: Some(cost),
            elapsed: start.elapsed().as_secs_f64(),
        })
    };
    record(&run, &mut trace)?;
    while run.error > p.tolerance && run.iterations < config.max_iterations {
        run.iterate();
        let t = run.iterations;
        if t % config.log_every == 0 || run.error <= p.tolerance || t == config.max_iterations {
            record(&run, &mut trace)?;
        }
    }
    if !run.error.is_finite() || !run.u.iter().chain(&run.v).all(|x| !x.is_nan()) {
        return Err(Error::NonFiniteDual);
    }
    let plan = run.plan(p.original)?;
    SolveOutcome {
        solver: p.kind,
        plan,
        trace,
        iterations: run.iterations,
        converged: run.error <= p.tolerance,
        final_error: run.error,
        tolerance: p.tolerance,
        gamma: p.gamma,
        penalty: Some(p.ext.penalty),
        h_min: p.h_min,
        eps_prime: p.eps_prime,
        theory: None,
        stopping_iterate: "uv",
        step_halvings: 0,
        elapsed: start.elapsed().as_secs_f64(),
    }
    .into_result()
}

/// Sinkhorn on the extension of the mixed instance, with the same γ and
/// tolerance ASPOT uses.
pub fn feasible_sinkhorn_solve(instance: &PotInstance, config: &SolverConfig) -> Result<SolveOutcome> {
    config.validate()?;
    if instance.budget() == 0.0 {
        return zero_budget_outcome(SolverKind::Sinkhorn, instance);
    }
    let start = Instant::now();
    let setup = aspot_setup(instance, config.epsilon)?;
    let mixed = setup.mixed_instance(instance)?;
    let penalty = config
        .penalty_override
        .unwrap_or_else(|| default_penalty(instance, config.epsilon));
    let ext = extend(&mixed, penalty)?;
    let plan = Plan {
        kind: SolverKind::Sinkhorn,
        original: instance,
        ext,
        gamma: config.gamma_override.unwrap_or(setup.gamma),
        tolerance: config.tolerance_override.unwrap_or(setup.eps_tilde),
        eps_prime: setup.eps_tilde,
        h_min: None,
    };
    drive(plan, config, start)
}

/// `γ = (2ε / (49·H_min))^{1/p}` and `ε' = H_min·γ^p`.
pub fn tuned_gamma(epsilon: f64, h_min: f64, p: f64) -> Result<(f64, f64)> {
    if !(h_min > 0.0) {
        return Err(Error::ZeroEntropy(h_min));
    }
    if !(epsilon > 0.0 && p >= 1.0) {
        return Err(Error::InvalidConfig("epsilon must be positive and p >= 1"));
    }
    let gamma = (2.0 * epsilon / (49.0 * h_min)).powf(1.0 / p);
    Ok((gamma, h_min * gamma.powf(p)))
}

/// Sinkhorn on the extension of the raw instance with γ tuned to the
/// marginal entropy; exponent from `config.tuning_exponent_p`.
pub fn tuned_sinkhorn_solve(instance: &PotInstance, config: &SolverConfig) -> Result<SolveOutcome> {
    config.validate()?;
    if instance.budget() == 0.0 {
        return zero_budget_outcome(SolverKind::TunedSinkhorn, instance);
    }
    log_support(instance)?;
    let start = Instant::now();
    let h_min = entropy(instance.r()).min(entropy(instance.c()));
    let (gamma, eps_prime) = tuned_gamma(config.epsilon, h_min, config.tuning_exponent_p)?;
    let penalty = config
        .penalty_override
        .unwrap_or_else(|| default_penalty(instance, config.epsilon));
    let ext = extend(instance, penalty)?;
    let plan = Plan {
        kind: SolverKind::TunedSinkhorn,
        original: instance,
        ext,
        gamma: config.gamma_override.unwrap_or(gamma),
        tolerance: config.tolerance_override.unwrap_or(eps_prime),
        eps_prime,
        h_min: Some(h_min),
    };
    drive(plan, config, start)
}
