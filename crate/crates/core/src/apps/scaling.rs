//! Wall-clock scaling of a solver over instance size.

use std::time::Instant;

use serde::Serialize;

use crate::config::SolverConfig;
use crate::error::{accept_partial, Error, Result};
use crate::solvers::{solve, SolverKind};

use super::synthetic::scaling_instance;

const MAX_RUNS: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingConfig {
    pub sizes: Vec<usize>,
    pub seed: u64,
    pub solver: SolverKind,
    pub gamma: f64,
    pub tolerance: f64,
    pub iterations: usize,
    /// Accuracy used for marginal mixing and the dummy penalty.
    pub epsilon: f64,
    /// Minimum timed runs per size; the fastest is kept.
    pub repeats: usize,
    /// Small sizes are re-run until this much time has been measured.
    pub min_total_seconds: f64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig {
            sizes: vec![100, 200, 400, 800],
            seed: 0,
            solver: SolverKind::Aspot,
            gamma: 1e-3,
            tolerance: 1e-7,
            iterations: 1500,
            epsilon: 0.1,
            repeats: 3,
            min_total_seconds: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingPoint {
    pub n: usize,
    pub seconds: f64,
    pub iterations: usize,
    pub converged: bool,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingReport {
    pub points: Vec<ScalingPoint>,
    /// Least-squares slope of log(seconds) against log(n).
    pub slope: f64,
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(samples: &[(f64, f64)]) -> Result<f64> {
    let mut xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 2 || samples.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::SlopeUndefined);
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

pub fn bench_scaling(config: &ScalingConfig) -> Result<ScalingReport> {
    let mut distinct = config.sizes.clone();
    distinct.sort();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::SlopeUndefined);
    }
    let solver_config = SolverConfig {
        epsilon: config.epsilon,
        gamma_override: Some(config.gamma),
        tolerance_override: Some(config.tolerance),
        max_iterations: config.iterations,
        log_every: config.iterations,
        ..Default::default()
    };
    let mut points = Vec::new();
    for &n in &config.sizes {
        let instance = scaling_instance(n, config.seed.wrapping_add(n as u64))?;
        let mut seconds = f64::INFINITY;
        let mut outcome = None;
        let (mut runs, mut total) = (0, 0.0);
        while runs < config.repeats.max(1) || (total < config.min_total_seconds && runs < MAX_RUNS) {
            let start = Instant::now();
            let out = accept_partial(solve(config.solver, &instance, &solver_config))?;
            let elapsed = start.elapsed().as_secs_f64();
            seconds = seconds.min(elapsed);
            total += elapsed;
            runs += 1;
            outcome = Some(out);
        }
        let outcome = outcome.expect("at least one run");
        points.push(ScalingPoint {
            n,
            seconds,
            iterations: outcome.iterations,
            converged: outcome.converged,
            cost: outcome.plan.cost(instance.cost()),
        });
    }
    let samples: Vec<(f64, f64)> = points.iter().map(|p| (p.n as f64, p.seconds)).collect();
    let slope = loglog_slope(&samples)?;
    Ok(ScalingReport { points, slope })
}
