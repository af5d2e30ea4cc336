/// `println!` that ignores a closed stdout (for example when piped into `head`).
macro_rules! emit {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}
pub(crate) use emit;

use std::fs;
use std::path::Path;

use aspot_core::{plan_feasibility_gap, PotInstance, SolveOutcome, SolverConfig};
use serde::Serialize;
use serde_json::{json, Value};

use crate::commands::CliResult;

pub fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn plan_json(outcome: &SolveOutcome) -> Value {
    let x = outcome.plan.matrix();
    json!({
        "rows": x.nrows(),
        "cols": x.ncols(),
        "X": x.rows().into_iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
    })
}

pub fn summary_json(outcome: &SolveOutcome, instance: &PotInstance, config: &SolverConfig) -> CliResult<Value> {
    Ok(json!({
        "solver": outcome.solver.name(),
        "converged": outcome.converged,
        "cost": outcome.plan.cost(instance.cost()),
        "E": outcome.final_error,
        "tolerance": outcome.tolerance,
        "iterations": outcome.iterations,
        "wall_time_s": outcome.elapsed,
        "gamma": outcome.gamma,
        "eps_prime": outcome.eps_prime,
        "penalty": outcome.penalty,
        "h_min": outcome.h_min,
        "theory_bounds": outcome.theory,
        "stopping_iterate": outcome.stopping_iterate,
        "step_halvings": outcome.step_halvings,
        "plan_mass": outcome.plan.mass(),
        "feasibility_gap": plan_feasibility_gap(&outcome.plan, instance)?,
        "config": config,
    }))
}

/// Writes `trace.csv` style output for one outcome.
pub fn write_trace(path: &Path, outcome: &SolveOutcome) -> CliResult<()> {
    let file = fs::File::create(path)?;
    outcome.trace.write_csv(std::io::BufWriter::new(file))?;
    Ok(())
}

pub fn warn_unconverged(outcome: &SolveOutcome) {
    if !outcome.converged {
        eprintln!(
            "warning: {} stopped at the iteration cap ({} iterations, E = {:.3e} > {:.3e}); the plan is feasible but may be inaccurate",
            outcome.solver, outcome.iterations, outcome.final_error, outcome.tolerance
        );
    }
}
