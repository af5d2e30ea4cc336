use std::fmt;

use crate::apps::registration::RegistrationResult;
use crate::solvers::SolveOutcome;

/// Which side of an instance an entry belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    SourceMarginal,
    TargetMarginal,
    Cost,
    Budget,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Field::SourceMarginal => "r",
            Field::TargetMarginal => "c",
            Field::Cost => "C",
            Field::Budget => "s",
        };
        f.write_str(name)
    }
}

/// A single violated instance invariant.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    BudgetExceedsMass { budget: f64, min_mass: f64 },
    NegativeEntry { field: Field, index: usize, value: f64 },
    NonFiniteEntry { field: Field, index: usize },
    DimensionMismatch { expected: (usize, usize), found: (usize, usize) },
    Empty,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::BudgetExceedsMass { budget, min_mass } => {
                write!(f, "budget s={budget} exceeds min(|r|_1, |c|_1)={min_mass}")
            }
            Violation::NegativeEntry { field, index, value } => {
                write!(f, "negative entry {field}[{index}] = {value}")
            }
            Violation::NonFiniteEntry { field, index } => {
                write!(f, "non-finite entry {field}[{index}]")
            }
            Violation::DimensionMismatch { expected, found } => write!(
                f,
                "cost matrix is {}x{}, marginals require {}x{}",
                found.0, found.1, expected.0, expected.1
            ),
            Violation::Empty => f.write_str("instance has no support points"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid instance: {}", join(.0))]
    InvalidInstance(Vec<Violation>),

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("plan entry {0} (row-major) is negative or non-finite")]
    InvalidPlanEntry(usize),

    #[error("exponent {exponent:.3} exceeds the representable range")]
    Overflow { exponent: f64 },

    #[error("all entries of B(z) underflowed to zero")]
    MassUnderflow,

    #[error("dual point has a non-finite coordinate")]
    NonFiniteDual,

    #[error("rho requires positive arguments, got ({0}, {1})")]
    NonPositiveArgument(f64, f64),

    #[error("marginals must be strictly positive for block updates")]
    NonPositiveMarginal,

    #[error("degenerate instance: {0}")]
    DegenerateInstance(&'static str),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(&'static str),

    #[error("solver hit the iteration cap ({} iterations, final error {:.3e})", .0.iterations, .0.final_error)]
    MaxIterationsExceeded(Box<SolveOutcome>),

    #[error("step size underflow after repeated halving")]
    StepSizeUnderflow,

    #[error("marginal entropy H_min = {0} is not positive")]
    ZeroEntropy(f64),

    #[error("penalty {penalty} must exceed max cost {max_cost}")]
    PenaltyTooSmall { penalty: f64, max_cost: f64 },

    #[error("marginal masses differ: {0} vs {1}")]
    UnbalancedMarginals(f64, f64),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("instance with {0} support points exceeds the exact solver limit of {1}")]
    SizeLimitExceeded(usize, usize),

    #[error("empty input")]
    EmptyInput,

    #[error("transport plan carries no mass")]
    ZeroMassPlan,

    #[error("cross-covariance has rank below 2")]
    DegenerateSvd,

    #[error("registration did not converge after {} rounds", .0.records.len())]
    NoConvergence(Box<RegistrationResult>),

    #[error("slope needs at least two distinct sizes")]
    SlopeUndefined,

    #[error("trace iteration {0} does not follow {1}")]
    TraceOrder(usize, usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

impl Error {
    /// True for the numerical range failures a solver can recover from by
    /// shrinking its momentum step.
    pub fn is_numerical_range(&self) -> bool {
        matches!(
            self,
            Error::Overflow { .. } | Error::MassUnderflow | Error::NonFiniteDual
        )
    }
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Unwraps a solver result, treating an iteration-capped run as a usable
/// (unconverged) outcome.
pub fn accept_partial(result: Result<SolveOutcome>) -> Result<SolveOutcome> {
    match result {
        Err(Error::MaxIterationsExceeded(outcome)) => Ok(*outcome),
        other => other,
    }
}
