use core::fmt;

/// Errors raised by the estimation and set-arithmetic primitives.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Operand shapes do not agree.
    DimensionMismatch {
        expected: usize,
        found: usize,
    },
    /// An argument violates the operation's precondition.
    InvalidInput(&'static str),
    /// Interval division by an interval containing zero.
    DivisionByZero,
    /// Interval tangent argument leaves (−π/2, π/2).
    TanDomain,
    /// Steering interval does not fit inside the tangent domain.
    SteeringOutOfDomain,
    /// The H∞ existence condition failed at the given epoch.
    GammaInfeasible { epoch: u64 },
    /// No feasible γ was found inside the bisection bracket.
    FeasibilityBracketExhausted,
    /// The update bracket matrix could not be inverted.
    UpdateSingular,
    /// Non-finite state or covariance.
    FilterDivergence,
    /// Cost function with zero denominator.
    DegenerateCost,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::InvalidInput(what) => write!(f, "invalid input: {what}"),
            Error::DivisionByZero => f.write_str("interval division by an interval containing zero"),
            Error::TanDomain => f.write_str("interval tangent outside (-pi/2, pi/2)"),
            Error::SteeringOutOfDomain => f.write_str("steering interval out of domain"),
            Error::GammaInfeasible { epoch } => write!(f, "gamma infeasible at epoch {epoch}"),
            Error::FeasibilityBracketExhausted => f.write_str("feasibility bracket exhausted"),
            Error::UpdateSingular => f.write_str("update singular"),
            Error::FilterDivergence => f.write_str("filter divergence"),
            Error::DegenerateCost => f.write_str("degenerate cost"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
