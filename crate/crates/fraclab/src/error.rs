//! Error type shared by every module, with stable machine-readable codes.
//!
//! The CLI maps errors to exit statuses by [`Error::exit_code`] and emits
//! them as JSON objects `{"code": ..., "message": ...}`; the `code` strings
//! are part of the report schema and must stay stable.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The fractional order must lie strictly inside (0, 1).
    #[error("fractional order s = {0} is outside (0, 1)")]
    SOutOfRange(f64),

    /// A coefficient sample failed symmetry or positive definiteness.
    #[error("coefficient violation at x = {location:?}: {reason}")]
    CoefficientViolation { location: Vec<f64>, reason: String },

    #[error("mass matrix is not positive definite (factorization failed)")]
    SingularMass,

    #[error("eigensolver did not converge: off-diagonal residual {residual:.3e} after {sweeps} sweeps (target {target:.3e})")]
    ConvergenceFailure {
        residual: f64,
        target: f64,
        sweeps: usize,
    },

    #[error("quadrature failed to reach tolerance: achieved {achieved:.3e}, requested {requested:.3e}")]
    AccuracyFailure { achieved: f64, requested: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("gamma function pole at x = {0}")]
    GammaPole(f64),

    #[error("field too close to zero for Picone quotient: min |v| = {min_abs:.3e} below floor {floor:.3e}")]
    DivisionHazard { min_abs: f64, floor: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("ODE integration failed near r = {location}: {reason}")]
    Integration { location: f64, reason: String },

    #[error("expression error: {0}")]
    Expr(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable code for reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::SOutOfRange(_) => "s_out_of_range",
            Error::CoefficientViolation { .. } => "coefficient_violation",
            Error::SingularMass => "singular_mass",
            Error::ConvergenceFailure { .. } => "convergence_failure",
            Error::AccuracyFailure { .. } => "accuracy_failure",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::GammaPole(_) => "gamma_pole",
            Error::DivisionHazard { .. } => "division_hazard",
            Error::LinearSolve(_) => "linear_solve_failure",
            Error::Integration { .. } => "integration_failure",
            Error::Expr(_) => "expr_invalid",
            Error::Config(_) => "config_invalid",
            Error::Io(_) => "io_error",
        }
    }

    /// CLI exit status: 2 for validation problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_)
            | Error::SOutOfRange(_)
            | Error::CoefficientViolation { .. }
            | Error::DimensionMismatch { .. }
            | Error::GammaPole(_)
            | Error::Expr(_)
            | Error::Config(_)
            | Error::Io(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_and_exit_statuses() {
        assert_eq!(Error::SOutOfRange(1.5).code(), "s_out_of_range");
        assert_eq!(Error::SOutOfRange(1.5).exit_code(), 2);
        assert_eq!(
            Error::AccuracyFailure {
                achieved: 1e-3,
                requested: 1e-8
            }
            .exit_code(),
            3
        );
        assert_eq!(Error::SingularMass.exit_code(), 3);
    }
}
