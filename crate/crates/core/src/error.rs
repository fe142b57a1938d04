use thiserror::Error;

/// Failures reported by the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("radius range [{lo}, {hi}] is outside grid coverage [{min}, {max}]")]
    Range { lo: f64, hi: f64, min: f64, max: f64 },
    #[error("field vanishes at a node (|y| = {magnitude:e}); s and n are undefined at the defect")]
    Vertex { magnitude: f64 },
    #[error("degenerate quantity: {0}")]
    Degenerate(String),
    #[error("rotation fit undetermined: singular values {0:?}")]
    DegenerateFit([f64; 3]),
    #[error("minimizer did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("eigen-solver residual {residual:e} exceeds tolerance")]
    SolverFailure { residual: f64 },
    #[error("per-mode radial system ill-conditioned (condition number {condition:e})")]
    IllConditioned { condition: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
