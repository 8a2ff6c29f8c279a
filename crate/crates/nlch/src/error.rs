//! Error type shared by every subsystem.
//!
//! Scalar diagnostics are stored as `f64` so the error type stays
//! non-generic; solvers convert with [`crate::Real::as_f64`] when
//! constructing variants.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("fields live on different domains")]
    DomainMismatch,

    #[error("unsupported Lebesgue exponent p = {0} (supported: 1, 2, 10/3, 6, inf)")]
    UnsupportedExponent(f64),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("kernel fails admissibility gates: {0}")]
    KernelInadmissible(String),

    #[error("kernel evaluation requires r > 0, got r = {0}")]
    NonPositiveRadius(f64),

    #[error("argument {arg} lies outside the effective domain [{lo}, {hi}]")]
    OutsideGraphDomain { arg: f64, lo: f64, hi: f64 },

    #[error("resolvent root-finder failed to converge (graph definition bug?): residual {0}")]
    ResolventNoConvergence(f64),

    #[error("invalid coupling function: {0}")]
    InvalidCoupling(String),

    #[error("Picard iterate diverged (non-finite values) at sweep {sweep}")]
    PicardDiverged { sweep: usize },

    #[error(
        "Picard iteration did not reach tol {tol} in {max_iter} sweeps (last residual {last})"
    )]
    PicardMaxIter {
        tol: f64,
        max_iter: usize,
        last: f64,
        residuals: Vec<f64>,
    },

    #[error("constraint reaction blow-up along the regularization schedule: |xi| grew to {0}")]
    ConstraintBlowup(f64),

    #[error(
        "linear solver stalled at time step {step}: residual {residual} after {iters} iterations"
    )]
    LinearSolveFailure {
        step: usize,
        iters: usize,
        residual: f64,
    },

    #[error("time-step halving limit ({limit}) exceeded at step {step}: reaction coefficient too negative")]
    DtHalvingLimit { step: usize, limit: u32 },

    #[error("discrete energy bound violated at step {step}: E + D = {lhs} > {rhs}")]
    EnergyBoundViolation { step: usize, lhs: f64, rhs: f64 },

    #[error("nonnegativity violated: min value {min} < -{tol}")]
    PositivityViolation { min: f64, tol: f64 },

    #[error("undefined Lipschitz ratio: the two inputs coincide on the window")]
    UndefinedRatio,

    #[error(
        "outer fixed-point iteration did not reach tol {tol} in {max_iter} iterations (last residual {last})"
    )]
    OuterNoConvergence {
        tol: f64,
        max_iter: usize,
        last: f64,
        residuals: Vec<f64>,
    },

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("malformed snapshot file: {0}")]
    SnapshotFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Machine-readable error category, stable across releases.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Config { .. } => "config",
            Error::InvalidDomain(_) | Error::InvalidField(_) | Error::DomainMismatch => "config",
            Error::UnsupportedExponent(_) => "config",
            Error::InvalidKernel(_) | Error::NonPositiveRadius(_) => "config",
            Error::InvalidCoupling(_) => "config",
            Error::KernelInadmissible(_) => "kernel-inadmissible",
            Error::OutsideGraphDomain { .. } => "invariant-violation",
            Error::ResolventNoConvergence(_) => "resolvent-non-convergence",
            Error::PicardDiverged { .. } => "picard-divergence",
            Error::PicardMaxIter { .. } => "picard-non-convergence",
            Error::ConstraintBlowup(_) => "constraint-blowup",
            Error::LinearSolveFailure { .. } => "linear-solver-non-convergence",
            Error::DtHalvingLimit { .. } => "dt-halving-limit",
            Error::EnergyBoundViolation { .. } => "energy-bound",
            Error::PositivityViolation { .. } => "positivity",
            Error::UndefinedRatio => "undefined-ratio",
            Error::OuterNoConvergence { .. } => "outer-non-convergence",
            Error::SnapshotFormat(_) => "snapshot-format",
            Error::Io(_) => "io",
        }
    }

    /// Process exit code for the CLI: 2 config, 3 non-convergence,
    /// 4 invariant violation, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. }
            | Error::InvalidDomain(_)
            | Error::InvalidField(_)
            | Error::DomainMismatch
            | Error::UnsupportedExponent(_)
            | Error::InvalidKernel(_)
            | Error::NonPositiveRadius(_)
            | Error::InvalidCoupling(_) => 2,
            Error::PicardMaxIter { .. }
            | Error::PicardDiverged { .. }
            | Error::OuterNoConvergence { .. }
            | Error::LinearSolveFailure { .. }
            | Error::ResolventNoConvergence(_)
            | Error::DtHalvingLimit { .. } => 3,
            Error::KernelInadmissible(_)
            | Error::EnergyBoundViolation { .. }
            | Error::PositivityViolation { .. }
            | Error::ConstraintBlowup(_)
            | Error::OutsideGraphDomain { .. }
            | Error::UndefinedRatio => 4,
            Error::SnapshotFormat(_) | Error::Io(_) => 1,
        }
    }
}
