//! Crate-wide error type.
//!
//! Every fallible operation in the library reports through [`Error`]; the CLI
//! maps variants onto its exit codes (configuration problems vs. numerical
//! failures) in one place.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Unified error type for the simulator.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Two objects that must share a dimension do not.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A matrix entry lies outside the declared dimension.
    #[error("entry ({row}, {col}) outside a {dim}-dimensional space")]
    EntryOutOfBounds { row: usize, col: usize, dim: usize },

    /// The Fock cutoff is too small for the requested operation.
    #[error("Fock cutoff {got} too small: need at least {need}")]
    FockCutoff { need: usize, got: usize },

    /// Physical parameters failed validation.
    #[error("invalid model parameters: {0}")]
    Params(String),

    /// Requested excitation manifold is not representable at this cutoff.
    #[error("excitation number {n_exc} not representable: maximum is {max} at this cutoff")]
    ManifoldRange { n_exc: usize, max: usize },

    /// Dense Hermitian eigensolver did not converge.
    #[error("eigensolver failed to converge")]
    EigenFailure,

    /// The steady-state solve finished but the residual check failed.
    #[error("steady-state residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    ResidualNotMet { residual: f64, tol: f64 },

    /// The null space of the Liouvillian looks more than one-dimensional.
    #[error("steady state appears non-unique: {0}")]
    NonUniqueSteadyState(String),

    /// A solved state violates a density-matrix invariant.
    #[error("state invariant violated: {0}")]
    StateInvariant(String),

    /// Sparse LU factorization or triangular solve failed outright.
    #[error("linear solver failed: {0}")]
    LinearSolve(String),

    /// Adaptive integrator could not take an acceptably small step.
    #[error("time step underflow at t = {t:.6} (dt = {dt:.3e})")]
    StepUnderflow { t: f64, dt: f64 },

    /// Trace or Hermiticity drifted past tolerance during integration.
    #[error("integration drift: {what} reached {value:.3e} (tolerance {tol:.3e})")]
    IntegrationDrift {
        what: &'static str,
        value: f64,
        tol: f64,
    },

    /// Sweep specification is unusable.
    #[error("sweep specification invalid: {0}")]
    Sweep(String),

    /// The cutoff ladder hit its ceiling without converging.
    #[error("Fock cutoff did not converge below ceiling {ceiling} (relative tolerance {rel_tol:.1e})")]
    CutoffNotConverged { ceiling: usize, rel_tol: f64 },

    /// An analysis routine received fewer points than it needs.
    #[error("too few points: need at least {need}, got {got}")]
    TooFewPoints { need: usize, got: usize },

    /// Config file / flag level problem (CLI exit code 2).
    #[error("configuration error: {0}")]
    Config(String),

    /// Underlying I/O failure while reading configs or writing outputs.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by user-supplied configuration rather than by
    /// the numerics; the CLI uses this to pick exit code 2 over 3.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Params(_)
                | Error::Sweep(_)
                | Error::FockCutoff { .. }
                | Error::ManifoldRange { .. }
        )
    }
}
