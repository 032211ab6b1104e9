use thiserror::Error;

/// Errors raised by the simulation core.
///
/// Configuration-style problems (bad sizes, out-of-range hop placement,
/// mismatched disorder) are distinguished from numeric-contract failures
/// so the CLI can map them onto different exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("number of unit cells must be even and at least 2, got {0}")]
    InvalidCellCount(usize),

    #[error("coupling scale J must be positive and finite, got {0}")]
    InvalidCoupling(f64),

    #[error("extra long-range hop target a_{m} is outside [3, {max}]")]
    HopOutOfRange { m: usize, max: usize },

    #[error("lattice size L={0} is invalid: L must be odd with (L-1)/2 even and >= 2")]
    InvalidSize(usize),

    #[error("chiral operator needs an odd dimension >= 5, got {0}")]
    InvalidChiralDimension(usize),

    #[error("disorder realization does not match the lattice: {0}")]
    DisorderMismatch(String),

    #[error("disorder strength must be finite and non-negative, got {0}")]
    InvalidDisorderStrength(f64),

    #[error("qubit detuning must be nonzero (dispersive regime)")]
    ZeroDetuning,

    #[error("site ordinal {ordinal} out of range for L={len}")]
    SiteOutOfRange { ordinal: usize, len: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("phase reference amplitude {0:e} is below the phase threshold")]
    UndefinedPhaseReference(f64),

    #[error("analytic zero mode is only defined for the base-ports lattice")]
    AnalyticVariant,

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("eigensolver failed at theta={theta}: {source}")]
    EigenAtTheta {
        theta: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("norm drift {drift:e} exceeds {limit:e} (dt={dt}); reduce the integrator step")]
    NormDrift { drift: f64, limit: f64, dt: f64 },

    #[error("linear solve is singular or inaccurate (relative residual {0:e})")]
    SingularSystem(f64),

    #[error("sweep cell (omega={omega}, w={w}, seed #{seed_index}) failed: {source}")]
    SweepCell {
        omega: f64,
        w: f64,
        seed_index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for failures of a numeric contract (as opposed to invalid input).
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::NoConvergence { .. } | Error::NormDrift { .. } | Error::SingularSystem(_) => true,
            Error::EigenAtTheta { source, .. } | Error::SweepCell { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
