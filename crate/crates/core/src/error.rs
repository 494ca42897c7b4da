//! Error type shared across the crate.

/// Everything that can go wrong while building or evaluating filters.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A rate vector must contain at least one entry.
    #[error("rate vector must contain at least one rate")]
    EmptyRates,

    /// Every chain rate must be a strictly positive finite number.
    #[error("rate[{index}] = {value} must be strictly positive and finite")]
    NonPositiveRate { index: usize, value: f64 },

    /// A vector did not have the length the relative degree demands.
    #[error("expected {expected} values, found {found}")]
    DegreeMismatch { expected: usize, found: usize },

    /// Chain truncation depth outside `1..=r`.
    #[error("chain depth {depth} out of range 1..={max}")]
    ChainDepthOutOfRange { depth: usize, max: usize },

    /// Two decay rates are (numerically) equal, so the exponential-sum
    /// interpolation problem is singular.
    #[error("degenerate rates: relative separation {separation:e} is at or below {limit:e}")]
    DegenerateRates { separation: f64, limit: f64 },

    /// A linear solve hit a pivot too small to trust.
    #[error("linear system is numerically singular")]
    SingularSystem,

    /// A solved system failed its residual check.
    #[error("solve residual {residual:e} exceeds limit {limit:e}")]
    ResidualExceeded { residual: f64, limit: f64 },

    /// Continuous-time bounds are only defined from their anchor time on.
    #[error("t = {t} precedes the bound anchor t0 = {t0}")]
    TimeBeforeAnchor { t: f64, t0: f64 },

    /// Discrete-time decay factors must lie in (0, 1].
    #[error("lambda = {value} must lie in (0, 1]")]
    RateOutsideUnitInterval { value: f64 },

    /// Sampling periods must be strictly positive.
    #[error("dt = {value} must be strictly positive")]
    NonPositiveDt { value: f64 },

    /// The tracking objective lost strict convexity on one input axis.
    #[error("nonpositive quadratic curvature {value} on the {axis} input axis")]
    NonPositiveCurvature { axis: char, value: f64 },

    /// A simulation configuration failed validation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A log-analysis routine needs at least one recorded step.
    #[error("log contains no steps")]
    EmptyLog,

    /// Activation-anchored analysis needs the barrier constraint to have
    /// been active at some step.
    #[error("the barrier constraint is never active in the log")]
    ConstraintNeverActive,

    /// A constraint label string did not match any known label.
    #[error("unknown constraint label `{0}`")]
    UnknownConstraintLabel(String),

    /// A solver status string did not match any known status.
    #[error("unknown solve status `{0}`")]
    UnknownSolveStatus(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
