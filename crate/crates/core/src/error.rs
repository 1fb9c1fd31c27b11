use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("frequency {f} Hz is outside the filter band [{lo}, {hi}] Hz")]
    FrequencyOutOfBand { f: f64, lo: f64, hi: f64 },

    #[error("eigenvalue magnitude {amplitude} is outside the invertible range of the filter")]
    AmplitudeOutOfRange { amplitude: f64 },

    #[error("inverted frequency {f} Hz is not positive or lies outside the filter band")]
    NonPositiveFrequency { f: f64 },

    #[error("signal has zero mean power; SNR is undefined")]
    ZeroPowerSignal,

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("all singular values are zero")]
    AllZeroSpectrum,

    #[error("order {order} is below numerical rank (sigma_m/sigma_1 = {ratio:e})")]
    RankDeficientTruncation { order: usize, ratio: f64 },

    #[error("order {order} exceeds pencil size {n}")]
    OrderExceedsPencil { order: usize, n: usize },

    #[error("eigensolver failure: {0}")]
    EigenSolverFailure(String),

    #[error("eigenvalues {i} and {j} collide ({lambda_i} vs {lambda_j})")]
    EigenvalueCollision {
        i: usize,
        j: usize,
        lambda_i: num_complex::Complex64,
        lambda_j: num_complex::Complex64,
    },

    #[error("Rayleigh denominator u^H G u vanishes for f = {f} Hz")]
    DegenerateRayleighDenominator { f: f64 },

    #[error("exponential basis is ill-conditioned (condition {condition:e})")]
    IllConditionedBasis { condition: f64 },

    #[error("estimated model order collapsed to zero")]
    OrderCollapse,

    #[error("chirp windows are degenerate (normal-equation condition {condition:e})")]
    DegenerateWindows { condition: f64 },

    #[error("reference chirp has zero energy")]
    ZeroReference,

    #[error("need at least {needed} samples for the FFT baseline, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used by the CLI for exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad input values, files or formats.
    Data,
    /// The estimator ran but could not produce a trustworthy answer.
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Validation(_)
            | Error::FrequencyOutOfBand { .. }
            | Error::ZeroPowerSignal
            | Error::InsufficientSamples { .. }
            | Error::TooFewSamples { .. }
            | Error::OrderExceedsPencil { .. }
            | Error::Format(_)
            | Error::Io(_)
            | Error::Json(_) => ErrorClass::Data,
            _ => ErrorClass::Numerical,
        }
    }

    /// Stable identifier for machine-readable error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Validation(_) => "Validation",
            Error::FrequencyOutOfBand { .. } => "FrequencyOutOfBand",
            Error::AmplitudeOutOfRange { .. } => "AmplitudeOutOfRange",
            Error::NonPositiveFrequency { .. } => "NonPositiveFrequency",
            Error::ZeroPowerSignal => "ZeroPowerSignal",
            Error::InsufficientSamples { .. } => "InsufficientSamples",
            Error::AllZeroSpectrum => "AllZeroSpectrum",
            Error::RankDeficientTruncation { .. } => "RankDeficientTruncation",
            Error::OrderExceedsPencil { .. } => "OrderExceedsPencil",
            Error::EigenSolverFailure(_) => "EigenSolverFailure",
            Error::EigenvalueCollision { .. } => "EigenvalueCollision",
            Error::DegenerateRayleighDenominator { .. } => "DegenerateRayleighDenominator",
            Error::IllConditionedBasis { .. } => "IllConditionedBasis",
            Error::OrderCollapse => "OrderCollapse",
            Error::DegenerateWindows { .. } => "DegenerateWindows",
            Error::ZeroReference => "ZeroReference",
            Error::TooFewSamples { .. } => "TooFewSamples",
            Error::Format(_) => "Format",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
