//! Error types shared across the crate.

use thiserror::Error;

/// Coarse failure class, used by callers (the CLI in particular) to pick
/// an exit status: configuration problems versus breakdowns of the
/// numerics themselves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad input; the computation was never attempted.
    Domain,
    /// The computation ran and failed (non-convergence, loss of
    /// positivity, unresolvable degeneracy).
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("word must contain at least one letter")]
    EmptyWord,

    #[error("invalid letter {letter:?} in word: expected 'o' or 'e'")]
    InvalidLetter { letter: char },

    #[error("word length limited to {max} letters, got {got}")]
    WordTooLong { got: usize, max: usize },

    #[error("word has {got} letters but dimension {n} requires {expected}")]
    WordLength { n: usize, expected: usize, got: usize },

    #[error("word index {index} out of range for length {length} (max {max})")]
    WordIndexOutOfRange { index: u128, length: usize, max: u128 },

    #[error("matrix dimension must be at least 2, got {n}")]
    DimensionTooSmall { n: usize },

    #[error("parameter {name} must be finite")]
    NonFinite { name: &'static str },

    #[error("eigenvalue iteration did not converge for dimension {n} after {iterations} sweeps")]
    EigensolverFailure { n: usize, iterations: usize },

    #[error("{count} non-real eigenvalue(s) could not be grouped into conjugate pairs within {tolerance:e}")]
    PairingFailure { count: usize, tolerance: f64 },

    #[error("sample grid must be strictly increasing with at least {min} points")]
    InvalidSampleGrid { min: usize },

    #[error("fit window ({t_min}, {t_max}) is invalid: {reason}")]
    InvalidWindow {
        t_min: f64,
        t_max: f64,
        reason: &'static str,
    },

    #[error("trajectory {trajectory} is not real on the fit window (|Im q| = {im_magnitude:e} at t = {t})")]
    NonRealTrajectory {
        trajectory: usize,
        t: f64,
        im_magnitude: f64,
    },

    #[error("no trajectories selected")]
    EmptySelection,

    #[error("trajectory id {id} out of range for {count} trajectories")]
    InvalidTrajectoryId { id: usize, count: usize },

    #[error("trajectory {trajectory} vanishes at t = {t}; log-log fit undefined")]
    ZeroTrajectoryValue { trajectory: usize, t: f64 },

    #[error("spectrum is degenerate (minimal eigenvalue gap {min_gap:e} below {threshold:e})")]
    DegenerateSpectrum { min_gap: f64, threshold: f64 },

    #[error("eigenvector pairing failed biorthogonality (max off-diagonal overlap {max_overlap:e})")]
    BiorthogonalityFailure { max_overlap: f64 },

    #[error("spectrum has {n_real} real eigenvalue(s) out of {n}; a positive metric needs a fully real simple spectrum (project out the ghost sector first)")]
    NonRealSpectrum { n_real: usize, n: usize },

    #[error("weight {index} is not positive ({value})")]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("factor is numerically singular (condition number {condition:e})")]
    SingularFactor { condition: f64 },

    #[error("classification disagrees with the recomputed spectrum: {detail}")]
    ClassificationMismatch { detail: String },

    #[error("probe time t0 = {t0} outside the open interval (0, 1)")]
    InvalidProbeTime { t0: f64 },

    #[error("word {word} (index {index}): {source}")]
    AtWord {
        word: String,
        index: u128,
        #[source]
        source: Box<Error>,
    },

    #[error("at t = {t}: {source}")]
    AtSample {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid grid: {reason}")]
    InvalidGrid { reason: &'static str },

    #[error("epsilon ladder must be strictly decreasing and positive")]
    InvalidLadder,

    #[error("eigenvalue {re} + {im}i lies outside the grid rectangle")]
    EigenvalueOutsideGrid { re: f64, im: f64 },
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::EmptyWord
            | Error::InvalidLetter { .. }
            | Error::WordTooLong { .. }
            | Error::WordLength { .. }
            | Error::WordIndexOutOfRange { .. }
            | Error::DimensionTooSmall { .. }
            | Error::NonFinite { .. }
            | Error::InvalidSampleGrid { .. }
            | Error::InvalidWindow { .. }
            | Error::NonRealTrajectory { .. }
            | Error::EmptySelection
            | Error::InvalidTrajectoryId { .. }
            | Error::ZeroTrajectoryValue { .. }
            | Error::NonPositiveWeight { .. }
            | Error::WeightCount { .. }
            | Error::InvalidProbeTime { .. }
            | Error::InvalidGrid { .. }
            | Error::InvalidLadder
            | Error::EigenvalueOutsideGrid { .. } => ErrorCategory::Domain,

            Error::EigensolverFailure { .. }
            | Error::PairingFailure { .. }
            | Error::DegenerateSpectrum { .. }
            | Error::BiorthogonalityFailure { .. }
            | Error::NonRealSpectrum { .. }
            | Error::NotPositiveDefinite { .. }
            | Error::SingularFactor { .. }
            | Error::ClassificationMismatch { .. } => ErrorCategory::Numerical,

            Error::AtWord { source, .. } | Error::AtSample { source, .. } => source.category(),
        }
    }
}
