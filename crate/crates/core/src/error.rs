use thiserror::Error;

/// Raw coincidence counts carried by g2 errors so callers can still report them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub struct CoincidenceCounts {
    pub n_g: u64,
    pub n_gt: u64,
    pub n_gr: u64,
    pub n_gtr: u64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("group velocity undefined for zero optical depth")]
    UndefinedVelocity,

    #[error("time grid too short: {0}")]
    GridTooShort(String),

    #[error("solver step-size violation: {0}")]
    StepSize(String),

    #[error("numerical instability at step {step} (t = {time:.6})")]
    NumericalInstability { step: usize, time: f64 },

    #[error("fit did not converge after {iterations} iterations (rss {rss:.3e})")]
    FitFailure {
        best: Vec<f64>,
        rss: f64,
        iterations: usize,
    },

    #[error("curve carries insufficient signal to fit")]
    InsufficientSignal,

    #[error("storage efficiency undefined: input norm is zero")]
    UndefinedEfficiency,

    #[error("waveform likeness undefined: zero-norm waveform")]
    UndefinedLikeness,

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("conditional g2 undefined (N_GT = {}, N_GR = {})", .0.n_gt, .0.n_gr)]
    UndefinedG2(CoincidenceCounts),

    #[error("parse error at byte {offset}: {reason}")]
    Parse { offset: u64, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad input parameters rather than by numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. } | Error::UndefinedVelocity | Error::GridTooShort(_) | Error::StepSize(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
