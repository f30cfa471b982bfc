use thiserror::Error;

use crate::control::ContinuousTF;
use crate::plant::SimTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("insufficient data: need {needed} samples, have {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("phase is undefined for a zero-magnitude estimate")]
    UndefinedPhase,

    #[error("filter is unstable: pole magnitude {pole_magnitude}")]
    UnstableFilter { pole_magnitude: f64 },

    #[error("controller synthesis failed: {0}")]
    Synthesis(String),

    #[error("order reduction missed tolerance: {mag_db:.3} dB / {phase_deg:.2} deg")]
    ReductionTolerance {
        mag_db: f64,
        phase_deg: f64,
        best: Box<ContinuousTF>,
    },

    #[error("frequency {f_hz} Hz outside table range [{lo}, {hi}] Hz")]
    OutOfRange { f_hz: f64, lo: f64, hi: f64 },

    #[error("plate tilt {tilt:.4} rad exceeds limit at t = {t:.5} s")]
    TiltViolation { t: f64, tilt: f64 },

    #[error("instability detected at t = {t:.4} s: amplitude {amplitude:.3e} m")]
    Instability {
        t: f64,
        amplitude: f64,
        trace: Box<SimTrace>,
    },

    #[error("finger position is indeterminate (light or no touch)")]
    IndeterminatePosition,

    #[error("regression is rank deficient (insufficient excitation)")]
    RankDeficient,

    #[error("statistic undefined: {0}")]
    Undefined(&'static str),

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config parse error: {0}")]
    Config(#[from] toml::de::Error),

    #[error("config serialization error: {0}")]
    ConfigWrite(#[from] toml::ser::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Short stable identifier used in machine-readable CLI errors.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::InsufficientData { .. } => "insufficient_data",
            Error::UndefinedPhase => "undefined_phase",
            Error::UnstableFilter { .. } => "unstable_filter",
            Error::Synthesis(_) => "synthesis",
            Error::ReductionTolerance { .. } => "reduction_tolerance",
            Error::OutOfRange { .. } => "out_of_range",
            Error::TiltViolation { .. } => "tilt_violation",
            Error::Instability { .. } => "instability",
            Error::IndeterminatePosition => "indeterminate_position",
            Error::RankDeficient => "rank_deficient",
            Error::Undefined(_) => "undefined",
            Error::Schema(_) => "schema",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Config(_) => "config",
            Error::ConfigWrite(_) => "config",
        }
    }
}
