use std::io;

use thiserror::Error;

/// Errors raised by the simulator and its building blocks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {what} at t = {t:.6} s")]
    NonFinite { what: String, t: f64 },

    #[error("DC link of DG {dg} collapsed to {v_dc:.3} V at t = {t:.6} s [{state}]")]
    DcCollapse {
        dg: usize,
        v_dc: f64,
        t: f64,
        state: String,
    },

    #[error("offset estimator used before one fundamental period of samples ({seen}/{needed})")]
    NotWarmedUp { seen: usize, needed: usize },

    #[error("MGCC has not received any power report")]
    NoReports,

    #[error("waveform windows do not match: {0}")]
    WindowMismatch(String),

    #[error("window of {len} samples is not an integer number of fundamental periods")]
    LeakyWindow { len: usize },

    #[error("total power is zero or negative")]
    ZeroTotalPower,

    #[error("parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("invalid value for `{key}`: {reason}")]
    Validation { key: String, reason: String },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn validation(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn non_finite(what: impl Into<String>, t: f64) -> Self {
        Error::NonFinite { what: what.into(), t }
    }

    /// True for errors caused by numerical breakdown during a run.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFinite { .. } | Error::DcCollapse { .. })
    }

    /// True for errors caused by a malformed or inconsistent scenario.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::Validation { .. } | Error::UnknownScenario(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
