use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Droop law for resistive feeders: amplitude falls with active power,
/// frequency moves with reactive power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DroopParams {
    /// Nominal amplitude (V, peak).
    pub v0: f64,
    /// Nominal angular frequency (rad/s).
    pub omega0: f64,
    /// Amplitude slope (V/W).
    pub m: f64,
    /// Frequency slope (rad/s per var).
    pub n: f64,
    /// Sign applied to the reactive term; `+1` gives `ω = ω0 + nQ`.
    pub q_sign: f64,
}

impl Default for DroopParams {
    fn default() -> Self {
        Self {
            v0: 200.0,
            omega0: TAU * 50.0,
            m: 0.001,
            n: 0.0025,
            q_sign: 1.0,
        }
    }
}

impl DroopParams {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        if !(self.v0 > 0.0 && self.v0.is_finite()) {
            return Err(Error::validation(format!("{prefix}.v0"), "must be > 0"));
        }
        if !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            return Err(Error::validation(format!("{prefix}.f0"), "must be > 0"));
        }
        if !(self.m >= 0.0 && self.m.is_finite()) {
            return Err(Error::validation(format!("{prefix}.droop_m"), "must be >= 0"));
        }
        if !(self.n >= 0.0 && self.n.is_finite()) {
            return Err(Error::validation(format!("{prefix}.droop_n"), "must be >= 0"));
        }
        if self.q_sign != 1.0 && self.q_sign != -1.0 {
            return Err(Error::validation(
                format!("{prefix}.droop_q_sign"),
                "must be +1 or -1",
            ));
        }
        Ok(())
    }
}

/// Returns `(amplitude, omega)`.
#[inline]
pub fn droop_update(p_lpf: f64, q_lpf: f64, params: &DroopParams) -> (f64, f64) {
    (
        params.v0 - params.m * p_lpf,
        params.omega0 + params.q_sign * params.n * q_lpf,
    )
}
