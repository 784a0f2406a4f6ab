//! Per-unit discrete controller: droop law, single-phase P/Q measurement and
//! the dual-loop proportional-multi-resonant regulator.

mod droop;
mod p3r;
mod pq;

pub use droop::{droop_update, DroopParams};
pub use p3r::{P3r, P3rGains, ResonatorCoeffs, HARMONICS};
pub use pq::PqMeasurement;

use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Tunables of one DG controller.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerParams {
    pub droop: DroopParams,
    pub voltage_loop: P3rGains,
    pub current_loop: P3rGains,
    /// Cutoff of the P/Q low-pass filter (Hz).
    pub f_pq: f64,
}

impl Default for ControllerParams {
    fn default() -> Self {
        let omega0 = TAU * 50.0;
        Self {
            droop: DroopParams::default(),
            voltage_loop: P3rGains {
                kp: 0.2,
                kr: [50.0, 20.0, 20.0],
                omega_s: omega0,
            },
            current_loop: P3rGains {
                kp: 4.0,
                kr: [200.0, 0.0, 0.0],
                omega_s: omega0,
            },
            f_pq: 20.0,
        }
    }
}

impl ControllerParams {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        self.droop.validate(prefix)?;
        self.voltage_loop.validate(&format!("{prefix}.voltage_loop"))?;
        self.current_loop.validate(&format!("{prefix}.current_loop"))?;
        if !(self.f_pq.is_finite() && self.f_pq > 0.0) {
            return Err(Error::validation(format!("{prefix}.f_pq"), "must be > 0"));
        }
        Ok(())
    }
}

/// Discrete state of one DG controller.
#[derive(Debug, Clone)]
pub struct InverterController {
    pub params: ControllerParams,
    /// Droop phase, kept in `[0, 2π)`.
    pub theta: f64,
    pub omega: f64,
    /// Amplitude currently commanded by the droop law.
    pub v_ref_amplitude: f64,
    pub pq: PqMeasurement,
    pub v_loop: P3r,
    pub i_loop: P3r,
    /// Reference of the last step, after the virtual drop.
    pub v_ref: f64,
}

impl InverterController {
    pub fn new(params: ControllerParams, dt: f64) -> Self {
        let pq = PqMeasurement::new(params.droop.omega0, params.f_pq, dt);
        Self {
            theta: 0.0,
            omega: params.droop.omega0,
            v_ref_amplitude: params.droop.v0,
            v_loop: P3r::new(params.voltage_loop),
            i_loop: P3r::new(params.current_loop),
            v_ref: 0.0,
            pq,
            params,
        }
    }

    pub fn p_lpf(&self) -> f64 {
        self.pq.p_lpf
    }

    pub fn q_lpf(&self) -> f64 {
        self.pq.q_lpf
    }

    /// One control tick. Returns the bridge voltage command.
    ///
    /// `v_off_hat` is subtracted from the voltage reading before it is used
    /// anywhere; `v_vir` is subtracted from the droop reference.
    pub fn step(
        &mut self,
        v_meas: f64,
        i_inv_meas: f64,
        i_o_meas: f64,
        v_vir: f64,
        v_off_hat: f64,
        dt: f64,
    ) -> Result<f64> {
        let v = v_meas - v_off_hat;
        self.pq.update(v, i_o_meas);
        let (amplitude, omega) = droop_update(self.pq.p_lpf, self.pq.q_lpf, &self.params.droop);
        self.v_ref_amplitude = amplitude;
        self.omega = omega;
        self.theta = (self.theta + omega * dt).rem_euclid(TAU);

        self.v_ref = amplitude * self.theta.sin() - v_vir;
        let i_ref = self.v_loop.step(self.v_ref - v, omega, dt)?;
        let v_cmd = self.i_loop.step(i_ref - i_inv_meas, omega, dt)?;
        if !v_cmd.is_finite() {
            return Err(Error::non_finite("bridge command", f64::NAN));
        }
        Ok(v_cmd)
    }
}
