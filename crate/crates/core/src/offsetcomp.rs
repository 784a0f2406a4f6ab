//! Detection of a DC offset in the output-voltage measurement from the
//! fundamental-frequency ripple it produces on the DC link.
//!
//! A DC component in the output voltage or current turns part of the
//! output power into a ripple at the fundamental. The DC link integrates
//! that ripple, so a band-pass around ω isolates it, a carrier locked to the
//! controller phase demodulates it to a DC level, and an integrator moves the
//! offset estimate until the ripple vanishes.
//!
//! The DC link is a capacitor in parallel with a resistive source, so the
//! voltage ripple trails the power ripple by the link impedance angle. The
//! carrier phase and the ripple-to-power gain default to the values implied
//! by that impedance (see [`EstimatorParams::for_dc_link`]).

use std::f64::consts::{FRAC_PI_2, TAU};

use crate::error::{Error, Result};

/// Tustin-prewarped realization of `ω_b·s / (s² + ω_b·s + ω²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandpassFilter {
    pub omega_center: f64,
    pub omega_b: f64,
    s1: f64,
    s2: f64,
}

/// `H(z) = b0·(1 − z⁻²) / (1 + a1·z⁻¹ + a2·z⁻²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandpassCoeffs {
    pub b0: f64,
    pub a1: f64,
    pub a2: f64,
}

impl BandpassCoeffs {
    pub fn tustin_prewarped(omega_center: f64, omega_b: f64, dt: f64) -> Self {
        let k = omega_center / (0.5 * omega_center * dt).tan();
        let k2 = k * k;
        let w2 = omega_center * omega_center;
        let a0 = k2 + omega_b * k + w2;
        Self {
            b0: omega_b * k / a0,
            a1: 2.0 * (w2 - k2) / a0,
            a2: (k2 - omega_b * k + w2) / a0,
        }
    }
}

impl BandpassFilter {
    pub fn new(omega_center: f64, omega_b: f64) -> Self {
        Self {
            omega_center,
            omega_b,
            s1: 0.0,
            s2: 0.0,
        }
    }

    /// Retune the centre frequency without touching the state.
    pub fn set_center(&mut self, omega_center: f64) {
        self.omega_center = omega_center;
    }

    pub fn coefficients(&self, dt: f64) -> BandpassCoeffs {
        BandpassCoeffs::tustin_prewarped(self.omega_center, self.omega_b, dt)
    }

    /// Load the state reached after a long run of constant input `x`, so
    /// that the DC operating point does not ring through the filter.
    pub fn prime(&mut self, x: f64, dt: f64) {
        let b0 = self.coefficients(dt).b0;
        self.s1 = -b0 * x;
        self.s2 = -b0 * x;
    }

    pub fn step(&mut self, x: f64, dt: f64) -> Result<f64> {
        let c = self.coefficients(dt);
        let y = c.b0 * x + self.s1;
        self.s1 = self.s2 - c.a1 * y;
        self.s2 = -c.b0 * x - c.a2 * y;
        if !y.is_finite() {
            return Err(Error::non_finite("band-pass filter", f64::NAN));
        }
        Ok(y)
    }
}

pub fn bpf_step(filter: &mut BandpassFilter, sample: f64, dt: f64) -> Result<f64> {
    filter.step(sample, dt)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorParams {
    /// Band-pass bandwidth (rad/s).
    pub omega_b: f64,
    /// Cutoff of the post-demodulation low-pass (Hz).
    pub f_lpf: f64,
    /// Integrator gain (1/s).
    pub k_est: f64,
    pub v_off_max: f64,
    /// Ripple-voltage to power-ripple gain (W/V).
    pub k_demod: f64,
    /// Carrier is `sin(θ + carrier_phase)`.
    pub carrier_phase: f64,
}

impl EstimatorParams {
    /// Defaults matched to a DC link of capacitance `c_dc` fed through
    /// `r_dc` (`None` for a purely capacitive link) at `v_dc0`.
    ///
    /// For a power ripple `P·sin θ` the link voltage moves by
    /// `−P/v_dc0 · Z(jω)` with `Z = 1/(1/r_dc + jωC)`. The carrier is aligned
    /// with `sin(θ + arg Z)` and `k_demod = v_dc0/|Z|`, so the demodulated
    /// mean equals `−P/2`; the integrator therefore moves the estimate
    /// toward the true offset.
    pub fn for_dc_link(c_dc: f64, r_dc: Option<f64>, v_dc0: f64, omega: f64) -> Self {
        let g = r_dc.map_or(0.0, |r| 1.0 / r);
        let b = omega * c_dc;
        let (carrier_phase, admittance) = (-(b.atan2(g)), g.hypot(b));
        Self {
            omega_b: TAU * 10.0,
            f_lpf: 2.0,
            k_est: 20.0,
            v_off_max: 20.0,
            k_demod: v_dc0 * admittance,
            carrier_phase,
        }
    }

    pub fn validate(&self, prefix: &str) -> Result<()> {
        let checks = [
            ("omega_b", self.omega_b > 0.0),
            ("f_lpf", self.f_lpf > 0.0),
            ("k_est", self.k_est >= 0.0),
            ("v_off_max", self.v_off_max > 0.0),
            ("k_demod", self.k_demod > 0.0),
            ("carrier_phase", self.carrier_phase.is_finite()),
        ];
        for (key, ok) in checks {
            if !ok {
                return Err(Error::validation(format!("{prefix}.{key}"), "out of range"));
            }
        }
        Ok(())
    }
}

/// Running estimate of the output-voltage measurement offset of one DG.
#[derive(Debug, Clone)]
pub struct OffsetEstimator {
    pub params: EstimatorParams,
    pub bpf: BandpassFilter,
    lpf: f64,
    alpha: f64,
    pub v_off_hat: f64,
    samples_seen: usize,
    period_samples: usize,
}

impl OffsetEstimator {
    pub fn new(params: EstimatorParams, omega0: f64, dt: f64) -> Self {
        Self {
            bpf: BandpassFilter::new(omega0, params.omega_b),
            lpf: 0.0,
            alpha: 1.0 - (-TAU * params.f_lpf * dt).exp(),
            v_off_hat: 0.0,
            samples_seen: 0,
            period_samples: (TAU / omega0 / dt).round() as usize,
            params,
        }
    }

    pub fn is_warm(&self) -> bool {
        self.samples_seen >= self.period_samples
    }

    /// Low-passed demodulator output (W).
    pub fn demodulated(&self) -> f64 {
        self.lpf
    }

    /// In-phase amplitude of the fundamental power ripple recovered from the
    /// DC link (W); positive when the ripple is in phase with the output
    /// voltage.
    pub fn ripple_power(&self) -> f64 {
        -2.0 * self.lpf
    }

    /// `LPF(d) / (½·v_m)`: the integrator input.
    pub fn normalized(&self, v_m: f64) -> f64 {
        self.lpf / (0.5 * v_m)
    }

    pub fn carrier(&self, theta: f64) -> f64 {
        (theta + self.params.carrier_phase).sin()
    }

    /// Filter and demodulate one DC-link sample without moving the estimate.
    pub fn observe(&mut self, v_dc_reading: f64, theta: f64, omega: f64, dt: f64) -> Result<()> {
        self.bpf.set_center(omega);
        if self.samples_seen == 0 {
            self.bpf.prime(v_dc_reading, dt);
        }
        let ripple = self.bpf.step(v_dc_reading, dt)?;
        let d = ripple * self.carrier(theta) * self.params.k_demod;
        self.lpf += self.alpha * (d - self.lpf);
        self.samples_seen = self.samples_seen.saturating_add(1);
        Ok(())
    }

    /// Filter one sample and integrate the estimate. Fails until one
    /// fundamental period has been observed.
    pub fn step(&mut self, v_dc_reading: f64, theta: f64, omega: f64, v_m: f64, dt: f64) -> Result<f64> {
        if !self.is_warm() {
            return Err(Error::NotWarmedUp {
                seen: self.samples_seen,
                needed: self.period_samples,
            });
        }
        if v_m <= 0.0 {
            return Err(Error::validation("v_m", "amplitude must be > 0"));
        }
        self.observe(v_dc_reading, theta, omega, dt)?;
        let lim = self.params.v_off_max;
        self.v_off_hat = (self.v_off_hat + self.params.k_est * self.normalized(v_m) * dt).clamp(-lim, lim);
        if !self.v_off_hat.is_finite() {
            return Err(Error::non_finite("offset estimate", f64::NAN));
        }
        Ok(self.v_off_hat)
    }
}

/// Phase of the quadrature carrier used with a purely capacitive link.
pub const CAPACITIVE_CARRIER_PHASE: f64 = -FRAC_PI_2;

#[cfg(test)]
mod tests {
    use super::*;

    const DT: f64 = 50e-6;
    const W: f64 = TAU * 50.0;

    fn steady_amplitude(f: &mut BandpassFilter, freq: f64, settle: usize, measure: usize) -> f64 {
        let mut peak: f64 = 0.0;
        for k in 0..settle + measure {
            let y = f.step((freq * k as f64 * DT).sin(), DT).unwrap();
            if k >= settle {
                peak = peak.max(y.abs());
            }
        }
        peak
    }

    #[test]
    fn primed_filter_is_silent_on_constant_input() {
        let mut f = BandpassFilter::new(W, TAU * 10.0);
        f.prime(250.0, DT);
        for _ in 0..1000 {
            assert!(f.step(250.0, DT).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn bandpass_rejects_dc() {
        let mut f = BandpassFilter::new(W, TAU * 10.0);
        let mut y = 0.0;
        for _ in 0..40_000 {
            y = f.step(250.0, DT).unwrap();
        }
        assert!(y.abs() < 1e-6, "{y}");
    }

    #[test]
    fn bandpass_is_unity_zero_phase_at_centre() {
        let mut f = BandpassFilter::new(W, TAU * 10.0);
        let mut err: f64 = 0.0;
        for k in 0..60_000 {
            let x = (W * k as f64 * DT).sin();
            let y = f.step(x, DT).unwrap();
            if k > 40_000 {
                err = err.max((y - x).abs());
            }
        }
        assert!(err < 0.01, "{err}");
    }

    #[test]
    fn bandpass_second_harmonic_matches_analog_magnitude() {
        let wb = TAU * 10.0;
        let w2 = 2.0 * W;
        let analog = wb * w2 / ((W * W - w2 * w2).powi(2) + (wb * w2).powi(2)).sqrt();
        let mut f = BandpassFilter::new(W, wb);
        let amp = steady_amplitude(&mut f, w2, 40_000, 4_000);
        assert!((amp - analog).abs() < 0.02 * analog, "{amp} vs {analog}");
    }

    #[test]
    fn link_defaults_for_pure_capacitor_are_quadrature() {
        let p = EstimatorParams::for_dc_link(2e-3, None, 250.0, W);
        assert!((p.carrier_phase - CAPACITIVE_CARRIER_PHASE).abs() < 1e-12);
        assert!((p.k_demod - W * 2e-3 * 250.0).abs() < 1e-9);
    }

    #[test]
    fn not_warmed_up_before_one_period() {
        let p = EstimatorParams::for_dc_link(2e-3, Some(0.5), 250.0, W);
        let mut e = OffsetEstimator::new(p, W, DT);
        assert!(matches!(
            e.step(250.0, 0.0, W, 200.0, DT),
            Err(Error::NotWarmedUp { seen: 0, needed: 400 })
        ));
        for _ in 0..400 {
            e.observe(250.0, 0.0, W, DT).unwrap();
        }
        assert!(e.step(250.0, 0.0, W, 200.0, DT).is_ok());
    }

    #[test]
    fn zero_gain_never_moves_the_estimate() {
        let mut p = EstimatorParams::for_dc_link(2e-3, Some(0.5), 250.0, W);
        p.k_est = 0.0;
        let mut e = OffsetEstimator::new(p, W, DT);
        for k in 0..10_000 {
            let t = k as f64 * DT;
            let v = 250.0 + 3.0 * (W * t).sin();
            if e.is_warm() {
                e.step(v, (W * t).rem_euclid(TAU), W, 200.0, DT).unwrap();
            } else {
                e.observe(v, (W * t).rem_euclid(TAU), W, DT).unwrap();
            }
        }
        assert_eq!(e.v_off_hat, 0.0);
    }

    #[test]
    fn estimate_is_clamped() {
        let mut p = EstimatorParams::for_dc_link(2e-3, Some(0.5), 250.0, W);
        p.k_est = 1e4;
        let mut e = OffsetEstimator::new(p, W, DT);
        for k in 0..40_000 {
            let t = k as f64 * DT;
            let th = (W * t).rem_euclid(TAU);
            let v = 250.0 + 5.0 * (th + p.carrier_phase).sin();
            if e.is_warm() {
                e.step(v, th, W, 200.0, DT).unwrap();
            } else {
                e.observe(v, th, W, DT).unwrap();
            }
        }
        assert_eq!(e.v_off_hat, 20.0);
    }
}
