//! Proportional plus resonant regulator with resonant terms at the 1st, 3rd
//! and 5th harmonics, `kp + Σ 2·kr·s / (s² + (h·ω)²)`.
//!
//! Each resonant term is discretized with Tustin prewarped at its own centre
//! `h·ω`, so the discrete poles sit exactly on the unit circle at that
//! frequency. Centres follow the droop frequency passed to every step.

use crate::error::{Error, Result};

pub const HARMONICS: [u32; 3] = [1, 3, 5];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P3rGains {
    pub kp: f64,
    /// Resonant gains for the harmonics in [`HARMONICS`].
    pub kr: [f64; 3],
    /// Nominal fundamental (rad/s).
    pub omega_s: f64,
}

impl P3rGains {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        if !(self.kp > 0.0 && self.kp.is_finite()) {
            return Err(Error::validation(format!("{prefix}.kp"), "must be > 0"));
        }
        if self.kr.iter().any(|k| !(*k >= 0.0 && k.is_finite())) {
            return Err(Error::validation(format!("{prefix}.kr"), "must be >= 0"));
        }
        Ok(())
    }
}

/// `H(z) = b0·(1 − z⁻²) / (1 + a1·z⁻¹ + z⁻²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonatorCoeffs {
    pub b0: f64,
    pub a1: f64,
}

impl ResonatorCoeffs {
    pub fn tustin_prewarped(kr: f64, center: f64, dt: f64) -> Self {
        let k = center / (0.5 * center * dt).tan();
        let k2 = k * k;
        let w2 = center * center;
        let a0 = k2 + w2;
        Self {
            b0: 2.0 * kr * k / a0,
            a1: 2.0 * (w2 - k2) / a0,
        }
    }
}

/// Transposed direct-form II state of one resonator.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Resonator {
    s1: f64,
    s2: f64,
}

impl Resonator {
    #[inline]
    fn step(&mut self, x: f64, c: ResonatorCoeffs) -> f64 {
        let y = c.b0 * x + self.s1;
        self.s1 = self.s2 - c.a1 * y;
        self.s2 = -c.b0 * x - y;
        y
    }
}

#[derive(Debug, Clone)]
pub struct P3r {
    pub gains: P3rGains,
    res: [Resonator; 3],
}

impl P3r {
    pub fn new(gains: P3rGains) -> Self {
        Self {
            gains,
            res: Default::default(),
        }
    }

    pub fn reset(&mut self) {
        self.res = Default::default();
    }

    /// Coefficients of each resonant term for fundamental `omega`.
    pub fn coefficients(&self, omega: f64, dt: f64) -> [ResonatorCoeffs; 3] {
        let mut out = [ResonatorCoeffs { b0: 0.0, a1: 0.0 }; 3];
        for ((c, h), kr) in out.iter_mut().zip(HARMONICS).zip(self.gains.kr) {
            *c = ResonatorCoeffs::tustin_prewarped(kr, h as f64 * omega, dt);
        }
        out
    }

    /// Proportional path only.
    pub fn proportional(&self, error: f64) -> f64 {
        self.gains.kp * error
    }

    /// Sum of the resonant paths only (advances their state).
    pub fn step_resonant(&mut self, error: f64, omega: f64, dt: f64) -> f64 {
        let mut y = 0.0;
        for ((r, h), kr) in self.res.iter_mut().zip(HARMONICS).zip(self.gains.kr) {
            if kr == 0.0 {
                continue;
            }
            y += r.step(error, ResonatorCoeffs::tustin_prewarped(kr, h as f64 * omega, dt));
        }
        y
    }

    pub fn step(&mut self, error: f64, omega: f64, dt: f64) -> Result<f64> {
        let y = self.proportional(error) + self.step_resonant(error, omega, dt);
        if !y.is_finite() {
            return Err(Error::non_finite("P-3R regulator", f64::NAN));
        }
        Ok(y)
    }
}
