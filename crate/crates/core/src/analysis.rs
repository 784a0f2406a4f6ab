//! Windowed waveform metrics: circulating current split, instantaneous
//! power decomposition into DC / ω / 2ω parts, harmonic bins, THD and the
//! power-sharing index.
//!
//! All bins are single-frequency correlations over windows that hold an
//! integer number of fundamental periods, so harmonics of the fundamental
//! are orthogonal to each other.

use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Samples covering an integer number of fundamental periods.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformWindow {
    samples: Vec<f64>,
    dt: f64,
    omega: f64,
}

impl WaveformWindow {
    pub fn new(samples: Vec<f64>, dt: f64, omega: f64) -> Result<Self> {
        let periods = samples.len() as f64 * dt * omega / TAU;
        if samples.is_empty() || periods < 1.0 - 1e-9 || (periods - periods.round()).abs() > 1e-6 {
            return Err(Error::LeakyWindow { len: samples.len() });
        }
        Ok(Self { samples, dt, omega })
    }

    /// Sample `f(t)` at `t = k·dt` over `periods` fundamental periods.
    pub fn from_fn(periods: usize, dt: f64, omega: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let n = (periods as f64 * TAU / omega / dt).round() as usize;
        Self::new((0..n).map(|k| f(k as f64 * dt)).collect(), dt, omega)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// RMS after removing the mean.
    pub fn ac_rms(&self) -> f64 {
        let m = self.mean();
        (self.samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / self.len() as f64).sqrt()
    }

    /// Cosine/sine correlation at harmonic `h`: `x ≈ a·cos(hωt) + b·sin(hωt)`.
    pub fn bin(&self, h: u32) -> (f64, f64) {
        let w = h as f64 * self.omega;
        let (mut a, mut b) = (0.0, 0.0);
        for (k, x) in self.samples.iter().enumerate() {
            let (s, c) = (w * k as f64 * self.dt).sin_cos();
            a += x * c;
            b += x * s;
        }
        let scale = 2.0 / self.len() as f64;
        (a * scale, b * scale)
    }

    /// `(amplitude, phase)` with `x ≈ A·cos(hωt + φ)`.
    pub fn harmonic(&self, h: u32) -> (f64, f64) {
        let (a, b) = self.bin(h);
        (a.hypot(b), (-b).atan2(a))
    }

    pub fn amplitude(&self, h: u32) -> f64 {
        self.harmonic(h).0
    }

    fn check_aligned(&self, other: &Self) -> Result<()> {
        if self.len() != other.len() || self.dt != other.dt || self.omega != other.omega {
            return Err(Error::WindowMismatch(format!(
                "{} vs {} samples",
                self.len(),
                other.len()
            )));
        }
        Ok(())
    }
}

/// DC part and RMS of the AC part of `i_o1 − i_o2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirculatingCurrent {
    pub i_dc_cir: f64,
    pub i_ac_err_rms: f64,
}

pub fn circulating_current(i_o1: &WaveformWindow, i_o2: &WaveformWindow) -> Result<CirculatingCurrent> {
    i_o1.check_aligned(i_o2)?;
    let diff: Vec<f64> = i_o1
        .samples
        .iter()
        .zip(&i_o2.samples)
        .map(|(a, b)| a - b)
        .collect();
    let w = WaveformWindow {
        samples: diff,
        dt: i_o1.dt,
        omega: i_o1.omega,
    };
    Ok(CirculatingCurrent {
        i_dc_cir: w.mean(),
        i_ac_err_rms: w.ac_rms(),
    })
}

/// Instantaneous power split as `p_dc + A₁cos(ωt+φ₁) + A₂cos(2ωt+φ₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerDecomposition {
    pub p_dc: f64,
    pub p_omega: (f64, f64),
    pub p_2omega: (f64, f64),
}

impl PowerDecomposition {
    pub fn reconstruct(&self, omega: f64, t: f64) -> f64 {
        self.p_dc
            + self.p_omega.0 * (omega * t + self.p_omega.1).cos()
            + self.p_2omega.0 * (2.0 * omega * t + self.p_2omega.1).cos()
    }
}

pub fn decompose_power(v: &WaveformWindow, i: &WaveformWindow) -> Result<PowerDecomposition> {
    v.check_aligned(i)?;
    let p = WaveformWindow {
        samples: v.samples.iter().zip(&i.samples).map(|(a, b)| a * b).collect(),
        dt: v.dt,
        omega: v.omega,
    };
    Ok(PowerDecomposition {
        p_dc: p.mean(),
        p_omega: p.harmonic(1),
        p_2omega: p.harmonic(2),
    })
}

/// Total harmonic distortion over the listed harmonics relative to the
/// fundamental.
pub fn thd(w: &WaveformWindow, harmonics: &[u32]) -> f64 {
    let fund = w.amplitude(1);
    harmonics
        .iter()
        .map(|h| w.amplitude(*h).powi(2))
        .sum::<f64>()
        .sqrt()
        / fund
}

/// `|p1 − p2| / mean(p1, p2)`.
pub fn sharing_error(p1: f64, p2: f64) -> Result<f64> {
    if !(p1 + p2 > 0.0) {
        return Err(Error::ZeroTotalPower);
    }
    Ok((p1 - p2).abs() / (0.5 * (p1 + p2)))
}
