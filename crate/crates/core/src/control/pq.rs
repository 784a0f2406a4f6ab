use std::collections::VecDeque;
use std::f64::consts::TAU;

/// Single-phase P/Q measurement using a quarter-period delay to build the
/// quadrature signals, followed by first-order low-pass filters.
#[derive(Debug, Clone)]
pub struct PqMeasurement {
    pub p_lpf: f64,
    pub q_lpf: f64,
    v_buf: VecDeque<f64>,
    i_buf: VecDeque<f64>,
    alpha: f64,
}

impl PqMeasurement {
    /// `omega0` sets the delay length, `cutoff_hz` the filter bandwidth.
    pub fn new(omega0: f64, cutoff_hz: f64, dt: f64) -> Self {
        let delay = quarter_period_samples(omega0, dt);
        Self {
            p_lpf: 0.0,
            q_lpf: 0.0,
            v_buf: VecDeque::from(vec![0.0; delay]),
            i_buf: VecDeque::from(vec![0.0; delay]),
            alpha: 1.0 - (-TAU * cutoff_hz * dt).exp(),
        }
    }

    pub fn delay_len(&self) -> usize {
        self.v_buf.len()
    }

    /// Instantaneous (unfiltered) powers for the current sample.
    fn instantaneous(&mut self, v: f64, i: f64) -> (f64, f64) {
        let (v_q, i_q) = if self.v_buf.is_empty() {
            (0.0, 0.0)
        } else {
            self.v_buf.push_back(v);
            self.i_buf.push_back(i);
            (
                self.v_buf.pop_front().unwrap_or(0.0),
                self.i_buf.pop_front().unwrap_or(0.0),
            )
        };
        (0.5 * (v * i + v_q * i_q), 0.5 * (v_q * i - v * i_q))
    }

    pub fn update(&mut self, v: f64, i: f64) {
        let (p, q) = self.instantaneous(v, i);
        self.p_lpf += self.alpha * (p - self.p_lpf);
        self.q_lpf += self.alpha * (q - self.q_lpf);
    }
}

pub(crate) fn quarter_period_samples(omega0: f64, dt: f64) -> usize {
    (TAU / omega0 / (4.0 * dt)).round() as usize
}
