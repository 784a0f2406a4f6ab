//! Adaptive virtual resistance driven by a central power average.
//!
//! Every DG periodically reports its filtered active power over a slow,
//! lossy link to the central controller (MGCC), which averages the latest
//! reports and broadcasts the mean back. Each DG runs a PI law on the gap
//! between its own power and the mean to set a virtual series resistance;
//! the resulting `r_v · i_o` drop is subtracted from the voltage reference.

use std::collections::VecDeque;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Arithmetic mean of the reported powers.
pub fn mgcc_average(reports: &[f64]) -> Result<f64> {
    if reports.is_empty() {
        return Err(Error::NoReports);
    }
    Ok(reports.iter().sum::<f64>() / reports.len() as f64)
}

#[inline]
pub fn virtual_drop(r_v: f64, i_inv_sample: f64) -> f64 {
    r_v * i_inv_sample
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbcParams {
    pub report_period: f64,
    pub latency: f64,
    pub drop_probability: f64,
    pub seed: u64,
    /// Average older than this many report periods is ignored.
    pub staleness_periods: f64,
}

impl Default for LbcParams {
    fn default() -> Self {
        Self {
            report_period: 0.1,
            latency: 0.01,
            drop_probability: 0.0,
            seed: 1,
            staleness_periods: 5.0,
        }
    }
}

impl LbcParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.report_period > 0.0 && self.report_period.is_finite()) {
            return Err(Error::validation("lbc.report_period", "must be > 0"));
        }
        if !(self.latency >= 0.0 && self.latency.is_finite()) {
            return Err(Error::validation("lbc.latency", "must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.drop_probability) {
            return Err(Error::validation("lbc.drop_probability", "must lie in [0, 1]"));
        }
        if !(self.staleness_periods > 0.0) {
            return Err(Error::validation("lbc.staleness_periods", "must be > 0"));
        }
        Ok(())
    }

    pub fn staleness_limit(&self) -> f64 {
        self.staleness_periods * self.report_period
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Dg(usize),
    Mgcc,
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Dg(i) => write!(f, "dg{}", i + 1),
            Endpoint::Mgcc => f.write_str("mgcc"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Message {
    pub t_send: f64,
    pub t_deliver: f64,
    pub sender: Endpoint,
    pub receiver: Endpoint,
    pub value: f64,
    pub dropped: bool,
}

/// Latest reports held by the central controller.
#[derive(Debug, Clone, PartialEq)]
pub struct MgccState {
    /// `(power, receive time)` of the newest report from each DG.
    pub latest: Vec<Option<(f64, f64)>>,
    /// Per-DG weights of the average; equal ratings give a plain mean.
    pub weights: Vec<f64>,
}

impl MgccState {
    pub fn new(n_dg: usize) -> Self {
        Self {
            latest: vec![None; n_dg],
            weights: vec![1.0; n_dg],
        }
    }

    pub fn receive(&mut self, dg: usize, value: f64, now: f64) {
        self.latest[dg] = Some((value, now));
    }

    pub fn p_avg(&self) -> Result<f64> {
        let (mut num, mut den) = (0.0, 0.0);
        for ((p, _), w) in self
            .latest
            .iter()
            .zip(&self.weights)
            .filter_map(|(r, w)| r.map(|r| (r, w)))
        {
            num += w * p;
            den += w;
        }
        if den == 0.0 {
            return Err(Error::NoReports);
        }
        Ok(num / den)
    }
}

/// Simulated low-bandwidth link between the DGs and the MGCC, including the
/// MGCC averaging node.
#[derive(Debug, Clone)]
pub struct LbcChannel {
    pub params: LbcParams,
    pub mgcc: MgccState,
    /// Newest average received by each DG: `(p_avg, receive time)`.
    pub received: Vec<Option<(f64, f64)>>,
    rng: ChaCha8Rng,
    in_flight: VecDeque<Message>,
    log: Vec<Message>,
    reports_sent: u64,
}

impl LbcChannel {
    pub fn new(params: LbcParams, n_dg: usize) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            mgcc: MgccState::new(n_dg),
            received: vec![None; n_dg],
            in_flight: VecDeque::new(),
            log: Vec::new(),
            reports_sent: 0,
            params,
        }
    }

    pub fn log(&self) -> &[Message] {
        &self.log
    }

    fn eps(&self) -> f64 {
        1e-9 * self.params.report_period
    }

    fn enqueue(&mut self, now: f64, sender: Endpoint, receiver: Endpoint, value: f64) {
        let dropped = self.rng.random::<f64>() < self.params.drop_probability;
        let msg = Message {
            t_send: now,
            t_deliver: now + self.params.latency,
            sender,
            receiver,
            value,
            dropped,
        };
        self.log.push(msg);
        if !dropped {
            self.in_flight.push_back(msg);
        }
    }

    fn deliver_due(&mut self, now: f64, out: &mut Vec<Message>) {
        let eps = self.eps();
        while let Some(msg) = self.in_flight.front() {
            if msg.t_deliver > now + eps {
                break;
            }
            let msg = self.in_flight.pop_front().expect("front exists");
            match (msg.sender, msg.receiver) {
                (Endpoint::Dg(i), Endpoint::Mgcc) => self.mgcc.receive(i, msg.value, now),
                (Endpoint::Mgcc, Endpoint::Dg(i)) => self.received[i] = Some((msg.value, now)),
                _ => {}
            }
            out.push(msg);
        }
    }

    /// Advance the link to `now` (nondecreasing). On report instants the
    /// MGCC first broadcasts its current average, then every DG sends
    /// `p_local`. Returns the messages delivered during this call.
    pub fn step(&mut self, now: f64, p_local: &[f64]) -> Vec<Message> {
        let mut delivered = Vec::new();
        self.deliver_due(now, &mut delivered);
        let next_report = self.reports_sent as f64 * self.params.report_period;
        if now + self.eps() >= next_report {
            self.reports_sent += 1;
            if let Ok(avg) = self.mgcc.p_avg() {
                for i in 0..self.received.len() {
                    self.enqueue(now, Endpoint::Mgcc, Endpoint::Dg(i), avg);
                }
            }
            for (i, p) in p_local.iter().enumerate() {
                self.enqueue(now, Endpoint::Dg(i), Endpoint::Mgcc, *p);
            }
            self.deliver_due(now, &mut delivered);
        }
        delivered
    }

    /// Average known to DG `dg` if it is younger than the staleness limit.
    pub fn fresh_average(&self, dg: usize, now: f64) -> Option<f64> {
        self.received[dg]
            .filter(|(_, t)| now - t <= self.params.staleness_limit() + self.eps())
            .map(|(v, _)| v)
    }
}

pub fn channel_step(channel: &mut LbcChannel, now: f64, reports: &[f64]) -> Vec<Message> {
    channel.step(now, reports)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AviParams {
    pub kp: f64,
    pub ki: f64,
    pub r_v_min: f64,
    pub r_v_max: f64,
    /// Multiplies `p_avg − p_local`; `−1` raises `r_v` on the unit that
    /// produces more than the average.
    pub sign: f64,
    pub r_v_init: f64,
}

impl Default for AviParams {
    fn default() -> Self {
        Self {
            kp: 1e-4,
            ki: 2e-3,
            r_v_min: -0.1,
            r_v_max: 1.0,
            sign: -1.0,
            r_v_init: 0.0,
        }
    }
}

impl AviParams {
    pub fn validate(&self, prefix: &str, r_line: f64) -> Result<()> {
        if !(self.kp >= 0.0 && self.ki >= 0.0) {
            return Err(Error::validation(
                format!("{prefix}.avi_kp"),
                "gains must be >= 0",
            ));
        }
        if !(self.r_v_min < self.r_v_max) {
            return Err(Error::validation(format!("{prefix}.rv_min"), "must be < rv_max"));
        }
        if !(r_line + self.r_v_min > 0.0) {
            return Err(Error::validation(
                format!("{prefix}.rv_min"),
                "line resistance plus rv_min must stay positive",
            ));
        }
        if self.sign != 1.0 && self.sign != -1.0 {
            return Err(Error::validation(
                format!("{prefix}.avi_sign"),
                "must be +1 or -1",
            ));
        }
        if !(self.r_v_min..=self.r_v_max).contains(&self.r_v_init) {
            return Err(Error::validation(
                format!("{prefix}.rv_init"),
                "outside [rv_min, rv_max]",
            ));
        }
        Ok(())
    }
}

/// PI state of one DG's virtual resistance.
#[derive(Debug, Clone, PartialEq)]
pub struct AviPiState {
    pub params: AviParams,
    pub integral: f64,
    pub r_v: f64,
}

impl AviPiState {
    pub fn new(params: AviParams) -> Self {
        Self {
            integral: params.r_v_init,
            r_v: params.r_v_init,
            params,
        }
    }

    /// One PI update. `p_avg = None` (no fresh average) holds `r_v`.
    ///
    /// The integral stops while the output is clamped and the error pushes
    /// further into the bound.
    pub fn step(&mut self, p_avg: Option<f64>, p_local: f64, dt: f64) -> Result<f64> {
        let Some(p_avg) = p_avg else {
            return Ok(self.r_v);
        };
        let p = &self.params;
        let e = p.sign * (p_avg - p_local);
        let candidate = self.integral + p.ki * e * dt;
        let unclamped = p.kp * e + candidate;
        self.integral = if unclamped > p.r_v_max && e > 0.0 {
            self.integral.max(candidate.min(p.r_v_max - p.kp * e))
        } else if unclamped < p.r_v_min && e < 0.0 {
            self.integral.min(candidate.max(p.r_v_min - p.kp * e))
        } else {
            candidate
        };
        self.r_v = (p.kp * e + self.integral).clamp(p.r_v_min, p.r_v_max);
        if !self.r_v.is_finite() {
            return Err(Error::non_finite("virtual resistance", f64::NAN));
        }
        Ok(self.r_v)
    }
}

pub fn avi_pi_step(state: &mut AviPiState, p_avg: Option<f64>, p_local: f64, dt: f64) -> Result<f64> {
    state.step(p_avg, p_local, dt)
}
