use crate::analysis::{circulating_current, decompose_power, sharing_error, WaveformWindow};
use crate::avi::{virtual_drop, AviPiState, LbcChannel, Message};
use crate::control::InverterController;
use crate::error::{Error, Result};
use crate::offsetcomp::OffsetEstimator;
use crate::plant::Plant;
use crate::runner::scenario::{Action, Scenario, N_DG};
use crate::sensing::SensorBank;

/// One time-series row; field order is the CSV column order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub v_c: [f64; N_DG],
    pub i_o: [f64; N_DG],
    pub i_circ: f64,
    pub v_dc: [f64; N_DG],
    pub p: [f64; N_DG],
    pub q: [f64; N_DG],
    pub r_v: [f64; N_DG],
    pub v_off_hat: [f64; N_DG],
}

pub const SAMPLE_COLUMNS: [&str; 16] = [
    "t",
    "v_c1",
    "v_c2",
    "i_o1",
    "i_o2",
    "i_circ",
    "v_dc1",
    "v_dc2",
    "P1",
    "P2",
    "Q1",
    "Q2",
    "Rv1",
    "Rv2",
    "voff_hat1",
    "voff_hat2",
];

impl Sample {
    pub fn values(&self) -> [f64; 16] {
        [
            self.t,
            self.v_c[0],
            self.v_c[1],
            self.i_o[0],
            self.i_o[1],
            self.i_circ,
            self.v_dc[0],
            self.v_dc[1],
            self.p[0],
            self.p[1],
            self.q[0],
            self.q[1],
            self.r_v[0],
            self.r_v[1],
            self.v_off_hat[0],
            self.v_off_hat[1],
        ]
    }
}

/// Metrics over one window of whole fundamental periods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowMetrics {
    /// End of the window.
    pub t: f64,
    pub i_dc_cir: f64,
    pub i_ac_err_rms: f64,
    /// Mean output power of each unit over the window.
    pub p: [f64; N_DG],
    pub sharing_error: f64,
    /// DC component of each output current.
    pub i_dc: [f64; N_DG],
    /// Fundamental-frequency amplitude of each DC-link voltage.
    pub v_dc_ripple_w: [f64; N_DG],
    pub r_v: [f64; N_DG],
    pub v_off_hat: [f64; N_DG],
}

pub const METRIC_COLUMNS: [&str; 15] = [
    "t",
    "i_dc_cir",
    "i_ac_err_rms",
    "P1",
    "P2",
    "sharing_error",
    "i_dc1",
    "i_dc2",
    "vdc_ripple_w1",
    "vdc_ripple_w2",
    "Rv1",
    "Rv2",
    "voff_hat1",
    "voff_hat2",
    "p_avg",
];

impl WindowMetrics {
    pub fn p_avg(&self) -> f64 {
        self.p.iter().sum::<f64>() / N_DG as f64
    }

    pub fn values(&self) -> [f64; 15] {
        [
            self.t,
            self.i_dc_cir,
            self.i_ac_err_rms,
            self.p[0],
            self.p[1],
            self.sharing_error,
            self.i_dc[0],
            self.i_dc[1],
            self.v_dc_ripple_w[0],
            self.v_dc_ripple_w[1],
            self.r_v[0],
            self.r_v[1],
            self.v_off_hat[0],
            self.v_off_hat[1],
            self.p_avg(),
        ]
    }
}

/// Everything a run produces.
#[derive(Debug, Clone, Default)]
pub struct RunArtifacts {
    pub scenario: String,
    pub samples: Vec<Sample>,
    pub metrics: Vec<WindowMetrics>,
    pub messages: Vec<Message>,
}

impl RunArtifacts {
    pub fn final_metrics(&self) -> Option<&WindowMetrics> {
        self.metrics.last()
    }

    /// Last complete window ending at or before `t`.
    pub fn metrics_at(&self, t: f64) -> Option<&WindowMetrics> {
        self.metrics.iter().rev().find(|m| m.t <= t + 1e-9)
    }
}

#[derive(Debug, Clone, Default)]
struct WindowBuffers {
    v_c: [Vec<f64>; N_DG],
    i_o: [Vec<f64>; N_DG],
    v_dc: [Vec<f64>; N_DG],
}

impl WindowBuffers {
    fn push(&mut self, plant: &Plant) {
        for j in 0..N_DG {
            self.v_c[j].push(plant.state.v_c[j]);
            self.i_o[j].push(plant.state.i_o[j]);
            self.v_dc[j].push(plant.state.v_dc[j]);
        }
    }

    fn len(&self) -> usize {
        self.v_c[0].len()
    }

    fn take(&mut self) -> Self {
        std::mem::take(self)
    }
}

/// Tick-by-tick simulation of the two-unit microgrid.
#[derive(Debug, Clone)]
pub struct Simulation {
    scenario: Scenario,
    pub plant: Plant,
    pub controllers: Vec<InverterController>,
    pub estimators: Vec<OffsetEstimator>,
    pub avi: Vec<AviPiState>,
    pub channel: LbcChannel,
    sensors: Vec<SensorBank>,
    pub avi_enabled: bool,
    pub offset_comp_enabled: bool,
    tick: usize,
    next_event: usize,
    v_cmd: [f64; N_DG],
    window: WindowBuffers,
}

impl Simulation {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let dt = scenario.dt_control;
        let omega0 = scenario.omega0();
        let mut lbc = scenario.lbc;
        lbc.seed = scenario.seed;
        Ok(Self {
            plant: Plant::new(scenario.plant.clone())?,
            controllers: scenario
                .dgs
                .iter()
                .map(|d| InverterController::new(d.controller.clone(), dt))
                .collect(),
            estimators: scenario
                .dgs
                .iter()
                .map(|d| OffsetEstimator::new(d.estimator.resolve(&scenario.plant, omega0), omega0, dt))
                .collect(),
            avi: scenario.dgs.iter().map(|d| AviPiState::new(d.avi)).collect(),
            channel: LbcChannel::new(lbc, N_DG),
            sensors: scenario.dgs.iter().map(|d| d.sensors).collect(),
            avi_enabled: scenario.avi_enabled,
            offset_comp_enabled: scenario.offset_comp_enabled,
            tick: 0,
            next_event: 0,
            v_cmd: [0.0; N_DG],
            window: WindowBuffers::default(),
            scenario: scenario.clone(),
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn tick(&self) -> usize {
        self.tick
    }

    pub fn time(&self) -> f64 {
        self.tick as f64 * self.scenario.dt_control
    }

    pub fn is_finished(&self) -> bool {
        self.tick >= self.scenario.n_ticks()
    }

    fn apply_events(&mut self) {
        while let Some(ev) = self.scenario.events.get(self.next_event) {
            if self.scenario.tick_of(ev.time) > self.tick {
                break;
            }
            match ev.action {
                Action::EnableAvi => self.avi_enabled = true,
                Action::DisableAvi => self.avi_enabled = false,
                Action::EnableOffsetComp => self.offset_comp_enabled = true,
                Action::DisableOffsetComp => self.offset_comp_enabled = false,
                Action::SetLoad(r) => self.plant.set_load(r),
                Action::SetLine(dg, r) => self.plant.set_line(dg, r),
            }
            self.next_event += 1;
        }
    }

    fn annotate(&self, err: Error, t: f64) -> Error {
        let snapshot = || {
            let s = &self.plant.state;
            format!("v_c={:?} i_l={:?} v_dc={:?}", s.v_c, s.i_l, s.v_dc)
        };
        match err {
            Error::NonFinite { what, .. } => Error::NonFinite {
                what: format!("{what} [{}]", snapshot()),
                t,
            },
            other => other,
        }
    }

    /// Run one control tick. Returns the row describing the state at the
    /// start of the tick together with this tick's controller outputs.
    pub fn step(&mut self) -> Result<Sample> {
        let t = self.time();
        let dt = self.scenario.dt_control;
        self.apply_events();

        let state = &self.plant.state;
        let mut v_meas = [0.0; N_DG];
        let mut i_l_meas = [0.0; N_DG];
        let mut i_o_meas = [0.0; N_DG];
        let mut v_dc_meas = [0.0; N_DG];
        for (j, s) in self.sensors.iter().enumerate() {
            v_meas[j] = s.v_out.read(state.v_c[j]);
            i_l_meas[j] = s.i_inv.read(state.i_l[j]);
            i_o_meas[j] = s.i_out.read(state.i_o[j]);
            v_dc_meas[j] = s.v_dc.read(state.v_dc[j]);
        }

        let p_local: [f64; N_DG] = std::array::from_fn(|j| self.controllers[j].p_lpf());
        self.channel.step(t, &p_local);

        for j in 0..N_DG {
            let v_off_hat = if self.offset_comp_enabled {
                self.estimators[j].v_off_hat
            } else {
                0.0
            };
            let v_vir = if self.avi_enabled {
                let fresh = self.channel.fresh_average(j, t);
                let r_v = self.avi[j]
                    .step(fresh, p_local[j], dt)
                    .map_err(|e| self.annotate(e, t))?;
                virtual_drop(r_v, i_l_meas[j])
            } else {
                0.0
            };
            let res = self.controllers[j].step(v_meas[j], i_l_meas[j], i_o_meas[j], v_vir, v_off_hat, dt);
            self.v_cmd[j] = res.map_err(|e| self.annotate(e, t))?;
            let ctrl = &self.controllers[j];
            let (theta, omega, v_m) = (ctrl.theta, ctrl.omega, ctrl.v_ref_amplitude);
            let est = &mut self.estimators[j];
            let res = if self.offset_comp_enabled && est.is_warm() {
                est.step(v_dc_meas[j], theta, omega, v_m, dt).map(|_| ())
            } else {
                est.observe(v_dc_meas[j], theta, omega, dt)
            };
            res.map_err(|e| self.annotate(e, t))?;
        }

        let state = &self.plant.state;
        let sample = Sample {
            t,
            v_c: [state.v_c[0], state.v_c[1]],
            i_o: [state.i_o[0], state.i_o[1]],
            i_circ: state.i_o[0] - state.i_o[1],
            v_dc: [state.v_dc[0], state.v_dc[1]],
            p: std::array::from_fn(|j| self.controllers[j].p_lpf()),
            q: std::array::from_fn(|j| self.controllers[j].q_lpf()),
            r_v: std::array::from_fn(|j| self.avi[j].r_v),
            v_off_hat: std::array::from_fn(|j| self.estimators[j].v_off_hat),
        };
        self.window.push(&self.plant);

        let v_cmd = self.v_cmd;
        self.plant
            .advance(&v_cmd, dt, t)
            .map_err(|e| self.annotate(e, t))?;
        self.tick += 1;
        Ok(sample)
    }

    /// Metrics of the current window once it holds a full window of ticks.
    fn take_window(&mut self) -> Result<Option<WindowMetrics>> {
        if self.window.len() < self.scenario.window_len() {
            return Ok(None);
        }
        let buf = self.window.take();
        let dt = self.scenario.dt_control;
        let w = self.scenario.omega0();
        let win = |v: Vec<f64>| WaveformWindow::new(v, dt, w);
        let [v1, v2] = buf.v_c;
        let [i1, i2] = buf.i_o;
        let [d1, d2] = buf.v_dc;
        let (v1, v2, i1, i2) = (win(v1)?, win(v2)?, win(i1)?, win(i2)?);
        let (d1, d2) = (win(d1)?, win(d2)?);
        let circ = circulating_current(&i1, &i2)?;
        let p = [decompose_power(&v1, &i1)?.p_dc, decompose_power(&v2, &i2)?.p_dc];
        Ok(Some(WindowMetrics {
            t: self.time(),
            i_dc_cir: circ.i_dc_cir,
            i_ac_err_rms: circ.i_ac_err_rms,
            sharing_error: sharing_error(p[0], p[1]).unwrap_or(0.0),
            p,
            i_dc: [i1.mean(), i2.mean()],
            v_dc_ripple_w: [d1.amplitude(1), d2.amplitude(1)],
            r_v: std::array::from_fn(|j| self.avi[j].r_v),
            v_off_hat: std::array::from_fn(|j| self.estimators[j].v_off_hat),
        }))
    }

    /// Run to the end of the scenario.
    pub fn run(mut self) -> Result<RunArtifacts> {
        let n = self.scenario.n_ticks();
        let decimate = self.scenario.decimate;
        let mut samples = Vec::with_capacity(n / decimate + 1);
        let mut metrics = Vec::new();
        while !self.is_finished() {
            let k = self.tick;
            let sample = self.step()?;
            if k.is_multiple_of(decimate) {
                samples.push(sample);
            }
            if let Some(m) = self.take_window()? {
                metrics.push(m);
            }
        }
        Ok(RunArtifacts {
            scenario: self.scenario.name.clone(),
            samples,
            metrics,
            messages: self.channel.log().to_vec(),
        })
    }
}

pub fn run_scenario(scenario: &Scenario) -> Result<RunArtifacts> {
    Simulation::new(scenario)?.run()
}
