use std::f64::consts::TAU;

use crate::avi::{AviParams, LbcParams};
use crate::control::ControllerParams;
use crate::error::{Error, Result};
use crate::offsetcomp::EstimatorParams;
use crate::plant::PlantParams;
use crate::sensing::{SensorBank, SensorModel};

/// Number of DG units the runner drives.
pub const N_DG: usize = 2;

/// Names of the compiled-in scenarios.
pub const CANONICAL: [&str; 6] = ["balanced", "fig7", "fig8", "fig10", "fig11", "load_step"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Action {
    EnableAvi,
    DisableAvi,
    EnableOffsetComp,
    DisableOffsetComp,
    /// New load resistance (Ω).
    SetLoad(f64),
    /// Zero-based DG index and new line resistance (Ω).
    SetLine(usize, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub action: Action,
}

/// Offset estimator settings; `None` gain/phase follow the DC-link model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub omega_b: f64,
    pub f_lpf: f64,
    pub k_est: f64,
    pub v_off_max: f64,
    pub k_demod: Option<f64>,
    pub carrier_phase: Option<f64>,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            omega_b: TAU * 10.0,
            f_lpf: 2.0,
            k_est: 20.0,
            v_off_max: 20.0,
            k_demod: None,
            carrier_phase: None,
        }
    }
}

impl EstimatorConfig {
    pub fn resolve(&self, plant: &PlantParams, omega0: f64) -> EstimatorParams {
        let link =
            EstimatorParams::for_dc_link(plant.c_dc, Some(plant.r_dc_source), plant.v_dc_nominal, omega0);
        EstimatorParams {
            omega_b: self.omega_b,
            f_lpf: self.f_lpf,
            k_est: self.k_est,
            v_off_max: self.v_off_max,
            k_demod: self.k_demod.unwrap_or(link.k_demod),
            carrier_phase: self.carrier_phase.unwrap_or(link.carrier_phase),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DgConfig {
    pub controller: ControllerParams,
    pub sensors: SensorBank,
    pub estimator: EstimatorConfig,
    pub avi: AviParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub duration: f64,
    pub dt_control: f64,
    /// Time-series rows are emitted every `decimate` control ticks.
    pub decimate: usize,
    /// Metric windows span this many nominal fundamental periods.
    pub window_cycles: usize,
    pub seed: u64,
    pub avi_enabled: bool,
    pub offset_comp_enabled: bool,
    pub plant: PlantParams,
    pub dgs: Vec<DgConfig>,
    pub lbc: LbcParams,
    pub events: Vec<Event>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            name: "default".into(),
            duration: 2.0,
            dt_control: 50e-6,
            decimate: 10,
            window_cycles: 5,
            seed: 1,
            avi_enabled: false,
            offset_comp_enabled: false,
            plant: PlantParams::two_unit(0.22, 0.22),
            dgs: vec![DgConfig::default(); N_DG],
            lbc: LbcParams::default(),
            events: Vec::new(),
        }
    }
}

impl Scenario {
    pub fn n_ticks(&self) -> usize {
        (self.duration / self.dt_control).round() as usize
    }

    pub fn tick_of(&self, time: f64) -> usize {
        (time / self.dt_control).round() as usize
    }

    pub fn omega0(&self) -> f64 {
        self.dgs[0].controller.droop.omega0
    }

    /// Samples per metric window.
    pub fn window_len(&self) -> usize {
        (self.window_cycles as f64 * TAU / self.omega0() / self.dt_control).round() as usize
    }

    pub fn with_events(mut self, events: impl IntoIterator<Item = Event>) -> Self {
        self.events.extend(events);
        self.events.sort_by(|a, b| a.time.total_cmp(&b.time));
        self
    }

    fn set_voltage_offsets(&mut self, offsets: [f64; N_DG]) {
        for (dg, off) in self.dgs.iter_mut().zip(offsets) {
            dg.sensors.v_out = SensorModel::with_offset(off);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("simulation.duration", self.duration),
            ("simulation.dt_control", self.dt_control),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(key, "must be finite and > 0"));
            }
        }
        if self.decimate == 0 {
            return Err(Error::validation("simulation.decimate", "must be >= 1"));
        }
        if self.window_cycles == 0 {
            return Err(Error::validation("simulation.window_cycles", "must be >= 1"));
        }
        self.plant.validate()?;
        let ratio = self.dt_control / self.plant.dt_plant;
        if ratio < 1.0 - 1e-9 || (ratio - ratio.round()).abs() > 1e-6 {
            return Err(Error::validation(
                "plant.dt_plant",
                "must divide dt_control an integer number of times",
            ));
        }
        if self.dgs.len() != N_DG || self.plant.n_dg() != N_DG {
            return Err(Error::validation(
                "dg",
                format!("exactly {N_DG} DG sections required"),
            ));
        }
        let omega0 = self.omega0();
        for (i, dg) in self.dgs.iter().enumerate() {
            let prefix = format!("dg.{}", i + 1);
            dg.controller.validate(&prefix)?;
            if dg.controller.droop.omega0 != omega0 {
                return Err(Error::validation(
                    format!("{prefix}.f0"),
                    "all DGs must share the nominal frequency",
                ));
            }
            dg.sensors.validate(&prefix)?;
            dg.estimator.resolve(&self.plant, omega0).validate(&prefix)?;
            dg.avi.validate(&prefix, self.plant.r_line[i])?;
        }
        self.lbc.validate()?;
        let mut last = 0.0;
        for ev in &self.events {
            if !(ev.time >= 0.0 && ev.time <= self.duration) {
                return Err(Error::validation(
                    "events",
                    format!("time {} outside run", ev.time),
                ));
            }
            if ev.time < last {
                return Err(Error::validation("events", "events must be time-sorted"));
            }
            last = ev.time;
            match ev.action {
                Action::SetLoad(r) if !(r > 0.0 && r.is_finite()) => {
                    return Err(Error::validation(
                        "events",
                        "set_load needs a positive resistance",
                    ));
                }
                Action::SetLine(dg, r) => {
                    if dg >= N_DG {
                        return Err(Error::validation("events", format!("no DG {}", dg + 1)));
                    }
                    if !(r > 0.0 && r.is_finite()) {
                        return Err(Error::validation(
                            "events",
                            "set_line needs a positive resistance",
                        ));
                    }
                    let mut after = self.plant.clone();
                    after.r_line[dg] = r;
                    if self.plant.dt_plant > after.max_stable_step() {
                        return Err(Error::validation(
                            "events",
                            "set_line resistance too small for dt_plant",
                        ));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Compiled-in scenario by name.
    pub fn builtin(name: &str) -> Result<Self> {
        let mut s = Scenario {
            name: name.to_string(),
            ..Scenario::default()
        };
        let mismatched = PlantParams::two_unit(0.44, 0.22);
        match name {
            "balanced" => {}
            "fig7" => {
                s.duration = 3.0;
                s.plant = mismatched;
                s.set_voltage_offsets([-5.0, 0.0]);
            }
            "fig8" => {
                s.duration = 6.0;
                s.plant = mismatched;
                s.set_voltage_offsets([-5.0, 0.0]);
                s.avi_enabled = true;
                s.offset_comp_enabled = true;
            }
            "fig10" => {
                s.duration = 7.0;
                s.plant = mismatched;
                s.set_voltage_offsets([-5.0, 0.0]);
                s.offset_comp_enabled = true;
                s = s.with_events([Event {
                    time: 3.0,
                    action: Action::EnableAvi,
                }]);
            }
            "fig11" => {
                s.duration = 7.0;
                s.plant = mismatched;
                s.set_voltage_offsets([-5.0, 0.0]);
                s = s.with_events([Event {
                    time: 1.0,
                    action: Action::EnableOffsetComp,
                }]);
            }
            "load_step" => {
                s.duration = 8.0;
                s.plant = mismatched;
                s.set_voltage_offsets([-5.0, 0.0]);
                s.avi_enabled = true;
                s.offset_comp_enabled = true;
                s = s.with_events([Event {
                    time: 5.0,
                    action: Action::SetLoad(7.0),
                }]);
            }
            other => return Err(Error::UnknownScenario(other.to_string())),
        }
        Ok(s)
    }

    pub fn describe(name: &str) -> &'static str {
        match name {
            "balanced" => "equal 0.22 Ω lines, ideal sensors, plain droop",
            "fig7" => "0.44/0.22 Ω lines, -5 V offset on DG1 voltage sensor, plain droop",
            "fig8" => "fig7 with adaptive virtual resistance and offset compensation from t = 0",
            "fig10" => "fig7 with offset compensation; adaptive virtual resistance enabled at t = 3 s",
            "fig11" => "fig7 with offset compensation enabled at t = 1 s",
            "load_step" => "fig8 with the load stepped from 14 Ω to 7 Ω at t = 5 s",
            _ => "",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_builtins_validate() {
        for name in CANONICAL {
            Scenario::builtin(name).unwrap().validate().unwrap();
        }
        assert!(matches!(
            Scenario::builtin("nope"),
            Err(Error::UnknownScenario(_))
        ));
    }

    #[test]
    fn fig7_matches_bench_settings() {
        let s = Scenario::builtin("fig7").unwrap();
        assert_eq!(s.plant.r_line, vec![0.44, 0.22]);
        assert_eq!(s.plant.r_load, 14.0);
        assert_eq!(s.plant.l_f, 0.5e-3);
        assert_eq!(s.plant.c_f, 15e-6);
        assert_eq!(s.plant.v_dc_nominal, 250.0);
        assert_eq!(s.dgs[0].sensors.v_out.offset, -5.0);
        assert_eq!(s.dgs[1].sensors.v_out.offset, 0.0);
        assert_eq!(s.dgs[0].controller.droop.m, 0.001);
        assert_eq!(s.dgs[0].controller.droop.n, 0.0025);
        assert!(!s.avi_enabled && !s.offset_comp_enabled);
    }

    #[test]
    fn fig8_enables_both_compensators() {
        let s = Scenario::builtin("fig8").unwrap();
        assert!(s.avi_enabled && s.offset_comp_enabled);
        assert_eq!(s.plant.r_line, vec![0.44, 0.22]);
    }

    #[test]
    fn balanced_is_symmetric() {
        let s = Scenario::builtin("balanced").unwrap();
        assert_eq!(s.plant.r_line, vec![0.22, 0.22]);
        assert!(s.dgs.iter().all(|d| d.sensors == SensorBank::default()));
    }

    #[test]
    fn window_is_five_cycles() {
        assert_eq!(Scenario::default().window_len(), 2000);
    }

    #[test]
    fn rejects_bad_event_target() {
        let s = Scenario::default().with_events([Event {
            time: 0.5,
            action: Action::SetLine(4, 0.3),
        }]);
        assert!(matches!(s.validate(), Err(Error::Validation { .. })));
    }

    #[test]
    fn rejects_non_divisor_plant_step() {
        let mut s = Scenario::default();
        s.plant.dt_plant = 7e-6;
        assert!(s.validate().is_err());
    }
}
