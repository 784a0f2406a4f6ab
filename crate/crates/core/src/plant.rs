//! Averaged electrical model of N single-phase inverters feeding a shared
//! resistive load through resistive lines.
//!
//! ```text
//!  v_bridge[i] ──L_f── v_c[i] ──r_line[i]──┐
//!                        │                 ├── v_load ── r_load ── gnd
//!                       C_f                │
//!                        │    (other DGs) ─┘
//!                       gnd
//! ```
//!
//! The LC part is integrated with classical RK4 while the bridge command is
//! held; the load node is algebraic and re-solved at every stage. Each DC
//! link is an ideal source behind `r_dc_source` feeding `c_dc`, discharged by
//! the instantaneous bridge power.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PlantParams {
    pub l_f: f64,
    pub c_f: f64,
    pub r_line: Vec<f64>,
    pub r_load: f64,
    pub v_dc_nominal: f64,
    pub c_dc: f64,
    pub r_dc_source: f64,
    pub dt_plant: f64,
}

impl PlantParams {
    /// Hardware values of the two-unit test bench with the given line
    /// resistances.
    pub fn two_unit(r1: f64, r2: f64) -> Self {
        Self {
            l_f: 0.5e-3,
            c_f: 15e-6,
            r_line: vec![r1, r2],
            r_load: 14.0,
            v_dc_nominal: 250.0,
            c_dc: 2e-3,
            r_dc_source: 0.5,
            dt_plant: 5e-6,
        }
    }

    pub fn n_dg(&self) -> usize {
        self.r_line.len()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("plant.l_f", self.l_f),
            ("plant.c_f", self.c_f),
            ("plant.r_load", self.r_load),
            ("plant.v_dc_nominal", self.v_dc_nominal),
            ("plant.c_dc", self.c_dc),
            ("plant.r_dc_source", self.r_dc_source),
            ("plant.dt_plant", self.dt_plant),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(key, "must be finite and > 0"));
            }
        }
        if self.r_line.is_empty() {
            return Err(Error::validation("plant.r_line", "at least one DG required"));
        }
        for (i, r) in self.r_line.iter().enumerate() {
            if !(r.is_finite() && *r > 0.0) {
                return Err(Error::validation(
                    format!("dg.{}.r_line", i + 1),
                    "must be finite and > 0",
                ));
            }
        }
        if self.dt_plant > self.max_stable_step() {
            return Err(Error::validation(
                "plant.dt_plant",
                format!(
                    "RK4 needs dt_plant <= {:.3e} s with these line resistances",
                    self.max_stable_step()
                ),
            ));
        }
        Ok(())
    }

    /// Largest plant step for which RK4 stays stable on the fastest
    /// capacitor mode, whose time constant is at least `c_f·min(r_line)`.
    pub fn max_stable_step(&self) -> f64 {
        let r_min = self.r_line.iter().copied().fold(f64::INFINITY, f64::min);
        2.5 * self.c_f * r_min
    }
}

/// Continuous electrical state. `v_load` and `i_o` are algebraic and always
/// consistent with `v_c` after a step.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    pub i_l: Vec<f64>,
    pub v_c: Vec<f64>,
    pub v_dc: Vec<f64>,
    pub v_load: f64,
    pub i_o: Vec<f64>,
}

impl PlantState {
    /// De-energized AC side with every DC link at nominal voltage.
    pub fn at_rest(params: &PlantParams) -> Self {
        let n = params.n_dg();
        Self {
            i_l: vec![0.0; n],
            v_c: vec![0.0; n],
            v_dc: vec![params.v_dc_nominal; n],
            v_load: 0.0,
            i_o: vec![0.0; n],
        }
    }
}

/// Load-node solution.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadNode {
    pub v_load: f64,
    pub i_o: Vec<f64>,
}

pub fn solve_load_node(v_c: &[f64], params: &PlantParams) -> LoadNode {
    let mut i_o = vec![0.0; v_c.len()];
    let v_load = solve_load_node_into(v_c, &params.r_line, params.r_load, &mut i_o);
    LoadNode { v_load, i_o }
}

/// Nodal solution of the shared load bus; writes line currents into `i_o`.
pub(crate) fn solve_load_node_into(v_c: &[f64], r_line: &[f64], r_load: f64, i_o: &mut [f64]) -> f64 {
    let mut injected = 0.0;
    let mut conductance = 1.0 / r_load;
    for (v, r) in v_c.iter().zip(r_line) {
        injected += v / r;
        conductance += 1.0 / r;
    }
    let v_load = injected / conductance;
    for ((io, v), r) in i_o.iter_mut().zip(v_c).zip(r_line) {
        *io = (v - v_load) / r;
    }
    v_load
}

/// RK4 scratch for the LC subsystem; layout is `[i_l..., v_c...]`.
#[derive(Debug, Clone)]
struct LcScratch {
    x: Vec<f64>,
    tmp: Vec<f64>,
    k: [Vec<f64>; 4],
    i_o: Vec<f64>,
}

impl LcScratch {
    fn new(n: usize) -> Self {
        let z = || vec![0.0; 2 * n];
        Self {
            x: z(),
            tmp: z(),
            k: [z(), z(), z(), z()],
            i_o: vec![0.0; n],
        }
    }
}

fn lc_derivative(x: &[f64], v_bridge: &[f64], params: &PlantParams, i_o: &mut [f64], dx: &mut [f64]) {
    let n = v_bridge.len();
    let (i_l, v_c) = x.split_at(n);
    solve_load_node_into(v_c, &params.r_line, params.r_load, i_o);
    let (di, dv) = dx.split_at_mut(n);
    for j in 0..n {
        di[j] = (v_bridge[j] - v_c[j]) / params.l_f;
        dv[j] = (i_l[j] - i_o[j]) / params.c_f;
    }
}

/// Clamp a bridge command to what the DC link can synthesize.
#[inline]
pub fn clamp_bridge(cmd: f64, v_dc: f64) -> f64 {
    cmd.clamp(-v_dc, v_dc)
}

fn rk4_lc(state: &mut PlantState, v_bridge: &[f64], params: &PlantParams, dt: f64, s: &mut LcScratch) {
    let n = v_bridge.len();
    s.x[..n].copy_from_slice(&state.i_l);
    s.x[n..].copy_from_slice(&state.v_c);

    let LcScratch { x, tmp, k, i_o } = s;
    let [k1, k2, k3, k4] = k;
    lc_derivative(x, v_bridge, params, i_o, k1);
    for ((t, xv), d) in tmp.iter_mut().zip(x.iter()).zip(k1.iter()) {
        *t = xv + 0.5 * dt * d;
    }
    lc_derivative(tmp, v_bridge, params, i_o, k2);
    for ((t, xv), d) in tmp.iter_mut().zip(x.iter()).zip(k2.iter()) {
        *t = xv + 0.5 * dt * d;
    }
    lc_derivative(tmp, v_bridge, params, i_o, k3);
    for ((t, xv), d) in tmp.iter_mut().zip(x.iter()).zip(k3.iter()) {
        *t = xv + dt * d;
    }
    lc_derivative(tmp, v_bridge, params, i_o, k4);
    for j in 0..2 * n {
        x[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }

    state.i_l.copy_from_slice(&x[..n]);
    state.v_c.copy_from_slice(&x[n..]);
    state.v_load = solve_load_node_into(&state.v_c, &params.r_line, params.r_load, &mut state.i_o);
}

/// Advance the LC network by `dt` with bridge commands held constant.
///
/// Commands are clamped to `±v_dc` of their own unit. Returns the applied
/// (clamped) bridge voltages.
pub fn step_plant(
    state: &mut PlantState,
    v_bridge_cmd: &[f64],
    params: &PlantParams,
    dt: f64,
) -> Result<Vec<f64>> {
    let mut scratch = LcScratch::new(params.n_dg());
    let applied: Vec<f64> = v_bridge_cmd
        .iter()
        .zip(&state.v_dc)
        .map(|(c, vdc)| clamp_bridge(*c, *vdc))
        .collect();
    rk4_lc(state, &applied, params, dt, &mut scratch);
    check_lc_finite(state, f64::NAN)?;
    Ok(applied)
}

fn check_lc_finite(state: &PlantState, t: f64) -> Result<()> {
    if state.i_l.iter().chain(&state.v_c).all(|v| v.is_finite()) && state.v_load.is_finite() {
        Ok(())
    } else {
        Err(Error::non_finite("LC filter state", t))
    }
}

fn dc_link_rate(v_dc: f64, p_out: f64, params: &PlantParams) -> f64 {
    ((params.v_dc_nominal - v_dc) / params.r_dc_source - p_out / v_dc) / params.c_dc
}

/// Advance one DC-link voltage by `dt` with the bridge power held at `p_out`.
pub fn step_dc_link(v_dc: f64, p_out: f64, params: &PlantParams, dt: f64) -> Result<f64> {
    let k1 = dc_link_rate(v_dc, p_out, params);
    let k2 = dc_link_rate(v_dc + 0.5 * dt * k1, p_out, params);
    let k3 = dc_link_rate(v_dc + 0.5 * dt * k2, p_out, params);
    let k4 = dc_link_rate(v_dc + dt * k3, p_out, params);
    let next = v_dc + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if !next.is_finite() {
        return Err(Error::non_finite("DC-link voltage", f64::NAN));
    }
    Ok(next)
}

/// Plant with reusable integration scratch, stepped by the simulation loop.
#[derive(Debug, Clone)]
pub struct Plant {
    pub params: PlantParams,
    pub state: PlantState,
    scratch: LcScratch,
    applied: Vec<f64>,
    i_l_prev: Vec<f64>,
    /// Bridge power of each unit averaged over the last control period.
    pub p_bridge_avg: Vec<f64>,
}

impl Plant {
    pub fn new(params: PlantParams) -> Result<Self> {
        params.validate()?;
        let n = params.n_dg();
        Ok(Self {
            state: PlantState::at_rest(&params),
            scratch: LcScratch::new(n),
            applied: vec![0.0; n],
            i_l_prev: vec![0.0; n],
            p_bridge_avg: vec![0.0; n],
            params,
        })
    }

    pub fn n_dg(&self) -> usize {
        self.params.n_dg()
    }

    pub fn set_load(&mut self, r_load: f64) {
        self.params.r_load = r_load;
        self.resolve_node();
    }

    pub fn set_line(&mut self, dg: usize, r: f64) {
        self.params.r_line[dg] = r;
        self.resolve_node();
    }

    fn resolve_node(&mut self) {
        self.state.v_load = solve_load_node_into(
            &self.state.v_c,
            &self.params.r_line,
            self.params.r_load,
            &mut self.state.i_o,
        );
    }

    /// Bridge voltages applied during the most recent sub-step.
    pub fn applied_bridge(&self) -> &[f64] {
        &self.applied
    }

    /// Hold `v_cmd` for `dt_control`, integrating in `dt_plant` sub-steps.
    /// `t` is only used to label errors.
    pub fn advance(&mut self, v_cmd: &[f64], dt_control: f64, t: f64) -> Result<()> {
        let substeps = (dt_control / self.params.dt_plant).round().max(1.0) as usize;
        let h = dt_control / substeps as f64;
        self.p_bridge_avg.iter_mut().for_each(|p| *p = 0.0);
        for _ in 0..substeps {
            for (j, a) in self.applied.iter_mut().enumerate() {
                *a = clamp_bridge(v_cmd[j], self.state.v_dc[j]);
            }
            self.i_l_prev.copy_from_slice(&self.state.i_l);
            rk4_lc(&mut self.state, &self.applied, &self.params, h, &mut self.scratch);
            check_lc_finite(&self.state, t)?;
            for j in 0..self.applied.len() {
                let p_out = self.applied[j] * 0.5 * (self.i_l_prev[j] + self.state.i_l[j]);
                self.p_bridge_avg[j] += p_out / substeps as f64;
                let v = step_dc_link(self.state.v_dc[j], p_out, &self.params, h)
                    .map_err(|_| Error::non_finite(format!("DC link of DG {}", j + 1), t))?;
                if v < 0.5 * self.params.v_dc_nominal {
                    let st = &self.state;
                    return Err(Error::DcCollapse {
                        dg: j + 1,
                        v_dc: v,
                        t,
                        state: format!("v_c={:?} i_l={:?} v_dc={:?}", st.v_c, st.i_l, st.v_dc),
                    });
                }
                self.state.v_dc[j] = v;
            }
        }
        Ok(())
    }
}
