#![allow(dead_code)]

use std::f64::consts::TAU;

use microgrid_core::analysis::WaveformWindow;
use microgrid_core::plant::{Plant, PlantParams};
use num_complex::Complex64;

pub const DT: f64 = 50e-6;
pub const W: f64 = TAU * 50.0;

/// Steady-state phasors of the open-loop network driven by bridge phasors
/// `u` (cosine reference). Unknown order: `v_c[0..n]`, then `v_load`.
pub struct PhasorSolution {
    pub v_c: Vec<Complex64>,
    pub v_load: Complex64,
    pub i_o: Vec<Complex64>,
}

fn solve_dense(mut a: Vec<Vec<Complex64>>, mut b: Vec<Complex64>) -> Vec<Complex64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col].clone();
            for (x, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= f * p;
            }
            let sub = f * b[col];
            b[row] -= sub;
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x
}

pub fn phasor_oracle(params: &PlantParams, u: &[Complex64], omega: f64) -> PhasorSolution {
    let n = u.len();
    let j = Complex64::i();
    let y_l = 1.0 / (j * omega * params.l_f);
    let y_c = j * omega * params.c_f;
    let zero = Complex64::new(0.0, 0.0);
    let mut a = vec![vec![zero; n + 1]; n + 1];
    let mut b = vec![zero; n + 1];
    for k in 0..n {
        let g = Complex64::new(1.0 / params.r_line[k], 0.0);
        a[k][k] = y_l + y_c + g;
        a[k][n] = -g;
        b[k] = y_l * u[k];
        a[n][k] = -g;
        a[n][n] += g;
    }
    a[n][n] += 1.0 / params.r_load;
    let x = solve_dense(a, b);
    let v_load = x[n];
    let v_c: Vec<_> = x[..n].to_vec();
    let i_o = v_c
        .iter()
        .zip(&params.r_line)
        .map(|(v, r)| (v - v_load) / r)
        .collect();
    PhasorSolution { v_c, v_load, i_o }
}

/// Phasor of `amp·cos(ωt + phase)`.
pub fn phasor(amp: f64, phase: f64) -> Complex64 {
    Complex64::from_polar(amp, phase)
}

/// Drive the plant open loop with `amp[k]·cos(ωt + phase[k])`, commands
/// refreshed every `dt_plant` at the middle of the step, and return the
/// last `periods` fundamental periods of `v_c` and `i_o`, sampled every
/// `DT`.
pub fn open_loop_windows(
    params: &PlantParams,
    amp: &[f64],
    phase: &[f64],
    settle_periods: usize,
    periods: usize,
) -> (Vec<WaveformWindow>, Vec<WaveformWindow>) {
    let n = amp.len();
    let mut plant = Plant::new(params.clone()).unwrap();
    let h = params.dt_plant;
    let per_sample = (DT / h).round() as usize;
    let per_period = (TAU / W / DT).round() as usize;
    let total = (settle_periods + periods) * per_period;
    let mut v_c = vec![Vec::new(); n];
    let mut i_o = vec![Vec::new(); n];
    let mut cmd = vec![0.0; n];
    for k in 0..total {
        if k >= settle_periods * per_period {
            for d in 0..n {
                v_c[d].push(plant.state.v_c[d]);
                i_o[d].push(plant.state.i_o[d]);
            }
        }
        for s in 0..per_sample {
            let t = (k * per_sample + s) as f64 * h + 0.5 * h;
            for d in 0..n {
                cmd[d] = amp[d] * (W * t + phase[d]).cos();
            }
            plant.advance(&cmd, h, t).unwrap();
        }
    }
    let win = |v: Vec<f64>| WaveformWindow::new(v, DT, W).unwrap();
    (
        v_c.into_iter().map(win).collect(),
        i_o.into_iter().map(win).collect(),
    )
}

/// Relative amplitude error and phase error (degrees) between a measured
/// `(amp, phase)` pair and a phasor.
pub fn compare(measured: (f64, f64), expected: Complex64) -> (f64, f64) {
    let (amp, ph) = measured;
    let rel = (amp - expected.norm()).abs() / expected.norm();
    let mut d = (ph - expected.arg()).to_degrees();
    while d > 180.0 {
        d -= 360.0;
    }
    while d < -180.0 {
        d += 360.0;
    }
    (rel, d.abs())
}

/// DC nodal solution for units modelled as DC sources `e` behind their
/// feeders: returns the DC output currents.
pub fn dc_nodal_currents(params: &PlantParams, e: &[f64]) -> Vec<f64> {
    let g: f64 = params.r_line.iter().map(|r| 1.0 / r).sum::<f64>() + 1.0 / params.r_load;
    let inj: f64 = e.iter().zip(&params.r_line).map(|(e, r)| e / r).sum();
    let v_load = inj / g;
    e.iter()
        .zip(&params.r_line)
        .map(|(e, r)| (e - v_load) / r)
        .collect()
}
