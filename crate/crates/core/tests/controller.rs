mod common;

use common::{DT, W};
use microgrid_core::analysis::{circulating_current, thd, WaveformWindow};
use microgrid_core::control::{P3r, P3rGains};
use microgrid_core::{Scenario, Simulation};

/// Step `sim` to `t_end`, then keep stepping for `cycles` nominal periods
/// and return the windows of `v_c` and `i_o` of both units.
fn settle_and_capture(sim: &mut Simulation, t_end: f64, cycles: usize) -> [[WaveformWindow; 2]; 2] {
    while sim.time() < t_end - 1e-9 {
        sim.step().unwrap();
    }
    let n = (cycles as f64 * std::f64::consts::TAU / W / DT).round() as usize;
    let mut buf = [[Vec::new(), Vec::new()], [Vec::new(), Vec::new()]];
    for _ in 0..n {
        let s = &sim.plant.state;
        for j in 0..2 {
            buf[0][j].push(s.v_c[j]);
            buf[1][j].push(s.i_o[j]);
        }
        sim.step().unwrap();
    }
    buf.map(|pair| pair.map(|v| WaveformWindow::new(v, DT, W).unwrap()))
}

#[test]
fn closed_loop_voltage_is_clean_and_on_the_droop_amplitude() {
    let mut sim = Simulation::new(&Scenario::builtin("balanced").unwrap()).unwrap();
    let [v_c, _] = settle_and_capture(&mut sim, 1.5, 5);
    for j in 0..2 {
        let droop_v = sim.controllers[j].v_ref_amplitude;
        let amp = v_c[j].amplitude(1);
        assert!(
            (amp - droop_v).abs() < 0.01 * droop_v,
            "DG{}: {amp} vs {droop_v}",
            j + 1
        );
        let d = thd(&v_c[j], &[3, 5, 7, 9]);
        assert!(d < 0.01, "DG{} THD {d}", j + 1);
    }
}

#[test]
fn resonator_ramps_like_the_analog_integrator() {
    let kr = 50.0;
    let mut r = P3r::new(P3rGains {
        kp: 0.0,
        kr: [kr, 0.0, 0.0],
        omega_s: W,
    });
    let per = (std::f64::consts::TAU / W / DT).round() as usize;
    // analog response to sin(ωt) is kr·t·sin(ωt)
    for cycle in 0..10 {
        let mut worst: f64 = 0.0;
        for s in 0..per {
            let t = ((cycle * per + s) as f64) * DT;
            let y = r.step((W * t).sin(), W, DT).unwrap();
            let want = kr * t * (W * t).sin();
            worst = worst.max((y - want).abs());
        }
        let envelope = kr * (cycle + 1) as f64 * per as f64 * DT;
        if cycle >= 1 {
            assert!(worst < 0.05 * envelope, "cycle {cycle}: {worst} vs {envelope}");
        }
    }
}

fn output_amplitudes_with_rv2(r_v2: f64) -> [f64; 2] {
    let mut s = Scenario::builtin("balanced").unwrap();
    s.avi_enabled = true;
    for (j, dg) in s.dgs.iter_mut().enumerate() {
        dg.avi.kp = 0.0;
        dg.avi.ki = 0.0;
        dg.avi.r_v_init = if j == 1 { r_v2 } else { 0.0 };
    }
    let mut sim = Simulation::new(&s).unwrap();
    let [_, i_o] = settle_and_capture(&mut sim, 1.5, 5);
    [i_o[0].amplitude(1), i_o[1].amplitude(1)]
}

#[test]
fn virtual_resistance_on_one_unit_shifts_current_monotonically() {
    let runs: Vec<[f64; 2]> = [0.0, 0.11, 0.22, 0.44]
        .iter()
        .map(|r| output_amplitudes_with_rv2(*r))
        .collect();
    assert!((runs[0][0] - runs[0][1]).abs() < 0.01 * runs[0][0]);
    for w in runs.windows(2) {
        assert!(w[1][1] < w[0][1], "DG2 must shrink: {:?}", runs);
        assert!(w[1][0] > w[0][0], "DG1 must grow: {:?}", runs);
    }
}

#[test]
fn known_offset_cancels_the_dc_circulating_current() {
    let mut s = Scenario::builtin("fig7").unwrap();
    s.offset_comp_enabled = true;
    for dg in &mut s.dgs {
        dg.estimator.k_est = 0.0;
    }
    let mut sim = Simulation::new(&s).unwrap();
    sim.estimators[0].v_off_hat = -5.0;
    let [_, i_o] = settle_and_capture(&mut sim, 2.0, 5);
    let c = circulating_current(&i_o[0], &i_o[1]).unwrap();
    assert!(c.i_dc_cir.abs() < 0.05, "{}", c.i_dc_cir);

    let mut plain = Simulation::new(&Scenario::builtin("fig7").unwrap()).unwrap();
    let [_, i_o] = settle_and_capture(&mut plain, 2.0, 5);
    let c = circulating_current(&i_o[0], &i_o[1]).unwrap();
    assert!(c.i_dc_cir.abs() > 0.5, "{}", c.i_dc_cir);
}
