use std::f64::consts::TAU;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use microgrid_core::analysis::{decompose_power, WaveformWindow};
use microgrid_core::control::{ControllerParams, InverterController};
use microgrid_core::plant::{Plant, PlantParams};
use microgrid_core::{run_scenario, Scenario, Simulation};

const DT: f64 = 50e-6;
const W: f64 = TAU * 50.0;

fn plant_tick(c: &mut Criterion) {
    let mut plant = Plant::new(PlantParams::two_unit(0.44, 0.22)).unwrap();
    let mut k = 0usize;
    c.bench_function("plant/advance_one_control_tick", |b| {
        b.iter(|| {
            let t = k as f64 * DT;
            let u = 200.0 * (W * t).sin();
            plant.advance(black_box(&[u, 0.98 * u]), DT, t).unwrap();
            k += 1;
        })
    });
}

fn controller_tick(c: &mut Criterion) {
    let mut ctrl = InverterController::new(ControllerParams::default(), DT);
    let mut k = 0usize;
    c.bench_function("control/step", |b| {
        b.iter(|| {
            let t = k as f64 * DT;
            let v = 198.0 * (W * t).sin();
            let i = 10.0 * (W * t).sin();
            black_box(ctrl.step(v, i, i, 0.0, 0.0, DT).unwrap());
            k += 1;
        })
    });
}

fn full_tick(c: &mut Criterion) {
    let mut s = Scenario::builtin("fig8").unwrap();
    s.duration = 1e6;
    let mut sim = Simulation::new(&s).unwrap();
    for _ in 0..2000 {
        sim.step().unwrap();
    }
    c.bench_function("simulation/step_fig8", |b| {
        b.iter(|| black_box(sim.step().unwrap()))
    });
}

fn window_metrics(c: &mut Criterion) {
    let v = WaveformWindow::from_fn(5, DT, W, |t| 200.0 * (W * t).sin() - 5.0).unwrap();
    let i = WaveformWindow::from_fn(5, DT, W, |t| 10.0 * (W * t - 0.1).sin() + 0.5).unwrap();
    c.bench_function("analysis/decompose_power_2000", |b| {
        b.iter(|| black_box(decompose_power(black_box(&v), black_box(&i)).unwrap()))
    });
}

fn scenarios(c: &mut Criterion) {
    let mut group = c.benchmark_group("scenario");
    group.sample_size(10);
    for name in ["balanced", "fig8"] {
        let mut s = Scenario::builtin(name).unwrap();
        s.duration = 0.5;
        group.throughput(Throughput::Elements(s.n_ticks() as u64));
        group.bench_function(format!("{name}_0.5s"), |b| {
            b.iter_batched(|| s.clone(), |s| run_scenario(&s).unwrap(), BatchSize::SmallInput)
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    plant_tick,
    controller_tick,
    full_tick,
    window_metrics,
    scenarios
);
criterion_main!(benches);
