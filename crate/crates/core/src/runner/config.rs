//! Line-oriented scenario files.
//!
//! ```text
//! # comment
//! [simulation]
//! base = fig7            # optional, must come first
//! duration = 4.0
//!
//! [dg.1]
//! v_out_offset = -3.0
//!
//! [events]
//! event = 2.0 enable_avi
//! event = 3.0 set_load 10
//! ```
//!
//! Keys not set in the file keep the value of the base scenario (or the
//! defaults when there is no base). A non-empty `[events]` section replaces
//! the events of the base scenario.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::runner::scenario::{Action, Event, Scenario, CANONICAL, N_DG};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Simulation,
    Plant,
    Dg(usize),
    Lbc,
    Events,
}

impl Section {
    fn parse(name: &str) -> Option<Self> {
        match name {
            "simulation" => Some(Section::Simulation),
            "plant" => Some(Section::Plant),
            "lbc" => Some(Section::Lbc),
            "events" => Some(Section::Events),
            _ => {
                let idx: usize = name.strip_prefix("dg.")?.parse().ok()?;
                (1..=N_DG).contains(&idx).then_some(Section::Dg(idx - 1))
            }
        }
    }
}

/// One documented key of the format.
pub struct KeyDoc {
    pub section: &'static str,
    pub key: &'static str,
    pub doc: &'static str,
}

const fn k(section: &'static str, key: &'static str, doc: &'static str) -> KeyDoc {
    KeyDoc { section, key, doc }
}

/// Every key accepted by the parser, in rendering order.
pub const KEYS: &[KeyDoc] = &[
    k("simulation", "name", "label written to the summary"),
    k("simulation", "duration", "simulated time (s)"),
    k("simulation", "dt_control", "controller period (s)"),
    k("simulation", "decimate", "time-series row every N control ticks"),
    k(
        "simulation",
        "window_cycles",
        "fundamental periods per metric window",
    ),
    k("simulation", "seed", "seed of the communication channel RNG"),
    k(
        "simulation",
        "avi_enabled",
        "adaptive virtual resistance active at t = 0",
    ),
    k(
        "simulation",
        "offset_comp_enabled",
        "offset compensation active at t = 0",
    ),
    k("plant", "l_f", "filter inductance (H)"),
    k("plant", "c_f", "filter capacitance (F)"),
    k("plant", "r_load", "load resistance (Ω)"),
    k("plant", "v_dc_nominal", "DC source voltage (V)"),
    k("plant", "c_dc", "DC-link capacitance (F)"),
    k("plant", "r_dc_source", "DC source series resistance (Ω)"),
    k(
        "plant",
        "dt_plant",
        "plant integration step (s); must divide dt_control",
    ),
    k("dg", "r_line", "feeder resistance to the load node (Ω)"),
    k("dg", "v0", "no-load voltage amplitude (V peak)"),
    k("dg", "f0", "nominal frequency (Hz)"),
    k("dg", "m", "P droop slope (V/W)"),
    k("dg", "n", "Q droop slope (rad/s per var)"),
    k("dg", "q_sign", "sign of the Q term in the frequency droop"),
    k("dg", "f_pq", "P/Q low-pass cutoff (Hz)"),
    k("dg", "v_kp", "voltage loop proportional gain"),
    k("dg", "v_kr1", "voltage loop resonant gain at ω"),
    k("dg", "v_kr3", "voltage loop resonant gain at 3ω"),
    k("dg", "v_kr5", "voltage loop resonant gain at 5ω"),
    k("dg", "i_kp", "current loop proportional gain"),
    k("dg", "i_kr1", "current loop resonant gain at ω"),
    k("dg", "i_kr3", "current loop resonant gain at 3ω"),
    k("dg", "i_kr5", "current loop resonant gain at 5ω"),
    k("dg", "v_out_offset", "output-voltage sensor offset (V)"),
    k("dg", "v_out_scale", "output-voltage sensor gain"),
    k("dg", "i_inv_offset", "inductor-current sensor offset (A)"),
    k("dg", "i_inv_scale", "inductor-current sensor gain"),
    k("dg", "i_out_offset", "output-current sensor offset (A)"),
    k("dg", "i_out_scale", "output-current sensor gain"),
    k("dg", "v_dc_offset", "DC-link sensor offset (V)"),
    k("dg", "v_dc_scale", "DC-link sensor gain"),
    k("dg", "est_omega_b", "estimator band-pass bandwidth (rad/s)"),
    k("dg", "est_f_lpf", "estimator low-pass cutoff (Hz)"),
    k("dg", "est_k_est", "estimator integrator gain"),
    k("dg", "est_v_off_max", "estimate clamp (V)"),
    k(
        "dg",
        "est_k_demod",
        "ripple-to-power gain (W/V); `auto` follows the DC link",
    ),
    k(
        "dg",
        "est_carrier_phase",
        "demodulation carrier phase (rad); `auto` follows the DC link",
    ),
    k("dg", "avi_kp", "virtual resistance PI proportional gain (Ω/W)"),
    k("dg", "avi_ki", "virtual resistance PI integral gain (Ω/(W·s))"),
    k("dg", "avi_r_v_min", "lower virtual resistance bound (Ω)"),
    k("dg", "avi_r_v_max", "upper virtual resistance bound (Ω)"),
    k("dg", "avi_sign", "sign applied to p_avg − p_local"),
    k("dg", "avi_r_v_init", "initial virtual resistance (Ω)"),
    k("lbc", "report_period", "power report period (s)"),
    k("lbc", "latency", "one-way message latency (s)"),
    k("lbc", "drop_probability", "probability that a message is lost"),
    k(
        "lbc",
        "staleness_periods",
        "age limit of the average, in report periods",
    ),
];

fn num(raw: &str) -> std::result::Result<f64, String> {
    let v: f64 = raw.parse().map_err(|_| format!("`{raw}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{raw}` is not finite"))
    }
}

fn int<T: std::str::FromStr>(raw: &str) -> std::result::Result<T, String> {
    raw.parse()
        .map_err(|_| format!("`{raw}` is not a non-negative integer"))
}

fn boolean(raw: &str) -> std::result::Result<bool, String> {
    match raw {
        "true" | "on" | "yes" => Ok(true),
        "false" | "off" | "no" => Ok(false),
        _ => Err(format!("`{raw}` is not a boolean")),
    }
}

fn auto(raw: &str) -> std::result::Result<Option<f64>, String> {
    if raw == "auto" {
        Ok(None)
    } else {
        num(raw).map(Some)
    }
}

fn set_key(s: &mut Scenario, section: Section, key: &str, raw: &str) -> std::result::Result<(), String> {
    match section {
        Section::Simulation => match key {
            "name" => s.name = raw.to_string(),
            "duration" => s.duration = num(raw)?,
            "dt_control" => s.dt_control = num(raw)?,
            "decimate" => s.decimate = int(raw)?,
            "window_cycles" => s.window_cycles = int(raw)?,
            "seed" => s.seed = int(raw)?,
            "avi_enabled" => s.avi_enabled = boolean(raw)?,
            "offset_comp_enabled" => s.offset_comp_enabled = boolean(raw)?,
            "base" => return Err("`base` must be the first key of the file".into()),
            _ => return Err(format!("unknown key `{key}` in [simulation]")),
        },
        Section::Plant => {
            let p = &mut s.plant;
            let slot = match key {
                "l_f" => &mut p.l_f,
                "c_f" => &mut p.c_f,
                "r_load" => &mut p.r_load,
                "v_dc_nominal" => &mut p.v_dc_nominal,
                "c_dc" => &mut p.c_dc,
                "r_dc_source" => &mut p.r_dc_source,
                "dt_plant" => &mut p.dt_plant,
                _ => return Err(format!("unknown key `{key}` in [plant]")),
            };
            *slot = num(raw)?;
        }
        Section::Dg(i) => {
            if key == "r_line" {
                s.plant.r_line[i] = num(raw)?;
                return Ok(());
            }
            let dg = &mut s.dgs[i];
            match key {
                "f0" => {
                    let w = TAU * num(raw)?;
                    dg.controller.droop.omega0 = w;
                    dg.controller.voltage_loop.omega_s = w;
                    dg.controller.current_loop.omega_s = w;
                    return Ok(());
                }
                "est_k_demod" => {
                    dg.estimator.k_demod = auto(raw)?;
                    return Ok(());
                }
                "est_carrier_phase" => {
                    dg.estimator.carrier_phase = auto(raw)?;
                    return Ok(());
                }
                _ => {}
            }
            let c = &mut dg.controller;
            let slot = match key {
                "v0" => &mut c.droop.v0,
                "m" => &mut c.droop.m,
                "n" => &mut c.droop.n,
                "q_sign" => &mut c.droop.q_sign,
                "f_pq" => &mut c.f_pq,
                "v_kp" => &mut c.voltage_loop.kp,
                "v_kr1" => &mut c.voltage_loop.kr[0],
                "v_kr3" => &mut c.voltage_loop.kr[1],
                "v_kr5" => &mut c.voltage_loop.kr[2],
                "i_kp" => &mut c.current_loop.kp,
                "i_kr1" => &mut c.current_loop.kr[0],
                "i_kr3" => &mut c.current_loop.kr[1],
                "i_kr5" => &mut c.current_loop.kr[2],
                "v_out_offset" => &mut dg.sensors.v_out.offset,
                "v_out_scale" => &mut dg.sensors.v_out.scale,
                "i_inv_offset" => &mut dg.sensors.i_inv.offset,
                "i_inv_scale" => &mut dg.sensors.i_inv.scale,
                "i_out_offset" => &mut dg.sensors.i_out.offset,
                "i_out_scale" => &mut dg.sensors.i_out.scale,
                "v_dc_offset" => &mut dg.sensors.v_dc.offset,
                "v_dc_scale" => &mut dg.sensors.v_dc.scale,
                "est_omega_b" => &mut dg.estimator.omega_b,
                "est_f_lpf" => &mut dg.estimator.f_lpf,
                "est_k_est" => &mut dg.estimator.k_est,
                "est_v_off_max" => &mut dg.estimator.v_off_max,
                "avi_kp" => &mut dg.avi.kp,
                "avi_ki" => &mut dg.avi.ki,
                "avi_r_v_min" => &mut dg.avi.r_v_min,
                "avi_r_v_max" => &mut dg.avi.r_v_max,
                "avi_sign" => &mut dg.avi.sign,
                "avi_r_v_init" => &mut dg.avi.r_v_init,
                _ => return Err(format!("unknown key `{key}` in [dg.{}]", i + 1)),
            };
            *slot = num(raw)?;
        }
        Section::Lbc => {
            let l = &mut s.lbc;
            let slot = match key {
                "report_period" => &mut l.report_period,
                "latency" => &mut l.latency,
                "drop_probability" => &mut l.drop_probability,
                "staleness_periods" => &mut l.staleness_periods,
                _ => return Err(format!("unknown key `{key}` in [lbc]")),
            };
            *slot = num(raw)?;
        }
        Section::Events => {
            if key != "event" {
                return Err(format!("unknown key `{key}` in [events]"));
            }
            s.events.push(parse_event(raw)?);
        }
    }
    Ok(())
}

fn get_key(s: &Scenario, section: &str, dg: usize, key: &str) -> String {
    let f = |v: f64| format!("{v}");
    let opt = |v: Option<f64>| v.map_or_else(|| "auto".to_string(), f);
    match section {
        "simulation" => match key {
            "name" => s.name.clone(),
            "duration" => f(s.duration),
            "dt_control" => f(s.dt_control),
            "decimate" => s.decimate.to_string(),
            "window_cycles" => s.window_cycles.to_string(),
            "seed" => s.seed.to_string(),
            "avi_enabled" => s.avi_enabled.to_string(),
            "offset_comp_enabled" => s.offset_comp_enabled.to_string(),
            _ => unreachable!("undocumented key {key}"),
        },
        "plant" => {
            let p = &s.plant;
            f(match key {
                "l_f" => p.l_f,
                "c_f" => p.c_f,
                "r_load" => p.r_load,
                "v_dc_nominal" => p.v_dc_nominal,
                "c_dc" => p.c_dc,
                "r_dc_source" => p.r_dc_source,
                "dt_plant" => p.dt_plant,
                _ => unreachable!("undocumented key {key}"),
            })
        }
        "dg" => {
            let d = &s.dgs[dg];
            let c = &d.controller;
            match key {
                "est_k_demod" => return opt(d.estimator.k_demod),
                "est_carrier_phase" => return opt(d.estimator.carrier_phase),
                _ => {}
            }
            f(match key {
                "r_line" => s.plant.r_line[dg],
                "v0" => c.droop.v0,
                "f0" => c.droop.omega0 / TAU,
                "m" => c.droop.m,
                "n" => c.droop.n,
                "q_sign" => c.droop.q_sign,
                "f_pq" => c.f_pq,
                "v_kp" => c.voltage_loop.kp,
                "v_kr1" => c.voltage_loop.kr[0],
                "v_kr3" => c.voltage_loop.kr[1],
                "v_kr5" => c.voltage_loop.kr[2],
                "i_kp" => c.current_loop.kp,
                "i_kr1" => c.current_loop.kr[0],
                "i_kr3" => c.current_loop.kr[1],
                "i_kr5" => c.current_loop.kr[2],
                "v_out_offset" => d.sensors.v_out.offset,
                "v_out_scale" => d.sensors.v_out.scale,
                "i_inv_offset" => d.sensors.i_inv.offset,
                "i_inv_scale" => d.sensors.i_inv.scale,
                "i_out_offset" => d.sensors.i_out.offset,
                "i_out_scale" => d.sensors.i_out.scale,
                "v_dc_offset" => d.sensors.v_dc.offset,
                "v_dc_scale" => d.sensors.v_dc.scale,
                "est_omega_b" => d.estimator.omega_b,
                "est_f_lpf" => d.estimator.f_lpf,
                "est_k_est" => d.estimator.k_est,
                "est_v_off_max" => d.estimator.v_off_max,
                "avi_kp" => d.avi.kp,
                "avi_ki" => d.avi.ki,
                "avi_r_v_min" => d.avi.r_v_min,
                "avi_r_v_max" => d.avi.r_v_max,
                "avi_sign" => d.avi.sign,
                "avi_r_v_init" => d.avi.r_v_init,
                _ => unreachable!("undocumented key {key}"),
            })
        }
        "lbc" => {
            let l = &s.lbc;
            f(match key {
                "report_period" => l.report_period,
                "latency" => l.latency,
                "drop_probability" => l.drop_probability,
                "staleness_periods" => l.staleness_periods,
                _ => unreachable!("undocumented key {key}"),
            })
        }
        _ => unreachable!("undocumented section {section}"),
    }
}

fn parse_event(raw: &str) -> std::result::Result<Event, String> {
    let mut parts = raw.split_whitespace();
    let time = num(parts.next().ok_or("event needs a time")?)?;
    let name = parts.next().ok_or("event needs an action")?;
    let args: Vec<&str> = parts.collect();
    let want = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(format!("`{name}` takes {n} argument(s), got {}", args.len()))
        }
    };
    let action = match name {
        "enable_avi" => want(0).map(|_| Action::EnableAvi)?,
        "disable_avi" => want(0).map(|_| Action::DisableAvi)?,
        "enable_offset_comp" => want(0).map(|_| Action::EnableOffsetComp)?,
        "disable_offset_comp" => want(0).map(|_| Action::DisableOffsetComp)?,
        "set_load" => {
            want(1)?;
            Action::SetLoad(num(args[0])?)
        }
        "set_line" => {
            want(2)?;
            let dg: usize = int(args[0])?;
            if dg == 0 {
                return Err("DG numbers start at 1".into());
            }
            Action::SetLine(dg - 1, num(args[1])?)
        }
        other => return Err(format!("unknown action `{other}`")),
    };
    Ok(Event { time, action })
}

fn render_event(ev: &Event) -> String {
    let t = ev.time;
    match ev.action {
        Action::EnableAvi => format!("{t} enable_avi"),
        Action::DisableAvi => format!("{t} disable_avi"),
        Action::EnableOffsetComp => format!("{t} enable_offset_comp"),
        Action::DisableOffsetComp => format!("{t} disable_offset_comp"),
        Action::SetLoad(r) => format!("{t} set_load {r}"),
        Action::SetLine(dg, r) => format!("{t} set_line {} {r}", dg + 1),
    }
}

/// Parse scenario text and validate the result.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut section: Option<Section> = None;
    let mut scenario: Option<Scenario> = None;
    let mut saw_event = false;
    let mut keys_seen = 0usize;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let parse_err = |reason: String| Error::Parse {
            line: line_no,
            reason,
        };
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| parse_err("unterminated section header".into()))?
                .trim();
            section =
                Some(Section::parse(name).ok_or_else(|| parse_err(format!("unknown section [{name}]")))?);
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err("expected `key = value`".into()))?;
        let (key, value) = (key.trim(), value.trim());
        let sec = section.ok_or_else(|| parse_err("key outside of any section".into()))?;

        if sec == Section::Simulation && key == "base" {
            if keys_seen > 0 {
                return Err(parse_err("`base` must be the first key of the file".into()));
            }
            scenario = Some(Scenario::builtin(value).map_err(|_| {
                parse_err(format!(
                    "unknown base scenario `{value}` (expected one of {})",
                    CANONICAL.join(", ")
                ))
            })?);
            keys_seen += 1;
            continue;
        }
        let s = scenario.get_or_insert_with(Scenario::default);
        if sec == Section::Events && !saw_event {
            s.events.clear();
            saw_event = true;
        }
        set_key(s, sec, key, value).map_err(parse_err)?;
        keys_seen += 1;
    }

    let mut s = scenario.unwrap_or_default();
    s.events.sort_by(|a, b| a.time.total_cmp(&b.time));
    s.validate()?;
    Ok(s)
}

/// Read and parse a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    parse_scenario(&std::fs::read_to_string(path)?)
}

/// Scenario by built-in name, or from a file when `arg` is not a name.
pub fn resolve_scenario(arg: &str) -> Result<Scenario> {
    if CANONICAL.contains(&arg) {
        Scenario::builtin(arg)
    } else {
        let path = Path::new(arg);
        if path.exists() {
            load_scenario(path)
        } else {
            Err(Error::UnknownScenario(arg.to_string()))
        }
    }
}

fn emit_section(out: &mut String, s: &Scenario, section: &str, dg: usize) {
    for key in KEYS.iter().filter(|k| k.section == section) {
        let _ = writeln!(out, "{} = {}", key.key, get_key(s, section, dg, key.key));
    }
}

/// Full text form of a scenario; parsing it yields the same scenario.
pub fn render_scenario(s: &Scenario) -> String {
    let mut out = String::from("[simulation]\n");
    emit_section(&mut out, s, "simulation", 0);
    out.push_str("\n[plant]\n");
    emit_section(&mut out, s, "plant", 0);
    for dg in 0..N_DG {
        let _ = write!(out, "\n[dg.{}]\n", dg + 1);
        emit_section(&mut out, s, "dg", dg);
    }
    out.push_str("\n[lbc]\n");
    emit_section(&mut out, s, "lbc", 0);
    if !s.events.is_empty() {
        out.push_str("\n[events]\n");
        for ev in &s.events {
            let _ = writeln!(out, "event = {}", render_event(ev));
        }
    }
    out
}

/// Markdown reference of every key with its default.
pub fn reference_markdown() -> String {
    let d = Scenario::default();
    let mut out = String::from(
        "# Scenario file reference\n\n\
         Generated by `microgrid reference`; do not edit by hand.\n\n\
         Files are line oriented. `#` starts a comment. Sections are \
         `[simulation]`, `[plant]`, `[dg.1]`, `[dg.2]`, `[lbc]` and `[events]`. \
         Every other line is `key = value`. Unknown sections or keys are errors.\n\n\
         `base = <name>` as the first key of the file starts from a built-in \
         scenario instead of the defaults below. Built-in names: ",
    );
    out.push_str(&CANONICAL.map(|n| format!("`{n}`")).join(", "));
    out.push_str(".\n");
    let mut current = "";
    for key in KEYS {
        if key.section != current {
            current = key.section;
            let title = if current == "dg" { "dg.N" } else { current };
            let _ = write!(
                out,
                "\n## [{title}]\n\n| key | default | meaning |\n|---|---|---|\n"
            );
        }
        let _ = writeln!(
            out,
            "| `{}` | `{}` | {} |",
            key.key,
            get_key(&d, key.section, 0, key.key),
            key.doc
        );
    }
    out.push_str(
        "\n## [events]\n\n\
         Each line is `event = <time> <action> [args]`. A non-empty `[events]` \
         section replaces the events of the base scenario.\n\n\
         | action | arguments |\n|---|---|\n\
         | `enable_avi` | none |\n\
         | `disable_avi` | none |\n\
         | `enable_offset_comp` | none |\n\
         | `disable_offset_comp` | none |\n\
         | `set_load` | load resistance (Ω) |\n\
         | `set_line` | DG number (from 1), line resistance (Ω) |\n",
    );
    out
}
