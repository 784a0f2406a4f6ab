//! SVG trace plots of a finished run.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::runner::engine::{RunArtifacts, Sample};

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 360.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 44.0;
const COLORS: [&str; 2] = ["#1f77b4", "#d62728"];

struct Series<'a> {
    label: &'a str,
    y: Vec<f64>,
}

struct Figure<'a> {
    file: &'a str,
    title: &'a str,
    y_label: &'a str,
    series: Vec<Series<'a>>,
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = nice_step(hi - lo);
    let mut v = Vec::new();
    let mut t = (lo / step).ceil() * step;
    while t <= hi + step * 1e-9 {
        v.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    v
}

fn label(v: f64) -> String {
    let s = format!("{v:.6}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Keep the minimum and maximum of each pixel column so dense waveforms
/// keep their envelope.
fn envelope(t: &[f64], y: &[f64], columns: usize) -> Vec<(f64, f64)> {
    if t.len() <= 2 * columns {
        return t.iter().copied().zip(y.iter().copied()).collect();
    }
    let (t0, t1) = (t[0], t[t.len() - 1]);
    let span = (t1 - t0).max(f64::MIN_POSITIVE);
    let mut out = Vec::with_capacity(2 * columns + 2);
    let mut start = 0;
    while start < t.len() {
        let col = (((t[start] - t0) / span) * columns as f64) as usize;
        let mut end = start;
        while end < t.len() && (((t[end] - t0) / span) * columns as f64) as usize == col {
            end += 1;
        }
        let (mut imin, mut imax) = (start, start);
        for i in start..end {
            if y[i] < y[imin] {
                imin = i;
            }
            if y[i] > y[imax] {
                imax = i;
            }
        }
        let (a, b) = if imin <= imax { (imin, imax) } else { (imax, imin) };
        out.push((t[a], y[a]));
        if b != a {
            out.push((t[b], y[b]));
        }
        start = end;
    }
    out
}

fn render(fig: &Figure, scenario: &str, t: &[f64]) -> String {
    let (t0, t1) = (t[0], t[t.len() - 1].max(t[0] + 1e-9));
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in &fig.series {
        for &v in s.y.iter().filter(|v| v.is_finite()) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() {
        (lo, hi) = (-1.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(1e-6);
    let (lo, hi) = (lo - pad, hi + pad);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let x = |v: f64| LEFT + (v - t0) / (t1 - t0) * pw;
    let y = |v: f64| TOP + (hi - v) / (hi - lo) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{scenario}: {}</text>"#,
        WIDTH / 2.0,
        fig.title
    );
    for tv in ticks(lo, hi) {
        let py = y(tv);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#e0e0e0"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            WIDTH - RIGHT,
            LEFT - 6.0,
            py + 4.0,
            label(tv)
        );
    }
    for tv in ticks(t0, t1) {
        let px = x(tv);
        let _ = writeln!(
            s,
            r##"<line x1="{px:.2}" y1="{TOP}" x2="{px:.2}" y2="{:.2}" stroke="#e0e0e0"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            HEIGHT - BOTTOM,
            HEIGHT - BOTTOM + 16.0,
            label(tv)
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">t (s)</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 8.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        fig.y_label
    );
    for (i, series) in fig.series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut points = String::new();
        for (tv, v) in envelope(t, &series.y, pw as usize) {
            if v.is_finite() {
                let _ = write!(points, "{:.2},{:.2} ", x(tv), y(v));
            }
        }
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1" points="{}"/>"#,
            points.trim_end()
        );
        let ly = TOP + 14.0 + 16.0 * i as f64;
        let lx = WIDTH - RIGHT - 110.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            series.label
        );
    }
    s.push_str("</svg>\n");
    s
}

fn column(samples: &[Sample], f: impl Fn(&Sample) -> f64) -> Vec<f64> {
    samples.iter().map(f).collect()
}

/// Write `currents.svg`, `circulating.svg`, `virtual_resistance.svg` and
/// `offset_estimate.svg` into `dir`. Nothing is written when the run has no
/// samples.
pub fn emit_plots(artifacts: &RunArtifacts, dir: &Path) -> Result<Vec<PathBuf>> {
    let samples = &artifacts.samples;
    if samples.is_empty() {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "no samples to plot").into());
    }
    let t = column(samples, |s| s.t);
    let name = &artifacts.scenario;
    let figures = [
        Figure {
            file: "currents.svg",
            title: "Output currents",
            y_label: "A",
            series: vec![
                Series {
                    label: "i_o1",
                    y: column(samples, |s| s.i_o[0]),
                },
                Series {
                    label: "i_o2",
                    y: column(samples, |s| s.i_o[1]),
                },
            ],
        },
        Figure {
            file: "circulating.svg",
            title: "Circulating current i_o1 − i_o2",
            y_label: "A",
            series: vec![Series {
                label: "i_circ",
                y: column(samples, |s| s.i_circ),
            }],
        },
        Figure {
            file: "virtual_resistance.svg",
            title: "Virtual resistance",
            y_label: "Ω",
            series: vec![
                Series {
                    label: "R_v1",
                    y: column(samples, |s| s.r_v[0]),
                },
                Series {
                    label: "R_v2",
                    y: column(samples, |s| s.r_v[1]),
                },
            ],
        },
        Figure {
            file: "offset_estimate.svg",
            title: "Voltage offset estimate",
            y_label: "V",
            series: vec![
                Series {
                    label: "v_off_hat1",
                    y: column(samples, |s| s.v_off_hat[0]),
                },
                Series {
                    label: "v_off_hat2",
                    y: column(samples, |s| s.v_off_hat[1]),
                },
            ],
        },
    ];
    let rendered: Vec<(PathBuf, String)> = figures
        .iter()
        .map(|fig| (dir.join(fig.file), render(fig, name, &t)))
        .collect();
    fs::create_dir_all(dir)?;
    let mut written = Vec::with_capacity(rendered.len());
    for (path, svg) in rendered {
        fs::write(&path, svg)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_cover_range() {
        let t = ticks(-3.2, 7.9);
        assert_eq!(t, vec![-2.0, 0.0, 2.0, 4.0, 6.0]);
    }

    #[test]
    fn envelope_keeps_extremes() {
        let t: Vec<f64> = (0..10_000).map(|k| k as f64 * 1e-4).collect();
        let y: Vec<f64> = t.iter().map(|&x| (x * 314.0).sin()).collect();
        let e = envelope(&t, &y, 100);
        assert!(e.len() <= 2 * 100 + 2);
        let max = e.iter().map(|p| p.1).fold(f64::MIN, f64::max);
        assert!(max > 0.999);
    }
}
