//! CSV and summary emission.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::avi::Message;
use crate::error::Result;
use crate::runner::engine::{RunArtifacts, METRIC_COLUMNS, SAMPLE_COLUMNS};

/// C-style `%.9g`.
pub fn format_g9(x: f64) -> String {
    const PREC: i32 = 9;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{:.*e}", (PREC - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..PREC).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (PREC - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn write_rows<W: Write, const N: usize>(
    mut out: W,
    header: &[&str; N],
    rows: impl Iterator<Item = [f64; N]>,
) -> io::Result<()> {
    writeln!(out, "{}", header.join(","))?;
    let mut line = String::new();
    for row in rows {
        line.clear();
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&format_g9(*v));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    out.flush()
}

pub fn write_timeseries<W: Write>(out: W, artifacts: &RunArtifacts) -> io::Result<()> {
    write_rows(out, &SAMPLE_COLUMNS, artifacts.samples.iter().map(|s| s.values()))
}

pub fn write_metrics<W: Write>(out: W, artifacts: &RunArtifacts) -> io::Result<()> {
    write_rows(out, &METRIC_COLUMNS, artifacts.metrics.iter().map(|m| m.values()))
}

pub fn write_messages<W: Write>(mut out: W, messages: &[Message]) -> io::Result<()> {
    writeln!(out, "t_send,t_deliver,sender,receiver,value,dropped")?;
    for m in messages {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            format_g9(m.t_send),
            format_g9(m.t_deliver),
            m.sender,
            m.receiver,
            format_g9(m.value),
            u8::from(m.dropped)
        )?;
    }
    out.flush()
}

/// `key = value` digest of a run.
pub fn summary(artifacts: &RunArtifacts) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scenario = {}", artifacts.scenario);
    let _ = writeln!(s, "samples = {}", artifacts.samples.len());
    let _ = writeln!(s, "windows = {}", artifacts.metrics.len());
    let delivered = artifacts.messages.iter().filter(|m| !m.dropped).count();
    let _ = writeln!(s, "messages = {}", artifacts.messages.len());
    let _ = writeln!(s, "messages_dropped = {}", artifacts.messages.len() - delivered);
    if let Some(last) = artifacts.samples.last() {
        let _ = writeln!(s, "t_end = {}", format_g9(last.t));
    }
    if let Some(m) = artifacts.final_metrics() {
        for (name, v) in METRIC_COLUMNS.iter().zip(m.values()).skip(1) {
            let _ = writeln!(s, "final.{name} = {}", format_g9(v));
        }
    }
    s
}

/// What to write besides the summary.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OutputOptions {
    pub csv: bool,
    pub plots: bool,
}

fn write_file(path: &Path, f: impl FnOnce(io::BufWriter<fs::File>) -> io::Result<()>) -> io::Result<()> {
    f(io::BufWriter::new(fs::File::create(path)?))
}

/// Write the requested outputs into `dir`, creating it if needed. Returns
/// the files written.
pub fn write_outputs(artifacts: &RunArtifacts, dir: &Path, opts: OutputOptions) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let summary_path = dir.join("summary.txt");
    fs::write(&summary_path, summary(artifacts))?;
    written.push(summary_path);
    if opts.csv {
        let ts = dir.join("timeseries.csv");
        write_file(&ts, |w| write_timeseries(w, artifacts))?;
        let metrics = dir.join("metrics.csv");
        write_file(&metrics, |w| write_metrics(w, artifacts))?;
        let msgs = dir.join("messages.csv");
        write_file(&msgs, |w| write_messages(w, &artifacts.messages))?;
        written.extend([ts, metrics, msgs]);
    }
    if opts.plots {
        written.extend(super::plots::emit_plots(artifacts, dir)?);
    }
    Ok(written)
}
