//! Delimited-text output: the per-step trace, the run summary and plot series.
//!
//! Floats are written with Rust's shortest round-trip formatting, so equal
//! runs produce byte-identical files. Missing values are written as `NA`.

use std::fmt::Display;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::barrier::Component;
use crate::sim::{RunSummary, TraceRecord};

pub const TRACE_FILE: &str = "trace.csv";
pub const SUMMARY_FILE: &str = "summary.txt";

/// Which artifacts a run writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Emit {
    pub trace: bool,
    pub summary: bool,
    pub plotdata: bool,
}

impl Default for Emit {
    fn default() -> Self {
        Self { trace: true, summary: true, plotdata: false }
    }
}

impl std::str::FromStr for Emit {
    type Err = String;

    /// Comma-separated subset of `trace`, `summary`, `plotdata`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut e = Emit { trace: false, summary: false, plotdata: false };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "trace" => e.trace = true,
                "summary" => e.summary = true,
                "plotdata" => e.plotdata = true,
                other => return Err(format!("unknown output `{other}` (expected trace, summary or plotdata)")),
            }
        }
        Ok(e)
    }
}

fn opt<T: Display>(v: Option<T>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

fn argmax(c: Option<Component>) -> String {
    opt(c.map(Component::number))
}

fn agent_count(trace: &[TraceRecord]) -> usize {
    trace.first().map_or(0, |r| r.agents.len())
}

pub fn write_trace<W: Write>(mut w: W, trace: &[TraceRecord]) -> io::Result<()> {
    let n = agent_count(trace);
    let mut header = vec!["step".to_string()];
    for i in 0..n {
        for col in [
            "x[m]",
            "y[m]",
            "z[m]",
            "lambda[m]",
            "R[m]",
            "ncbf[m2|-]",
            "argmax[-]",
            "trios[-]",
            "ux[m/s]",
            "uy[m/s]",
            "uz[m/s]",
            "ulambda[m/s]",
            "fallback[-]",
        ] {
            header.push(format!("{i}:{col}"));
        }
    }
    header.extend(
        ["H[-]", "H_M[-]", "H_O[-]", "hole_witnesses[-]", "exact_holes[-]", "switch[-]", "clamp[-]"].map(String::from),
    );
    writeln!(w, "{}", header.join(","))?;
    for r in trace {
        let mut row = vec![r.step.to_string()];
        for a in &r.agents {
            let s = a.state;
            row.extend([s.x, s.y, s.z, s.lambda, a.radius].map(|v| v.to_string()));
            row.push(opt(a.min_ncbf));
            row.push(argmax(a.argmax));
            row.push(a.trio_count.to_string());
            row.extend(a.input.iter().map(|v| v.to_string()));
            row.push(u8::from(a.fallback).to_string());
        }
        row.extend([r.h, r.h_m, r.h_o].map(|v| v.to_string()));
        row.push(opt(r.hole_witnesses));
        row.push(r.exact_holes.to_string());
        row.push(u8::from(r.switched).to_string());
        row.push(u8::from(r.clamped).to_string());
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()
}

pub fn write_summary<W: Write>(mut w: W, s: &RunSummary) -> io::Result<()> {
    let lines: [(&str, String); 17] = [
        ("steps", s.steps.to_string()),
        ("final_H", s.final_h.to_string()),
        ("final_H_M", s.final_h_m.to_string()),
        ("final_H_O", s.final_h_o.to_string()),
        ("min_ncbf", opt(s.min_ncbf)),
        ("sampled_steps", s.sampled_steps.to_string()),
        ("hole_witness_steps", s.hole_witness_steps.to_string()),
        ("witness_fraction", s.witness_fraction().to_string()),
        ("exact_hole_steps", s.exact_hole_steps.to_string()),
        ("switch_count", s.switch_count.to_string()),
        ("switch_induced_holes", s.switch_induced_holes.to_string()),
        ("other_holes", s.other_holes.to_string()),
        ("longest_hole", s.longest_hole.to_string()),
        ("unrecovered_holes", s.unrecovered_holes.to_string()),
        ("safety_slack", s.safety_slack.to_string()),
        ("clamp_events", s.clamp_events.to_string()),
        ("qp_fallbacks", s.qp_fallbacks.to_string()),
    ];
    for (k, v) in lines {
        writeln!(w, "{k} = {v}")?;
    }
    w.flush()
}

fn write_series<W: Write>(
    mut w: W,
    trace: &[TraceRecord],
    header: &str,
    row: impl Fn(&TraceRecord) -> Vec<String>,
) -> io::Result<()> {
    writeln!(w, "{header}")?;
    for r in trace {
        writeln!(w, "{},{}", r.step, row(r).join(","))?;
    }
    w.flush()
}

/// Write `positions.csv`, `radius.csv`, `ncbf.csv` and `global.csv` into `dir`.
pub fn emit_plotdata(dir: &Path, trace: &[TraceRecord]) -> io::Result<Vec<PathBuf>> {
    let n = agent_count(trace);
    let cols = |unit: &str| -> String {
        std::iter::once("step".to_string()).chain((0..n).map(|i| format!("{i}[{unit}]"))).collect::<Vec<_>>().join(",")
    };
    let pos_header = std::iter::once("step".to_string())
        .chain((0..n).flat_map(|i| ["x", "y", "z", "lambda"].map(|c| format!("{i}:{c}[m]"))))
        .collect::<Vec<_>>()
        .join(",");
    type Row<'a> = Box<dyn Fn(&TraceRecord) -> Vec<String> + 'a>;
    let families: [(&str, String, Row); 4] = [
        (
            "positions.csv",
            pos_header,
            Box::new(|r| r.agents.iter().flat_map(|a| a.state.as_array().map(|v| v.to_string())).collect()),
        ),
        ("radius.csv", cols("m"), Box::new(|r| r.agents.iter().map(|a| a.radius.to_string()).collect())),
        ("ncbf.csv", cols("m2|-"), Box::new(|r| r.agents.iter().map(|a| opt(a.min_ncbf)).collect())),
        (
            "global.csv",
            "step,H[-],H_M[-],H_O[-],hole_witnesses[-],exact_holes[-]".to_string(),
            Box::new(|r| {
                vec![r.h.to_string(), r.h_m.to_string(), r.h_o.to_string(), opt(r.hole_witnesses), r.exact_holes.to_string()]
            }),
        ),
    ];
    let mut written = Vec::new();
    for (name, header, row) in families {
        let path = dir.join(name);
        write_series(BufWriter::new(File::create(&path)?), trace, &header, row)?;
        written.push(path);
    }
    Ok(written)
}

/// Write the selected artifacts into `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, trace: &[TraceRecord], summary: &RunSummary, emit: Emit) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if emit.trace {
        let path = dir.join(TRACE_FILE);
        write_trace(BufWriter::new(File::create(&path)?), trace)?;
        written.push(path);
    }
    if emit.summary {
        let path = dir.join(SUMMARY_FILE);
        write_summary(BufWriter::new(File::create(&path)?), summary)?;
        written.push(path);
    }
    if emit.plotdata {
        written.extend(emit_plotdata(dir, trace)?);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_config, TRIO};
    use crate::sim::run;

    #[test]
    fn emit_flags() {
        let e: Emit = "trace,plotdata".parse().unwrap();
        assert_eq!(e, Emit { trace: true, summary: false, plotdata: true });
        assert!("trace,pdf".parse::<Emit>().is_err());
    }

    #[test]
    fn one_step_files_have_one_row() {
        let mut sc = parse_config(TRIO).unwrap();
        sc.steps = 1;
        let (trace, summary) = run(&sc);
        let dir = tempfile::tempdir().unwrap();
        let files = write_outputs(dir.path(), &trace, &summary, Emit { trace: true, summary: true, plotdata: true }).unwrap();
        assert_eq!(files.len(), 6);
        for f in &files {
            let text = fs::read_to_string(f).unwrap();
            if f.ends_with(SUMMARY_FILE) {
                assert!(text.lines().all(|l| l.contains(" = ")));
            } else {
                assert_eq!(text.lines().count(), 2, "{}", f.display());
                let cols: Vec<usize> = text.lines().map(|l| l.split(',').count()).collect();
                assert_eq!(cols[0], cols[1], "{}", f.display());
            }
        }
    }
}
