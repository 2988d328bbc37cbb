//! Per-iteration CSV traces.
//!
//! Header: `t,sim_time,objective,grad_norm,dist_to_opt,gamma,responder_ids,round_duration`.
//! Floats use shortest round-trip formatting, `dist_to_opt` is empty when no
//! optimum was computed, and responder ids are `;`-joined in arrival order.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use pbgd_core::Trace;

use crate::error::{CliError, Result};

pub const HEADER: &str = "t,sim_time,objective,grad_norm,dist_to_opt,gamma,responder_ids,round_duration";

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub sim_time: f64,
    pub objective: f64,
    pub grad_norm: f64,
    pub dist_to_opt: Option<f64>,
    pub gamma: usize,
    pub responder_ids: Vec<usize>,
    pub round_duration: f64,
}

pub fn rows(trace: &Trace) -> Vec<TraceRow> {
    trace
        .records
        .iter()
        .map(|r| TraceRow {
            t: r.t,
            sim_time: r.sim_time,
            objective: r.objective,
            grad_norm: r.grad_norm,
            dist_to_opt: r.dist_to_opt,
            gamma: trace.gamma,
            responder_ids: r.responders.clone(),
            round_duration: r.round_duration,
        })
        .collect()
}

pub fn to_csv(rows: &[TraceRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(HEADER);
    out.push('\n');
    for r in rows {
        let ids: Vec<String> = r.responder_ids.iter().map(usize::to_string).collect();
        let dist = r.dist_to_opt.map(|d| d.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.t,
            r.sim_time,
            r.objective,
            r.grad_norm,
            dist,
            r.gamma,
            ids.join(";"),
            r.round_duration
        );
    }
    out
}

pub fn write(path: &Path, trace: &Trace) -> Result<()> {
    fs::write(path, to_csv(&rows(trace))).map_err(CliError::io(path))
}

pub fn parse(text: &str) -> Result<Vec<TraceRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(HEADER) {
        return Err(CliError::Config("trace: unexpected header".into()));
    }
    lines
        .enumerate()
        .map(|(i, line)| parse_row(line).map_err(|msg| CliError::Config(format!("trace line {}: {msg}", i + 2))))
        .collect()
}

fn parse_row(line: &str) -> std::result::Result<TraceRow, String> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 8 {
        return Err(format!("expected 8 fields, found {}", fields.len()));
    }
    fn num<T: std::str::FromStr>(s: &str) -> std::result::Result<T, String> {
        s.parse().map_err(|_| format!("bad value `{s}`"))
    }
    Ok(TraceRow {
        t: num(fields[0])?,
        sim_time: num(fields[1])?,
        objective: num(fields[2])?,
        grad_norm: num(fields[3])?,
        dist_to_opt: if fields[4].is_empty() { None } else { Some(num(fields[4])?) },
        gamma: num(fields[5])?,
        responder_ids: if fields[6].is_empty() {
            Vec::new()
        } else {
            fields[6].split(';').map(num).collect::<std::result::Result<_, _>>()?
        },
        round_duration: num(fields[7])?,
    })
}
