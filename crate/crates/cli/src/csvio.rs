//! Bit-stable CSV emission: every float is printed with 17 significant
//! digits, which round-trips binary64 exactly; LF line endings, UTF-8.

use anyhow::{anyhow, Context, Result};
use chdbc_core::{Grid, SimulationTrace};
use std::fmt::Write as _;
use std::path::Path;

/// 17-significant-digit scientific notation; round-trips any finite f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub const TRACE_HEADER: &str = "step,time,mass,energy_Jd,ledger,diss_bulk,diss_b0,diss_bK,U0,UK,min_U,max_U,fp_iters";

/// Renders the per-step diagnostics table, one row per recorded state.
pub fn trace_csv(trace: &SimulationTrace) -> String {
    let ledger = trace.ledger();
    let mut out = String::new();
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for (rec, led) in trace.records.iter().zip(&ledger) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            rec.step,
            fmt_f64(rec.time),
            fmt_f64(rec.mass),
            fmt_f64(rec.energy_jd),
            fmt_f64(*led),
            fmt_f64(rec.diss_bulk),
            fmt_f64(rec.diss_b0),
            fmt_f64(rec.diss_bk),
            fmt_f64(rec.u0),
            fmt_f64(rec.uk),
            fmt_f64(rec.min_u),
            fmt_f64(rec.max_u),
            rec.fp_iters,
        );
    }
    out
}

/// Renders the energy ledger on its own: step, time, ledger drift.
pub fn ledger_csv(trace: &SimulationTrace) -> String {
    let ledger = trace.ledger();
    let mut out = String::from("step,time,ledger\n");
    for (rec, led) in trace.records.iter().zip(&ledger) {
        let _ = writeln!(out, "{},{},{}", rec.step, fmt_f64(rec.time), fmt_f64(*led));
    }
    out
}

/// Renders profile snapshots as long-format rows: step, x, U.
pub fn snapshot_csv(trace: &SimulationTrace, grid: &Grid) -> String {
    let mut out = String::from("step,x,U\n");
    for (step, profile) in &trace.snapshots {
        for (k, u) in profile.iter().enumerate() {
            let _ = writeln!(out, "{step},{},{}", fmt_f64(grid.node(k)), fmt_f64(*u));
        }
    }
    out
}

/// One parsed trace row; numeric fields are exactly the emitted values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub time: f64,
    pub mass: f64,
    pub energy_jd: f64,
    pub ledger: f64,
    pub diss_bulk: f64,
    pub diss_b0: f64,
    pub diss_bk: f64,
    pub u0: f64,
    pub uk: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub fp_iters: usize,
}

/// Parses a trace CSV back; the round trip is exact.
pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRow>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| anyhow!("empty trace CSV"))?;
    if header != TRACE_HEADER {
        return Err(anyhow!("unexpected trace header {header:?}"));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 13 {
            return Err(anyhow!("row {}: expected 13 fields, got {}", i + 2, fields.len()));
        }
        let f = |j: usize| -> Result<f64> {
            fields[j]
                .parse()
                .with_context(|| format!("row {}, column {}", i + 2, j + 1))
        };
        rows.push(TraceRow {
            step: fields[0].parse().with_context(|| format!("row {}", i + 2))?,
            time: f(1)?,
            mass: f(2)?,
            energy_jd: f(3)?,
            ledger: f(4)?,
            diss_bulk: f(5)?,
            diss_b0: f(6)?,
            diss_bk: f(7)?,
            u0: f(8)?,
            uk: f(9)?,
            min_u: f(10)?,
            max_u: f(11)?,
            fp_iters: fields[12].parse().with_context(|| format!("row {}", i + 2))?,
        });
    }
    Ok(rows)
}

pub fn write_file(path: impl AsRef<Path>, content: &str) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, content).with_context(|| format!("writing {}", path.display()))
}
