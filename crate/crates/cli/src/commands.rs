//! The four orchestration commands behind the `chdbc` binary. Each is a
//! library function so integration tests can drive them without a
//! subprocess.

use crate::config::RunConfig;
use crate::csvio;
use anyhow::{anyhow, bail, Result};
use chdbc_core::convergence::{interp_space, refine_and_measure, OrderReport, RefinementLadder};
use chdbc_core::energy::{refined_bound, stability_bound, timestep_condition};
use chdbc_core::ic::FourierIc;
use chdbc_core::stepper::Stepper;
use chdbc_core::{
    ConditionReport, ExtendedField, NodeField, Scheme, SchemeParams, SimulationTrace,
};
use std::fmt::Write as _;

/// Samples the initial condition on the grid and attaches the ghost values
/// the scheme expects: analytic off-grid values for the dynamic schemes,
/// reflected values for the Neumann scheme.
pub fn initial_state(ic: &FourierIc, params: &SchemeParams) -> ExtendedField {
    let grid = &params.grid;
    let interior = ic.sample(grid);
    match params.scheme {
        Scheme::Neumann => ExtendedField::reflect(&interior),
        Scheme::DynamicCentral | Scheme::DynamicOnesided => ExtendedField::from_interior(
            &interior,
            ic.value(-grid.dx()),
            ic.value(grid.length() + grid.dx()),
        ),
    }
}

/// Runs the configured number of steps and returns the full trace without
/// touching the filesystem.
pub fn run_trace(cfg: &RunConfig) -> Result<SimulationTrace> {
    let params = cfg.scheme_params()?;
    let ic = cfg.initial_condition()?;
    let u0 = initial_state(&ic, &params);
    let stepper = Stepper::new(params)?;
    Ok(stepper.run(&u0, cfg.steps, Some(cfg.snapshot_stride)))
}

/// `chdbc run`: writes the trace, ledger, and snapshot CSVs. A failing step
/// still flushes everything recorded up to the failure, then errors out.
pub fn run_command(cfg: &RunConfig) -> Result<SimulationTrace> {
    let trace = run_trace(cfg)?;
    let grid = trace.params.grid;
    csvio::write_file(&cfg.trace_csv, &csvio::trace_csv(&trace))?;
    csvio::write_file(&cfg.ledger_csv, &csvio::ledger_csv(&trace))?;
    csvio::write_file(&cfg.snapshot_csv, &csvio::snapshot_csv(&trace, &grid))?;
    if let Some((step, reason)) = &trace.failure {
        bail!("step {step} failed: {reason}");
    }
    Ok(trace)
}

/// Everything `chdbc conditions` reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionsSummary {
    pub b0: f64,
    pub b0_tilde: f64,
    pub refined: f64,
    pub report: ConditionReport,
}

/// `chdbc conditions`: a-priori bounds plus the unique-solvability margins
/// for the configured time step.
pub fn conditions_command(cfg: &RunConfig) -> Result<ConditionsSummary> {
    let params = cfg.scheme_params()?;
    let ic = cfg.initial_condition()?;
    let u0 = ic.sample(&params.grid);
    let mut bounds = stability_bound(&u0, &params.grid, &params.pot, params.gamma)?;
    let refined = refined_bound(&ic, &params.grid, &params.pot, params.gamma)?;
    bounds.refined = Some(refined);
    let report = timestep_condition(&bounds, &params.pot, &params.grid, params.gamma, params.dt);
    Ok(ConditionsSummary {
        b0: bounds.b0,
        b0_tilde: bounds.b0_tilde,
        refined,
        report,
    })
}

pub fn conditions_text(s: &ConditionsSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "B0            = {}", csvio::fmt_f64(s.b0));
    let _ = writeln!(out, "B0_tilde      = {}", csvio::fmt_f64(s.b0_tilde));
    let _ = writeln!(out, "refined_bound = {}", csvio::fmt_f64(s.refined));
    let _ = writeln!(out, "margin        = {}", csvio::fmt_f64(s.report.margin));
    let _ = writeln!(
        out,
        "corollary     = {}",
        csvio::fmt_f64(s.report.corollary_margin)
    );
    let _ = writeln!(
        out,
        "condition     = {}",
        if s.report.satisfied { "satisfied" } else { "not satisfied" }
    );
    out
}

fn level_params(cfg: &RunConfig, k: usize, dt: f64, scheme: Scheme) -> Result<SchemeParams> {
    let grid = chdbc_core::Grid::new(cfg.length, k)?;
    let pot = chdbc_core::DoubleWell::new(cfg.q, cfg.r)?;
    let mut p = SchemeParams::new(grid, dt, cfg.gamma, cfg.eps_ex, pot, scheme)?;
    p.fp_tol = cfg.fp_tol;
    p.fp_maxiter = cfg.fp_maxiter;
    Ok(p)
}

/// Fine central-scheme reference solution. Every ladder is measured
/// against one: the one-sided variant has no usable self-convergence limit
/// on its own ladder, and for the central scheme the injected reference
/// makes all levels measurable instead of sacrificing the finest.
fn central_reference(
    cfg: &RunConfig,
    ic: &FourierIc,
    k_ref: usize,
    dt_ref: f64,
    t_final: f64,
) -> Result<(usize, NodeField)> {
    let params = level_params(cfg, k_ref, dt_ref, Scheme::DynamicCentral)?;
    let steps = (t_final / dt_ref).round() as usize;
    let stepper = Stepper::new(params)?;
    let mut state = initial_state(ic, &params);
    for _ in 0..steps {
        state = stepper.step(&state)?.u_next;
    }
    Ok((k_ref, state.interior()))
}

/// `chdbc convergence`: runs a simultaneous space/time refinement ladder
/// from the configured base resolution and reports max-norm errors and
/// observed orders.
pub fn convergence_command(cfg: &RunConfig, levels: usize) -> Result<OrderReport> {
    let t_final = cfg.steps as f64 * cfg.dt;
    if cfg.steps == 0 {
        bail!("convergence needs steps > 0");
    }
    let ladder = RefinementLadder::new(cfg.cells, cfg.dt, levels, t_final)?;
    let ic = cfg.initial_condition()?;

    let k_ref = cfg.cells << levels;
    let dt_ref = cfg.dt / (1usize << levels) as f64;
    let reference = Some(central_reference(cfg, &ic, k_ref, dt_ref, t_final)?);

    let report = refine_and_measure(
        &ladder,
        |k, dt| {
            let params = level_params(cfg, k, dt, cfg.scheme)
                .map_err(|e| chdbc_core::Error::InvalidParameter(e.to_string()))?;
            let u0 = initial_state(&ic, &params);
            Ok((params, u0))
        },
        reference,
    )?;

    let mut out = String::from("K,error,order\n");
    for (i, (&k, &e)) in report.ks.iter().zip(&report.errors).enumerate() {
        let order = report
            .orders
            .get(i)
            .and_then(|o| o.map(|v| csvio::fmt_f64(v)))
            .unwrap_or_default();
        let _ = writeln!(out, "{k},{},{order}", csvio::fmt_f64(e));
    }
    csvio::write_file(&cfg.order_csv, &out)?;
    Ok(report)
}

/// Joint trace plus the final-state max-norm difference (the second run's
/// final profile is linearly interpolated onto the first run's nodes).
pub struct CompareSummary {
    pub trace_a: SimulationTrace,
    pub trace_b: SimulationTrace,
    pub final_diff: f64,
}

/// `chdbc compare`: runs both configs and emits a side-by-side CSV of the
/// diagnostics rows whose times coincide.
pub fn compare_command(cfg_a: &RunConfig, cfg_b: &RunConfig, out_path: &str) -> Result<CompareSummary> {
    let trace_a = run_trace(cfg_a)?;
    let trace_b = run_trace(cfg_b)?;
    for (name, t) in [("first", &trace_a), ("second", &trace_b)] {
        if let Some((step, reason)) = &t.failure {
            bail!("{name} run failed at step {step}: {reason}");
        }
    }

    let mut out =
        String::from("time,mass_a,energy_a,U0_a,UK_a,mass_b,energy_b,U0_b,UK_b\n");
    let mut j = 0usize;
    for ra in &trace_a.records {
        while j < trace_b.records.len()
            && trace_b.records[j].time < ra.time - 1e-9 * cfg_a.dt
        {
            j += 1;
        }
        let Some(rb) = trace_b.records.get(j) else { break };
        if (rb.time - ra.time).abs() > 1e-9 * cfg_a.dt.max(cfg_b.dt) {
            continue;
        }
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            csvio::fmt_f64(ra.time),
            csvio::fmt_f64(ra.mass),
            csvio::fmt_f64(ra.energy_jd),
            csvio::fmt_f64(ra.u0),
            csvio::fmt_f64(ra.uk),
            csvio::fmt_f64(rb.mass),
            csvio::fmt_f64(rb.energy_jd),
            csvio::fmt_f64(rb.u0),
            csvio::fmt_f64(rb.uk),
        );
    }
    csvio::write_file(out_path, &out)?;

    let grid_a = trace_a.params.grid;
    let grid_b = trace_b.params.grid;
    let fin_a = trace_a
        .final_state
        .as_ref()
        .ok_or_else(|| anyhow!("first run produced no state"))?
        .interior();
    let fin_b = trace_b
        .final_state
        .as_ref()
        .ok_or_else(|| anyhow!("second run produced no state"))?
        .interior();
    let mut final_diff = 0.0f64;
    for k in 0..=grid_a.cells() {
        let x = grid_a.node(k);
        final_diff = final_diff.max((fin_a[k] - interp_space(&fin_b, &grid_b, x)).abs());
    }

    Ok(CompareSummary { trace_a, trace_b, final_diff })
}
