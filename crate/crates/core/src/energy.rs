//! Discrete energies, mass, dissipation ledgers and the a-priori bounds
//! the scheme is proven to respect.

use crate::grid::{diff_central, diff_second, dirichlet_seminorm, trap_sum};
use crate::ic::FourierIc;
use crate::potential::{DoubleWell, Potential};
use crate::stepper::StepRecord;
use crate::{ExtendedField, Grid, NodeField, Result};

/// Per-step energy and dissipation figures. The dissipation components are
/// stored as non-negative magnitudes; the signed dissipation rate is minus
/// their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub jd: f64,
    pub md: f64,
    /// gamma * eps_ex weighted squared boundary rates at k = 0 and k = K.
    pub boundary_dissipation: (f64, f64),
    /// Squared Dirichlet seminorm of the chemical potential.
    pub bulk_dissipation: f64,
}

impl EnergyReport {
    pub fn total_dissipation(&self) -> f64 {
        -(self.boundary_dissipation.0 + self.boundary_dissipation.1 + self.bulk_dissipation)
    }
}

/// Global-boundedness constants for a given initial state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundPack {
    /// Bound on the Dirichlet seminorm of every iterate.
    pub b0: f64,
    /// Bound on the max norm of every iterate.
    pub b0_tilde: f64,
    /// Optional sharper max-norm bound from the initial-data quadrature.
    pub refined: Option<f64>,
}

/// Solvability-condition evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionReport {
    /// General contraction estimate; the step is provably solvable when < 1.
    pub margin: f64,
    /// Double-well specialization of the same estimate.
    pub corollary_margin: f64,
    pub satisfied: bool,
}

/// `sum_{k<K} (gamma/2)(d+ U_k)^2 dx + trap_sum(F(U))`.
pub fn discrete_energy(u: &NodeField, grid: &Grid, pot: &impl Potential, gamma: f64) -> f64 {
    let dx = grid.dx();
    let v = u.values();
    let mut grad = 0.0;
    for k in 0..v.len() - 1 {
        let d = (v[k + 1] - v[k]) / dx;
        grad += d * d;
    }
    let f = NodeField::new(v.iter().map(|&s| pot.eval(s)).collect()).expect("finite potential");
    0.5 * gamma * grad * dx + trap_sum(&f, grid)
}

/// Average of the one-sided energy sums; equal to [`discrete_energy`].
pub fn discrete_energy_onesided_avg(
    u: &NodeField,
    grid: &Grid,
    pot: &impl Potential,
    gamma: f64,
) -> f64 {
    let dx = grid.dx();
    let v = u.values();
    let kk = v.len() - 1;
    let mut fwd = 0.0;
    for k in 0..kk {
        let d = (v[k + 1] - v[k]) / dx;
        fwd += 0.5 * gamma * d * d + pot.eval(v[k]);
    }
    let mut bwd = 0.0;
    for k in 1..=kk {
        let d = (v[k] - v[k - 1]) / dx;
        bwd += 0.5 * gamma * d * d + pot.eval(v[k]);
    }
    0.5 * (fwd + bwd) * dx
}

/// Trapezoidal mass.
pub fn discrete_mass(u: &NodeField, grid: &Grid) -> f64 {
    trap_sum(u, grid)
}

/// Energy of the new state plus the three dissipation magnitudes of the
/// transition `u_n -> u_np1` with chemical potential `p`.
#[allow(clippy::too_many_arguments)]
pub fn dissipation_rate(
    u_n: &NodeField,
    u_np1: &NodeField,
    p: &NodeField,
    grid: &Grid,
    pot: &impl Potential,
    gamma: f64,
    eps_ex: f64,
    dt: f64,
) -> EnergyReport {
    let kk = u_n.len() - 1;
    let rate0 = (u_np1[0] - u_n[0]) / dt;
    let rate_k = (u_np1[kk] - u_n[kk]) / dt;
    let dp = dirichlet_seminorm(p, grid);
    EnergyReport {
        jd: discrete_energy(u_np1, grid, pot, gamma),
        md: discrete_mass(u_np1, grid),
        boundary_dissipation: (gamma * eps_ex * rate0 * rate0, gamma * eps_ex * rate_k * rate_k),
        bulk_dissipation: dp * dp,
    }
}

/// Energy ledger `E_d^(n) - Jd(U^(0))`: the energy of state `n` plus the
/// time-accumulated dissipation, which the scheme keeps exactly constant.
///
/// Each record carries the dissipation of the step that produced it, so the
/// record at index 0 contributes nothing.
pub fn energy_ledger(records: &[StepRecord], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(records.len());
    let mut accumulated = 0.0;
    for (n, rec) in records.iter().enumerate() {
        if n > 0 {
            accumulated += (rec.diss_b0 + rec.diss_bk + rec.diss_bulk) * dt;
        }
        out.push(rec.energy_jd + accumulated - records[0].energy_jd);
    }
    out
}

/// Ghost-aware energy of the reflected scheme:
/// `trap_sum over k of (gamma/2)(|d+ U_k|^2 + |d- U_k|^2)/2 + F(U_k)`.
pub fn neumann_energy(u: &ExtendedField, grid: &Grid, pot: &impl Potential, gamma: f64) -> f64 {
    let kk = u.interior_len() - 1;
    let dx = grid.dx();
    let mut sum = 0.0;
    for k in 0..=kk {
        let fwd = (u.at(k as isize + 1) - u.at(k as isize)) / dx;
        let bwd = (u.at(k as isize) - u.at(k as isize - 1)) / dx;
        let g = 0.25 * gamma * (fwd * fwd + bwd * bwd) + pot.eval(u.at(k as isize));
        let w = if k == 0 || k == kk { 0.5 } else { 1.0 };
        sum += w * g;
    }
    sum * dx
}

/// Ledger of the reflected scheme; the accumulation rule is identical, with
/// the boundary components identically zero and the averaged bulk term
/// stored in `diss_bulk`.
pub fn neumann_ledger(records: &[StepRecord], dt: f64) -> Vec<f64> {
    energy_ledger(records, dt)
}

/// Dirichlet-seminorm and max-norm bounds valid for every iterate.
pub fn stability_bound(
    u0: &NodeField,
    grid: &Grid,
    pot: &impl Potential,
    gamma: f64,
) -> Result<BoundPack> {
    let inf = pot.infimum()?;
    let l = grid.length();
    let jd = discrete_energy(u0, grid, pot, gamma);
    let md = discrete_mass(u0, grid);
    let b0 = ((2.0 / gamma) * (jd + l * inf.min(0.0).abs())).max(0.0).sqrt();
    let b0_tilde = md.abs() / l + l.sqrt() * b0;
    Ok(BoundPack { b0, b0_tilde, refined: None })
}

/// Composite Simpson rule with `n` (even) subintervals.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    debug_assert!(n >= 2 && n % 2 == 0);
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Sharper max-norm bound computed from the analytic initial condition: the
/// curvature integrals are done by composite Simpson on a refined auxiliary
/// grid (evaluated at two resolutions, the finer is used).
pub fn refined_bound(
    ic: &FourierIc,
    grid: &Grid,
    pot: &impl Potential,
    gamma: f64,
) -> Result<f64> {
    let inf = pot.infimum()?;
    let l = grid.length();
    let n = (10 * grid.cells()).max(4);
    let n = if n % 2 == 0 { n } else { n + 1 };

    let u = |x: f64| ic.value(x);
    let d1 = |x: f64| ic.deriv(1, x);
    let d2 = |x: f64| ic.deriv(2, x);
    let d3 = |x: f64| ic.deriv(3, x);

    // dense sampling for the derivative maxima
    let samples = 10_000;
    let mut a1 = 0.0f64;
    let mut a2 = 0.0f64;
    for i in 0..=samples {
        let x = l * i as f64 / samples as f64;
        a1 = a1.max(d1(x).abs());
        a2 = a2.max(d2(x).abs());
    }

    let d2g = |x: f64| {
        let (u0, u1, u2, u3) = (u(x), d1(x), d2(x), d3(x));
        (gamma * (u2 * u2 + u1 * u3) + pot.d2(u0) * u1 * u1 + pot.d1(u0) * u2).abs()
    };
    let curvature = |x: f64| d2(x).abs();
    let energy_density = |x: f64| 0.5 * gamma * d1(x) * d1(x) + pot.eval(u(x));

    let cj_int = simpson(d2g, 0.0, l, 2 * n);
    let cm_int = simpson(curvature, 0.0, l, 2 * n);
    let j0 = simpson(energy_density, 0.0, l, 2 * n);
    let m0 = simpson(u, 0.0, l, 2 * n);

    let c_m = l * l / 8.0 * cm_int;
    let c_j = l * l * (cj_int / 8.0 + 0.5 * gamma * (a1 * a2 + 0.25 * l * a2 * a2));
    let radicand = (2.0 * l / gamma) * (j0 + c_j + l * inf.min(0.0).abs());
    Ok((m0.abs() + c_m) / l + radicand.max(0.0).sqrt())
}

/// Evaluates the unique-solvability condition for a step of size `dt`.
pub fn timestep_condition(
    bounds: &BoundPack,
    pot: &DoubleWell,
    grid: &Grid,
    gamma: f64,
    dt: f64,
) -> ConditionReport {
    let l = grid.length();
    let radius = 2.0 * bounds.b0_tilde;
    let f2 = pot.max_abs_deriv(2, radius);
    let f3 = pot.max_abs_deriv(3, radius);
    let factor = (1.5 * f2).max(0.5 * f2 + (5.0 * l.sqrt() * bounds.b0 / 6.0) * f3);
    let step = (dt / (2.0 * gamma)).sqrt();
    let margin = factor * step;

    let bt2 = bounds.b0_tilde * bounds.b0_tilde;
    let (q, r) = (pot.q, pot.r);
    let corollary_factor = (1.5 * r)
        .max(8.5 * q * bt2 + 0.5 * r)
        .max(12.75 * q * bt2 - 0.5 * r);
    let corollary_margin = corollary_factor * step;

    ConditionReport {
        margin,
        corollary_margin,
        satisfied: margin < 1.0,
    }
}

/// Discrete variation: the bulk inner product plus boundary bracket of the
/// variation identity, which must reproduce `Jd(U) - Jd(V)` exactly.
pub fn discrete_variation(
    u: &ExtendedField,
    v: &ExtendedField,
    grid: &Grid,
    pot: &impl Potential,
    gamma: f64,
) -> f64 {
    let kk = u.interior_len() - 1;
    let dx = grid.dx();
    let avg_vals: Vec<f64> = (-1..=kk as isize + 1)
        .map(|k| 0.5 * (u.at(k) + v.at(k)))
        .collect();
    let avg = ExtendedField::new(avg_vals).expect("finite average");

    let mut bulk = 0.0;
    for k in 0..=kk {
        let ki = k as isize;
        let variational = -gamma * diff_second(&avg, grid, ki)
            + pot.difference_quotient(u.at(ki), v.at(ki));
        let w = if k == 0 || k == kk { 0.5 } else { 1.0 };
        bulk += w * variational * (u.at(ki) - v.at(ki));
    }
    let bracket = |k: isize| gamma * diff_central(&avg, grid, k) * (u.at(k) - v.at(k));
    bulk * dx + bracket(kk as isize) - bracket(0)
}
