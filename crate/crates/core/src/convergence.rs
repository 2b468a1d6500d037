//! Space-time interpolants and refinement studies measuring observed
//! convergence orders against a fine reference solution.

use crate::stepper::{SchemeParams, Stepper};
use crate::{Error, ExtendedField, Grid, NodeField, Result};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Piecewise-linear interpolation of nodal values at `x` in `[0, L]`.
pub fn interp_space(f: &NodeField, grid: &Grid, x: f64) -> f64 {
    assert!(
        (-1e-12..=grid.length() + 1e-12).contains(&x),
        "x = {x} outside [0, {}]",
        grid.length()
    );
    let dx = grid.dx();
    let k = ((x / dx).floor() as usize).min(grid.cells() - 1);
    let theta = (x - k as f64 * dx) / dx;
    (1.0 - theta) * f[k] + theta * f[k + 1]
}

/// Bilinear interpolation between two consecutive time levels: linear in
/// `t` on `[t_n, t_n + dt]` of the spatial interpolants.
#[allow(clippy::too_many_arguments)]
pub fn interp_spacetime(
    u_n: &NodeField,
    u_np1: &NodeField,
    grid: &Grid,
    t_n: f64,
    dt: f64,
    x: f64,
    t: f64,
) -> f64 {
    let tau = ((t - t_n) / dt).clamp(0.0, 1.0);
    (1.0 - tau) * interp_space(u_n, grid, x) + tau * interp_space(u_np1, grid, x)
}

/// Geometric refinement ladder: level `m` uses `K0 * 2^m` cells and time
/// step `dt0 / 2^m`, all run to the same final time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementLadder {
    pub base_k: usize,
    pub base_dt: f64,
    pub levels: usize,
    pub t_final: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelSpec {
    pub k: usize,
    pub dt: f64,
    pub steps: usize,
}

impl RefinementLadder {
    pub fn new(base_k: usize, base_dt: f64, levels: usize, t_final: f64) -> Result<Self> {
        if levels < 2 {
            return Err(Error::InvalidParameter(format!(
                "ladder needs at least 2 levels, got {levels}"
            )));
        }
        if !(base_dt > 0.0 && t_final > 0.0) {
            return Err(Error::InvalidParameter(
                "ladder needs positive base_dt and t_final".into(),
            ));
        }
        let ratio = t_final / base_dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "t_final / base_dt = {ratio} is not an integer"
            )));
        }
        Ok(RefinementLadder { base_k, base_dt, levels, t_final })
    }

    pub fn level_specs(&self) -> Vec<LevelSpec> {
        (0..self.levels)
            .map(|m| {
                let factor = 1usize << m;
                LevelSpec {
                    k: self.base_k * factor,
                    dt: self.base_dt / factor as f64,
                    steps: (self.t_final / self.base_dt).round() as usize * factor,
                }
            })
            .collect()
    }
}

/// Per-level errors at the final time and pairwise observed orders.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderReport {
    pub ks: Vec<usize>,
    pub errors: Vec<f64>,
    /// `log2(e_m / e_{m+1})`; absent when either error sits at the solver
    /// tolerance floor.
    pub orders: Vec<Option<f64>>,
}

/// Final interior state of one ladder level.
fn run_level(params: &SchemeParams, u0: &ExtendedField, steps: usize) -> Result<NodeField> {
    let stepper = Stepper::new(*params)?;
    let mut state = u0.clone();
    for _ in 0..steps {
        state = stepper.step(&state)?.u_next;
    }
    Ok(state.interior())
}

fn thread_cap(levels: usize) -> usize {
    std::env::var("CHDBC_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v >= 1)
        .unwrap_or(levels)
        .min(levels)
}

/// Runs every ladder level to the final time and measures max-norm errors
/// over coarse nodes against the reference: the injected `(K, field)` pair
/// if given, otherwise the finest level (self-convergence).
///
/// Levels run concurrently, capped by the `CHDBC_THREADS` env var.
pub fn refine_and_measure<F>(
    ladder: &RefinementLadder,
    build: F,
    reference: Option<(usize, NodeField)>,
) -> Result<OrderReport>
where
    F: Fn(usize, f64) -> Result<(SchemeParams, ExtendedField)> + Sync,
{
    let specs = ladder.level_specs();
    let finest_k = specs.last().expect("validated ladder").k;
    if finest_k < 8 * specs[0].k {
        return Err(Error::InvalidParameter(format!(
            "finest level K = {finest_k} must be at least 8x the coarsest K = {}",
            specs[0].k
        )));
    }
    if let Some((k_ref, _)) = &reference {
        if k_ref % finest_k != 0 {
            return Err(Error::InvalidParameter(format!(
                "reference K = {k_ref} is not a multiple of the finest ladder K = {finest_k}"
            )));
        }
    }

    let results: Vec<Mutex<Option<Result<NodeField>>>> =
        specs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = thread_cap(specs.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= specs.len() {
                    break;
                }
                let spec = specs[i];
                let out = build(spec.k, spec.dt)
                    .and_then(|(params, u0)| run_level(&params, &u0, spec.steps));
                *results[i].lock().expect("worker poisoned") = Some(out);
            });
        }
    });
    let finals: Vec<NodeField> = results
        .into_iter()
        .map(|m| m.into_inner().expect("poisoned").expect("worker ran"))
        .collect::<Result<_>>()?;

    let (k_ref, field_ref) = match &reference {
        Some((k, f)) => (*k, f.clone()),
        None => (finest_k, finals.last().expect("nonempty").clone()),
    };

    // error floor: orders are meaningless once errors reach the
    // fixed-point tolerance or the accumulated linear-solve roundoff
    let (params0, _) = build(specs[0].k, specs[0].dt)?;
    let floor = (100.0 * params0.fp_tol).max(1e-10);

    let measured = if reference.is_some() { specs.len() } else { specs.len() - 1 };
    let mut errors = Vec::with_capacity(measured);
    let mut ks = Vec::with_capacity(measured);
    for (spec, fin) in specs.iter().zip(&finals).take(measured) {
        let stride = k_ref / spec.k;
        let mut e = 0.0f64;
        for k in 0..=spec.k {
            e = e.max((field_ref[k * stride] - fin[k]).abs());
        }
        errors.push(e);
        ks.push(spec.k);
    }
    let mut orders = Vec::new();
    for pair in errors.windows(2) {
        orders.push(if pair[0] > floor && pair[1] > floor {
            Some((pair[0] / pair[1]).log2())
        } else {
            None
        });
    }
    Ok(OrderReport { ks, errors, orders })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::DoubleWell;
    use crate::stepper::Scheme;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn interp_space_examples() {
        let g = Grid::new(4.0, 8).unwrap();
        let f = NodeField::sample(&g, |x| 2.0 * x - 1.0);
        for k in 0..=8 {
            assert_eq!(interp_space(&f, &g, g.node(k)), f[k]);
        }
        assert!((interp_space(&f, &g, 0.25) - (f[0] + f[1]) / 2.0).abs() < 1e-15);
        for x in [0.13, 1.7, 3.99] {
            assert!((interp_space(&f, &g, x) - (2.0 * x - 1.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn interpolant_max_equals_linf() {
        let g = Grid::new(1.0, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let f = NodeField::new((0..17).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap();
            let linf = crate::grid::linf_norm(&f);
            // dense off-node samples never exceed the nodal max ...
            let mut dense = 0.0f64;
            for i in 0..=1000 {
                dense = dense.max(interp_space(&f, &g, i as f64 / 1000.0).abs());
            }
            assert!(dense <= linf + 1e-12);
            // ... and the max is attained at a node
            let mut nodal = 0.0f64;
            for k in 0..=16 {
                nodal = nodal.max(interp_space(&f, &g, g.node(k)).abs());
            }
            assert!((nodal - linf).abs() < 1e-12);
        }
    }

    #[test]
    fn spacetime_interp_examples() {
        let g = Grid::new(2.0, 4).unwrap();
        let a = NodeField::new(vec![0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = NodeField::new(vec![4.0, 3.0, 2.0, 1.0, 0.0]).unwrap();
        // corners
        assert_eq!(interp_spacetime(&a, &b, &g, 0.0, 0.5, 1.0, 0.0), 2.0);
        assert_eq!(interp_spacetime(&a, &b, &g, 0.0, 0.5, 1.0, 0.5), 2.0);
        // cell center equals the average of the four corners
        let center = interp_spacetime(&a, &b, &g, 0.0, 0.5, 0.25, 0.25);
        assert!((center - (a[0] + a[1] + b[0] + b[1]) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn spacetime_interp_commutes() {
        let g = Grid::new(1.0, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let a = NodeField::new((0..9).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
            let b = NodeField::new((0..9).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
            let x = rng.gen_range(0.0..1.0);
            let t = rng.gen_range(0.0..0.25);
            // space then time
            let st = {
                let tau = t / 0.25;
                (1.0 - tau) * interp_space(&a, &g, x) + tau * interp_space(&b, &g, x)
            };
            // time then space: interpolate nodal values in time first
            let ts = {
                let tau = t / 0.25;
                let mixed = NodeField::new(
                    (0..9).map(|k| (1.0 - tau) * a[k] + tau * b[k]).collect(),
                )
                .unwrap();
                interp_space(&mixed, &g, x)
            };
            assert!((st - ts).abs() <= 1e-14);
            assert!((interp_spacetime(&a, &b, &g, 0.0, 0.25, x, t) - st).abs() <= 1e-14);
        }
    }

    #[test]
    fn ladder_validation() {
        assert!(RefinementLadder::new(8, 0.1, 1, 1.0).is_err());
        assert!(RefinementLadder::new(8, 0.3, 3, 1.0).is_err());
        let l = RefinementLadder::new(8, 0.25, 3, 1.0).unwrap();
        let specs = l.level_specs();
        assert_eq!(specs[2].k, 32);
        assert_eq!(specs[2].steps, 16);
        assert!((specs[2].dt - 0.0625).abs() < 1e-15);
    }

    fn smooth_build(k: usize, dt: f64) -> Result<(SchemeParams, ExtendedField)> {
        let grid = Grid::new(1.0, k)?;
        let pot = DoubleWell::new(1.0, 1.0)?;
        let params = SchemeParams::new(grid, dt, 2.0, 1.0, pot, Scheme::DynamicCentral)?;
        let ic = crate::ic::FourierIc::example3();
        let u0 = ExtendedField::from_interior(
            &ic.sample(&grid),
            ic.value(-grid.dx()),
            ic.value(1.0 + grid.dx()),
        );
        Ok((params, u0))
    }

    #[test]
    fn constant_states_give_zero_errors() {
        let ladder = RefinementLadder::new(4, 0.05, 4, 0.2).unwrap();
        let build = |k: usize, dt: f64| -> Result<(SchemeParams, ExtendedField)> {
            let grid = Grid::new(1.0, k)?;
            let pot = DoubleWell::new(1.0, 1.0)?;
            let params = SchemeParams::new(grid, dt, 1.0, 1.0, pot, Scheme::DynamicCentral)?;
            Ok((params, ExtendedField::constant(&grid, 0.25)))
        };
        let report = refine_and_measure(&ladder, build, None).unwrap();
        // constants are exact steady states; errors sit at solver roundoff
        for e in &report.errors {
            assert!(*e <= 1e-9, "errors {:?}", report.errors);
        }
        for o in &report.orders {
            assert!(o.is_none(), "report {report:?}");
        }
    }

    #[test]
    fn smooth_ladder_errors_shrink() {
        let ladder = RefinementLadder::new(5, 0.025, 4, 0.1).unwrap();
        let report = refine_and_measure(&ladder, smooth_build, None).unwrap();
        assert_eq!(report.errors.len(), 3);
        for pair in report.errors.windows(2) {
            assert!(pair[1] <= pair[0] * 1.05, "errors {:?}", report.errors);
        }
    }

    #[test]
    fn injected_reference_measures_all_levels() {
        let ladder = RefinementLadder::new(5, 0.025, 4, 0.1).unwrap();
        let spec_ref = LevelSpec { k: 80, dt: 0.0125, steps: 8 };
        let (params, u0) = smooth_build(spec_ref.k, spec_ref.dt).unwrap();
        let reference = run_level(&params, &u0, spec_ref.steps).unwrap();
        let report =
            refine_and_measure(&ladder, smooth_build, Some((spec_ref.k, reference))).unwrap();
        assert_eq!(report.errors.len(), 4);
        assert!(report.errors.iter().all(|e| e.is_finite()));
    }
}
