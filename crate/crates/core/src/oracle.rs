//! Brute-force reference step: damped Newton with a dense
//! finite-difference Jacobian on the full ghost-inclusive nonlinear
//! system, written independently of the banded fixed-point stepper so the
//! two can be cross-checked.

use crate::potential::Potential;
use crate::stepper::{Scheme, SchemeParams};
use crate::{Error, ExtendedField, Result};

/// Dense Gaussian elimination with partial pivoting.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("nonempty");
        if a[piv][col].abs() < 1e-300 {
            return Err(Error::SingularSystem(format!("oracle pivot at column {col}")));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let m = a[row][col] / a[col][col];
            if m != 0.0 {
                for c in col..n {
                    a[row][c] -= m * a[col][c];
                }
                b[row] -= m * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for c in row + 1..n {
            s -= a[row][c] * x[c];
        }
        x[row] = s / a[row][row];
    }
    Ok(x)
}

/// Residual of the full system in the unknown vector
/// `z = (U_{-1}..U_{K+1}, P_{-1}..P_{K+1})`.
fn residual(z: &[f64], u_n: &ExtendedField, params: &SchemeParams) -> Vec<f64> {
    let k = params.grid.cells();
    let dx = params.grid.dx();
    let dx2 = dx * dx;
    let nu = k + 3;
    let u = |i: isize| z[(i + 1) as usize];
    let p = |i: isize| z[nu + (i + 1) as usize];
    let avg = |i: isize| 0.5 * (u(i) + u_n.at(i));
    let mut r = Vec::with_capacity(2 * nu);
    // evolution equations at every node
    for j in 0..=k as isize {
        r.push((u(j) - u_n.at(j)) / params.dt - (p(j + 1) - 2.0 * p(j) + p(j - 1)) / dx2);
    }
    // potential equations at every node
    for j in 0..=k as isize {
        let d2 = (avg(j + 1) - 2.0 * avg(j) + avg(j - 1)) / dx2;
        r.push(p(j) + params.gamma * d2 - params.pot.difference_quotient(u(j), u_n.at(j)));
    }
    let ki = k as isize;
    match params.scheme {
        Scheme::DynamicCentral => {
            r.push(
                params.eps_ex * (u(0) - u_n.at(0)) / params.dt
                    - (avg(1) - avg(-1)) / (2.0 * dx),
            );
            r.push(
                params.eps_ex * (u(ki) - u_n.at(ki)) / params.dt
                    + (avg(ki + 1) - avg(ki - 1)) / (2.0 * dx),
            );
        }
        Scheme::Neumann => {
            r.push(u(-1) - u(1));
            r.push(u(ki + 1) - u(ki - 1));
        }
        Scheme::DynamicOnesided => unreachable!("validated in dense_step"),
    }
    r.push(p(-1) - p(1));
    r.push(p(ki + 1) - p(ki - 1));
    r
}

fn linf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Solves one time step of the central dynamic or reflected scheme by
/// damped Newton on all `2(K+3)` unknowns; returns the new state and the
/// chemical potential, both with ghosts.
pub fn dense_step(
    params: &SchemeParams,
    u_n: &ExtendedField,
) -> Result<(ExtendedField, ExtendedField)> {
    params.validate()?;
    if params.scheme == Scheme::DynamicOnesided {
        return Err(Error::InvalidParameter(
            "the dense oracle covers only the central and reflected schemes".into(),
        ));
    }
    let k = params.grid.cells();
    let nu = k + 3;
    let n = 2 * nu;
    // initial guess: the previous state and its implied potential
    let mut z = vec![0.0; n];
    for i in -1..=k as isize + 1 {
        z[(i + 1) as usize] = u_n.at(i);
    }
    let dx2 = params.grid.dx() * params.grid.dx();
    for i in 0..=k as isize {
        let d2 = (u_n.at(i + 1) - 2.0 * u_n.at(i) + u_n.at(i - 1)) / dx2;
        z[nu + (i + 1) as usize] = -params.gamma * d2 + params.pot.d1(u_n.at(i));
    }
    z[nu] = z[nu + 2];
    z[nu + nu - 1] = z[nu + nu - 3];

    let mut r = residual(&z, u_n, params);
    let mut rnorm = linf(&r);
    for _ in 0..100 {
        if rnorm <= 1e-12 {
            break;
        }
        // finite-difference Jacobian, column by column
        let mut jac = vec![vec![0.0; n]; n];
        for c in 0..n {
            let h = 1e-7 * (1.0 + z[c].abs());
            let mut zp = z.clone();
            zp[c] += h;
            let rp = residual(&zp, u_n, params);
            for (row, jr) in jac.iter_mut().enumerate() {
                jr[c] = (rp[row] - r[row]) / h;
            }
        }
        let delta = dense_solve(jac, r.clone())?;
        // damped update: halve until the residual improves
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let znew: Vec<f64> = z.iter().zip(&delta).map(|(a, d)| a - lambda * d).collect();
            let rnew = residual(&znew, u_n, params);
            let rnew_norm = linf(&rnew);
            if rnew_norm < rnorm {
                z = znew;
                r = rnew;
                rnorm = rnew_norm;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if rnorm > 1e-9 {
        return Err(Error::NoConvergence { iterations: 100, residual: rnorm });
    }
    let u = ExtendedField::new(z[..nu].to_vec())?;
    let p = ExtendedField::new(z[nu..].to_vec())?;
    Ok((u, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::DoubleWell;
    use crate::{Grid, NodeField};

    #[test]
    fn constant_state_is_exact() {
        let grid = Grid::new(2.0, 4).unwrap();
        let pot = DoubleWell::new(1.0, 1.0).unwrap();
        let params =
            SchemeParams::new(grid, 0.01, 1.0, 1.0, pot, Scheme::DynamicCentral).unwrap();
        let c = 0.6;
        let u_n = ExtendedField::constant(&grid, c);
        let (u, p) = dense_step(&params, &u_n).unwrap();
        for i in -1..=5 {
            assert!((u.at(i) - c).abs() < 1e-10);
        }
        for i in 0..=4 {
            assert!((p.at(i) - pot.d1(c)).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_onesided_scheme() {
        let grid = Grid::new(2.0, 4).unwrap();
        let pot = DoubleWell::new(1.0, 1.0).unwrap();
        let params =
            SchemeParams::new(grid, 0.01, 1.0, 1.0, pot, Scheme::DynamicOnesided).unwrap();
        let u_n = ExtendedField::reflect(&NodeField::zeros(&grid));
        assert!(dense_step(&params, &u_n).is_err());
    }
}
