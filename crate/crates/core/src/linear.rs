//! Assembly and factorization of the pentadiagonal step matrix
//! `A = I + beta * D2 * D2t`, where `D2` is the second-difference stencil
//! with boundary closure rows and `D2t` carries the dynamic-boundary
//! corner modification `-2 - 1/alpha`.

use crate::{Error, Result};

/// The two dimensionless coefficients of the step matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepCoefficients {
    pub alpha: f64,
    pub beta: f64,
}

impl StepCoefficients {
    /// `beta = 0` is admitted so tests can degenerate A to the identity.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta must be non-negative, got {beta}")));
        }
        Ok(StepCoefficients { alpha, beta })
    }

    /// `alpha = dt / (4 eps_ex dx)`, `beta = gamma dt / (2 dx^4)`.
    pub fn from_params(gamma: f64, dt: f64, dx: f64, eps_ex: f64) -> Result<Self> {
        StepCoefficients::new(dt / (4.0 * eps_ex * dx), gamma * dt / (2.0 * dx.powi(4)))
    }
}

/// Boundary closure of the second-difference operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcKind {
    Dynamic,
    Neumann,
}

const KL: usize = 2;
const KU: usize = 2;
const KV: usize = KL + KU; // fill extends the upper band to this halfwidth

/// Pentadiagonal system with banded LU factorization (partial pivoting).
#[derive(Debug, Clone)]
pub struct BandedSystem {
    n: usize,
    /// unfactorized band, 5 rows by n columns; `band[(2 + i - j) * n + j]`
    band: Vec<f64>,
    /// factorized band in LAPACK gbtrf layout, 7 rows by n columns
    fact: Option<(Vec<f64>, Vec<usize>)>,
}

/// Second-difference stencil entry (dimensionless), with the chosen
/// boundary closure. `D2t` is `D2` with the corner `-2 - 1/alpha`.
fn d2_entry(n: usize, i: usize, j: usize, corner: f64) -> f64 {
    if i == 0 {
        match j {
            0 => corner,
            1 => 2.0,
            _ => 0.0,
        }
    } else if i == n - 1 {
        if j == n - 1 {
            corner
        } else if j == n - 2 {
            2.0
        } else {
            0.0
        }
    } else if j + 1 == i || j == i + 1 {
        1.0
    } else if j == i {
        -2.0
    } else {
        0.0
    }
}

impl BandedSystem {
    /// Builds `A = I + beta * D2 * D2t` for `K + 1` nodes.
    pub fn assemble(k: usize, coeffs: &StepCoefficients, bc: BcKind) -> Result<Self> {
        if k < 4 {
            return Err(Error::InvalidGrid(format!(
                "step matrix needs K >= 4 so boundary rows do not overlap, got K = {k}"
            )));
        }
        let n = k + 1;
        let corner_left = -2.0;
        let corner_tilde = match bc {
            BcKind::Dynamic => -2.0 - 1.0 / coeffs.alpha,
            BcKind::Neumann => -2.0,
        };
        let mut band = vec![0.0; 5 * n];
        for i in 0..n {
            let lo = i.saturating_sub(2);
            let hi = (i + 2).min(n - 1);
            for j in lo..=hi {
                let mut prod = 0.0;
                let mlo = i.saturating_sub(1).min(j.saturating_sub(1));
                let mhi = (i + 1).max(j + 1).min(n - 1);
                for m in mlo..=mhi {
                    prod += d2_entry(n, i, m, corner_left) * d2_entry(n, m, j, corner_tilde);
                }
                let mut a = coeffs.beta * prod;
                if i == j {
                    a += 1.0;
                }
                band[(2 + i - j) * n + j] = a;
            }
        }
        Ok(BandedSystem { n, band, fact: None })
    }

    /// Builds a system from dense rows; entries outside halfwidth 2 must
    /// be zero.
    pub fn from_dense_band(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n < 5 {
            return Err(Error::InvalidGrid(format!("system order {n} too small")));
        }
        let mut band = vec![0.0; 5 * n];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidGrid("non-square dense rows".into()));
            }
            for (j, &v) in row.iter().enumerate() {
                if i.abs_diff(j) > 2 {
                    if v != 0.0 {
                        return Err(Error::InvalidGrid(format!(
                            "entry ({i},{j}) = {v} outside the pentadiagonal band"
                        )));
                    }
                } else {
                    band[(2 + i - j) * n + j] = v;
                }
            }
        }
        Ok(BandedSystem { n, band, fact: None })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    /// Unfactorized entry `A[i][j]`; zero outside the band.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i >= self.n || j >= self.n || i.abs_diff(j) > 2 {
            0.0
        } else {
            self.band[(2 + i - j) * self.n + j]
        }
    }

    /// Banded matrix-vector product with the unfactorized entries.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(2);
                let hi = (i + 2).min(self.n - 1);
                (lo..=hi).map(|j| self.entry(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Banded LU with partial pivoting; pivot fill stays within halfwidth 4.
    pub fn factorize(&mut self) -> Result<()> {
        let n = self.n;
        let mut ab = vec![0.0; (KV + KL + 1) * n];
        for shift in 0..5usize {
            for j in 0..n {
                ab[(KL + shift) * n + j] = self.band[shift * n + j];
            }
        }
        let mut ipiv = vec![0usize; n];
        // element A[i][j] lives at row KV + i - j (valid for
        // j - KV <= i <= j + KL)
        let idx = |i: usize, j: usize| (KV + i - j) * n + j;
        let mut ju = 0usize;
        for j in 0..n {
            let km = KL.min(n - 1 - j);
            let mut piv = 0usize;
            let mut best = ab[idx(j, j)].abs();
            for p in 1..=km {
                let v = ab[idx(j + p, j)].abs();
                if v > best {
                    best = v;
                    piv = p;
                }
            }
            let pivot = ab[idx(j + piv, j)];
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::SingularSystem(format!(
                    "zero or non-finite pivot at column {j}"
                )));
            }
            ipiv[j] = j + piv;
            ju = ju.max((j + KU + piv).min(n - 1));
            if piv != 0 {
                for c in j..=ju {
                    let a = idx(j, c);
                    let b = idx(j + piv, c);
                    ab.swap(a, b);
                }
            }
            let inv = 1.0 / ab[idx(j, j)];
            for p in 1..=km {
                ab[idx(j + p, j)] *= inv;
            }
            for c in j + 1..=ju.max(j) {
                let ujc = ab[idx(j, c)];
                if ujc != 0.0 {
                    for p in 1..=km {
                        ab[idx(j + p, c)] -= ab[idx(j + p, j)] * ujc;
                    }
                }
            }
        }
        self.fact = Some((ab, ipiv));
        Ok(())
    }

    /// Solves `A x = rhs` with a previously computed factorization.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let (ab, ipiv) = self.fact.as_ref().ok_or_else(|| {
            Error::SingularSystem("solve called before factorize".into())
        })?;
        let n = self.n;
        assert_eq!(rhs.len(), n);
        let idx = |i: usize, j: usize| (KV + i - j) * n + j;
        let mut x = rhs.to_vec();
        for j in 0..n {
            let p = ipiv[j];
            if p != j {
                x.swap(j, p);
            }
            let km = KL.min(n - 1 - j);
            for i in 1..=km {
                x[j + i] -= ab[idx(j + i, j)] * x[j];
            }
        }
        for j in (0..n).rev() {
            x[j] /= ab[idx(j, j)];
            let lm = KV.min(j);
            for i in 1..=lm {
                x[j - i] -= ab[idx(j - i, j)] * x[j];
            }
        }
        Ok(x)
    }
}

/// Evaluates the positive-definite symmetrized boundary quadratic form in
/// two ways: directly as `x^T (-Y) x` and via its completed-square
/// expansion. Both agree and are non-negative for every `x`.
pub fn quadratic_form_check(k: usize, alpha: f64, x: &[f64]) -> (f64, f64) {
    let n = k + 1;
    assert_eq!(x.len(), n);
    let s2 = 2.0f64.sqrt();
    // -Y: corners 2 + 1/alpha, interior diagonal 2; off-diagonals -sqrt(2)
    // next to the corners and -1 elsewhere
    let mut direct = 0.0;
    for i in 0..n {
        let d = if i == 0 || i == n - 1 { 2.0 + 1.0 / alpha } else { 2.0 };
        direct += d * x[i] * x[i];
        if i + 1 < n {
            let off = if i == 0 || i + 1 == n - 1 { -s2 } else { -1.0 };
            direct += 2.0 * off * x[i] * x[i + 1];
        }
    }
    let mut squares = (x[0] * x[0] + x[n - 1] * x[n - 1]) / alpha
        + 2.0 * (x[0] - 0.5 * s2 * x[1]).powi(2)
        + 2.0 * (x[n - 1] - 0.5 * s2 * x[n - 2]).powi(2);
    for i in 1..n.saturating_sub(2) {
        squares += (x[i] - x[i + 1]).powi(2);
    }
    (direct, squares)
}
