//! The double-well potential, its difference quotient and the four-point
//! second divided difference used by the contraction estimates.

use crate::{Error, Result};

/// Smooth potential with derivative evaluations up to fourth order and a
/// finite lower bound.
pub trait Potential {
    fn eval(&self, s: f64) -> f64;
    fn d1(&self, s: f64) -> f64;
    fn d2(&self, s: f64) -> f64;
    fn d3(&self, s: f64) -> f64;
    fn d4(&self, s: f64) -> f64;

    /// Infimum of the potential over the real line; must be finite.
    fn infimum(&self) -> Result<f64>;

    /// Secant slope `(F(xi) - F(eta)) / (xi - eta)`, continued by `F'(eta)`
    /// at coincident arguments.
    fn difference_quotient(&self, xi: f64, eta: f64) -> f64 {
        if (xi - eta).abs() <= 1e-8 * (1.0 + xi.abs() + eta.abs()) {
            self.d1(0.5 * (xi + eta))
        } else {
            (self.eval(xi) - self.eval(eta)) / (xi - eta)
        }
    }

    /// Four-point second divided difference of the difference quotient.
    fn fbar_second(&self, xi: f64, xit: f64, eta: f64, etat: f64) -> f64 {
        let h = 1e-6 * (1.0 + xi.abs() + xit.abs());
        if (xi - xit).abs() <= h {
            let m = 0.5 * (xi + xit);
            // centered derivative of xi -> dF/d(xi,eta) + dF/d(xi,etat)
            let g = |x: f64| self.difference_quotient(x, eta) + self.difference_quotient(x, etat);
            (g(m + h) - g(m - h)) / (2.0 * h)
        } else {
            ((self.difference_quotient(xi, eta) + self.difference_quotient(xi, etat))
                - (self.difference_quotient(xit, eta) + self.difference_quotient(xit, etat)))
                / (xi - xit)
        }
    }

    /// `max |F^(order)|` over `[-radius, radius]`, `order` in `2..=4`.
    fn max_abs_deriv(&self, order: u8, radius: f64) -> f64;
}

/// `F(s) = (q/4) s^4 - (r/2) s^2` with `q, r > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleWell {
    pub q: f64,
    pub r: f64,
}

impl DoubleWell {
    pub fn new(q: f64, r: f64) -> Result<Self> {
        if !(q > 0.0 && q.is_finite()) || !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "double-well coefficients must be positive, got q = {q}, r = {r}"
            )));
        }
        Ok(DoubleWell { q, r })
    }
}

impl Potential for DoubleWell {
    fn eval(&self, s: f64) -> f64 {
        0.25 * self.q * s.powi(4) - 0.5 * self.r * s * s
    }

    fn d1(&self, s: f64) -> f64 {
        self.q * s.powi(3) - self.r * s
    }

    fn d2(&self, s: f64) -> f64 {
        3.0 * self.q * s * s - self.r
    }

    fn d3(&self, s: f64) -> f64 {
        6.0 * self.q * s
    }

    fn d4(&self, _s: f64) -> f64 {
        6.0 * self.q
    }

    fn infimum(&self) -> Result<f64> {
        Ok(-self.r * self.r / (4.0 * self.q))
    }

    /// Exact polynomial form, valid for all arguments including
    /// coincident ones:
    /// `(q/4)(xi^3 + xi^2 eta + xi eta^2 + eta^3) - (r/2)(xi + eta)`.
    fn difference_quotient(&self, xi: f64, eta: f64) -> f64 {
        0.25 * self.q * (xi * xi * xi + xi * xi * eta + xi * eta * eta + eta * eta * eta)
            - 0.5 * self.r * (xi + eta)
    }

    /// Closed form obtained by dividing differences of the polynomial
    /// quotient: `(q/4)(2(xi^2 + xi xit + xit^2) + (xi + xit)(eta + etat)
    /// + eta^2 + etat^2) - r`.
    fn fbar_second(&self, xi: f64, xit: f64, eta: f64, etat: f64) -> f64 {
        0.25 * self.q
            * (2.0 * (xi * xi + xi * xit + xit * xit)
                + (xi + xit) * (eta + etat)
                + eta * eta
                + etat * etat)
            - self.r
    }

    fn max_abs_deriv(&self, order: u8, radius: f64) -> f64 {
        let m = radius.abs();
        match order {
            2 => (3.0 * self.q * m * m - self.r).max(self.r),
            3 => 6.0 * self.q * m,
            4 => 6.0 * self.q,
            _ => panic!("derivative order {order} not supported"),
        }
    }
}
