//! Initial conditions as finite Fourier sums with closed-form derivatives.

use crate::{Error, Grid, NodeField, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WaveKind {
    Sin,
    Cos,
}

/// One term `amplitude * kind(mode * pi * x + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierTerm {
    pub kind: WaveKind,
    pub amplitude: f64,
    pub mode: f64,
    pub phase: f64,
}

impl FourierTerm {
    fn deriv(&self, order: u32, x: f64) -> f64 {
        let w = self.mode * std::f64::consts::PI;
        let arg = w * x + self.phase;
        let scale = self.amplitude * w.powi(order as i32);
        // each derivative shifts the phase by pi/2
        let shifted = arg + order as f64 * std::f64::consts::FRAC_PI_2;
        match self.kind {
            WaveKind::Sin => scale * shifted.sin(),
            WaveKind::Cos => scale * shifted.cos(),
        }
    }
}

/// Finite sum of sinusoids; supplies values and derivatives up to third
/// order for the a-priori bound quadratures.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierIc {
    terms: Vec<FourierTerm>,
}

impl FourierIc {
    pub fn new(terms: Vec<FourierTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidParameter(
                "initial condition needs at least one term".into(),
            ));
        }
        for t in &terms {
            if !(t.amplitude.is_finite() && t.mode.is_finite() && t.phase.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "non-finite Fourier term {t:?}"
                )));
            }
        }
        Ok(FourierIc { terms })
    }

    pub fn terms(&self) -> &[FourierTerm] {
        &self.terms
    }

    pub fn value(&self, x: f64) -> f64 {
        self.deriv(0, x)
    }

    pub fn deriv(&self, order: u32, x: f64) -> f64 {
        self.terms.iter().map(|t| t.deriv(order, x)).sum()
    }

    pub fn sample(&self, grid: &Grid) -> NodeField {
        NodeField::sample(grid, |x| self.value(x))
    }

    /// `0.01 cos(pi x / 2)` on `[0, 20]`.
    pub fn example1() -> Self {
        FourierIc::new(vec![FourierTerm {
            kind: WaveKind::Cos,
            amplitude: 0.01,
            mode: 0.5,
            phase: 0.0,
        }])
        .unwrap()
    }

    /// Four-mode perturbation on `[0, 10]`.
    pub fn example2() -> Self {
        let term = |kind, amplitude, mode| FourierTerm {
            kind,
            amplitude,
            mode,
            phase: 0.0,
        };
        FourierIc::new(vec![
            term(WaveKind::Sin, 0.01, 2.0),
            term(WaveKind::Cos, 0.001, 4.0),
            term(WaveKind::Sin, 0.006, 4.0),
            term(WaveKind::Cos, 0.002, 10.0),
        ])
        .unwrap()
    }

    /// `0.05 sin(2 pi x)` on `[0, 1]`.
    pub fn example3() -> Self {
        FourierIc::new(vec![FourierTerm {
            kind: WaveKind::Sin,
            amplitude: 0.05,
            mode: 2.0,
            phase: 0.0,
        }])
        .unwrap()
    }
}
