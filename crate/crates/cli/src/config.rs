//! Flat `key = value` run configuration with strict rejection of anything
//! unknown or malformed; every error names the offending line.

use anyhow::{anyhow, bail, Result};
use chdbc_core::ic::{FourierIc, FourierTerm, WaveKind};
use chdbc_core::{DoubleWell, Grid, Scheme, SchemeParams};

/// Initial condition: a named built-in or an explicit Fourier term list.
#[derive(Debug, Clone, PartialEq)]
pub enum IcSpec {
    Example1,
    Example2,
    Example3,
    Terms(Vec<FourierTerm>),
}

impl IcSpec {
    pub fn build(&self) -> Result<FourierIc> {
        match self {
            IcSpec::Example1 => Ok(FourierIc::example1()),
            IcSpec::Example2 => Ok(FourierIc::example2()),
            IcSpec::Example3 => Ok(FourierIc::example3()),
            IcSpec::Terms(terms) => {
                FourierIc::new(terms.clone()).map_err(|e| anyhow!("ic: {e}"))
            }
        }
    }
}

/// A fully validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scheme: Scheme,
    pub length: f64,
    pub cells: usize,
    pub dt: f64,
    pub steps: usize,
    pub gamma: f64,
    pub eps_ex: f64,
    pub q: f64,
    pub r: f64,
    pub ic: IcSpec,
    pub fp_tol: f64,
    pub fp_maxiter: usize,
    pub snapshot_stride: usize,
    pub trace_csv: String,
    pub ledger_csv: String,
    pub snapshot_csv: String,
    pub order_csv: String,
}

impl RunConfig {
    /// Assembles the solver parameter block (validates grid and numbers).
    pub fn scheme_params(&self) -> Result<SchemeParams> {
        let grid = Grid::new(self.length, self.cells)?;
        let pot = DoubleWell::new(self.q, self.r)?;
        let mut p = SchemeParams::new(grid, self.dt, self.gamma, self.eps_ex, pot, self.scheme)?;
        p.fp_tol = self.fp_tol;
        p.fp_maxiter = self.fp_maxiter;
        p.validate()?;
        Ok(p)
    }

    pub fn initial_condition(&self) -> Result<FourierIc> {
        self.ic.build()
    }
}

fn parse_positive_f64(key: &str, value: &str, line: usize) -> Result<f64> {
    let v: f64 = value
        .parse()
        .map_err(|_| anyhow!("line {line}: {key} = {value:?} is not a number"))?;
    if !(v.is_finite() && v > 0.0) {
        bail!("line {line}: {key} must be a positive finite number, got {value}");
    }
    Ok(v)
}

fn parse_usize(key: &str, value: &str, line: usize) -> Result<usize> {
    value
        .parse()
        .map_err(|_| anyhow!("line {line}: {key} = {value:?} is not a non-negative integer"))
}

fn parse_ic(value: &str, line: usize) -> Result<IcSpec> {
    match value {
        "example1" => return Ok(IcSpec::Example1),
        "example2" => return Ok(IcSpec::Example2),
        "example3" => return Ok(IcSpec::Example3),
        _ => {}
    }
    let mut terms = Vec::new();
    for raw in value.split(',') {
        let part = raw.trim();
        let fields: Vec<&str> = part.split(':').collect();
        if fields.len() != 3 && fields.len() != 4 {
            bail!(
                "line {line}: malformed ic term {part:?} \
                 (expected kind:amplitude:mode[:phase])"
            );
        }
        let kind = match fields[0] {
            "sin" => WaveKind::Sin,
            "cos" => WaveKind::Cos,
            other => bail!("line {line}: ic term kind {other:?} (expected sin or cos)"),
        };
        let num = |label: &str, s: &str| -> Result<f64> {
            let v: f64 = s
                .parse()
                .map_err(|_| anyhow!("line {line}: ic term {label} {s:?} is not a number"))?;
            if !v.is_finite() {
                bail!("line {line}: ic term {label} must be finite");
            }
            Ok(v)
        };
        terms.push(FourierTerm {
            kind,
            amplitude: num("amplitude", fields[1])?,
            mode: num("mode", fields[2])?,
            phase: if fields.len() == 4 { num("phase", fields[3])? } else { 0.0 },
        });
    }
    Ok(IcSpec::Terms(terms))
}

/// Parses the flat key=value format: UTF-8 text, `#` starts a comment,
/// blank lines ignored, unknown and duplicate keys rejected.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut scheme = None;
    let mut length = None;
    let mut cells = None;
    let mut dt = None;
    let mut steps = None;
    let mut gamma = None;
    let mut eps_ex = None;
    let mut q = None;
    let mut r = None;
    let mut ic = None;
    let mut fp_tol = None;
    let mut fp_maxiter = None;
    let mut snapshot_stride = None;
    let mut trace_csv = None;
    let mut ledger_csv = None;
    let mut snapshot_csv = None;
    let mut order_csv = None;
    let mut seen: Vec<String> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| anyhow!("line {line}: expected key = value, got {content:?}"))?;
        let key = key.trim();
        let value = value.trim();
        if value.is_empty() {
            bail!("line {line}: key {key:?} has an empty value");
        }
        if seen.iter().any(|k| k == key) {
            bail!("line {line}: duplicate key {key:?}");
        }
        seen.push(key.to_string());
        match key {
            "scheme" => {
                scheme = Some(match value {
                    "dynamic-central" => Scheme::DynamicCentral,
                    "dynamic-onesided" => Scheme::DynamicOnesided,
                    "neumann" => Scheme::Neumann,
                    other => bail!(
                        "line {line}: unknown scheme {other:?} (expected \
                         dynamic-central, dynamic-onesided, or neumann)"
                    ),
                })
            }
            "L" => length = Some(parse_positive_f64(key, value, line)?),
            "K" => {
                let k = parse_usize(key, value, line)?;
                if k < 4 {
                    bail!("line {line}: K must be at least 4, got {k}");
                }
                cells = Some(k);
            }
            "dt" => dt = Some(parse_positive_f64(key, value, line)?),
            "steps" => steps = Some(parse_usize(key, value, line)?),
            "gamma" => gamma = Some(parse_positive_f64(key, value, line)?),
            "eps_ex" => eps_ex = Some(parse_positive_f64(key, value, line)?),
            "q" => q = Some(parse_positive_f64(key, value, line)?),
            "r" => r = Some(parse_positive_f64(key, value, line)?),
            "ic" => ic = Some(parse_ic(value, line)?),
            "fp_tol" => fp_tol = Some(parse_positive_f64(key, value, line)?),
            "fp_maxiter" => {
                let m = parse_usize(key, value, line)?;
                if m == 0 {
                    bail!("line {line}: fp_maxiter must be at least 1");
                }
                fp_maxiter = Some(m);
            }
            "snapshot_stride" => {
                let s = parse_usize(key, value, line)?;
                if s == 0 {
                    bail!("line {line}: snapshot_stride must be at least 1");
                }
                snapshot_stride = Some(s);
            }
            "trace_csv" => trace_csv = Some(value.to_string()),
            "ledger_csv" => ledger_csv = Some(value.to_string()),
            "snapshot_csv" => snapshot_csv = Some(value.to_string()),
            "order_csv" => order_csv = Some(value.to_string()),
            other => bail!("line {line}: unknown key {other:?}"),
        }
    }

    let require = |name: &str, missing: bool| -> Result<()> {
        if missing {
            bail!("missing required key {name:?}");
        }
        Ok(())
    };
    require("scheme", scheme.is_none())?;
    require("L", length.is_none())?;
    require("K", cells.is_none())?;
    require("dt", dt.is_none())?;
    require("steps", steps.is_none())?;
    require("gamma", gamma.is_none())?;
    require("ic", ic.is_none())?;

    let steps = steps.expect("checked");
    let cfg = RunConfig {
        scheme: scheme.expect("checked"),
        length: length.expect("checked"),
        cells: cells.expect("checked"),
        dt: dt.expect("checked"),
        steps,
        gamma: gamma.expect("checked"),
        eps_ex: eps_ex.unwrap_or(1.0),
        q: q.unwrap_or(1.0),
        r: r.unwrap_or(1.0),
        ic: ic.expect("checked"),
        fp_tol: fp_tol.unwrap_or(1e-13),
        fp_maxiter: fp_maxiter.unwrap_or(200),
        snapshot_stride: snapshot_stride.unwrap_or_else(|| steps.div_ceil(100).max(1)),
        trace_csv: trace_csv.unwrap_or_else(|| "trace.csv".into()),
        ledger_csv: ledger_csv.unwrap_or_else(|| "ledger.csv".into()),
        snapshot_csv: snapshot_csv.unwrap_or_else(|| "snapshots.csv".into()),
        order_csv: order_csv.unwrap_or_else(|| "orders.csv".into()),
    };
    cfg.scheme_params()?;
    cfg.initial_condition()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "\
# desk experiment
scheme = dynamic-central
L = 20
K = 40
dt = 0.02
steps = 20000
gamma = 2.0
ic = example1
";

    #[test]
    fn accepts_complete_config_with_defaults() {
        let cfg = parse_config(GOOD).unwrap();
        assert_eq!(cfg.cells, 40);
        assert_eq!(cfg.eps_ex, 1.0);
        assert_eq!(cfg.fp_tol, 1e-13);
        assert_eq!(cfg.fp_maxiter, 200);
        assert_eq!(cfg.snapshot_stride, 200);
        assert_eq!(cfg.trace_csv, "trace.csv");
    }

    #[test]
    fn zero_steps_allowed() {
        let text = GOOD.replace("steps = 20000", "steps = 0");
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.steps, 0);
        assert_eq!(cfg.snapshot_stride, 1);
    }

    #[test]
    fn rejects_zero_dt_with_line_number() {
        let text = GOOD.replace("dt = 0.02", "dt = 0");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("line 5") && err.contains("dt"), "{err}");
    }

    #[test]
    fn rejects_unknown_key() {
        let err = parse_config(&format!("{GOOD}dy = 3\n")).unwrap_err().to_string();
        assert!(err.contains("unknown key") && err.contains("dy"), "{err}");
    }

    #[test]
    fn rejects_duplicate_key() {
        let err = parse_config(&format!("{GOOD}gamma = 1\n")).unwrap_err().to_string();
        assert!(err.contains("duplicate"), "{err}");
    }

    #[test]
    fn rejects_missing_required_key() {
        let text = GOOD.replace("gamma = 2.0\n", "");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("missing required key") && err.contains("gamma"), "{err}");
    }

    #[test]
    fn rejects_malformed_ic_term() {
        let text = GOOD.replace("ic = example1", "ic = cos:0.01:0.25pi-phase");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("line 8") && err.contains("ic"), "{err}");
    }

    #[test]
    fn parses_explicit_fourier_terms() {
        let text = GOOD.replace("ic = example1", "ic = cos:0.01:0.5, sin:0.002:2:1.5");
        let cfg = parse_config(&text).unwrap();
        match cfg.ic {
            IcSpec::Terms(ref t) => {
                assert_eq!(t.len(), 2);
                assert_eq!(t[0].kind, WaveKind::Cos);
                assert_eq!(t[1].phase, 1.5);
            }
            ref other => panic!("unexpected ic {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_scheme_small_k_and_nonnumeric() {
        for (from, to, needle) in [
            ("scheme = dynamic-central", "scheme = upwind", "unknown scheme"),
            ("K = 40", "K = 3", "at least 4"),
            ("gamma = 2.0", "gamma = fast", "not a number"),
            ("steps = 20000", "steps = -3", "non-negative"),
            ("L = 20", "L = -1", "positive"),
        ] {
            let text = GOOD.replace(from, to);
            let err = parse_config(&text).unwrap_err().to_string();
            assert!(err.contains(needle), "{from} -> {to}: {err}");
        }
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let text = format!("\n# full-line comment\n{GOOD}\nq = 1.0 # trailing\n");
        assert!(parse_config(&text).is_ok());
    }
}
