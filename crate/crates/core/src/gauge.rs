//! Gauge functions `g` for Hausdorff `g`-measures, with axiom checks and a
//! numeric proxy for the ordering `g1 ≺ g2` (`g1/g2` increases to infinity at 0).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::series::Method;
use crate::syntax::{parse_numbers, KeyValues};

/// Validation window for the gauge axioms, which only constrain `g` near zero.
pub const VALIDATION_MIN_R: f64 = 1e-12;
pub const VALIDATION_MAX_R: f64 = 0.5;
pub const VALIDATION_POINTS: usize = 256;

/// Minimum growth of `g1/g2` across the validation grid for `compare_gauges`
/// to report `g1 ≺ g2`.
pub const PRECEDENCE_FACTOR: f64 = 10.0;

const REL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum GaugeFunction {
    /// `r^s`, `0 < s ≤ 1`.
    Monomial { s: f64 },
    /// `r^s · (1 + ln(1/r))^{-beta}` for `r < 1`, `r^s` beyond.
    MonomialLog { s: f64, beta: f64 },
    /// `r`.
    Identity,
    /// Samples `(r, g(r))` with `r` strictly increasing, interpolated linearly
    /// in log-log space. Below the first sample the first segment's power law
    /// is continued; above the last sample `g` is undefined.
    Table { points: Vec<(f64, f64)> },
}

/// `g(r) ≍ r^s (ln 1/r)^{-beta}` as `r → 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct GaugeProfile {
    pub s: f64,
    pub beta: f64,
}

fn check_exponent(s: f64) -> Result<()> {
    if s > 0.0 && s <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!(
            "gauge exponent must satisfy 0 < s <= 1 (r^s/r must be nonincreasing), got {s}"
        )))
    }
}

impl GaugeFunction {
    pub fn monomial(s: f64) -> Result<Self> {
        check_exponent(s)?;
        Ok(GaugeFunction::Monomial { s })
    }

    pub fn monomial_log(s: f64, beta: f64) -> Result<Self> {
        check_exponent(s)?;
        if !beta.is_finite() {
            return Err(invalid(format!("beta must be finite, got {beta}")));
        }
        Ok(GaugeFunction::MonomialLog { s, beta })
    }

    pub fn table(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(invalid("gauge table needs at least two samples"));
        }
        for &(r, g) in &points {
            if !(r > 0.0 && r.is_finite() && g > 0.0 && g.is_finite()) {
                return Err(invalid(format!("gauge table sample ({r}, {g}) must be positive")));
            }
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(invalid("gauge table radii must be strictly increasing"));
        }
        Ok(GaugeFunction::Table { points })
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::Domain { r, reason: "gauges are defined on [0, inf)".into() });
        }
        if r == 0.0 {
            return Ok(0.0);
        }
        Ok(match self {
            GaugeFunction::Monomial { s } => r.powf(*s),
            GaugeFunction::MonomialLog { s, beta } => {
                if r < 1.0 {
                    r.powf(*s) * (1.0 - r.ln()).powf(-beta)
                } else {
                    r.powf(*s)
                }
            }
            GaugeFunction::Identity => r,
            GaugeFunction::Table { points } => return table_eval(points, r),
        })
    }

    /// `ln g(r)` for `r > 0`; stays finite where `g(r)` underflows.
    pub(crate) fn ln_eval(&self, ln_r: f64) -> Result<f64> {
        match self {
            GaugeFunction::Monomial { s } => Ok(s * ln_r),
            GaugeFunction::MonomialLog { s, beta } => {
                if ln_r < 0.0 {
                    Ok(s * ln_r - beta * (1.0 - ln_r).ln())
                } else {
                    Ok(s * ln_r)
                }
            }
            GaugeFunction::Identity => Ok(ln_r),
            GaugeFunction::Table { points } => {
                let (r0, g0) = points[0];
                if ln_r < r0.ln() {
                    Ok(g0.ln() + table_tail_exponent(points) * (ln_r - r0.ln()))
                } else {
                    Ok(table_eval(points, ln_r.exp())?.ln())
                }
            }
        }
    }

    /// Largest `r` at which the gauge is defined.
    pub fn domain_max(&self) -> f64 {
        match self {
            GaugeFunction::Table { points } => points[points.len() - 1].0,
            _ => f64::INFINITY,
        }
    }

    pub(crate) fn profile(&self) -> GaugeProfile {
        match self {
            GaugeFunction::Monomial { s } => GaugeProfile { s: *s, beta: 0.0 },
            GaugeFunction::MonomialLog { s, beta } => GaugeProfile { s: *s, beta: *beta },
            GaugeFunction::Identity => GaugeProfile { s: 1.0, beta: 0.0 },
            GaugeFunction::Table { points } => GaugeProfile { s: table_tail_exponent(points), beta: 0.0 },
        }
    }
}

fn table_tail_exponent(points: &[(f64, f64)]) -> f64 {
    let (r0, g0) = points[0];
    let (r1, g1) = points[1];
    (g1 / g0).ln() / (r1 / r0).ln()
}

fn table_eval(points: &[(f64, f64)], r: f64) -> Result<f64> {
    let last = points[points.len() - 1];
    if r > last.0 {
        return Err(Error::Domain {
            r,
            reason: format!("gauge table only covers r <= {}", last.0),
        });
    }
    let (r0, g0) = points[0];
    if r <= r0 {
        return Ok(g0 * (r / r0).powf(table_tail_exponent(points)));
    }
    let idx = points.partition_point(|&(x, _)| x < r);
    let (ra, ga) = points[idx - 1];
    let (rb, gb) = points[idx];
    if r == rb {
        return Ok(gb);
    }
    let t = (r / ra).ln() / (rb / ra).ln();
    Ok((ga.ln() + t * (gb / ga).ln()).exp())
}

/// Log-spaced grid on the validation window.
pub fn validation_grid() -> Vec<f64> {
    let (lo, hi) = (VALIDATION_MIN_R.ln(), VALIDATION_MAX_R.ln());
    let steps = (VALIDATION_POINTS - 1) as f64;
    (0..VALIDATION_POINTS)
        .map(|i| (lo + (hi - lo) * i as f64 / steps).exp())
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxiomViolation {
    Undefined,
    NotPositive,
    Decreasing,
    RatioIncreasing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeValidation {
    pub valid: bool,
    /// First violating pair `(r_i, r_{i+1})` on the grid, if any.
    pub violation: Option<(AxiomViolation, f64, f64)>,
}

/// Checks positivity, monotonicity of `g` and of `g(r)/r` on the validation grid.
pub fn validate_gauge(g: &GaugeFunction) -> GaugeValidation {
    let grid = validation_grid();
    let fail = |kind, a, b| GaugeValidation { valid: false, violation: Some((kind, a, b)) };
    let mut prev: Option<(f64, f64)> = None;
    for &r in &grid {
        let v = match g.eval(r) {
            Ok(v) if v > 0.0 => v,
            Ok(_) => return fail(AxiomViolation::NotPositive, r, r),
            Err(_) => return fail(AxiomViolation::Undefined, r, r),
        };
        if let Some((ra, ga)) = prev {
            if ga > v * (1.0 + REL_TOL) {
                return fail(AxiomViolation::Decreasing, ra, r);
            }
            if v / r > (ga / ra) * (1.0 + REL_TOL) {
                return fail(AxiomViolation::RatioIncreasing, ra, r);
            }
        }
        prev = Some((r, v));
    }
    GaugeValidation { valid: true, violation: None }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precedence {
    /// `g1 ≺ g2`: `g1/g2` increases to infinity at zero.
    FirstPrecedes,
    /// `g2 ≺ g1`.
    SecondPrecedes,
    /// Neither direction detected (includes equivalent gauges).
    Indistinct,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeComparison {
    pub verdict: Precedence,
    /// `(g1/g2)(r_min) / (g1/g2)(r_max)` over the validation grid.
    pub ratio_span: f64,
    pub method: Method,
}

/// Heuristic test of `g1 ≺ g2` / `g2 ≺ g1` from the ratio on the validation grid:
/// monotone growth towards 0 by at least [`PRECEDENCE_FACTOR`].
pub fn compare_gauges(g1: &GaugeFunction, g2: &GaugeFunction) -> Result<GaugeComparison> {
    let grid = validation_grid();
    let ratio = grid
        .iter()
        .map(|&r| Ok(g1.eval(r)? / g2.eval(r)?))
        .collect::<Result<Vec<f64>>>()?;
    let span = ratio[0] / ratio[ratio.len() - 1];
    // ratio[i] is at the smaller radius; "towards zero" means decreasing index
    let grows_toward_zero = ratio.windows(2).all(|w| w[0] >= w[1] * (1.0 - REL_TOL));
    let shrinks_toward_zero = ratio.windows(2).all(|w| w[0] <= w[1] * (1.0 + REL_TOL));
    let verdict = if grows_toward_zero && span >= PRECEDENCE_FACTOR {
        Precedence::FirstPrecedes
    } else if shrinks_toward_zero && span <= 1.0 / PRECEDENCE_FACTOR {
        Precedence::SecondPrecedes
    } else {
        Precedence::Indistinct
    };
    Ok(GaugeComparison { verdict, ratio_span: span, method: Method::NumericHeuristic })
}

impl fmt::Display for GaugeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GaugeFunction::Monomial { s } => write!(f, "monomial s={s}"),
            GaugeFunction::MonomialLog { s, beta } => write!(f, "monomiallog s={s} beta={beta}"),
            GaugeFunction::Identity => write!(f, "identity"),
            GaugeFunction::Table { points } => {
                let body: Vec<String> = points.iter().map(|(r, g)| format!("{r}:{g}")).collect();
                write!(f, "table points={}", body.join(","))
            }
        }
    }
}

impl FromStr for GaugeFunction {
    type Err = Error;

    /// Grammar: `[gauge] <family> key=value ...`; tables as `table r:g,r:g,...`
    /// or `table @path` (a file of `r g` pairs).
    fn from_str(s: &str) -> Result<Self> {
        let mut words: Vec<&str> = s.split_whitespace().collect();
        if words.first().is_some_and(|w| w.eq_ignore_ascii_case("gauge")) {
            words.remove(0);
        }
        let (family, rest) = words
            .split_first()
            .ok_or_else(|| Error::Parse("empty gauge text".into()))?;
        match family.to_ascii_lowercase().as_str() {
            "monomial" => {
                let kv = KeyValues::from_words(rest, &["s"])?;
                GaugeFunction::monomial(kv.require("s")?)
            }
            "monomiallog" => {
                let kv = KeyValues::from_words(rest, &["s", "beta"])?;
                GaugeFunction::monomial_log(kv.require("s")?, kv.get_or("beta", 0.0)?)
            }
            "identity" | "id" => {
                KeyValues::from_words(rest, &[])?;
                Ok(GaugeFunction::Identity)
            }
            "table" => {
                let body = rest.join(" ");
                let body = body.strip_prefix("points=").unwrap_or(&body);
                let numbers = if let Some(path) = body.strip_prefix('@') {
                    let text = std::fs::read_to_string(path)
                        .map_err(|e| Error::Parse(format!("cannot read '{path}': {e}")))?;
                    parse_numbers(&text)?
                } else {
                    parse_numbers(&body.replace(':', " "))?
                };
                if numbers.len() % 2 != 0 {
                    return Err(Error::Parse("gauge table needs (r, g) pairs".into()));
                }
                GaugeFunction::table(numbers.chunks(2).map(|c| (c[0], c[1])).collect())
            }
            other => Err(Error::Parse(format!(
                "unknown gauge family '{other}' (expected monomial, monomiallog, identity, table)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_is_valid() {
        assert!(validate_gauge(&GaugeFunction::monomial(0.5).unwrap()).valid);
        assert!(validate_gauge(&GaugeFunction::Identity).valid);
        assert!(validate_gauge(&GaugeFunction::monomial(1.0).unwrap()).valid);
    }

    #[test]
    fn exponent_above_one_rejected_at_construction() {
        assert!(GaugeFunction::monomial(1.5).is_err());
        assert!(GaugeFunction::monomial(0.0).is_err());
        assert!("monomial s=2".parse::<GaugeFunction>().is_err());
    }

    #[test]
    fn decreasing_table_is_invalid() {
        let g = GaugeFunction::table(vec![(0.1, 0.2), (0.2, 0.1)]).unwrap();
        let report = validate_gauge(&g);
        assert!(!report.valid);
        assert_eq!(report.violation.unwrap().0, AxiomViolation::Decreasing);
    }

    #[test]
    fn monomial_log_validity_depends_on_window() {
        // beta <= 0 keeps g(r)/r monotone on the whole window
        assert!(validate_gauge(&GaugeFunction::monomial_log(0.5, -0.2).unwrap()).valid);
        assert!(validate_gauge(&GaugeFunction::monomial_log(0.5, 0.3).unwrap()).valid);
        // at s = 1 a positive beta makes g(r)/r increase
        let bad = validate_gauge(&GaugeFunction::monomial_log(1.0, 1.0).unwrap());
        assert_eq!(bad.violation.unwrap().0, AxiomViolation::RatioIncreasing);
    }

    #[test]
    fn table_interpolates_in_log_log_space() {
        let g = GaugeFunction::table(vec![(1e-3, 1e-6), (1.0, 1.0)]).unwrap();
        for r in [1e-9, 1e-4, 0.03, 0.5, 1.0] {
            let v = g.eval(r).unwrap();
            assert!((v / (r * r) - 1.0).abs() < 1e-9, "r={r} v={v}");
        }
        assert!(matches!(g.eval(1.5), Err(Error::Domain { .. })));
        assert!((g.ln_eval(-100.0).unwrap() + 200.0).abs() < 1e-9);
    }

    #[test]
    fn compare_examples() {
        let m4 = GaugeFunction::monomial(0.4).unwrap();
        let m5 = GaugeFunction::monomial(0.5).unwrap();
        assert_eq!(compare_gauges(&m4, &m5).unwrap().verdict, Precedence::FirstPrecedes);
        assert_eq!(compare_gauges(&m5, &m4).unwrap().verdict, Precedence::SecondPrecedes);
        assert_eq!(compare_gauges(&m5, &m5).unwrap().verdict, Precedence::Indistinct);
        // Monomial(0.5)/Identity = r^{-1/2} grows at zero: Monomial(0.5) ≺ Identity
        let cmp = compare_gauges(&GaugeFunction::Identity, &m5).unwrap();
        assert_eq!(cmp.verdict, Precedence::SecondPrecedes);
        assert_eq!(cmp.method, Method::NumericHeuristic);
    }

    #[test]
    fn constant_multiples_are_indistinct() {
        let g = GaugeFunction::table(vec![(1e-13, 2e-13), (1.0, 2.0)]).unwrap();
        let cmp = compare_gauges(&g, &GaugeFunction::Identity).unwrap();
        assert_eq!(cmp.verdict, Precedence::Indistinct);
        assert!((cmp.ratio_span - 1.0).abs() < 1e-9);
    }

    #[test]
    fn parse_display_round_trip() {
        for text in ["monomial s=0.5", "monomiallog s=0.5 beta=1", "identity", "table points=0.001:0.000001,1:1"] {
            let g: GaugeFunction = text.parse().unwrap();
            assert_eq!(g.to_string().parse::<GaugeFunction>().unwrap(), g);
        }
        assert_eq!("gauge monomial s=0.5".parse::<GaugeFunction>().unwrap(), GaugeFunction::monomial(0.5).unwrap());
        assert!("identity s=1".parse::<GaugeFunction>().is_err());
        assert!("table 0.1:0.2,0.3".parse::<GaugeFunction>().is_err());
    }
}
