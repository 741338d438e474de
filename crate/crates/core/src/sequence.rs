//! Nonincreasing length sequences `ℓ_n → 0` driving the random arcs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::syntax::{format_list, KeyValues};

/// A length sequence, either a closed-form family or an explicit list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum LengthSequence {
    /// `a · n^{-alpha}`, `alpha > 1`.
    PowerLaw { a: f64, alpha: f64 },
    /// `c / n`.
    Harmonic { c: f64 },
    /// `a · n^{-alpha} · ln(n + e)^{-beta}`, `alpha ≥ 1`.
    PowerLog { a: f64, alpha: f64, beta: f64 },
    /// `q^n`, `0 < q < 1`.
    Geometric { q: f64 },
    /// `values[n - 1]`.
    Explicit { values: Vec<f64> },
}

/// Leading-order behaviour of a sequence as `n → ∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Decay {
    /// `ℓ_n ≍ n^{-alpha} (ln n)^{-beta}`.
    Polynomial { alpha: f64, beta: f64 },
    /// `ℓ_n = q^n`.
    Geometric { q: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

impl LengthSequence {
    pub fn power_law(a: f64, alpha: f64) -> Result<Self> {
        positive("a", a)?;
        if !(alpha > 1.0) || !alpha.is_finite() {
            return Err(invalid(format!("powerlaw requires alpha > 1, got {alpha}")));
        }
        Ok(LengthSequence::PowerLaw { a, alpha })
    }

    pub fn harmonic(c: f64) -> Result<Self> {
        positive("c", c)?;
        Ok(LengthSequence::Harmonic { c })
    }

    pub fn power_log(a: f64, alpha: f64, beta: f64) -> Result<Self> {
        positive("a", a)?;
        if !(alpha >= 1.0) || !alpha.is_finite() {
            return Err(invalid(format!("powerlog requires alpha >= 1, got {alpha}")));
        }
        if !beta.is_finite() {
            return Err(invalid(format!("powerlog requires a finite beta, got {beta}")));
        }
        let seq = LengthSequence::PowerLog { a, alpha, beta };
        // A growing log factor can only beat n^{-alpha} for small n; the worst
        // case sits near n = 6, well inside the first 64 terms.
        if beta < 0.0 {
            seq.check_nonincreasing(64)?;
        }
        Ok(seq)
    }

    pub fn geometric(q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(invalid(format!("geometric requires 0 < q < 1, got {q}")));
        }
        Ok(LengthSequence::Geometric { q })
    }

    pub fn explicit(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("explicit sequence must not be empty"));
        }
        for (i, &v) in values.iter().enumerate() {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(format!("explicit entry {} must be positive, got {v}", i + 1)));
            }
        }
        let seq = LengthSequence::Explicit { values };
        seq.check_nonincreasing(usize::MAX)?;
        Ok(seq)
    }

    /// Checks `ℓ_{n+1} ≤ ℓ_n` for the first `upto` terms (the whole list for explicit data).
    pub fn check_nonincreasing(&self, upto: usize) -> Result<()> {
        let last = self.available().map_or(upto as u64, |len| len.min(upto as u64));
        let mut prev = self.eval(1)?;
        for n in 2..=last {
            let cur = self.eval(n)?;
            if cur > prev {
                return Err(invalid(format!(
                    "sequence is not nonincreasing: l_{} = {prev} < l_{n} = {cur}",
                    n - 1
                )));
            }
            prev = cur;
        }
        Ok(())
    }

    /// Number of available terms for explicit data; `None` for closed forms.
    pub fn available(&self) -> Option<u64> {
        match self {
            LengthSequence::Explicit { values } => Some(values.len() as u64),
            _ => None,
        }
    }

    pub fn is_closed_form(&self) -> bool {
        !matches!(self, LengthSequence::Explicit { .. })
    }

    /// `ℓ_n` for `n ≥ 1`.
    pub fn eval(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(invalid("sequence index starts at 1"));
        }
        let x = n as f64;
        Ok(match *self {
            LengthSequence::PowerLaw { a, alpha } => a * x.powf(-alpha),
            LengthSequence::Harmonic { c } => c / x,
            LengthSequence::PowerLog { a, alpha, beta } => {
                a * x.powf(-alpha) * (x + std::f64::consts::E).ln().powf(-beta)
            }
            LengthSequence::Geometric { q } => q.powf(x),
            LengthSequence::Explicit { ref values } => {
                return values
                    .get((n - 1) as usize)
                    .copied()
                    .ok_or(Error::OutOfRange { index: n, len: values.len() })
            }
        })
    }

    /// `ln ℓ_n`, finite even where `ℓ_n` underflows (e.g. `q^n` for large `n`).
    pub fn ln_eval(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(invalid("sequence index starts at 1"));
        }
        let x = n as f64;
        Ok(match *self {
            LengthSequence::PowerLaw { a, alpha } => a.ln() - alpha * x.ln(),
            LengthSequence::Harmonic { c } => c.ln() - x.ln(),
            LengthSequence::PowerLog { a, alpha, beta } => {
                a.ln() - alpha * x.ln() - beta * (x + std::f64::consts::E).ln().ln()
            }
            LengthSequence::Geometric { q } => x * q.ln(),
            LengthSequence::Explicit { .. } => self.eval(n)?.ln(),
        })
    }

    /// First `count` terms `ℓ_1..ℓ_count`.
    pub fn terms(&self, count: u64) -> Result<Vec<f64>> {
        (1..=count).map(|n| self.eval(n)).collect()
    }

    pub(crate) fn decay(&self) -> Option<Decay> {
        match *self {
            LengthSequence::PowerLaw { alpha, .. } => Some(Decay::Polynomial { alpha, beta: 0.0 }),
            LengthSequence::Harmonic { .. } => Some(Decay::Polynomial { alpha: 1.0, beta: 0.0 }),
            LengthSequence::PowerLog { alpha, beta, .. } => Some(Decay::Polynomial { alpha, beta }),
            LengthSequence::Geometric { q } => Some(Decay::Geometric { q }),
            LengthSequence::Explicit { .. } => None,
        }
    }

    /// Returns a copy with one named parameter replaced (used by parameter sweeps).
    pub fn with_param(&self, key: &str, value: f64) -> Result<Self> {
        let mut text = self.to_string();
        let kv = KeyValues::parse(&text, &["a", "alpha", "c", "beta", "q"])?;
        if !kv.has(key) {
            return Err(invalid(format!("sequence '{text}' has no parameter '{key}'")));
        }
        text = kv.with(key, value).render();
        text.parse()
    }
}

impl fmt::Display for LengthSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LengthSequence::PowerLaw { a, alpha } => write!(f, "powerlaw a={a} alpha={alpha}"),
            LengthSequence::Harmonic { c } => write!(f, "harmonic c={c}"),
            LengthSequence::PowerLog { a, alpha, beta } => {
                write!(f, "powerlog a={a} alpha={alpha} beta={beta}")
            }
            LengthSequence::Geometric { q } => write!(f, "geometric q={q}"),
            LengthSequence::Explicit { values } => write!(f, "explicit values={}", format_list(values)),
        }
    }
}

impl FromStr for LengthSequence {
    type Err = Error;

    /// Grammar: `<family> key=value ...`; `explicit` also accepts a bare comma
    /// list or `@path` (whitespace/comma separated numbers).
    fn from_str(s: &str) -> Result<Self> {
        let mut words = s.split_whitespace();
        let family = words.next().ok_or_else(|| Error::Parse("empty sequence text".into()))?;
        let rest: Vec<&str> = words.collect();
        match family.to_ascii_lowercase().as_str() {
            "powerlaw" => {
                let kv = KeyValues::from_words(&rest, &["a", "alpha"])?;
                LengthSequence::power_law(kv.get_or("a", 1.0)?, kv.require("alpha")?)
            }
            "harmonic" => {
                let kv = KeyValues::from_words(&rest, &["c"])?;
                LengthSequence::harmonic(kv.get_or("c", 1.0)?)
            }
            "powerlog" => {
                let kv = KeyValues::from_words(&rest, &["a", "alpha", "beta"])?;
                LengthSequence::power_log(
                    kv.get_or("a", 1.0)?,
                    kv.require("alpha")?,
                    kv.get_or("beta", 0.0)?,
                )
            }
            "geometric" => {
                let kv = KeyValues::from_words(&rest, &["q"])?;
                LengthSequence::geometric(kv.require("q")?)
            }
            "explicit" => {
                let body = rest.join(" ");
                let body = body.strip_prefix("values=").unwrap_or(&body);
                let values = if let Some(path) = body.strip_prefix('@') {
                    let text = std::fs::read_to_string(path)
                        .map_err(|e| Error::Parse(format!("cannot read '{path}': {e}")))?;
                    crate::syntax::parse_numbers(&text)?
                } else {
                    crate::syntax::parse_numbers(body)?
                };
                LengthSequence::explicit(values)
            }
            other => Err(Error::Parse(format!(
                "unknown sequence family '{other}' (expected powerlaw, harmonic, powerlog, geometric, explicit)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_examples() {
        let pl = LengthSequence::power_law(1.0, 2.0).unwrap();
        assert!((pl.eval(10).unwrap() - 0.01).abs() < 1e-15);
        assert_eq!(LengthSequence::harmonic(1.0).unwrap().eval(4).unwrap(), 0.25);
        assert_eq!(LengthSequence::geometric(0.5).unwrap().eval(3).unwrap(), 0.125);
    }

    #[test]
    fn explicit_out_of_range() {
        let s = LengthSequence::explicit(vec![0.5, 0.25]).unwrap();
        assert_eq!(s.eval(2).unwrap(), 0.25);
        assert_eq!(s.eval(3), Err(Error::OutOfRange { index: 3, len: 2 }));
    }

    #[test]
    fn constructors_enforce_constraints() {
        assert!(LengthSequence::power_law(1.0, 1.0).is_err());
        assert!(LengthSequence::power_law(0.0, 2.0).is_err());
        assert!(LengthSequence::harmonic(-1.0).is_err());
        assert!(LengthSequence::geometric(1.0).is_err());
        assert!(LengthSequence::power_log(1.0, 0.9, 0.0).is_err());
        assert!(LengthSequence::explicit(vec![0.1, 0.2]).is_err());
        assert!(LengthSequence::explicit(vec![0.1, 0.0]).is_err());
        // a growing log factor beats n^{-1} for small n when |beta| is large
        assert!(LengthSequence::power_log(1.0, 1.0, -10.0).is_err());
        assert!(LengthSequence::power_log(1.0, 1.0, -1.0).is_ok());
    }

    #[test]
    fn ln_eval_survives_underflow() {
        let g = LengthSequence::geometric(0.5).unwrap();
        assert_eq!(g.eval(2000).unwrap(), 0.0);
        let ln = g.ln_eval(2000).unwrap();
        assert!((ln - 2000.0 * 0.5f64.ln()).abs() < 1e-9);
        let pl = LengthSequence::power_log(2.0, 1.5, 0.7).unwrap();
        assert!((pl.ln_eval(37).unwrap() - pl.eval(37).unwrap().ln()).abs() < 1e-12);
    }

    #[test]
    fn parse_and_display_round_trip() {
        for text in [
            "powerlaw a=1 alpha=2",
            "harmonic c=1.5",
            "powerlog a=0.5 alpha=1 beta=2",
            "geometric q=0.5",
            "explicit values=0.5,0.25,0.125",
        ] {
            let seq: LengthSequence = text.parse().unwrap();
            assert_eq!(seq.to_string(), text);
            assert_eq!(seq.to_string().parse::<LengthSequence>().unwrap(), seq);
        }
        let bare: LengthSequence = "explicit 0.3, 0.2,0.1".parse().unwrap();
        assert_eq!(bare, LengthSequence::explicit(vec![0.3, 0.2, 0.1]).unwrap());
    }

    #[test]
    fn parse_errors_name_the_problem() {
        let err = "powerlaw a=1 alpha=0.5".parse::<LengthSequence>().unwrap_err();
        assert!(err.to_string().contains("alpha > 1"), "{err}");
        assert!("circle r=1".parse::<LengthSequence>().is_err());
        assert!("harmonic c=1 d=2".parse::<LengthSequence>().is_err());
        assert!("harmonic c=abc".parse::<LengthSequence>().is_err());
    }

    #[test]
    fn with_param_replaces_value() {
        let s: LengthSequence = "powerlaw a=1 alpha=2".parse().unwrap();
        assert_eq!(s.with_param("alpha", 3.0).unwrap(), LengthSequence::power_law(1.0, 3.0).unwrap());
        assert!(s.with_param("q", 0.5).is_err());
    }
}
