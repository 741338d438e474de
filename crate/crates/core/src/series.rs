//! Series criteria on a length sequence: `Σ ℓ_n`, Shepp's series
//! `Σ n^{-2} exp(ℓ_1 + … + ℓ_n)`, gauge series `Σ g(ℓ_n)` and the critical
//! exponent `s_ℓ`.
//!
//! Closed-form sequences are decided analytically by reducing to Bertrand
//! series `Σ n^{-p} (ln n)^{-γ}` (divergent iff `p < 1`, or `p = 1` and `γ ≤ 1`).
//! Explicit data only gets the finite-horizon heuristic, which may honestly
//! answer `Inconclusive`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gauge::GaugeFunction;
use crate::sequence::{Decay, LengthSequence};

/// Horizons used for partial sums when the caller has no preference.
pub const DEFAULT_HORIZONS: [u64; 3] = [10_000, 100_000, 1_000_000];

/// Minimum explicit-list length for the critical-exponent estimator.
pub const MIN_EXPLICIT_TERMS: usize = 64;

/// Increment decay factor below which the heuristic calls a series divergent.
const DIVERGENCE_DECAY_FACTOR: f64 = 2.0;
/// Relative growth beyond the first horizon below which it calls it convergent.
const CONVERGENCE_REL_GROWTH: f64 = 1e-6;

/// Tolerance on the Bertrand boundary `p = 1`, `γ = 1`.
const BOUNDARY_TOL: f64 = 1e-12;

/// Terms summed directly by `tail_gauge_sum` before the integral remainder.
const DIRECT_TERMS_END: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Analytic,
    NumericHeuristic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Divergent,
    Convergent,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesVerdict {
    pub verdict: Verdict,
    pub method: Method,
    /// `(N, S_N)` at each probed horizon.
    pub partial_sums: Vec<(u64, f64)>,
}

impl SeriesVerdict {
    pub fn is_divergent(&self) -> bool {
        self.verdict == Verdict::Divergent
    }

    pub fn is_convergent(&self) -> bool {
        self.verdict == Verdict::Convergent
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalExponent {
    pub value: f64,
    pub method: Method,
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// `s_ℓ = sup{s ∈ (0,1) : Σ ℓ_n^s = ∞}` with `sup ∅ = 0`.
pub fn critical_exponent(seq: &LengthSequence) -> Result<CriticalExponent> {
    let analytic = |value| Ok(CriticalExponent { value, method: Method::Analytic });
    match seq.decay() {
        Some(Decay::Polynomial { alpha, .. }) => analytic((1.0 / alpha).min(1.0)),
        Some(Decay::Geometric { .. }) => analytic(0.0),
        None => explicit_critical_exponent(seq),
    }
}

/// `limsup ln n / (-ln ℓ_n)` over the second half of the list.
fn explicit_critical_exponent(seq: &LengthSequence) -> Result<CriticalExponent> {
    let len = seq.available().unwrap_or(0);
    if (len as usize) < MIN_EXPLICIT_TERMS {
        return Err(Error::Inconclusive(format!(
            "critical exponent needs at least {MIN_EXPLICIT_TERMS} explicit terms, got {len}"
        )));
    }
    let mut best: f64 = 0.0;
    for n in (len / 2).max(2)..=len {
        let ln_l = seq.ln_eval(n)?;
        let ratio = if ln_l >= 0.0 { 1.0 } else { (n as f64).ln() / -ln_l };
        best = best.max(ratio);
    }
    Ok(CriticalExponent { value: best.clamp(0.0, 1.0), method: Method::NumericHeuristic })
}

/// Sorted, deduplicated horizons, clipped to the available explicit terms.
fn effective_horizons(seq: &LengthSequence, horizons: &[u64]) -> Vec<u64> {
    let mut hs: Vec<u64> = horizons
        .iter()
        .map(|&h| seq.available().map_or(h, |len| h.min(len)))
        .filter(|&h| h > 0)
        .collect();
    hs.sort_unstable();
    hs.dedup();
    hs
}

/// Partial sums of `term(n)`, `n = 1..`, recorded at each horizon.
fn partial_sums(
    horizons: &[u64],
    mut term: impl FnMut(u64) -> Result<f64>,
) -> Result<Vec<(u64, f64)>> {
    let mut acc = CompensatedSum::default();
    let mut out = Vec::with_capacity(horizons.len());
    let mut n = 0;
    for &h in horizons {
        while n < h {
            n += 1;
            acc.add(term(n)?);
        }
        out.push((h, acc.value()));
    }
    Ok(out)
}

/// Finite-horizon verdict from the last three partial sums `S_a ≤ S_b ≤ S_c`.
fn heuristic_verdict(partials: &[(u64, f64)]) -> Verdict {
    if partials.len() < 3 {
        return Verdict::Inconclusive;
    }
    let [(_, s1), (_, s2), (_, s3)] = [
        partials[partials.len() - 3],
        partials[partials.len() - 2],
        partials[partials.len() - 1],
    ];
    let (inc1, inc2) = (s2 - s1, s3 - s2);
    if s3 - s1 < CONVERGENCE_REL_GROWTH * s1 {
        Verdict::Convergent
    } else if inc2 * DIVERGENCE_DECAY_FACTOR > inc1 {
        Verdict::Divergent
    } else {
        Verdict::Inconclusive
    }
}

/// Bertrand rule for `Σ n^{-p} (ln n)^{-γ}`.
fn bertrand(p: f64, gamma: f64) -> Verdict {
    if p < 1.0 - BOUNDARY_TOL || ((p - 1.0).abs() <= BOUNDARY_TOL && gamma <= 1.0 + BOUNDARY_TOL) {
        Verdict::Divergent
    } else {
        Verdict::Convergent
    }
}

/// Shepp's covering series `Σ n^{-2} exp(ℓ_1 + … + ℓ_n)`; divergence means the
/// circle is covered almost surely.
pub fn shepp_test(seq: &LengthSequence, horizons: &[u64]) -> Result<SeriesVerdict> {
    let hs = effective_horizons(seq, horizons);
    let mut running = CompensatedSum::default();
    let partial_sums = partial_sums(&hs, |n| {
        running.add(seq.eval(n)?);
        Ok((running.value() - 2.0 * (n as f64).ln()).exp())
    })?;
    let analytic = match *seq {
        LengthSequence::Harmonic { c } => Some(c >= 1.0),
        LengthSequence::PowerLaw { .. } | LengthSequence::Geometric { .. } => Some(false),
        LengthSequence::PowerLog { a, alpha, beta } => Some(if alpha > 1.0 || beta > 0.0 {
            false
        } else if beta == 0.0 {
            a >= 1.0
        } else {
            // Σ ℓ_k grows like (ln n)^{1+|beta|}, faster than 2 ln n
            true
        }),
        LengthSequence::Explicit { .. } => None,
    };
    Ok(match analytic {
        Some(divergent) => SeriesVerdict {
            verdict: if divergent { Verdict::Divergent } else { Verdict::Convergent },
            method: Method::Analytic,
            partial_sums,
        },
        None => SeriesVerdict {
            verdict: heuristic_verdict(&partial_sums),
            method: Method::NumericHeuristic,
            partial_sums,
        },
    })
}

/// `(p, γ)` with `g(ℓ_n) ≍ n^{-p} (ln n)^{-γ}`, or `None` for geometric decay.
enum TermDecay {
    Bertrand { p: f64, gamma: f64 },
    Geometric { divergent: bool },
}

fn term_decay(seq: &LengthSequence, g: &GaugeFunction) -> Option<TermDecay> {
    let profile = g.profile();
    match seq.decay()? {
        Decay::Polynomial { alpha, beta } => Some(TermDecay::Bertrand {
            p: alpha * profile.s,
            gamma: profile.s * beta + profile.beta,
        }),
        // g(q^n) ≍ q^{ns} n^{-beta}: summable iff s > 0
        Decay::Geometric { .. } => Some(TermDecay::Geometric { divergent: profile.s <= 0.0 }),
    }
}

fn check_gauge_domain(seq: &LengthSequence, g: &GaugeFunction) -> Result<()> {
    let largest = seq.eval(1)?;
    if largest > g.domain_max() {
        return Err(Error::Domain {
            r: largest,
            reason: format!("gauge is only defined up to r = {}", g.domain_max()),
        });
    }
    Ok(())
}

fn analytic_gauge_verdict(seq: &LengthSequence, g: &GaugeFunction) -> Option<Verdict> {
    Some(match term_decay(seq, g)? {
        TermDecay::Bertrand { p, gamma } => bertrand(p, gamma),
        TermDecay::Geometric { divergent: true } => Verdict::Divergent,
        TermDecay::Geometric { divergent: false } => Verdict::Convergent,
    })
}

/// Verdict on `Σ g(ℓ_n)`: divergence puts the random limsup set at full
/// `g`-measure in every open set, convergence makes its `g`-measure zero.
pub fn classify_series_gauge(
    seq: &LengthSequence,
    g: &GaugeFunction,
    horizons: &[u64],
) -> Result<SeriesVerdict> {
    check_gauge_domain(seq, g)?;
    let hs = effective_horizons(seq, horizons);
    let partial_sums = partial_sums(&hs, |n| g.eval(seq.eval(n)?))?;
    Ok(match analytic_gauge_verdict(seq, g) {
        Some(verdict) => SeriesVerdict { verdict, method: Method::Analytic, partial_sums },
        None => SeriesVerdict {
            verdict: heuristic_verdict(&partial_sums),
            method: Method::NumericHeuristic,
            partial_sums,
        },
    })
}

/// Verdict on `Σ ℓ_n`, which decides the Lebesgue measure of the limsup set.
pub fn length_sum_test(seq: &LengthSequence, horizons: &[u64]) -> Result<SeriesVerdict> {
    classify_series_gauge(seq, &GaugeFunction::Identity, horizons)
}

/// Upper summation limit for [`tail_gauge_sum`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailEnd {
    Finite(u64),
    Infinite,
}

/// `Σ_{n=n0}^{N} g(ℓ_n)`. For `N = ∞` the series must be analytically
/// convergent; the sum is taken directly up to 10⁶ terms (or until the terms
/// stop registering) and the remainder is integrated from the asymptotic form.
pub fn tail_gauge_sum(seq: &LengthSequence, g: &GaugeFunction, n0: u64, end: TailEnd) -> Result<f64> {
    if n0 == 0 {
        return Err(invalid("tail sums start at n0 >= 1"));
    }
    match end {
        TailEnd::Finite(last) => {
            let mut acc = CompensatedSum::default();
            for n in n0..=last {
                acc.add(g.eval(seq.eval(n)?)?);
            }
            Ok(acc.value())
        }
        TailEnd::Infinite => infinite_tail(seq, g, n0),
    }
}

fn infinite_tail(seq: &LengthSequence, g: &GaugeFunction, n0: u64) -> Result<f64> {
    let decay = match (analytic_gauge_verdict(seq, g), term_decay(seq, g)) {
        (Some(Verdict::Convergent), Some(decay)) => decay,
        _ => {
            return Err(invalid(format!(
                "infinite tail of sum g(l_n) requires an analytically convergent series ({seq}; {g})"
            )))
        }
    };
    check_gauge_domain(seq, g)?;
    let last = n0.max(DIRECT_TERMS_END);
    let mut acc = CompensatedSum::default();
    let mut n = n0;
    while n <= last {
        let t = g.eval(seq.eval(n)?)?;
        acc.add(t);
        if matches!(decay, TermDecay::Geometric { .. }) && t <= acc.value() * 1e-18 {
            // geometric tail beyond here is below f64 resolution
            return Ok(acc.value());
        }
        n += 1;
    }
    let TermDecay::Bertrand { p, gamma } = decay else {
        return Ok(acc.value());
    };
    let ln_last_term = g.ln_eval(seq.ln_eval(last)?)?;
    Ok(acc.value() + bertrand_remainder(ln_last_term, last, p, gamma))
}

/// `Σ_{n > M} K n^{-p} (ln n)^{-γ}` by the midpoint integral from `M + 1/2`,
/// with `K` matched to the term at `M`.
fn bertrand_remainder(ln_term_at_m: f64, m: u64, p: f64, gamma: f64) -> f64 {
    let ln_m = (m as f64).ln();
    let ln_k = ln_term_at_m + p * ln_m + gamma * ln_m.ln();
    let y0 = (m as f64 + 0.5).ln();
    if (p - 1.0).abs() <= BOUNDARY_TOL {
        // ∫_{y0}^∞ K y^{-γ} dy
        return (ln_k + (1.0 - gamma) * y0.ln()).exp() / (gamma - 1.0);
    }
    // ∫_{y0}^∞ K e^{-λ y} y^{-γ} dy = K e^{-λ y0} / λ ∫_0^∞ e^{-v} (y0 + v/λ)^{-γ} dv
    let lambda = p - 1.0;
    let f = |v: f64| (-v).exp() * (y0 + v / lambda).powf(-gamma);
    let (upper, intervals) = (60.0, 6000);
    let h = upper / intervals as f64;
    let mut simpson = f(0.0) + f(upper);
    for i in 1..intervals {
        let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
        simpson += weight * f(i as f64 * h);
    }
    simpson *= h / 3.0;
    (ln_k - lambda * y0).exp() / lambda * simpson
}
