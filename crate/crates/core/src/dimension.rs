//! Finite-scale size estimates for the limsup set `E_ℓ`.
//!
//! Dimension is estimated by ordinary least squares of `log₂ N_j` against the
//! dyadic level `j`, where `N_j` counts cells `[k 2^{-j}, (k+1) 2^{-j})` meeting
//! a finite surrogate of `E_ℓ`. Two surrogates are available:
//!
//! * [`Surrogate::TailUnion`]: one fixed tail union `∪_{n=m}^{N} A(X_n, ℓ_n)`
//!   counted at every level.
//! * [`Surrogate::ScaleShells`]: at level `j`, only the arcs (with `m ≤ n ≤ N`)
//!   whose length lies in `(2^{-j-1}, 2^{-j}]`, i.e. the part of the natural
//!   cover of `E_ℓ` living at that scale.
//!
//! A fixed tail union is dense at coarse scales and contains whole arcs at fine
//! scales, so its counts follow `(N - n_j) + 2^j Σ_{m ≤ n ≤ n_j} ℓ_n` with
//! `ℓ_{n_j} ≈ 2^{-j}`; for `ℓ_n = n^{-α}` its slope tends to `1 - 1/α`, which
//! only coincides with `1/α` at `α = 2`. Shell counts follow the number of arcs
//! per dyadic scale, `≈ 2^{j/α}`, and recover `1/α` for every `α`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle::{Arc, ArcSet, ArcUnion};
use crate::error::{invalid, Result};
use crate::gauge::GaugeFunction;
use crate::rng::StreamKey;
use crate::sequence::LengthSequence;
use crate::series::{classify_series_gauge, tail_gauge_sum, SeriesVerdict, TailEnd, DEFAULT_HORIZONS};
use crate::sim::{run_trial, TrialConfig, TrialResult};

/// Finest dyadic level accepted by the estimators.
pub const MAX_LEVEL: u32 = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelRange {
    pub min: u32,
    pub max: u32,
}

impl LevelRange {
    pub fn new(min: u32, max: u32) -> Result<Self> {
        if max > MAX_LEVEL {
            return Err(invalid(format!("dyadic levels are limited to j <= {MAX_LEVEL}, got {max}")));
        }
        if max < min + 2 {
            return Err(invalid(format!(
                "a dimension fit needs at least 3 levels, got {min}..={max}"
            )));
        }
        Ok(LevelRange { min, max })
    }

    pub fn levels(&self) -> impl Iterator<Item = u32> {
        self.min..=self.max
    }

    /// Scale band where the arcs `m..=horizon` resolve the set:
    /// `ceil(log₂ 1/ℓ_m) + 1 ..= floor(log₂ 1/ℓ_N) - 1`, capped at [`MAX_LEVEL`].
    pub fn scale_band(seq: &LengthSequence, m: u64, horizon: u64) -> Result<Self> {
        let log2_inv = |n: u64| -> Result<f64> { Ok(-seq.ln_eval(n)? / std::f64::consts::LN_2) };
        let lo = (log2_inv(m)?.ceil() + 1.0).max(0.0);
        let hi = (log2_inv(horizon)?.floor() - 1.0).min(MAX_LEVEL as f64);
        if hi < lo + 2.0 {
            return Err(invalid(format!(
                "scale band {lo}..={hi} for tail start {m} and horizon {horizon} has fewer than 3 levels"
            )));
        }
        LevelRange::new(lo as u32, hi as u32)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Surrogate {
    TailUnion,
    #[default]
    ScaleShells,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    /// Fitted slope clamped to `[0, 1]`.
    pub slope: f64,
    pub raw_slope: f64,
    pub levels: LevelRange,
    pub surrogate: Surrogate,
    /// `(j, N_j)` for every level in range.
    pub counts: Vec<(u32, u64)>,
    /// `(j, log₂ N_{j+1} - log₂ N_j)`.
    pub local_slopes: Vec<(u32, f64)>,
    pub residual_sum: f64,
    /// Set when the surrogate was empty at some level and the fit is meaningless.
    pub degenerate: bool,
}

/// Number of level-`j` dyadic cells meeting `s`.
pub fn box_count(s: &ArcSet, j: u32) -> u64 {
    assert!(j <= 62, "dyadic level {j} out of range");
    let scale = (1u64 << j) as f64;
    let mut count = 0u64;
    let mut next_free = 0u64;
    for iv in s.intervals() {
        let first = ((iv.start * scale).floor() as u64).max(next_free);
        let last = (iv.end * scale).ceil() as u64 - 1;
        if last >= first {
            count += last - first + 1;
            next_free = last + 1;
        }
    }
    count
}

/// OLS fit of `log₂ N_j` on `j`.
pub fn fit_counts(counts: Vec<(u32, u64)>, levels: LevelRange, surrogate: Surrogate) -> DimensionEstimate {
    let degenerate = counts.iter().any(|&(_, c)| c == 0);
    let local_slopes = counts
        .windows(2)
        .map(|w| (w[0].0, (w[1].1 as f64).log2() - (w[0].1 as f64).log2()))
        .collect();
    let (raw_slope, residual_sum) = if degenerate {
        (0.0, 0.0)
    } else {
        let xs: Vec<f64> = counts.iter().map(|&(j, _)| j as f64).collect();
        let ys: Vec<f64> = counts.iter().map(|&(_, c)| (c as f64).log2()).collect();
        let k = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let slope = sxy / sxx;
        let residuals: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - (my + slope * (x - mx))).powi(2))
            .sum();
        (slope, residuals)
    };
    DimensionEstimate {
        slope: raw_slope.clamp(0.0, 1.0),
        raw_slope,
        levels,
        surrogate,
        counts,
        local_slopes,
        residual_sum,
        degenerate,
    }
}

fn restrict(set: ArcSet, window: Option<&Arc>) -> ArcSet {
    match window {
        Some(w) if !w.is_full() => set.intersection(&w.to_set()),
        _ => set,
    }
}

/// Box-counting slope of a fixed set over `levels`, optionally restricted to `window`.
pub fn set_dimension(set: &ArcSet, window: Option<&Arc>, levels: LevelRange) -> DimensionEstimate {
    let restricted = restrict(set.clone(), window);
    let counts = levels.levels().map(|j| (j, box_count(&restricted, j))).collect();
    fit_counts(counts, levels, Surrogate::TailUnion)
}

/// Index range `lo..=hi` within `m..=horizon` of arcs with `2^{-j-1} < ℓ_n ≤ 2^{-j}`.
fn shell_indices(seq: &LengthSequence, m: u64, horizon: u64, j: u32) -> Result<Option<(u64, u64)>> {
    let upper = -(j as f64) * std::f64::consts::LN_2;
    let lower = upper - std::f64::consts::LN_2;
    // first index in [m, horizon+1] whose ln ℓ_n is <= bound (nonincreasing sequence)
    let first_at_most = |bound: f64| -> Result<u64> {
        let (mut lo, mut hi) = (m, horizon + 1);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if seq.ln_eval(mid)? <= bound {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Ok(lo)
    };
    let start = first_at_most(upper)?;
    let end = first_at_most(lower)?;
    Ok((start < end).then(|| (start, end - 1)))
}

/// Union of `A(X_n, ℓ_n)` for `n` in `lo..=hi`, replayed from the trial's stream.
fn replay_union(seq: &LengthSequence, key: StreamKey, lo: u64, hi: u64) -> Result<ArcSet> {
    let mut union = ArcUnion::new();
    for n in lo..=hi {
        union.insert_raw(key.unit(n), seq.eval(n)?);
    }
    Ok(union.to_arc_set())
}

fn shell_sets(cfg: &TrialConfig, m: u64, levels: LevelRange) -> Result<Vec<ArcSet>> {
    if m == 0 || m > cfg.horizon {
        return Err(invalid(format!("tail start {m} must lie in 1..={}", cfg.horizon)));
    }
    let key = StreamKey::new(cfg.seed, cfg.trial_index);
    levels
        .levels()
        .map(|j| match shell_indices(&cfg.seq, m, cfg.horizon, j)? {
            Some((lo, hi)) => replay_union(&cfg.seq, key, lo, hi),
            None => Ok(ArcSet::empty()),
        })
        .collect()
}

fn shell_estimate(cfg: &TrialConfig, m: u64, window: Option<&Arc>, levels: LevelRange) -> Result<DimensionEstimate> {
    let sets = shell_sets(cfg, m, levels)?;
    let counts = levels
        .levels()
        .zip(sets)
        .map(|(j, s)| (j, box_count(&restrict(s, window), j)))
        .collect();
    Ok(fit_counts(counts, levels, Surrogate::ScaleShells))
}

fn trial_config(result: &TrialResult) -> TrialConfig {
    TrialConfig::new(result.seed, result.seq.clone(), result.horizon).with_trial_index(result.trial_index)
}

fn resolve_levels(result: &TrialResult, m: u64, levels: Option<LevelRange>) -> Result<LevelRange> {
    match levels {
        Some(l) => Ok(l),
        None => LevelRange::scale_band(&result.seq, m, result.horizon),
    }
}

/// Dimension estimate of the limsup set of one trial from arcs `m..=N`,
/// restricted to `window` when given (cells are only counted inside it).
pub fn estimate_dimension(
    result: &TrialResult,
    m: u64,
    window: Option<&Arc>,
    levels: Option<LevelRange>,
    surrogate: Surrogate,
) -> Result<DimensionEstimate> {
    let levels = resolve_levels(result, m, levels)?;
    match surrogate {
        Surrogate::TailUnion => Ok(set_dimension(result.tail_union(m)?, window, levels)),
        Surrogate::ScaleShells => shell_estimate(&trial_config(result), m, window, levels),
    }
}

/// Dimension of `E¹ ∩ … ∩ Eᵏ` for `k` independent copies. Copy `i` uses trial
/// index `base.trial_index · k + i`, so `k = 1` reproduces the single-trial
/// estimate and distinct base indices never share streams.
pub fn intersection_experiment(
    base: &TrialConfig,
    copies: u64,
    m: u64,
    levels: Option<LevelRange>,
    surrogate: Surrogate,
) -> Result<DimensionEstimate> {
    if copies == 0 {
        return Err(invalid("intersection needs at least one copy"));
    }
    let results: Vec<TrialResult> = (0..copies)
        .map(|i| {
            let cfg = base
                .clone()
                .with_trial_index(base.trial_index * copies + i)
                .with_tail_starts(vec![m])
                .with_checkpoints(vec![]);
            run_trial(&cfg)
        })
        .collect::<Result<_>>()?;
    let levels = resolve_levels(&results[0], m, levels)?;
    let counts = match surrogate {
        Surrogate::TailUnion => {
            let mut common = results[0].tail_union(m)?.clone();
            for r in &results[1..] {
                common = common.intersection(r.tail_union(m)?);
            }
            levels.levels().map(|j| (j, box_count(&common, j))).collect()
        }
        Surrogate::ScaleShells => {
            let mut per_copy = results
                .iter()
                .map(|r| shell_sets(&trial_config(r), m, levels))
                .collect::<Result<Vec<_>>>()?;
            let mut common = per_copy.remove(0);
            for sets in per_copy {
                for (c, s) in common.iter_mut().zip(sets) {
                    *c = c.intersection(&s);
                }
            }
            levels.levels().zip(common).map(|(j, s)| (j, box_count(&s, j))).collect()
        }
    };
    Ok(fit_counts(counts, levels, surrogate))
}

/// Per-trial estimates over trials `0..trials` with their aggregate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionEnsemble {
    pub m: u64,
    pub levels: LevelRange,
    pub surrogate: Surrogate,
    /// Mean slope over non-degenerate trials (0 when all are degenerate).
    pub mean_slope: f64,
    pub sd_slope: f64,
    pub degenerate_trials: u64,
    /// `(j, mean N_j)` over all trials.
    pub mean_counts: Vec<(u32, f64)>,
    pub per_trial: Vec<DimensionEstimate>,
}

impl DimensionEnsemble {
    fn aggregate(m: u64, levels: LevelRange, surrogate: Surrogate, per_trial: Vec<DimensionEstimate>) -> Self {
        let slopes: Vec<f64> = per_trial.iter().filter(|e| !e.degenerate).map(|e| e.slope).collect();
        let k = slopes.len() as f64;
        let mean_slope = if slopes.is_empty() { 0.0 } else { slopes.iter().sum::<f64>() / k };
        let sd_slope = if slopes.len() < 2 {
            0.0
        } else {
            (slopes.iter().map(|s| (s - mean_slope).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
        };
        let trials = per_trial.len().max(1) as f64;
        let mean_counts = levels
            .levels()
            .enumerate()
            .map(|(i, j)| (j, per_trial.iter().map(|e| e.counts[i].1 as f64).sum::<f64>() / trials))
            .collect();
        DimensionEnsemble {
            m,
            levels,
            surrogate,
            mean_slope,
            sd_slope,
            degenerate_trials: per_trial.iter().filter(|e| e.degenerate).count() as u64,
            mean_counts,
            per_trial,
        }
    }
}

/// [`estimate_dimension`] over trials `0..trials` of `base`, in parallel.
pub fn dimension_ensemble(
    base: &TrialConfig,
    trials: u64,
    m: u64,
    window: Option<&Arc>,
    levels: Option<LevelRange>,
    surrogate: Surrogate,
) -> Result<DimensionEnsemble> {
    if trials == 0 {
        return Err(invalid("an ensemble needs at least one trial"));
    }
    base.validate()?;
    let levels = match levels {
        Some(l) => l,
        None => LevelRange::scale_band(&base.seq, m, base.horizon)?,
    };
    let per_trial = (0..trials)
        .into_par_iter()
        .map(|t| {
            let cfg = base.clone().with_trial_index(t);
            match surrogate {
                Surrogate::ScaleShells => shell_estimate(&cfg, m, window, levels),
                Surrogate::TailUnion => {
                    let r = run_trial(&cfg.with_tail_starts(vec![m]).with_checkpoints(vec![]))?;
                    estimate_dimension(&r, m, window, Some(levels), surrogate)
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DimensionEnsemble::aggregate(m, levels, surrogate, per_trial))
}

/// [`intersection_experiment`] for base trial indices `0..trials`, in parallel.
pub fn intersection_ensemble(
    base: &TrialConfig,
    trials: u64,
    copies: u64,
    m: u64,
    levels: Option<LevelRange>,
    surrogate: Surrogate,
) -> Result<DimensionEnsemble> {
    if trials == 0 {
        return Err(invalid("an ensemble needs at least one trial"));
    }
    base.validate()?;
    let levels = match levels {
        Some(l) => l,
        None => LevelRange::scale_band(&base.seq, m, base.horizon)?,
    };
    let per_trial = (0..trials)
        .into_par_iter()
        .map(|t| intersection_experiment(&base.clone().with_trial_index(t), copies, m, Some(levels), surrogate))
        .collect::<Result<Vec<_>>>()?;
    Ok(DimensionEnsemble::aggregate(m, levels, surrogate, per_trial))
}

/// Cover-based upper bound `H^g_δ(E_ℓ) ≤ Σ_{n ≥ n0} g(ℓ_n)` at scale `δ = ℓ_{n0}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeMeasureBound {
    pub gauge: GaugeFunction,
    pub n0: u64,
    pub covering_scale: f64,
    /// `None` when the gauge series diverges or is not analytically convergent.
    pub bound: Option<f64>,
    pub verdict: SeriesVerdict,
}

impl GaugeMeasureBound {
    pub fn is_finite(&self) -> bool {
        self.bound.is_some()
    }
}

/// The tail bound tends to 0 as `n0 → ∞` whenever it is finite, which is how the
/// `g`-measure of the limsup set vanishes on the convergent side.
pub fn gauge_measure_bound(seq: &LengthSequence, g: &GaugeFunction, n0: u64) -> Result<GaugeMeasureBound> {
    let verdict = classify_series_gauge(seq, g, &DEFAULT_HORIZONS)?;
    let bound = if verdict.is_convergent() && verdict.method == crate::series::Method::Analytic {
        Some(tail_gauge_sum(seq, g, n0, TailEnd::Infinite)?)
    } else {
        None
    };
    Ok(GaugeMeasureBound {
        gauge: g.clone(),
        n0,
        covering_scale: seq.eval(n0)?,
        bound,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::CirclePoint;
    use proptest::prelude::*;

    fn set(pairs: &[(f64, f64)]) -> ArcSet {
        ArcSet::from_intervals(pairs.iter().copied()).unwrap()
    }

    /// Brute-force oracle: test every cell of level j.
    fn brute_count(s: &ArcSet, j: u32) -> u64 {
        let cells = 1u64 << j;
        let h = 1.0 / cells as f64;
        (0..cells)
            .filter(|&k| {
                let (a, b) = (k as f64 * h, (k + 1) as f64 * h);
                s.intervals().iter().any(|iv| iv.start < b && a < iv.end)
            })
            .count() as u64
    }

    #[test]
    fn box_count_examples() {
        assert_eq!(box_count(&set(&[(0.0, 0.25)]), 2), 1);
        assert_eq!(box_count(&set(&[(0.1, 0.35)]), 2), 2);
        assert_eq!(brute_count(&set(&[(0.1, 0.35)]), 2), 2);
        for j in [0, 3, 10, 40] {
            assert_eq!(box_count(&ArcSet::full(), j), 1u64 << j);
        }
        assert_eq!(box_count(&ArcSet::empty(), 5), 0);
    }

    #[test]
    fn full_circle_has_slope_one() {
        let est = set_dimension(&ArcSet::full(), None, LevelRange::new(3, 20).unwrap());
        assert!((est.slope - 1.0).abs() < 1e-3);
        assert!(!est.degenerate);
    }

    #[test]
    fn tiny_arc_has_slope_zero() {
        let arc = Arc::new(CirclePoint::new(0.3), 2f64.powi(-30)).unwrap();
        let est = set_dimension(&arc.to_set(), None, LevelRange::new(4, 14).unwrap());
        assert!(est.counts.iter().all(|&(_, c)| c <= 2));
        assert!(est.slope.abs() < 0.05);
    }

    #[test]
    fn level_range_validation() {
        assert!(LevelRange::new(4, 5).is_err());
        assert!(LevelRange::new(4, 41).is_err());
        let band = LevelRange::scale_band(&LengthSequence::power_law(1.0, 2.0).unwrap(), 1000, 100_000).unwrap();
        // ℓ_1000 = 1e-6 (log₂ ≈ 19.93), ℓ_100000 = 1e-10 (log₂ ≈ 33.2)
        assert_eq!(band, LevelRange { min: 21, max: 32 });
    }

    #[test]
    fn empty_window_is_degenerate() {
        let s = set(&[(0.1, 0.2)]);
        let w = Arc::new(CirclePoint::new(0.6), 0.1).unwrap();
        let est = set_dimension(&s, Some(&w), LevelRange::new(2, 8).unwrap());
        assert!(est.degenerate);
        assert_eq!(est.slope, 0.0);
    }

    #[test]
    fn full_window_changes_nothing() {
        let s = set(&[(0.1, 0.2), (0.25, 0.26), (0.9, 1.0)]);
        let levels = LevelRange::new(2, 12).unwrap();
        assert_eq!(set_dimension(&s, Some(&Arc::full()), levels), set_dimension(&s, None, levels));
    }

    #[test]
    fn shell_indices_cover_dyadic_scales() {
        let seq = LengthSequence::power_law(1.0, 2.0).unwrap();
        // ℓ_n ∈ (2^{-11}, 2^{-10}] ⇔ n ∈ [32, 45]
        assert_eq!(shell_indices(&seq, 1, 1000, 10).unwrap(), Some((32, 45)));
        assert_eq!(shell_indices(&seq, 40, 1000, 10).unwrap(), Some((40, 45)));
        assert_eq!(shell_indices(&seq, 50, 1000, 10).unwrap(), None);
    }

    #[test]
    fn gauge_bound_examples() {
        let seq = LengthSequence::power_law(1.0, 2.0).unwrap();
        let finite = gauge_measure_bound(&seq, &GaugeFunction::monomial(0.6).unwrap(), 1).unwrap();
        assert!(finite.is_finite());
        let infinite = gauge_measure_bound(&seq, &GaugeFunction::monomial(0.4).unwrap(), 1).unwrap();
        assert!(!infinite.is_finite());
        assert!(infinite.verdict.is_divergent());
        let geo = LengthSequence::geometric(0.5).unwrap();
        let b = gauge_measure_bound(&geo, &GaugeFunction::Identity, 2).unwrap();
        assert!((b.bound.unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(b.covering_scale, 0.25);
    }

    #[test]
    fn single_copy_intersection_matches_single_trial() {
        let base = TrialConfig::new(5, LengthSequence::power_law(1.0, 2.0).unwrap(), 2000).with_trial_index(3);
        let r = run_trial(&base.clone().with_tail_starts(vec![20])).unwrap();
        for surrogate in [Surrogate::TailUnion, Surrogate::ScaleShells] {
            let single = estimate_dimension(&r, 20, None, None, surrogate).unwrap();
            assert_eq!(intersection_experiment(&base, 1, 20, None, surrogate).unwrap(), single);
        }
    }

    #[test]
    fn ensemble_agrees_with_single_trials() {
        let base = TrialConfig::new(8, LengthSequence::power_law(1.0, 1.5).unwrap(), 3000);
        let window = Arc::new(CirclePoint::new(0.3), 0.2).unwrap();
        for surrogate in [Surrogate::TailUnion, Surrogate::ScaleShells] {
            let ens = dimension_ensemble(&base, 3, 30, Some(&window), None, surrogate).unwrap();
            for (t, est) in ens.per_trial.iter().enumerate() {
                let r = run_trial(&base.clone().with_trial_index(t as u64).with_tail_starts(vec![30])).unwrap();
                assert_eq!(est, &estimate_dimension(&r, 30, Some(&window), None, surrogate).unwrap());
            }
        }
    }

    #[test]
    fn shells_partition_the_tail_union() {
        // the shells of one trial are subsets of its tail union
        let base = TrialConfig::new(1, LengthSequence::power_law(1.0, 2.0).unwrap(), 5000).with_tail_starts(vec![50]);
        let r = run_trial(&base).unwrap();
        let levels = LevelRange::scale_band(&base.seq, 50, 5000).unwrap();
        let tail = r.tail_union(50).unwrap();
        for s in shell_sets(&base, 50, levels).unwrap() {
            assert_eq!(s.intersection(tail), s);
        }
    }

    fn arb_set() -> impl Strategy<Value = ArcSet> {
        prop::collection::vec((0.0..1.0f64, 1e-5..0.3f64), 0..16).prop_map(|arcs| {
            let arcs: Vec<Arc> = arcs.iter().map(|&(c, l)| Arc::new(CirclePoint::new(c), l).unwrap()).collect();
            ArcSet::from_arcs(&arcs)
        })
    }

    proptest! {
        #[test]
        fn box_count_matches_brute_force(s in arb_set(), j in 0u32..=12) {
            prop_assert_eq!(box_count(&s, j), brute_count(&s, j));
        }

        #[test]
        fn counts_refine_monotonically(s in arb_set(), j in 0u32..30) {
            let (a, b) = (box_count(&s, j), box_count(&s, j + 1));
            prop_assert!(a <= b && b <= 2 * a);
            prop_assert!(a <= 1u64 << j);
            prop_assert!(a as f64 >= (s.measure() * (1u64 << j) as f64).ceil() - 1e-9);
        }
    }
}
