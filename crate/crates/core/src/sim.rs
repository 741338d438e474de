//! Seeded Monte Carlo coverage of the circle by the arcs `A(X_n, ℓ_n)`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle::{ArcSet, ArcUnion};
use crate::error::{invalid, Error, Result};
use crate::rng::StreamKey;
use crate::sequence::LengthSequence;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub seed: u64,
    pub trial_index: u64,
    pub seq: LengthSequence,
    pub horizon: u64,
    /// Stages at which the uncovered measure is recorded (0 = before any arc).
    pub checkpoints: Vec<u64>,
    /// Starts `m` of the recorded tail unions `∪_{n=m}^{horizon} A(X_n, ℓ_n)`.
    pub tail_starts: Vec<u64>,
}

/// Powers of two up to `horizon`, followed by `horizon` itself.
pub fn default_checkpoints(horizon: u64) -> Vec<u64> {
    let mut points: Vec<u64> = std::iter::successors(Some(1u64), |&p| p.checked_mul(2))
        .take_while(|&p| p <= horizon)
        .collect();
    if points.last() != Some(&horizon) && horizon > 0 {
        points.push(horizon);
    }
    points
}

impl TrialConfig {
    pub fn new(seed: u64, seq: LengthSequence, horizon: u64) -> Self {
        TrialConfig {
            seed,
            trial_index: 0,
            seq,
            horizon,
            checkpoints: default_checkpoints(horizon),
            tail_starts: vec![1],
        }
    }

    pub fn with_trial_index(mut self, trial_index: u64) -> Self {
        self.trial_index = trial_index;
        self
    }

    pub fn with_checkpoints(mut self, checkpoints: Vec<u64>) -> Self {
        self.checkpoints = checkpoints;
        self
    }

    pub fn with_tail_starts(mut self, tail_starts: Vec<u64>) -> Self {
        self.tail_starts = tail_starts;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(invalid("horizon must be at least 1"));
        }
        if let Some(len) = self.seq.available() {
            if self.horizon > len {
                return Err(invalid(format!(
                    "horizon {} exceeds the {len} explicit sequence terms",
                    self.horizon
                )));
            }
        }
        if let Some(&c) = self.checkpoints.iter().find(|&&c| c > self.horizon) {
            return Err(invalid(format!("checkpoint {c} exceeds horizon {}", self.horizon)));
        }
        if let Some(&m) = self.tail_starts.iter().find(|&&m| m == 0 || m > self.horizon) {
            return Err(invalid(format!(
                "tail start {m} must lie in 1..={}",
                self.horizon
            )));
        }
        Ok(())
    }

    fn lengths(&self) -> Result<Vec<f64>> {
        self.seq.terms(self.horizon)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub seed: u64,
    pub trial_index: u64,
    pub seq: LengthSequence,
    pub horizon: u64,
    /// First stage `N` at which `∪_{n≤N} A(X_n, ℓ_n)` is the whole circle.
    pub first_cover_n: Option<u64>,
    /// `(N, uncovered measure after N arcs)` at each checkpoint.
    pub uncovered_curve: Vec<(u64, f64)>,
    pub tail_unions: BTreeMap<u64, ArcSet>,
}

impl TrialResult {
    pub fn tail_union(&self, m: u64) -> Result<&ArcSet> {
        self.tail_unions.get(&m).ok_or(Error::NotFound(m))
    }

    /// Largest recorded tail start: the closest finite stand-in for the limsup set.
    pub fn deepest_tail(&self) -> Option<u64> {
        self.tail_unions.keys().next_back().copied()
    }

    pub fn final_uncovered(&self) -> f64 {
        self.uncovered_curve.last().map_or(1.0, |&(_, u)| u)
    }
}

/// Recorded tail union `∪_{n=m}^{N} A(X_n, ℓ_n)` of a trial.
pub fn tail_union(result: &TrialResult, m: u64) -> Result<&ArcSet> {
    result.tail_union(m)
}

pub fn run_trial(config: &TrialConfig) -> Result<TrialResult> {
    config.validate()?;
    run_with_lengths(config, &config.lengths()?)
}

fn run_with_lengths(config: &TrialConfig, lengths: &[f64]) -> Result<TrialResult> {
    let key = StreamKey::new(config.seed, config.trial_index);
    let mut checkpoints = config.checkpoints.clone();
    checkpoints.sort_unstable();
    checkpoints.dedup();
    let mut tail_starts = config.tail_starts.clone();
    tail_starts.sort_unstable();
    tail_starts.dedup();

    let mut cover = ArcUnion::new();
    let mut tails: Vec<(u64, ArcUnion)> = tail_starts
        .iter()
        .filter(|&&m| m > 1)
        .map(|&m| (m, ArcUnion::new()))
        .collect();
    let mut first_cover_n = None;
    let mut curve = Vec::with_capacity(checkpoints.len());
    let mut next_checkpoint = checkpoints.iter().peekable();
    let mut last_uncovered = 1.0f64;

    while next_checkpoint.next_if(|&&c| c == 0).is_some() {
        curve.push((0, 1.0));
    }
    for n in 1..=config.horizon {
        let x = key.unit(n);
        let length = lengths[(n - 1) as usize];
        if first_cover_n.is_none() {
            cover.insert_raw(x, length);
            if cover.is_full() {
                first_cover_n = Some(n);
            }
        }
        for (m, union) in tails.iter_mut() {
            if *m <= n {
                union.insert_raw(x, length);
            }
        }
        while next_checkpoint.next_if(|&&c| c == n).is_some() {
            // the running minimum only absorbs last-ulp rounding between gap sums
            let uncovered = if cover.is_full() { 0.0 } else { cover.uncovered_measure() };
            last_uncovered = last_uncovered.min(uncovered);
            curve.push((n, last_uncovered));
        }
    }

    let mut tail_unions: BTreeMap<u64, ArcSet> =
        tails.iter().map(|(m, u)| (*m, u.to_arc_set())).collect();
    if tail_starts.first() == Some(&1) {
        tail_unions.insert(1, cover.to_arc_set());
    }
    Ok(TrialResult {
        seed: config.seed,
        trial_index: config.trial_index,
        seq: config.seq.clone(),
        horizon: config.horizon,
        first_cover_n,
        uncovered_curve: curve,
        tail_unions,
    })
}

/// Runs trials `0..trials` of `base` in parallel; results are in index order.
pub fn run_trials(base: &TrialConfig, trials: u64) -> Result<Vec<TrialResult>> {
    base.validate()?;
    let lengths = base.lengths()?;
    (0..trials)
        .into_par_iter()
        .map(|t| run_with_lengths(&base.clone().with_trial_index(t), &lengths))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial_index: u64,
    pub first_cover_n: Option<u64>,
    pub final_uncovered: f64,
    pub uncovered_curve: Vec<(u64, f64)>,
    /// `(m, measure of the tail union from m)`.
    pub tail_measures: Vec<(u64, f64)>,
}

impl From<&TrialResult> for TrialSummary {
    fn from(r: &TrialResult) -> Self {
        TrialSummary {
            trial_index: r.trial_index,
            first_cover_n: r.first_cover_n,
            final_uncovered: r.final_uncovered(),
            uncovered_curve: r.uncovered_curve.clone(),
            tail_measures: r.tail_unions.iter().map(|(&m, s)| (m, s.measure())).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub min: f64,
    pub q10: f64,
    pub median: f64,
    pub q90: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl Quantiles {
    fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(Quantiles {
            min: sorted[0],
            q10: quantile(&sorted, 0.1),
            median: quantile(&sorted, 0.5),
            q90: quantile(&sorted, 0.9),
            max: sorted[sorted.len() - 1],
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub seed: u64,
    pub seq: LengthSequence,
    pub horizon: u64,
    pub trials: u64,
    pub covered_trials: u64,
    pub coverage_fraction: f64,
    /// Over covered trials only.
    pub first_cover_mean: Option<f64>,
    pub first_cover_quantiles: Option<Quantiles>,
    pub mean_uncovered: Vec<(u64, f64)>,
    pub mean_tail_measure: Vec<(u64, f64)>,
    pub per_trial: Vec<TrialSummary>,
}

impl EnsembleStats {
    /// Aggregates summaries given in trial-index order.
    pub fn from_summaries(base: &TrialConfig, per_trial: Vec<TrialSummary>) -> Self {
        let trials = per_trial.len() as u64;
        let covers: Vec<f64> = per_trial
            .iter()
            .filter_map(|s| s.first_cover_n.map(|n| n as f64))
            .collect();
        let covered_trials = covers.len() as u64;
        let mean_at = |values: Vec<f64>| values.iter().sum::<f64>() / values.len().max(1) as f64;
        EnsembleStats {
            seed: base.seed,
            seq: base.seq.clone(),
            horizon: base.horizon,
            trials,
            covered_trials,
            coverage_fraction: covered_trials as f64 / trials.max(1) as f64,
            first_cover_mean: (!covers.is_empty()).then(|| mean_at(covers.clone())),
            first_cover_quantiles: Quantiles::of(&covers),
            mean_uncovered: per_trial
                .first()
                .map(|s| {
                    s.uncovered_curve
                        .iter()
                        .enumerate()
                        .map(|(i, &(n, _))| {
                            (n, mean_at(per_trial.iter().map(|t| t.uncovered_curve[i].1).collect()))
                        })
                        .collect()
                })
                .unwrap_or_default(),
            mean_tail_measure: per_trial
                .first()
                .map(|s| {
                    s.tail_measures
                        .iter()
                        .enumerate()
                        .map(|(i, &(m, _))| {
                            (m, mean_at(per_trial.iter().map(|t| t.tail_measures[i].1).collect()))
                        })
                        .collect()
                })
                .unwrap_or_default(),
            per_trial,
        }
    }
}

/// `trials` independent trials (indices `0..trials`) aggregated in index order.
pub fn run_ensemble(base: &TrialConfig, trials: u64) -> Result<EnsembleStats> {
    if trials == 0 {
        return Err(invalid("an ensemble needs at least one trial"));
    }
    base.validate()?;
    let lengths = base.lengths()?;
    let per_trial: Vec<TrialSummary> = (0..trials)
        .into_par_iter()
        .map(|t| Ok(TrialSummary::from(&run_with_lengths(&base.clone().with_trial_index(t), &lengths)?)))
        .collect::<Result<_>>()?;
    Ok(EnsembleStats::from_summaries(base, per_trial))
}
