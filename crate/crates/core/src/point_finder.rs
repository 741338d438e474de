//! Explicit points of the limsup set by nested arcs.
//!
//! Level 1 takes the first index with `ℓ_n ≤ 1/n`. Level `k+1` scans forward
//! from `max(n_k, ⌈8/ℓ_{n_k}⌉) + 1` for the first `n` with `ℓ_n ≤ 1/n` and
//! `A(X_n, 1/n) ⊆ I_k`, where `I_k = A(X_{n_k}, ℓ_{n_k}/2)`. The arcs `I_k` are
//! then nested and the center of the deepest one lies in every `A(X_{n_k}, ℓ_{n_k})`.
//!
//! Lengths deep in a geometric sequence underflow `f64`; every arc keeps its
//! natural logarithm next to the (possibly zero) stored length.

use serde::{Deserialize, Serialize};

use crate::circle::{contains_raw, torus_distance, CirclePoint};
use crate::error::{invalid, Error};
use crate::rng::StreamKey;
use crate::sequence::LengthSequence;

/// Default number of candidates examined per level.
pub const DEFAULT_SEARCH_CAP: u64 = 10_000_000;

/// Gap constant in `n_{k+1} > max(n_k, 8/ℓ_{n_k})`.
const GAP: f64 = 8.0;

/// One nested arc `I_k = A(X_{n_k}, ℓ_{n_k}/2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifiedArc {
    pub index: u64,
    pub center: CirclePoint,
    /// `ℓ_{n_k}/2`; zero once it underflows.
    pub length: f64,
    /// `ln(ℓ_{n_k}/2)`, always finite.
    pub ln_length: f64,
    /// Endpoints `center ∓ length/2` reduced mod 1.
    pub endpoints: [f64; 2],
}

impl CertifiedArc {
    fn new(seq: &LengthSequence, key: StreamKey, index: u64) -> Result<Self, Error> {
        let center = key.center(index);
        let length = seq.eval(index)? / 2.0;
        let ln_length = seq.ln_eval(index)? - std::f64::consts::LN_2;
        let half = length / 2.0;
        let endpoints = [
            CirclePoint::new(center.position() - half).position(),
            CirclePoint::new(center.position() + half).position(),
        ];
        Ok(CertifiedArc { index, center, length, ln_length, endpoints })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestedCertificate {
    pub seed: u64,
    pub trial_index: u64,
    pub seq: LengthSequence,
    pub arcs: Vec<CertifiedArc>,
    /// Center of the deepest arc.
    pub point: Option<CirclePoint>,
    pub candidates_per_level: Vec<u64>,
}

impl NestedCertificate {
    pub fn depth(&self) -> usize {
        self.arcs.len()
    }

    pub fn indices(&self) -> Vec<u64> {
        self.arcs.iter().map(|a| a.index).collect()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FindPointError {
    #[error(transparent)]
    Invalid(#[from] Error),
    #[error("search cap of {cap} candidates exhausted at level {level}; the horizon was too small")]
    Exhausted {
        level: usize,
        cap: u64,
        partial: Box<NestedCertificate>,
    },
}

/// `ℓ_n ≤ 1/n`, decided on logarithms.
fn below_reciprocal(seq: &LengthSequence, n: u64) -> Result<bool, Error> {
    Ok(seq.ln_eval(n)? <= -(n as f64).ln())
}

/// First index allowed after level `n_k`: `max(n_k, ⌈8/ℓ_{n_k}⌉) + 1`.
fn next_start(seq: &LengthSequence, n_k: u64) -> Result<Option<u64>, Error> {
    let bound = (GAP.ln() - seq.ln_eval(n_k)?).exp().ceil();
    if !(bound < 9.0e18) {
        return Ok(None);
    }
    Ok(Some(n_k.max(bound as u64) + 1))
}

/// Nested-arc search of depth `depth` on the stream of `(seed, trial_index)`,
/// examining at most `search_cap` candidates per level.
pub fn find_point(
    seed: u64,
    trial_index: u64,
    seq: &LengthSequence,
    depth: usize,
    search_cap: u64,
) -> Result<NestedCertificate, FindPointError> {
    if depth == 0 {
        return Err(invalid("depth must be at least 1").into());
    }
    if search_cap == 0 {
        return Err(invalid("search cap must be at least 1").into());
    }
    let key = StreamKey::new(seed, trial_index);
    let last = seq.available().unwrap_or(u64::MAX);
    let mut cert = NestedCertificate {
        seed,
        trial_index,
        seq: seq.clone(),
        arcs: Vec::with_capacity(depth),
        point: None,
        candidates_per_level: Vec::with_capacity(depth),
    };
    let exhausted = |cert: NestedCertificate, level: usize| FindPointError::Exhausted {
        level,
        cap: search_cap,
        partial: Box::new(cert),
    };

    let mut examined = 0;
    let mut first = None;
    for n in 1..=search_cap.min(last) {
        examined += 1;
        if below_reciprocal(seq, n)? {
            first = Some(n);
            break;
        }
    }
    cert.candidates_per_level.push(examined);
    let Some(n1) = first else { return Err(exhausted(cert, 1)) };
    cert.arcs.push(CertifiedArc::new(seq, key, n1)?);

    while cert.arcs.len() < depth {
        let level = cert.arcs.len() + 1;
        let outer = cert.arcs.last().expect("level 1 is set").clone();
        let Some(start) = next_start(seq, outer.index)? else {
            cert.candidates_per_level.push(0);
            return Err(exhausted(cert, level));
        };
        let end = start.saturating_add(search_cap - 1).min(last);
        let mut found = None;
        let mut examined = 0;
        for n in start..=end {
            examined += 1;
            let candidate = key.center(n);
            if contains_raw(outer.center, outer.length, candidate, 1.0 / n as f64)
                && below_reciprocal(seq, n)?
            {
                found = Some(n);
                break;
            }
        }
        cert.candidates_per_level.push(examined);
        match found {
            Some(n) => cert.arcs.push(CertifiedArc::new(seq, key, n)?),
            None => return Err(exhausted(cert, level)),
        }
    }
    cert.point = cert.arcs.last().map(|a| a.center);
    Ok(cert)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CertificateError {
    #[error("certificate has no arcs or no point")]
    Empty,
    #[error("level {0}: stored arc does not match the replayed stream")]
    Replay(usize),
    #[error("level {0}: indices are not increasing past the 8/ℓ gap")]
    Gap(usize),
    #[error("level {0}: A(X_n, 1/n) is not inside the previous arc")]
    Containment(usize),
    #[error("level {0}: arc is not nested in the previous one")]
    Nesting(usize),
    #[error("level {0}: point is outside the closed arc")]
    Point(usize),
    #[error(transparent)]
    Sequence(#[from] Error),
}

/// Re-derives every arc from the certificate's seed, trial and sequence, and
/// re-checks the gap, containment, nesting and point conditions.
pub fn verify_certificate(cert: &NestedCertificate) -> Result<(), CertificateError> {
    let point = cert.point.ok_or(CertificateError::Empty)?;
    if cert.arcs.is_empty() {
        return Err(CertificateError::Empty);
    }
    let key = StreamKey::new(cert.seed, cert.trial_index);
    for (k, arc) in cert.arcs.iter().enumerate() {
        let level = k + 1;
        let n = arc.index;
        let center = key.center(n);
        let half_len = cert.seq.eval(n)? / 2.0;
        if center != arc.center || half_len != arc.length {
            return Err(CertificateError::Replay(level));
        }
        if k == 0 {
            if !below_reciprocal(&cert.seq, n)? {
                return Err(CertificateError::Replay(level));
            }
        } else {
            let prev = &cert.arcs[k - 1];
            let gap = GAP * (-cert.seq.ln_eval(prev.index)?).exp();
            if n <= prev.index || !(n as f64 > gap) {
                return Err(CertificateError::Gap(level));
            }
            if torus_distance(prev.center, center) + 0.5 / n as f64 > prev.length / 2.0 {
                return Err(CertificateError::Containment(level));
            }
            if torus_distance(prev.center, center) + arc.length / 2.0 > prev.length / 2.0 {
                return Err(CertificateError::Nesting(level));
            }
        }
        if torus_distance(arc.center, point) > arc.length / 2.0 {
            return Err(CertificateError::Point(level));
        }
    }
    Ok(())
}

/// Number of `n ≤ horizon` with `d(point, X_n) < ℓ_n/2`. Horizons past the end
/// of an explicit sequence stop at its last term.
pub fn verify_membership(
    point: CirclePoint,
    seed: u64,
    trial_index: u64,
    seq: &LengthSequence,
    horizon: u64,
) -> u64 {
    let key = StreamKey::new(seed, trial_index);
    let end = seq.available().map_or(horizon, |len| len.min(horizon));
    let mut hits = 0;
    for n in 1..=end {
        let d = torus_distance(point, key.center(n));
        let hit = match seq.eval(n) {
            Ok(l) if l > 0.0 => d < l / 2.0,
            Ok(_) => {
                d == 0.0 || seq.ln_eval(n).is_ok_and(|ln_l| d.ln() < ln_l - std::f64::consts::LN_2)
            }
            Err(_) => false,
        };
        hits += hit as u64;
    }
    hits
}
