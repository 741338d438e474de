//! Points, arcs and finite unions of arcs on the circle `R/Z`.
//!
//! Everything here is exact in the sense that matters for coverage: endpoints
//! are compared without tolerance and unions/complements only ever copy
//! endpoints, never recompute them. Sets are stored as sorted, pairwise
//! disjoint, non-adjacent half-open intervals `[a, b)` inside `[0, 1]`; an arc
//! straddling `0 ≡ 1` is stored as the pair `[0, b)`, `[a, 1)`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Reduce a real number to its representative in `[0, 1)`.
fn reduce(x: f64) -> f64 {
    let r = x - x.floor();
    // `x - floor(x)` rounds up to 1.0 for tiny negative x; `+ 0.0` clears -0.0.
    if r >= 1.0 {
        0.0
    } else {
        r + 0.0
    }
}

/// A point of the circle, stored as its coordinate in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CirclePoint(f64);

impl CirclePoint {
    /// Reduces `x` modulo 1. Panics on non-finite input.
    pub fn new(x: f64) -> Self {
        assert!(x.is_finite(), "circle coordinate must be finite, got {x}");
        CirclePoint(reduce(x))
    }

    pub fn position(self) -> f64 {
        self.0
    }

    pub fn distance(self, other: CirclePoint) -> f64 {
        torus_distance(self, other)
    }
}

impl fmt::Display for CirclePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Quotient distance on `R/Z`, always in `[0, 1/2]`.
pub fn torus_distance(x: CirclePoint, y: CirclePoint) -> f64 {
    let d = (x.0 - y.0).abs();
    d.min(1.0 - d)
}

/// The open arc `A(x, l)`: points at distance `< l/2` from the center.
/// Lengths above 1 are clamped to 1, which denotes the whole circle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    center: CirclePoint,
    length: f64,
}

impl Arc {
    pub fn new(center: CirclePoint, length: f64) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(invalid(format!("arc length must be positive and finite, got {length}")));
        }
        Ok(Arc { center, length: length.min(1.0) })
    }

    /// The whole circle, as an arc of length 1 centered at 0.
    pub fn full() -> Self {
        Arc { center: CirclePoint(0.0), length: 1.0 }
    }

    pub fn center(&self) -> CirclePoint {
        self.center
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn is_full(&self) -> bool {
        self.length >= 1.0
    }

    pub fn contains(&self, p: CirclePoint) -> bool {
        self.is_full() || torus_distance(self.center, p) < self.length / 2.0
    }

    pub fn contains_arc(&self, inner: &Arc) -> bool {
        arc_contains_arc(self, inner)
    }

    pub fn to_set(&self) -> ArcSet {
        let (first, second) = arc_pieces(self.center.0, self.length);
        let mut intervals: Vec<Interval> = first.into_iter().chain(second).collect();
        intervals.sort_by(|a, b| a.start.total_cmp(&b.start));
        ArcSet::normalize(intervals)
    }
}

/// `inner ⊆ outer`, decided by `d(centers) + inner/2 ≤ outer/2`.
pub fn arc_contains_arc(outer: &Arc, inner: &Arc) -> bool {
    outer.is_full() || contains_raw(outer.center, outer.length, inner.center, inner.length)
}

/// Containment test on raw lengths; `inner_len` may have underflowed to 0.
pub(crate) fn contains_raw(
    outer_center: CirclePoint,
    outer_len: f64,
    inner_center: CirclePoint,
    inner_len: f64,
) -> bool {
    outer_len >= 1.0 || torus_distance(outer_center, inner_center) + inner_len / 2.0 <= outer_len / 2.0
}

/// `make_arc(center, length)` as a normalized set.
pub fn make_arc(center: CirclePoint, length: f64) -> Result<ArcSet> {
    Ok(Arc::new(center, length)?.to_set())
}

/// Split the arc of the given center/length into at most two intervals of `[0, 1)`.
fn arc_pieces(center: f64, length: f64) -> (Option<Interval>, Option<Interval>) {
    if length >= 1.0 {
        return (Some(Interval::FULL), None);
    }
    let half = length / 2.0;
    let a = center - half;
    let b = center + half;
    if a < 0.0 {
        (Interval::nonempty(0.0, b), Interval::nonempty(a + 1.0, 1.0))
    } else if b > 1.0 {
        (Interval::nonempty(0.0, b - 1.0), Interval::nonempty(a, 1.0))
    } else {
        (Interval::nonempty(a, b), None)
    }
}

/// Half-open interval `[start, end)` with `0 ≤ start < end ≤ 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    const FULL: Interval = Interval { start: 0.0, end: 1.0 };

    fn nonempty(start: f64, end: f64) -> Option<Interval> {
        (start < end).then_some(Interval { start, end })
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }
}

/// A normalized finite union of half-open intervals of the circle.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct ArcSet {
    intervals: Vec<Interval>,
}

impl TryFrom<Vec<[f64; 2]>> for ArcSet {
    type Error = crate::error::Error;

    fn try_from(raw: Vec<[f64; 2]>) -> Result<Self> {
        ArcSet::from_intervals(raw.into_iter().map(|[a, b]| (a, b)))
    }
}

impl From<ArcSet> for Vec<[f64; 2]> {
    fn from(set: ArcSet) -> Self {
        set.intervals.iter().map(|iv| [iv.start, iv.end]).collect()
    }
}

impl ArcSet {
    pub fn empty() -> Self {
        ArcSet { intervals: Vec::new() }
    }

    pub fn full() -> Self {
        ArcSet { intervals: vec![Interval::FULL] }
    }

    /// Build from arbitrary `[a, b)` pairs inside `[0, 1]`; empty pairs are dropped,
    /// overlapping or touching pairs merged.
    pub fn from_intervals(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut intervals = Vec::new();
        for (a, b) in pairs {
            if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || a > b {
                return Err(invalid(format!("interval [{a}, {b}) is not inside [0, 1]")));
            }
            if let Some(iv) = Interval::nonempty(a + 0.0, b) {
                intervals.push(iv);
            }
        }
        intervals.sort_by(|x, y| x.start.total_cmp(&y.start));
        Ok(ArcSet::normalize(intervals))
    }

    pub fn from_arcs<'a>(arcs: impl IntoIterator<Item = &'a Arc>) -> Self {
        let mut union = ArcUnion::new();
        for arc in arcs {
            union.insert(arc);
        }
        union.to_arc_set()
    }

    /// Coalesce an already start-sorted list.
    fn normalize(sorted: Vec<Interval>) -> Self {
        let mut out: Vec<Interval> = Vec::with_capacity(sorted.len());
        for iv in sorted {
            match out.last_mut() {
                Some(last) if iv.start <= last.end => last.end = last.end.max(iv.end),
                _ => out.push(iv),
            }
        }
        ArcSet { intervals: out }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.intervals == [Interval::FULL]
    }

    /// Lebesgue measure: the sum of interval lengths.
    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(Interval::length).sum()
    }

    pub fn contains(&self, p: CirclePoint) -> bool {
        let x = p.position();
        let idx = self.intervals.partition_point(|iv| iv.start <= x);
        idx > 0 && x < self.intervals[idx - 1].end
    }

    pub fn union(&self, other: &ArcSet) -> ArcSet {
        let mut merged = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.len() || j < other.len() {
            let take_left = j == other.len()
                || (i < self.len() && self.intervals[i].start <= other.intervals[j].start);
            if take_left {
                merged.push(self.intervals[i]);
                i += 1;
            } else {
                merged.push(other.intervals[j]);
                j += 1;
            }
        }
        ArcSet::normalize(merged)
    }

    pub fn complement(&self) -> ArcSet {
        let mut out = Vec::with_capacity(self.len() + 1);
        let mut cursor = 0.0;
        for iv in &self.intervals {
            if iv.start > cursor {
                out.push(Interval { start: cursor, end: iv.start });
            }
            cursor = iv.end;
        }
        if cursor < 1.0 {
            out.push(Interval { start: cursor, end: 1.0 });
        }
        ArcSet { intervals: out }
    }

    /// Intersection via De Morgan, so only complement and union are involved.
    pub fn intersection(&self, other: &ArcSet) -> ArcSet {
        self.complement().union(&other.complement()).complement()
    }
}

/// Incrementally maintained union of intervals, for stage-by-stage coverage.
///
/// Keys are the bit patterns of the (non-negative) left endpoints, which sort
/// like the floats themselves.
#[derive(Clone, Debug, Default)]
pub struct ArcUnion {
    map: BTreeMap<u64, f64>,
}

impl ArcUnion {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, arc: &Arc) {
        self.insert_raw(arc.center.0, arc.length);
    }

    /// Insert `A(center, length)` without constructing an `Arc`.
    pub(crate) fn insert_raw(&mut self, center: f64, length: f64) {
        if self.is_full() {
            return;
        }
        let (first, second) = arc_pieces(center, length);
        for iv in first.into_iter().chain(second) {
            self.insert_interval(iv);
        }
    }

    fn insert_interval(&mut self, iv: Interval) {
        let mut start = iv.start;
        let mut end = iv.end;
        if let Some((&key, &prev_end)) = self.map.range(..=start.to_bits()).next_back() {
            if prev_end >= start {
                start = f64::from_bits(key);
                end = end.max(prev_end);
                self.map.remove(&key);
            }
        }
        while let Some((&key, &next_end)) = self.map.range(start.to_bits()..).next() {
            if f64::from_bits(key) > end {
                break;
            }
            end = end.max(next_end);
            self.map.remove(&key);
        }
        self.map.insert(start.to_bits(), end);
    }

    pub fn is_full(&self) -> bool {
        self.map.len() == 1 && self.map.get(&0.0f64.to_bits()) == Some(&1.0)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.map.iter().map(|(&k, &e)| e - f64::from_bits(k)).sum()
    }

    /// Measure of the uncovered part, summed over the gaps.
    pub fn uncovered_measure(&self) -> f64 {
        let mut cursor = 0.0;
        let mut total = 0.0;
        for (&k, &e) in &self.map {
            total += f64::from_bits(k) - cursor;
            cursor = e;
        }
        total + (1.0 - cursor)
    }

    pub fn to_arc_set(&self) -> ArcSet {
        ArcSet {
            intervals: self
                .map
                .iter()
                .map(|(&k, &e)| Interval { start: f64::from_bits(k), end: e })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(x: f64) -> CirclePoint {
        CirclePoint::new(x)
    }

    fn set(pairs: &[(f64, f64)]) -> ArcSet {
        ArcSet::from_intervals(pairs.iter().copied()).unwrap()
    }

    fn pairs(s: &ArcSet) -> Vec<(f64, f64)> {
        s.intervals().iter().map(|iv| (iv.start, iv.end)).collect()
    }

    #[test]
    fn point_reduction() {
        assert_eq!(p(1.25).position(), 0.25);
        assert_eq!(p(-0.25).position(), 0.75);
        assert_eq!(p(-1e-300).position(), 0.0);
        assert_eq!(p(-0.0).position().to_bits(), 0.0f64.to_bits());
        assert!(p(-1e-17).position() < 1.0);
    }

    #[test]
    fn distance_examples() {
        assert!((torus_distance(p(0.1), p(0.9)) - 0.2).abs() < 1e-15);
        assert_eq!(torus_distance(p(0.37), p(0.37)), 0.0);
        assert_eq!(torus_distance(p(0.25), p(0.75)), 0.5);
    }

    #[test]
    fn make_arc_examples() {
        let s = make_arc(p(0.5), 0.2).unwrap();
        assert_eq!(s.len(), 1);
        assert!((s.intervals()[0].start - 0.4).abs() < 1e-15);
        assert!((s.intervals()[0].end - 0.6).abs() < 1e-15);

        let w = make_arc(p(0.95), 0.2).unwrap();
        let got = pairs(&w);
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].0, 0.0);
        assert!((got[0].1 - 0.05).abs() < 1e-12);
        assert!((got[1].0 - 0.85).abs() < 1e-12);
        assert_eq!(got[1].1, 1.0);

        let f = make_arc(p(0.3), 1.0).unwrap();
        assert!(f.is_full());
        assert_eq!(f.measure(), 1.0);
        assert!(make_arc(p(0.3), 7.5).unwrap().is_full());
    }

    #[test]
    fn make_arc_rejects_bad_length() {
        assert!(make_arc(p(0.3), 0.0).is_err());
        assert!(make_arc(p(0.3), -0.1).is_err());
        assert!(make_arc(p(0.3), f64::NAN).is_err());
    }

    #[test]
    fn union_examples() {
        assert_eq!(pairs(&set(&[(0.1, 0.3)]).union(&set(&[(0.2, 0.4)]))), vec![(0.1, 0.4)]);
        let s = set(&[(0.1, 0.2), (0.5, 0.7)]);
        assert_eq!(s.union(&ArcSet::empty()), s);
        assert!(set(&[(0.0, 0.5)]).union(&set(&[(0.5, 1.0)])).is_full());
    }

    #[test]
    fn complement_examples() {
        assert!(ArcSet::empty().complement().is_full());
        let c = set(&[(0.2, 0.7)]).complement();
        assert_eq!(pairs(&c), vec![(0.0, 0.2), (0.7, 1.0)]);
        assert!((c.measure() - 0.5).abs() < 1e-15);
        assert!(ArcSet::full().complement().is_empty());
    }

    #[test]
    fn measure_examples() {
        for x in [0.0, 0.13, 0.5, 0.97] {
            assert!((make_arc(p(x), 0.3).unwrap().measure() - 0.3).abs() < 1e-12);
        }
        assert_eq!(ArcSet::empty().measure(), 0.0);
        assert_eq!(set(&[(0.0, 0.25), (0.5, 0.75)]).measure(), 0.5);
    }

    #[test]
    fn contains_examples() {
        let s = set(&[(0.1, 0.3)]);
        assert!(s.contains(p(0.1)));
        assert!(!s.contains(p(0.3)));
        assert!(!s.contains(p(0.05)));
        assert!(ArcSet::full().contains(p(0.999)));
        assert!(!ArcSet::empty().contains(p(0.5)));
    }

    #[test]
    fn arc_containment_examples() {
        let a = |c, l| Arc::new(p(c), l).unwrap();
        assert!(arc_contains_arc(&a(0.5, 0.4), &a(0.5, 0.1)));
        assert!(!arc_contains_arc(&a(0.5, 0.2), &a(0.7, 0.1)));
        assert!(arc_contains_arc(&a(0.9, 1.0), &a(0.2, 0.6)));
        // across the seam
        assert!(arc_contains_arc(&a(0.98, 0.1), &a(0.01, 0.02)));
    }

    #[test]
    fn running_union_matches_set_union() {
        let arcs: Vec<Arc> = [(0.1, 0.1), (0.95, 0.2), (0.12, 0.05), (0.5, 0.3), (0.3, 0.2)]
            .iter()
            .map(|&(c, l)| Arc::new(p(c), l).unwrap())
            .collect();
        let mut by_set = ArcSet::empty();
        for a in &arcs {
            by_set = by_set.union(&a.to_set());
        }
        assert_eq!(ArcSet::from_arcs(&arcs), by_set);
    }

    #[test]
    fn running_union_detects_full_cover() {
        let mut u = ArcUnion::new();
        u.insert(&Arc::new(p(0.25), 0.6).unwrap());
        assert!(!u.is_full());
        u.insert(&Arc::new(p(0.75), 0.6).unwrap());
        assert!(u.is_full());
        assert_eq!(u.uncovered_measure(), 0.0);
    }

    #[test]
    fn serde_round_trip_validates() {
        let s = set(&[(0.0, 0.05), (0.85, 1.0)]);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<ArcSet>(&json).unwrap(), s);
        assert!(serde_json::from_str::<ArcSet>("[[0.5,0.2]]").is_err());
    }

    fn arb_arcs() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((0.0..1.0f64, 1e-4..0.6f64), 0..12)
    }

    fn build(arcs: &[(f64, f64)]) -> ArcSet {
        let arcs: Vec<Arc> = arcs.iter().map(|&(c, l)| Arc::new(p(c), l).unwrap()).collect();
        ArcSet::from_arcs(&arcs)
    }

    proptest! {
        #[test]
        fn complement_is_involution(arcs in arb_arcs()) {
            let s = build(&arcs);
            prop_assert_eq!(s.complement().complement(), s);
        }

        #[test]
        fn measure_partitions_circle(arcs in arb_arcs()) {
            let s = build(&arcs);
            let total = s.measure() + s.complement().measure();
            prop_assert!((total - 1.0).abs() <= 1e-9);
        }

        #[test]
        fn union_laws(a in arb_arcs(), b in arb_arcs(), c in arb_arcs()) {
            let (a, b, c) = (build(&a), build(&b), build(&c));
            prop_assert_eq!(a.union(&b), b.union(&a));
            prop_assert_eq!(a.union(&b).union(&c), a.union(&b.union(&c)));
            prop_assert_eq!(a.union(&a), a.clone());
            prop_assert!(a.union(&b).measure() <= a.measure() + b.measure() + 1e-12);
        }

        #[test]
        fn contains_splits_with_complement(arcs in arb_arcs(), x in 0.0..1.0f64) {
            let s = build(&arcs);
            let on_endpoint = s.intervals().iter().any(|iv| iv.start == x || iv.end == x);
            prop_assume!(!on_endpoint);
            prop_assert!(s.contains(p(x)) ^ s.complement().contains(p(x)));
        }

        #[test]
        fn arc_set_agrees_with_arc_membership(c in 0.0..1.0f64, l in 1e-3..0.99f64, x in 0.0..1.0f64) {
            let arc = Arc::new(p(c), l).unwrap();
            let d = torus_distance(p(c), p(x));
            prop_assume!((d - l / 2.0).abs() > 1e-12);
            prop_assert_eq!(arc.to_set().contains(p(x)), arc.contains(p(x)));
        }
    }
}
