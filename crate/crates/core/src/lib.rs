//! Random arc coverings of the circle `T = R/Z`.
//!
//! Arcs `A(X_n, ℓ_n)` with i.i.d. uniform centers and a nonincreasing length
//! sequence `ℓ_n → 0` are simulated exactly on finite unions of intervals, and
//! the classical criteria on `ℓ` are evaluated alongside: full coverage
//! (Shepp's series), Lebesgue measure of the limsup set (`Σ ℓ_n`), its
//! Hausdorff `g`-measure (`Σ g(ℓ_n)`) and dimension (the critical exponent
//! `s_ℓ`). A nested-arc search produces explicit points of the limsup set.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circle;
pub mod cli;
pub mod dimension;
pub mod error;
pub mod gauge;
pub mod output;
pub mod point_finder;
pub mod rng;
pub mod sequence;
pub mod series;
pub mod sim;
mod syntax;

pub use circle::{arc_contains_arc, make_arc, torus_distance, Arc, ArcSet, ArcUnion, CirclePoint};
pub use error::{Error, Result};
pub use gauge::{compare_gauges, validate_gauge, GaugeFunction};
pub use rng::{sample_center, DEFAULT_SEED};
pub use sequence::LengthSequence;
pub use series::{
    classify_series_gauge, critical_exponent, shepp_test, tail_gauge_sum, Method, SeriesVerdict,
    TailEnd, Verdict,
};
pub use sim::{run_ensemble, run_trial, EnsembleStats, TrialConfig, TrialResult};
