//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use arccover::dimension::{box_count, dimension_ensemble, gauge_measure_bound, intersection_ensemble, Surrogate};
use arccover::point_finder::{find_point, verify_certificate, verify_membership, FindPointError};
use arccover::sim::{run_ensemble, TrialConfig};
use arccover::{
    classify_series_gauge, critical_exponent, shepp_test, Arc, ArcSet, CirclePoint, GaugeFunction,
    LengthSequence, Verdict, DEFAULT_SEED,
};
use rand::{rngs::StdRng, Rng, SeedableRng};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn seq(text: &str) -> LengthSequence {
    text.parse().unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let base = TrialConfig::new(DEFAULT_SEED, seq("powerlaw a=1 alpha=2"), 100_000);
    let e = dimension_ensemble(&base, 20, 1000, None, None, Surrogate::ScaleShells).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let mut detail = format!("mean dim {:.4} in {:.1}s", e.mean_slope, elapsed.as_secs_f64());
    let mut ok = (0.40..=0.60).contains(&e.mean_slope) && elapsed < Duration::from_secs(60);
    let mut previous = f64::INFINITY;
    for alpha in [1.25, 1.5, 2.0, 3.0] {
        let b = TrialConfig::new(DEFAULT_SEED, LengthSequence::power_law(1.0, alpha).unwrap(), 100_000);
        let est = dimension_ensemble(&b, 20, 1000, None, None, Surrogate::ScaleShells)
            .map_err(|e| e.to_string())?
            .mean_slope;
        detail += &format!("; alpha {alpha}: {est:.4}");
        ok &= (est - 1.0 / alpha).abs() <= 0.12 && est < previous;
        previous = est;
    }
    check(ok, detail)
}

fn criterion_2() -> Outcome {
    let mut ok = true;
    let mut flips = Vec::new();
    for c in [0.5, 0.9, 0.99, 1.0, 1.2, 2.0] {
        let v = shepp_test(&LengthSequence::harmonic(c).unwrap(), &[10_000, 100_000, 1_000_000]).unwrap();
        ok &= v.is_divergent() == (c >= 1.0);
        flips.push(format!("{c}:{:?}", v.verdict));
    }
    let covered = |c: f64| {
        run_ensemble(&TrialConfig::new(DEFAULT_SEED, LengthSequence::harmonic(c).unwrap(), 100_000), 100)
            .unwrap()
            .covered_trials
    };
    let (high, low) = (covered(1.5), covered(0.7));
    ok &= high >= 95 && low == 0;
    check(
        ok,
        format!("classifier [{}]; covered harmonic(1.5) {high}/100, harmonic(0.7) {low}/100", flips.join(" ")),
    )
}

/// `Σ_{n≥m} n⁻²` by Euler–Maclaurin; the next term is below `1/(42 m⁷)`.
fn inverse_square_tail(m: u64) -> f64 {
    let m = m as f64;
    1.0 / m + 0.5 / (m * m) + 1.0 / (6.0 * m.powi(3)) - 1.0 / (30.0 * m.powi(5))
}

fn criterion_3() -> Outcome {
    let tails = vec![10, 100, 1000];
    let base = TrialConfig::new(DEFAULT_SEED, seq("powerlaw a=1 alpha=2"), 100_000).with_tail_starts(tails.clone());
    let stats = run_ensemble(&base, 20).map_err(|e| e.to_string())?;
    let mut worst = f64::NEG_INFINITY;
    for t in &stats.per_trial {
        for &(m, measure) in &t.tail_measures {
            worst = worst.max(measure - inverse_square_tail(m));
        }
    }
    let bound_ok = worst <= 1e-9;
    let base = TrialConfig::new(DEFAULT_SEED, LengthSequence::harmonic(1.0).unwrap(), 1_000_000)
        .with_tail_starts(vec![100])
        .with_checkpoints(vec![]);
    let mean = run_ensemble(&base, 50).map_err(|e| e.to_string())?.mean_tail_measure[0].1;
    check(
        bound_ok && mean >= 0.99,
        format!("max excess over tail bound {worst:.3e}; harmonic(1) mean tail measure {mean:.6}"),
    )
}

fn criterion_4() -> Outcome {
    let families = [
        "powerlaw a=1 alpha=1.5",
        "powerlaw a=2 alpha=2",
        "powerlaw a=0.5 alpha=3",
        "harmonic c=0.5",
        "harmonic c=2",
        "powerlog a=1 alpha=2 beta=1",
        "powerlog a=1 alpha=1 beta=2",
        "powerlog a=1 alpha=1.5 beta=-1",
        "geometric q=0.5",
        "geometric q=0.9",
    ];
    let mut checked = 0;
    let mut failures = Vec::new();
    for text in families {
        let s = seq(text);
        let s_l = critical_exponent(&s).unwrap().value;
        for delta in [-0.2, -0.05, 0.05, 0.2] {
            let exponent = s_l + delta;
            if !(exponent > 0.0 && exponent < 1.0) {
                continue;
            }
            let g = GaugeFunction::monomial(exponent).unwrap();
            let verdict = classify_series_gauge(&s, &g, &[10_000, 100_000, 1_000_000]).unwrap().verdict;
            let expected = if delta < 0.0 { Verdict::Divergent } else { Verdict::Convergent };
            let finite = gauge_measure_bound(&s, &g, 1).unwrap().is_finite();
            checked += 1;
            if verdict != expected || finite != (delta > 0.0) {
                failures.push(format!("{text} s={exponent}: {verdict:?}, bound finite {finite}"));
            }
        }
    }
    let window = Arc::new(CirclePoint::new(0.3), 0.2).unwrap();
    let mut gaps = Vec::new();
    for alpha in [1.5, 2.0, 3.0] {
        let base = TrialConfig::new(DEFAULT_SEED, LengthSequence::power_law(1.0, alpha).unwrap(), 100_000);
        let plain = dimension_ensemble(&base, 20, 1000, None, None, Surrogate::ScaleShells).unwrap();
        let local = dimension_ensemble(&base, 20, 1000, Some(&window), None, Surrogate::ScaleShells).unwrap();
        let gap = (plain.mean_slope - local.mean_slope).abs();
        if gap > 0.15 || local.degenerate_trials > 0 {
            failures.push(format!("window alpha {alpha}: {:.4} vs {:.4}", plain.mean_slope, local.mean_slope));
        }
        gaps.push(format!("{gap:.4}"));
    }
    let mut detail = format!("{checked} gauge cases, window gaps [{}]", gaps.join(", "));
    if !failures.is_empty() {
        detail += &format!("; {}", failures.join("; "));
    }
    check(failures.is_empty(), detail)
}

fn criterion_5() -> Outcome {
    let base = TrialConfig::new(DEFAULT_SEED, seq("powerlaw a=1 alpha=2"), 100_000);
    let e = intersection_ensemble(&base, 20, 2, 100, None, Surrogate::TailUnion).map_err(|e| e.to_string())?;
    check(
        (0.35..=0.65).contains(&e.mean_slope) && e.mean_slope >= 0.25,
        format!("mean intersection dim {:.4} (sd {:.4})", e.mean_slope, e.sd_slope),
    )
}

fn criterion_6() -> Outcome {
    let s = seq("geometric q=0.5");
    let cap = 10_000_000;
    let cert = match find_point(DEFAULT_SEED, 0, &s, 3, cap) {
        Ok(c) => c,
        Err(FindPointError::Exhausted { level, partial, .. }) => {
            return Err(format!(
                "no certificate: cap exhausted at level {level} after indices {:?}",
                partial.indices()
            ))
        }
        Err(e) => return Err(e.to_string()),
    };
    let verified = verify_certificate(&cert);
    let point = cert.point.unwrap();
    let last = *cert.indices().last().unwrap();
    let hits = verify_membership(point, DEFAULT_SEED, 0, &s, last);
    let replay = find_point(DEFAULT_SEED, 0, &s, 3, cap).map(|c| c.indices()).ok();
    check(
        verified.is_ok() && hits >= 3 && replay.as_ref() == Some(&cert.indices()),
        format!("indices {:?}, verification {:?}, hits {hits}", cert.indices(), verified),
    )
}

fn brute_box_count(s: &ArcSet, j: u32) -> u64 {
    let cells = 1u64 << j;
    (0..cells)
        .filter(|&k| {
            let (a, b) = (k as f64 / cells as f64, (k + 1) as f64 / cells as f64);
            s.intervals().iter().any(|iv| iv.start < b && a < iv.end)
        })
        .count() as u64
}

fn random_arcs(rng: &mut StdRng) -> Vec<Arc> {
    let count = rng.gen_range(0..12);
    (0..count)
        .map(|_| {
            let length = 10f64.powf(rng.gen_range(-6.0..0.0));
            Arc::new(CirclePoint::new(rng.gen::<f64>()), length).unwrap()
        })
        .collect()
}

fn criterion_7() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let cases = 10_000;
    let mut failures = 0;
    for _ in 0..cases {
        let arcs_a = random_arcs(&mut rng);
        let arcs_b = random_arcs(&mut rng);
        let a = ArcSet::from_arcs(&arcs_a);
        let b = ArcSet::from_arcs(&arcs_b);
        let j = rng.gen_range(0..=12);
        let lengths: f64 = arcs_a.iter().map(Arc::length).sum();
        let ok = a.complement().complement() == a
            && a.measure() <= lengths.min(1.0) + 1e-12
            && a.union(&b).measure() <= a.measure() + b.measure() + 1e-12
            && (a.measure() + a.complement().measure() - 1.0).abs() <= 1e-12
            && box_count(&a, j) == brute_box_count(&a, j);
        failures += !ok as u32;
    }
    check(failures == 0, format!("{cases} cases, {failures} failures"))
}

fn run_cli(args: &[&str], out: &Path) -> (i32, Vec<u8>) {
    let status = Command::new(env!("CARGO_BIN_EXE_arccover"))
        .args(args)
        .arg("--out")
        .arg(out)
        .status()
        .expect("binary runs");
    (status.code().unwrap_or(-1), std::fs::read(out).unwrap_or_default())
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let commands: [&[&str]; 7] = [
        &["analyze", "--seq", "powerlaw a=1 alpha=2", "--gauge", "monomial s=0.5", "--format", "json"],
        &["simulate", "--seq", "harmonic c=0.7", "--horizon", "20000", "--trials", "8", "--tails", "1,100"],
        &["dimension", "--seq", "powerlaw a=1 alpha=2", "--horizon", "20000", "--trials", "4"],
        &["dimension", "--seq", "powerlaw a=1 alpha=1.5", "--horizon", "20000", "--trials", "3", "--surrogate", "tail-union", "--format", "json"],
        &["intersect", "--seq", "powerlaw a=1 alpha=2", "--horizon", "20000", "--trials", "3"],
        &["find-point", "--seq", "geometric q=0.5", "--depth", "2", "--format", "json"],
        &["sweep", "--seq", "powerlaw a=1 alpha=2", "--horizon", "20000", "--trials", "3", "--sweep", "alpha=1.5,2"],
    ];
    let mut failures = Vec::new();
    for (i, args) in commands.iter().enumerate() {
        let first = dir.path().join(format!("a{i}"));
        let second = dir.path().join(format!("b{i}"));
        let (code_a, bytes_a) = run_cli(args, &first);
        let (code_b, mut bytes_b) = run_cli(args, &second);
        // the output path is part of the recorded command line
        let (pa, pb) = (first.display().to_string(), second.display().to_string());
        bytes_b = String::from_utf8(bytes_b).unwrap().replace(&pb, &pa).into_bytes();
        if code_a != 0 || code_b != 0 || bytes_a.is_empty() || bytes_a != bytes_b {
            failures.push(args[0].to_string());
        }
    }
    check(
        failures.is_empty(),
        format!("{} commands repeated; differing: {:?}", commands.len(), failures),
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("dimension of power-law limsup sets", criterion_1),
        ("covering threshold", criterion_2),
        ("Lebesgue measure dichotomy", criterion_3),
        ("gauge dichotomy and window uniformity", criterion_4),
        ("intersection stability", criterion_5),
        ("nested-arc point finder", criterion_6),
        ("randomized arc-set properties", criterion_7),
        ("end-to-end determinism", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (status, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {} ({name}): {status}: {detail}", i + 1);
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
