//! Command-line front end.
//!
//! Flags are parsed with clap into an [`ExperimentConfig`] holding every
//! resolved value, defaults included. The config renders back to an argument
//! list ([`ExperimentConfig::to_args`]), which is written into each artifact
//! header so the file can be regenerated.

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::circle::{Arc, CirclePoint};
use crate::dimension::{
    dimension_ensemble, gauge_measure_bound, intersection_ensemble, DimensionEnsemble,
    GaugeMeasureBound, LevelRange, Surrogate,
};
use crate::error::{Error, Result};
use crate::gauge::{validate_gauge, GaugeFunction, GaugeValidation};
use crate::output::{self, fmt_float, fmt_opt_float, fmt_opt_int, Format, Metadata, Table};
use crate::point_finder::{
    find_point, verify_certificate, verify_membership, FindPointError, NestedCertificate,
    DEFAULT_SEARCH_CAP,
};
use crate::rng::DEFAULT_SEED;
use crate::sequence::LengthSequence;
use crate::series::{
    classify_series_gauge, critical_exponent, length_sum_test, shepp_test, CriticalExponent,
    SeriesVerdict, Verdict, DEFAULT_HORIZONS,
};
use crate::sim::{run_ensemble, EnsembleStats, TrialConfig};

pub const EXIT_OK: i32 = 0;
/// A nested-arc search ran out of candidates; the partial certificate is still written.
pub const EXIT_SEARCH_EXHAUSTED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

const DEFAULT_HORIZON: u64 = 100_000;
const DEFAULT_SIM_TRIALS: u64 = 100;
const DEFAULT_DIM_TRIALS: u64 = 20;
const DEFAULT_COPIES: u64 = 2;
const DEFAULT_DEPTH: usize = 3;

#[derive(Parser, Debug)]
#[command(name = "arccover", version, about = "Random arc coverings of the circle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Series criteria and the predicted size of the limsup set
    Analyze(AnalyzeArgs),
    /// Coverage and uncovered measure over an ensemble of trials
    Simulate(SimulateArgs),
    /// Box-counting dimension of the limsup set
    Dimension(DimensionArgs),
    /// Dimension of the intersection of independent copies
    Intersect(IntersectArgs),
    /// Nested-arc construction of a point of the limsup set
    FindPoint(FindPointArgs),
    /// Dimension estimates over a grid of one sequence parameter
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Length sequence, e.g. 'powerlaw a=1 alpha=2'
    #[arg(long)]
    seq: String,
    /// Artifact path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Debug)]
struct EnsembleArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    horizon: Option<u64>,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Dyadic levels 'a..b' or 'auto'
    #[arg(long)]
    levels: Option<LevelChoice>,
    #[arg(long, value_enum)]
    surrogate: Option<Surrogate>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[command(flatten)]
    output: OutputArgs,
    /// Gauge function, e.g. 'monomial s=0.5'
    #[arg(long)]
    gauge: Option<String>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    output: OutputArgs,
    #[command(flatten)]
    ensemble: EnsembleArgs,
    /// Tail starts m, comma separated
    #[arg(long, value_delimiter = ',')]
    tails: Option<Vec<u64>>,
}

#[derive(Args, Debug)]
struct DimensionArgs {
    #[command(flatten)]
    output: OutputArgs,
    #[command(flatten)]
    ensemble: EnsembleArgs,
    /// Tail start m
    #[arg(long)]
    tails: Option<u64>,
    #[command(flatten)]
    fit: FitArgs,
    /// Restrict counting to the arc 'center,length'
    #[arg(long)]
    window: Option<WindowArg>,
}

#[derive(Args, Debug)]
struct IntersectArgs {
    #[command(flatten)]
    output: OutputArgs,
    #[command(flatten)]
    ensemble: EnsembleArgs,
    #[arg(long)]
    tails: Option<u64>,
    #[command(flatten)]
    fit: FitArgs,
    /// Number of independent copies
    #[arg(long)]
    copies: Option<u64>,
}

#[derive(Args, Debug)]
struct FindPointArgs {
    #[command(flatten)]
    output: OutputArgs,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trial: Option<u64>,
    #[arg(long)]
    depth: Option<usize>,
    /// Candidates examined per level
    #[arg(long)]
    cap: Option<u64>,
    /// Horizon for the membership count (defaults to the deepest index)
    #[arg(long)]
    horizon: Option<u64>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    output: OutputArgs,
    #[command(flatten)]
    ensemble: EnsembleArgs,
    #[arg(long)]
    tails: Option<u64>,
    #[command(flatten)]
    fit: FitArgs,
    #[arg(long)]
    window: Option<WindowArg>,
    /// Parameter grid, e.g. 'alpha=1.25,1.5,2,3'
    #[arg(long)]
    sweep: SweepSpec,
}

/// Dyadic level band, either fixed or derived from the sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum LevelChoice {
    Auto,
    Fixed(LevelRange),
}

impl LevelChoice {
    pub fn range(self) -> Option<LevelRange> {
        match self {
            LevelChoice::Auto => None,
            LevelChoice::Fixed(r) => Some(r),
        }
    }
}

impl fmt::Display for LevelChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LevelChoice::Auto => write!(f, "auto"),
            LevelChoice::Fixed(r) => write!(f, "{}..{}", r.min, r.max),
        }
    }
}

impl FromStr for LevelChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "auto" {
            return Ok(LevelChoice::Auto);
        }
        let parse = |t: &str| t.trim().parse::<u32>().map_err(|_| Error::Parse(format!("bad level '{t}'")));
        let (a, b) = s
            .split_once("..")
            .ok_or_else(|| Error::Parse(format!("levels must be 'a..b' or 'auto', got '{s}'")))?;
        Ok(LevelChoice::Fixed(LevelRange::new(parse(a)?, parse(b)?)?))
    }
}

impl From<LevelChoice> for String {
    fn from(l: LevelChoice) -> String {
        l.to_string()
    }
}

impl TryFrom<String> for LevelChoice {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Window arc given as 'center,length'.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowArg {
    pub center: f64,
    pub length: f64,
}

impl WindowArg {
    pub fn arc(self) -> Result<Arc> {
        Arc::new(CirclePoint::new(self.center), self.length)
    }
}

impl fmt::Display for WindowArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.center, self.length)
    }
}

impl FromStr for WindowArg {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (c, l) = s
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("window must be 'center,length', got '{s}'")))?;
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{t}'")));
        let (center, length) = (num(c)?, num(l)?);
        if !center.is_finite() || !(length > 0.0 && length <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "window needs a finite center and a length in (0, 1], got '{s}'"
            )));
        }
        Ok(WindowArg { center, length })
    }
}

/// One sequence parameter and the values it takes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub param: String,
    pub values: Vec<f64>,
}

impl fmt::Display for SweepSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let values: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
        write!(f, "{}={}", self.param, values.join(","))
    }
}

impl FromStr for SweepSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (param, list) = s
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("sweep must be 'param=v1,v2,...', got '{s}'")))?;
        let values = list
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad sweep value '{t}'"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(SweepSpec { param: param.trim().to_string(), values })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Analyze,
    Simulate,
    Dimension,
    Intersect,
    FindPoint,
    Sweep,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Analyze => "analyze",
            CommandKind::Simulate => "simulate",
            CommandKind::Dimension => "dimension",
            CommandKind::Intersect => "intersect",
            CommandKind::FindPoint => "find-point",
            CommandKind::Sweep => "sweep",
        }
    }
}

/// A fully resolved run. Fields that do not apply to the command are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: CommandKind,
    /// Canonical sequence text.
    pub seq: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gauge: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trial: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub horizon: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tails: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub levels: Option<LevelChoice>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub surrogate: Option<Surrogate>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub window: Option<WindowArg>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub copies: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cap: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sweep: Option<SweepSpec>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl ExperimentConfig {
    fn empty(command: CommandKind, output: OutputArgs) -> Result<Self> {
        let seq: LengthSequence = output.seq.parse()?;
        Ok(ExperimentConfig {
            command,
            seq: seq.to_string(),
            gauge: None,
            seed: None,
            trial: None,
            trials: None,
            horizon: None,
            tails: None,
            levels: None,
            surrogate: None,
            window: None,
            copies: None,
            depth: None,
            cap: None,
            sweep: None,
            out: output.out,
            format: output.format.unwrap_or_default(),
        })
    }

    fn with_ensemble(mut self, e: EnsembleArgs, default_trials: u64) -> Self {
        self.seed = Some(e.seed.unwrap_or(DEFAULT_SEED));
        self.trials = Some(e.trials.unwrap_or(default_trials));
        self.horizon = Some(e.horizon.unwrap_or(DEFAULT_HORIZON));
        self
    }

    fn with_fit(mut self, fit: FitArgs, tail: Option<u64>, divisor: u64, surrogate: Surrogate) -> Self {
        let horizon = self.horizon.unwrap_or(DEFAULT_HORIZON);
        self.tails = Some(vec![tail.unwrap_or((horizon / divisor).max(1))]);
        self.levels = Some(fit.levels.unwrap_or(LevelChoice::Auto));
        self.surrogate = Some(fit.surrogate.unwrap_or(surrogate));
        self
    }

    fn from_cli(cli: Cli) -> Result<Self> {
        let config = match cli.command {
            Command::Analyze(a) => {
                let mut c = Self::empty(CommandKind::Analyze, a.output)?;
                if let Some(g) = a.gauge {
                    c.gauge = Some(g.parse::<GaugeFunction>()?.to_string());
                }
                c
            }
            Command::Simulate(a) => {
                let mut c = Self::empty(CommandKind::Simulate, a.output)?.with_ensemble(a.ensemble, DEFAULT_SIM_TRIALS);
                c.tails = Some(a.tails.unwrap_or_else(|| vec![1]));
                c
            }
            Command::Dimension(a) => {
                let mut c = Self::empty(CommandKind::Dimension, a.output)?
                    .with_ensemble(a.ensemble, DEFAULT_DIM_TRIALS)
                    .with_fit(a.fit, a.tails, 100, Surrogate::ScaleShells);
                c.window = a.window;
                c
            }
            Command::Intersect(a) => {
                let mut c = Self::empty(CommandKind::Intersect, a.output)?
                    .with_ensemble(a.ensemble, DEFAULT_DIM_TRIALS)
                    .with_fit(a.fit, a.tails, 1000, Surrogate::TailUnion);
                c.copies = Some(a.copies.unwrap_or(DEFAULT_COPIES));
                c
            }
            Command::FindPoint(a) => {
                let mut c = Self::empty(CommandKind::FindPoint, a.output)?;
                c.seed = Some(a.seed.unwrap_or(DEFAULT_SEED));
                c.trial = Some(a.trial.unwrap_or(0));
                c.depth = Some(a.depth.unwrap_or(DEFAULT_DEPTH));
                c.cap = Some(a.cap.unwrap_or(DEFAULT_SEARCH_CAP));
                c.horizon = a.horizon;
                c
            }
            Command::Sweep(a) => {
                let mut c = Self::empty(CommandKind::Sweep, a.output)?
                    .with_ensemble(a.ensemble, DEFAULT_DIM_TRIALS)
                    .with_fit(a.fit, a.tails, 100, Surrogate::ScaleShells);
                c.window = a.window;
                c.sweep = Some(a.sweep);
                c
            }
        };
        config.check()?;
        Ok(config)
    }

    fn check(&self) -> Result<()> {
        let positive = |name: &str, v: Option<u64>| match v {
            Some(0) => Err(Error::InvalidArgument(format!("--{name} must be at least 1"))),
            _ => Ok(()),
        };
        positive("trials", self.trials)?;
        positive("horizon", self.horizon)?;
        positive("copies", self.copies)?;
        positive("cap", self.cap)?;
        if self.depth == Some(0) {
            return Err(Error::InvalidArgument("--depth must be at least 1".into()));
        }
        if let (Some(tails), Some(h)) = (&self.tails, self.horizon) {
            if let Some(m) = tails.iter().find(|&&m| m == 0 || m > h) {
                return Err(Error::InvalidArgument(format!("tail start {m} must lie in 1..={h}")));
            }
        }
        if let Some(w) = self.window {
            w.arc()?;
        }
        if let Some(sweep) = &self.sweep {
            let seq = self.sequence()?;
            for &v in &sweep.values {
                seq.with_param(&sweep.param, v)?;
            }
        }
        Ok(())
    }

    pub fn sequence(&self) -> Result<LengthSequence> {
        self.seq.parse()
    }

    /// Argument list (without the program name) that parses back to `self`.
    pub fn to_args(&self) -> Vec<String> {
        let mut args = vec![self.command.name().to_string(), "--seq".into(), self.seq.clone()];
        let mut push = |flag: &str, value: Option<String>| {
            if let Some(v) = value {
                args.push(format!("--{flag}"));
                args.push(v);
            }
        };
        push("gauge", self.gauge.clone());
        push("seed", self.seed.map(|v| v.to_string()));
        push("trial", self.trial.map(|v| v.to_string()));
        push("trials", self.trials.map(|v| v.to_string()));
        push("horizon", self.horizon.map(|v| v.to_string()));
        push(
            "tails",
            self.tails.as_ref().map(|t| t.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(",")),
        );
        push("levels", self.levels.map(|l| l.to_string()));
        push(
            "surrogate",
            self.surrogate.map(|s| match s {
                Surrogate::TailUnion => "tail-union".to_string(),
                Surrogate::ScaleShells => "scale-shells".to_string(),
            }),
        );
        push("window", self.window.map(|w| w.to_string()));
        push("copies", self.copies.map(|v| v.to_string()));
        push("depth", self.depth.map(|v| v.to_string()));
        push("cap", self.cap.map(|v| v.to_string()));
        push("sweep", self.sweep.as_ref().map(|s| s.to_string()));
        push("out", self.out.as_ref().map(|p| p.display().to_string()));
        push("format", Some(self.format.as_str().to_string()));
        args
    }

    /// Shell-quoted command line reproducing this run.
    pub fn command_line(&self) -> String {
        let mut words = vec![output::TOOL.to_string()];
        words.extend(self.to_args());
        shell_words::join(words)
    }

    fn base_trial(&self, seq: LengthSequence) -> TrialConfig {
        TrialConfig::new(self.seed.unwrap_or(DEFAULT_SEED), seq, self.horizon.unwrap_or(DEFAULT_HORIZON))
    }

    fn tail(&self) -> u64 {
        self.tails.as_ref().and_then(|t| t.first().copied()).unwrap_or(1)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Invalid(#[from] Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    SearchExhausted(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Invalid(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::SearchExhausted(_) => EXIT_SEARCH_EXHAUSTED,
        }
    }
}

/// Parses an argument vector whose first element is the program name.
pub fn parse_args<I, T>(argv: I) -> std::result::Result<ExperimentConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(ExperimentConfig::from_cli(cli)?)
}

/// What the size criteria predict for the limsup set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    /// Whether the circle is covered almost surely; `None` when the criterion is inconclusive.
    pub covered: Option<bool>,
    /// Almost-sure Lebesgue measure of the limsup set.
    pub lebesgue_measure: Option<f64>,
    pub dimension: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gauge_measure: Option<GaugeRegime>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GaugeRegime {
    /// `H^g` of the set vanishes.
    Zero,
    /// `H^g(E ∩ V) = H^g(V) = ∞` on every nonempty open `V`.
    InfiniteOnOpenSets,
    /// `H^g` is a multiple of Lebesgue measure and the set has the measure of the circle.
    FullLebesgue,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeReport {
    pub gauge: GaugeFunction,
    pub validation: GaugeValidation,
    pub series: SeriesVerdict,
    pub bound: GaugeMeasureBound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub seq: LengthSequence,
    pub critical_exponent: CriticalExponent,
    pub shepp: SeriesVerdict,
    pub length_sum: SeriesVerdict,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gauge: Option<GaugeReport>,
    pub regime: Regime,
}

fn decided(v: &SeriesVerdict) -> Option<bool> {
    match v.verdict {
        Verdict::Divergent => Some(true),
        Verdict::Convergent => Some(false),
        Verdict::Inconclusive => None,
    }
}

pub fn run_analyze(seq: &LengthSequence, gauge: Option<&GaugeFunction>) -> Result<AnalyzeReport> {
    let critical = critical_exponent(seq)?;
    let shepp = shepp_test(seq, &DEFAULT_HORIZONS)?;
    let length_sum = length_sum_test(seq, &DEFAULT_HORIZONS)?;
    let gauge = match gauge {
        Some(g) => Some(GaugeReport {
            gauge: g.clone(),
            validation: validate_gauge(g),
            series: classify_series_gauge(seq, g, &DEFAULT_HORIZONS)?,
            bound: gauge_measure_bound(seq, g, 1)?,
        }),
        None => None,
    };
    let gauge_measure = gauge.as_ref().map(|r| match r.series.verdict {
        Verdict::Convergent => GaugeRegime::Zero,
        Verdict::Inconclusive => GaugeRegime::Unknown,
        Verdict::Divergent => {
            let p = r.gauge.profile();
            if p.s < 1.0 || p.beta < 0.0 {
                GaugeRegime::InfiniteOnOpenSets
            } else {
                GaugeRegime::FullLebesgue
            }
        }
    });
    let regime = Regime {
        covered: decided(&shepp),
        lebesgue_measure: decided(&length_sum).map(|d| if d { 1.0 } else { 0.0 }),
        dimension: critical.value,
        gauge_measure,
    };
    Ok(AnalyzeReport { seq: seq.clone(), critical_exponent: critical, shepp, length_sum, gauge, regime })
}

fn lower<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn analyze_table(r: &AnalyzeReport) -> Table {
    let mut t = Table::new(&["quantity", "value", "method"]);
    t.row(vec!["critical_exponent".into(), fmt_float(r.critical_exponent.value), lower(&r.critical_exponent.method)]);
    t.row(vec!["shepp_series".into(), lower(&r.shepp.verdict), lower(&r.shepp.method)]);
    t.row(vec!["length_series".into(), lower(&r.length_sum.verdict), lower(&r.length_sum.method)]);
    if let Some(g) = &r.gauge {
        t.row(vec!["gauge".into(), g.gauge.to_string(), String::new()]);
        t.row(vec!["gauge_valid".into(), g.validation.valid.to_string(), String::new()]);
        t.row(vec!["gauge_series".into(), lower(&g.series.verdict), lower(&g.series.method)]);
        t.row(vec!["gauge_bound".into(), g.bound.bound.map_or("inf".into(), fmt_float), String::new()]);
    }
    let opt_bool = |b: Option<bool>| b.map_or("unknown".to_string(), |b| b.to_string());
    t.row(vec!["predicted_covered".into(), opt_bool(r.regime.covered), String::new()]);
    t.row(vec!["predicted_lebesgue_measure".into(), fmt_opt_float(r.regime.lebesgue_measure), String::new()]);
    t.row(vec!["predicted_dimension".into(), fmt_float(r.regime.dimension), String::new()]);
    if let Some(g) = r.regime.gauge_measure {
        t.row(vec!["predicted_gauge_measure".into(), lower(&g), String::new()]);
    }
    t
}

/// Human-readable analysis.
pub fn render_report(r: &AnalyzeReport) -> String {
    let mut s = String::new();
    let mut line = |text: String| {
        s.push_str(&text);
        s.push('\n');
    };
    let sums = |v: &SeriesVerdict| {
        v.partial_sums.iter().map(|(n, x)| format!("S({n})={x:.6e}")).collect::<Vec<_>>().join(" ")
    };
    line(format!("sequence: {}", r.seq));
    line(format!(
        "critical exponent s_l = {} ({})",
        r.critical_exponent.value,
        lower(&r.critical_exponent.method)
    ));
    line(format!("shepp series: {} ({}) {}", lower(&r.shepp.verdict), lower(&r.shepp.method), sums(&r.shepp)));
    line(format!(
        "sum of lengths: {} ({}) {}",
        lower(&r.length_sum.verdict),
        lower(&r.length_sum.method),
        sums(&r.length_sum)
    ));
    if let Some(g) = &r.gauge {
        line(format!("gauge: {} (valid: {})", g.gauge, g.validation.valid));
        line(format!("gauge series: {} ({})", lower(&g.series.verdict), lower(&g.series.method)));
        match g.bound.bound {
            Some(b) => line(format!("gauge measure bound from n0 = {}: {b:.6e}", g.bound.n0)),
            None => line("gauge measure bound: infinite".into()),
        }
    }
    let covered = match r.regime.covered {
        Some(true) => "circle covered almost surely",
        Some(false) => "circle not covered almost surely",
        None => "coverage undetermined",
    };
    line(format!("predicted: {covered}"));
    match r.regime.lebesgue_measure {
        Some(m) => line(format!("predicted: Lebesgue measure {m}")),
        None => line("predicted: Lebesgue measure undetermined".into()),
    }
    line(format!("predicted: dimension {}", r.regime.dimension));
    if let Some(g) = r.regime.gauge_measure {
        line(format!("predicted: gauge measure {}", lower(&g)));
    }
    s
}

fn simulate_table(stats: &EnsembleStats) -> Table {
    let tails: Vec<u64> = stats.mean_tail_measure.iter().map(|&(m, _)| m).collect();
    let mut header = vec!["trial".to_string(), "first_cover_n".into(), "final_uncovered".into()];
    header.extend(tails.iter().map(|m| format!("tail_measure_{m}")));
    let mut t = Table { header, ..Table::default() };
    t.note("trials", stats.trials);
    t.note("covered_trials", stats.covered_trials);
    t.note("coverage_fraction", fmt_float(stats.coverage_fraction));
    t.note("first_cover_mean", fmt_opt_float(stats.first_cover_mean));
    for &(m, v) in &stats.mean_tail_measure {
        t.note(&format!("mean_tail_measure_{m}"), fmt_float(v));
    }
    for s in &stats.per_trial {
        let mut row = vec![s.trial_index.to_string(), fmt_opt_int(s.first_cover_n), fmt_float(s.final_uncovered)];
        row.extend(s.tail_measures.iter().map(|&(_, v)| fmt_float(v)));
        t.row(row);
    }
    t
}

fn dimension_table(e: &DimensionEnsemble) -> Table {
    let mut t = Table::new(&["j", "N_j", "local_slope"]);
    t.note("tail_start", e.m);
    t.note("levels", format!("{}..{}", e.levels.min, e.levels.max));
    t.note("surrogate", lower(&e.surrogate));
    t.note("trials", e.per_trial.len());
    t.note("mean_slope", fmt_float(e.mean_slope));
    t.note("sd_slope", fmt_float(e.sd_slope));
    t.note("degenerate_trials", e.degenerate_trials);
    t.note("degenerate", e.degenerate_trials > 0);
    for (i, &(j, n)) in e.mean_counts.iter().enumerate() {
        let slope = e.mean_counts.get(i + 1).map(|&(_, next)| next.log2() - n.log2());
        t.row(vec![j.to_string(), fmt_float(n), fmt_opt_float(slope)]);
    }
    t.row(vec!["fit".into(), String::new(), fmt_float(e.mean_slope)]);
    t
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub horizon: u64,
    pub hits: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FindPointReport {
    pub found: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exhausted_level: Option<usize>,
    /// `"ok"` or the first violated invariant.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub verification: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub membership: Option<Membership>,
    pub certificate: NestedCertificate,
}

fn find_point_table(r: &FindPointReport) -> Table {
    let mut t = Table::new(&["level", "index", "center", "length", "ln_length", "start", "end", "candidates"]);
    t.note("found", r.found);
    if let Some(level) = r.exhausted_level {
        t.note("exhausted_level", level);
    }
    t.note("point", fmt_opt_float(r.certificate.point.map(|p| p.position())));
    if let Some(v) = &r.verification {
        t.note("verification", v);
    }
    if let Some(m) = &r.membership {
        t.note("membership_horizon", m.horizon);
        t.note("membership_hits", m.hits);
    }
    for (k, a) in r.certificate.arcs.iter().enumerate() {
        t.row(vec![
            (k + 1).to_string(),
            a.index.to_string(),
            fmt_float(a.center.position()),
            fmt_float(a.length),
            fmt_float(a.ln_length),
            fmt_float(a.endpoints[0]),
            fmt_float(a.endpoints[1]),
            r.certificate.candidates_per_level[k].to_string(),
        ]);
    }
    t
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub seq: LengthSequence,
    pub critical_exponent: f64,
    pub estimate: DimensionEnsemble,
}

fn sweep_table(param: &str, points: &[SweepPoint]) -> Table {
    let mut t = Table::new(&[param, "critical_exponent", "mean_slope", "sd_slope", "levels", "degenerate_trials"]);
    for p in points {
        t.row(vec![
            p.value.to_string(),
            fmt_float(p.critical_exponent),
            fmt_float(p.estimate.mean_slope),
            fmt_float(p.estimate.sd_slope),
            format!("{}..{}", p.estimate.levels.min, p.estimate.levels.max),
            p.estimate.degenerate_trials.to_string(),
        ]);
    }
    t
}

fn write_artifact<R: Serialize>(config: &ExperimentConfig, result: &R, table: Table) -> std::io::Result<()> {
    let meta = Metadata::new(config.command_line(), config);
    let bytes = match config.format {
        Format::Csv => output::render_csv(&meta, &table)?,
        Format::Json => output::render_json(&meta, result)?,
    };
    output::emit(config.out.as_deref(), &bytes)
}

/// Runs a parsed configuration and writes its artifact.
pub fn run_command(config: &ExperimentConfig) -> std::result::Result<(), CliError> {
    let seq = config.sequence()?;
    match config.command {
        CommandKind::Analyze => {
            let gauge = config.gauge.as_deref().map(str::parse::<GaugeFunction>).transpose()?;
            let report = run_analyze(&seq, gauge.as_ref())?;
            if config.out.is_some() {
                write_artifact(config, &report, analyze_table(&report))?;
            } else {
                output::emit(None::<&Path>, render_report(&report).as_bytes())?;
            }
        }
        CommandKind::Simulate => {
            let base = config.base_trial(seq).with_tail_starts(config.tails.clone().unwrap_or_default());
            let stats = run_ensemble(&base, config.trials.unwrap_or(DEFAULT_SIM_TRIALS))?;
            write_artifact(config, &stats, simulate_table(&stats))?;
        }
        CommandKind::Dimension => {
            let window = config.window.map(WindowArg::arc).transpose()?;
            let e = dimension_ensemble(
                &config.base_trial(seq),
                config.trials.unwrap_or(DEFAULT_DIM_TRIALS),
                config.tail(),
                window.as_ref(),
                config.levels.and_then(LevelChoice::range),
                config.surrogate.unwrap_or_default(),
            )?;
            write_artifact(config, &e, dimension_table(&e))?;
        }
        CommandKind::Intersect => {
            let e = intersection_ensemble(
                &config.base_trial(seq),
                config.trials.unwrap_or(DEFAULT_DIM_TRIALS),
                config.copies.unwrap_or(DEFAULT_COPIES),
                config.tail(),
                config.levels.and_then(LevelChoice::range),
                config.surrogate.unwrap_or(Surrogate::TailUnion),
            )?;
            write_artifact(config, &e, dimension_table(&e))?;
        }
        CommandKind::FindPoint => {
            let (seed, trial) = (config.seed.unwrap_or(DEFAULT_SEED), config.trial.unwrap_or(0));
            let depth = config.depth.unwrap_or(DEFAULT_DEPTH);
            let report = match find_point(seed, trial, &seq, depth, config.cap.unwrap_or(DEFAULT_SEARCH_CAP)) {
                Ok(cert) => {
                    let horizon = config.horizon.unwrap_or_else(|| cert.arcs.last().map_or(1, |a| a.index));
                    let point = cert.point.expect("successful search sets the point");
                    FindPointReport {
                        found: true,
                        exhausted_level: None,
                        verification: Some(verify_certificate(&cert).map_or_else(|e| e.to_string(), |_| "ok".into())),
                        membership: Some(Membership { horizon, hits: verify_membership(point, seed, trial, &seq, horizon) }),
                        certificate: cert,
                    }
                }
                Err(FindPointError::Exhausted { level, partial, .. }) => FindPointReport {
                    found: false,
                    exhausted_level: Some(level),
                    verification: None,
                    membership: None,
                    certificate: *partial,
                },
                Err(FindPointError::Invalid(e)) => return Err(e.into()),
            };
            write_artifact(config, &report, find_point_table(&report))?;
            if let Some(level) = report.exhausted_level {
                return Err(CliError::SearchExhausted(format!(
                    "search cap exhausted at level {level}; partial certificate written"
                )));
            }
        }
        CommandKind::Sweep => {
            let sweep = config.sweep.as_ref().ok_or_else(|| CliError::Usage("sweep needs --sweep".into()))?;
            let window = config.window.map(WindowArg::arc).transpose()?;
            let points = sweep
                .values
                .iter()
                .map(|&v| {
                    let s = seq.with_param(&sweep.param, v)?;
                    let estimate = dimension_ensemble(
                        &config.base_trial(s.clone()),
                        config.trials.unwrap_or(DEFAULT_DIM_TRIALS),
                        config.tail(),
                        window.as_ref(),
                        config.levels.and_then(LevelChoice::range),
                        config.surrogate.unwrap_or_default(),
                    )?;
                    Ok(SweepPoint { value: v, critical_exponent: critical_exponent(&s)?.value, seq: s, estimate })
                })
                .collect::<Result<Vec<_>>>()?;
            write_artifact(config, &points, sweep_table(&sweep.param, &points))?;
        }
    }
    Ok(())
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match Cli::try_parse_from(argv) {
        Ok(cli) => ExperimentConfig::from_cli(cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = config.map_err(CliError::from).and_then(|c| run_command(&c));
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
