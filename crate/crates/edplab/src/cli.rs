//! Reproducible experiment runner: argument parsing, seed handling, and
//! result emission for every subsystem.
//!
//! Every run emits one JSON document `{config, result, meta}`. The
//! `config` block echoes the exact canonical parameters (re-runnable with
//! `edplab rerun --config <file>`), `result` is a pure function of
//! `config`, and volatile data (timestamps, wall time) live only under
//! `meta`, so two runs with the same seed agree byte-for-byte on
//! config+result at any worker count. Randomized experiments require an
//! explicit seed; there is no ambient entropy anywhere.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use num_rational::Ratio;
use serde::Serialize;
use serde_json::{json, Value};

use crate::averaging::{self, AverageMode, FolnerBox};
use crate::correlation::{self, CorrelationReport, ShiftFactor, TorusFunction};
use crate::discrepancy::{self, DiscrepancyMetric, SignSampler};
use crate::error::{Error, Result};
use crate::gram::{self, GramForm};
use crate::numtheory::{FactorizationTable, MultiplicativeFunctionSpec};
use crate::poly::PhasePoly;
use crate::randomized;
use crate::search::{self, SearchMode, SearchParams, SearchStatus};
use crate::sequence::UnitDiscSequence;
use crate::weights::{self, WeightSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_RESOURCE: i32 = 2;

/// Documented doubles for the symbolic irrational tokens.
pub fn parse_real(tok: &str) -> Result<f64> {
    match tok {
        "sqrt2" => Ok(std::f64::consts::SQRT_2),
        "golden" => Ok((1.0 + 5f64.sqrt()) / 2.0),
        "pi" => Ok(std::f64::consts::PI),
        _ => tok
            .parse::<f64>()
            .map_err(|_| Error::domain(format!("cannot parse real token '{tok}'"))),
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "edplab",
    version,
    about = "Weighted discrepancy laboratory: weights, averages, correlations, searches",
    propagate_version = true
)]
pub struct Cli {
    /// Worker threads; results are identical at any count.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format for the payload.
    #[arg(long, global = true, default_value = "json")]
    pub format: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Materialize a weight sequence
    Weight {
        #[command(subcommand)]
        action: WeightAction,
    },
    /// Discrepancy profiles and growth experiments
    Discrepancy {
        #[command(subcommand)]
        action: DiscrepancyAction,
    },
    /// Extremal bounded-discrepancy sequence search
    Search {
        #[command(subcommand)]
        action: SearchAction,
    },
    /// Correlation estimators
    Correlate {
        #[command(subcommand)]
        action: CorrelateAction,
    },
    /// Folner boxes and dilation defects
    Folner {
        #[command(subcommand)]
        action: FolnerAction,
    },
    /// Gram matrices of dilated correlations
    Gram {
        #[command(subcommand)]
        action: GramAction,
    },
    /// Monte-Carlo experiments
    Randomized {
        #[command(subcommand)]
        action: RandomizedAction,
    },
    /// Pattern certificates
    Certificate {
        #[command(subcommand)]
        action: CertificateAction,
    },
    /// Re-run a previously emitted config document
    Rerun {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
pub enum WeightAction {
    /// Generate w(1..=N) from a weight token
    Gen(WeightGenArgs),
}

#[derive(Args, Debug)]
pub struct WeightGenArgs {
    /// Weight token, e.g. poly:2:sqrt2, step3:2:sqrt2, random, sparse:log
    #[arg(long)]
    pub spec: String,
    #[arg(long = "N")]
    pub n: u64,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
pub enum DiscrepancyAction {
    /// Checkpointed max of |S_d(n)| over d*n <= N'
    Profile(ProfileArgs),
    /// Profiles of sampled random multiplicative sequences against w
    Growth(GrowthArgs),
}

#[derive(Args, Debug)]
pub struct ProfileArgs {
    /// Sequence token for a
    #[arg(long)]
    pub a: String,
    /// Weight token for w
    #[arg(long)]
    pub w: String,
    #[arg(long = "N")]
    pub n: u64,
    /// Comma list of scales, or "decades"
    #[arg(long, default_value = "decades")]
    pub checkpoints: String,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct GrowthArgs {
    #[arg(long)]
    pub w: String,
    #[arg(long = "N")]
    pub n: u64,
    #[arg(long, default_value = "decades")]
    pub checkpoints: String,
    #[arg(long)]
    pub samples: usize,
    #[arg(long)]
    pub seed: u64,
    /// pm1 or circle
    #[arg(long, default_value = "pm1")]
    pub sampler: String,
}

#[derive(Subcommand, Debug)]
pub enum SearchAction {
    /// Longest +-1 sequence with all |S_d(n)| <= C
    Maxlen(MaxlenArgs),
}

#[derive(Args, Debug)]
pub struct MaxlenArgs {
    #[arg(long = "C")]
    pub c: f64,
    /// Weight token; "constant" runs the exact integer engine
    #[arg(long, default_value = "constant")]
    pub weight: String,
    /// arbitrary or multiplicative
    #[arg(long, default_value = "arbitrary")]
    pub mode: String,
    /// Node budget; accepts scientific notation like 1e8
    #[arg(long, default_value = "1e8")]
    pub budget: String,
    #[arg(long, default_value_t = 64)]
    pub horizon: u32,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
pub enum CorrelateAction {
    /// gamma(h) = E a(n+h) conj(a(n)) over a range of shifts
    #[command(name = "self")]
    SelfCorr(SelfArgs),
    /// E |sum_{h<=H} b(n+h)|^2 for a list of window lengths
    Window(WindowArgs),
    /// |E(A B) - E(A) E(B)| for two sequences
    Decouple(DecoupleArgs),
    /// E phi({P(n+h)}) psi({P(n)}) against the product of integrals
    Weyl(WeylArgs),
}

#[derive(Args, Debug)]
pub struct SelfArgs {
    /// Sequence token
    #[arg(long)]
    pub w: String,
    /// Shift list: "1..4" or "1,2,5"
    #[arg(long)]
    pub h: String,
    #[arg(long = "N")]
    pub n: u64,
    /// log or cesaro
    #[arg(long, default_value = "log")]
    pub mode: String,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct WindowArgs {
    #[arg(long)]
    pub w: String,
    /// Window lengths, e.g. 5,10,20
    #[arg(long)]
    pub windows: String,
    #[arg(long = "N")]
    pub n: u64,
    #[arg(long, default_value = "log")]
    pub mode: String,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct DecoupleArgs {
    #[arg(long)]
    pub a: String,
    #[arg(long)]
    pub b: String,
    #[arg(long = "N")]
    pub n: u64,
    #[arg(long, default_value = "log")]
    pub mode: String,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct WeylArgs {
    /// Torus function token: const, `harmonic:<m>`, step3
    #[arg(long)]
    pub phi: String,
    #[arg(long)]
    pub psi: String,
    /// Polynomial token deg:lead, e.g. 2:sqrt2
    #[arg(long)]
    pub poly: String,
    #[arg(long)]
    pub h: u64,
    #[arg(long = "N")]
    pub n: u64,
}

#[derive(Subcommand, Debug)]
pub enum FolnerAction {
    /// Dilation defects of a prime-power box
    Defects(DefectsArgs),
}

#[derive(Args, Debug)]
pub struct DefectsArgs {
    #[arg(long)]
    pub primes: usize,
    #[arg(long = "max-exp")]
    pub max_exp: u32,
    /// Comma list of rationals, e.g. 2,3,3/2
    #[arg(long)]
    pub r: String,
}

#[derive(Subcommand, Debug)]
pub enum GramAction {
    /// PSD check of the dilated-correlation Gram matrix
    Check(GramArgs),
}

#[derive(Args, Debug)]
pub struct GramArgs {
    /// Sequence-function token: ones, liouville, random-circle
    #[arg(long)]
    pub a: String,
    #[arg(long)]
    pub rationals: String,
    #[arg(long)]
    pub primes: usize,
    #[arg(long = "max-exp")]
    pub max_exp: u32,
    /// exact, quotient, or both
    #[arg(long, default_value = "both")]
    pub form: String,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
pub enum RandomizedAction {
    /// Tail frequency of |E X_n b(n)| against exp(-delta^2 N/4)
    Bernstein(BernsteinArgs),
    /// Sampled net-uniform orthogonality maxima over an N grid
    Netexp(NetexpArgs),
}

#[derive(Args, Debug)]
pub struct BernsteinArgs {
    #[arg(long, default_value = "ones")]
    pub b: String,
    #[arg(long = "N")]
    pub n: u64,
    #[arg(long)]
    pub delta: f64,
    #[arg(long)]
    pub trials: u64,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct NetexpArgs {
    #[arg(long, default_value = "ones")]
    pub a: String,
    #[arg(long, default_value_t = 1)]
    pub ell: usize,
    /// Comma list, one shift per factor
    #[arg(long, default_value = "0")]
    pub shifts: String,
    #[arg(long = "n-grid")]
    pub n_grid: String,
    #[arg(long)]
    pub samples: u64,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
pub enum CertificateAction {
    /// Smallest r with w = c on the whole m x m pattern r*m!/i + j
    Find(CertificateArgs),
}

#[derive(Args, Debug)]
pub struct CertificateArgs {
    #[arg(long)]
    pub weight: String,
    #[arg(long = "c-re", default_value_t = 1.0)]
    pub c_re: f64,
    #[arg(long = "c-im", default_value_t = 0.0)]
    pub c_im: f64,
    #[arg(long)]
    pub m: u32,
    #[arg(long = "r-max")]
    pub r_max: String,
    #[arg(long)]
    pub seed: Option<u64>,
}

// ---------------------------------------------------------------------------
// token parsing

fn parse_mode(s: &str) -> Result<AverageMode> {
    match s {
        "log" | "logarithmic" => Ok(AverageMode::Logarithmic),
        "cesaro" => Ok(AverageMode::Cesaro),
        _ => Err(Error::domain(format!("unknown averaging mode '{s}'"))),
    }
}

fn parse_u64_list(s: &str) -> Result<Vec<u64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<u64>()
                .map_err(|_| Error::domain(format!("cannot parse integer '{t}'")))
        })
        .collect()
}

/// "1..4" or "1,2,5".
fn parse_shift_list(s: &str) -> Result<Vec<u64>> {
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: u64 = lo
            .parse()
            .map_err(|_| Error::domain(format!("bad range start '{lo}'")))?;
        let hi: u64 = hi
            .parse()
            .map_err(|_| Error::domain(format!("bad range end '{hi}'")))?;
        if lo > hi {
            return Err(Error::domain("empty shift range"));
        }
        Ok((lo..=hi).collect())
    } else {
        parse_u64_list(s)
    }
}

/// "decades" means every power of ten up to N, plus N itself.
fn parse_checkpoints(s: &str, n: u64) -> Result<Vec<u64>> {
    if s == "decades" {
        let mut cps = Vec::new();
        let mut c = 10u64;
        while c < n {
            cps.push(c);
            c = c.saturating_mul(10);
        }
        cps.push(n);
        Ok(cps)
    } else {
        parse_u64_list(s)
    }
}

fn parse_budget(s: &str) -> Result<u64> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = s
        .parse()
        .map_err(|_| Error::domain(format!("cannot parse budget '{s}'")))?;
    if !(f >= 1.0 && f <= u64::MAX as f64) {
        return Err(Error::domain("budget out of range"));
    }
    Ok(f as u64)
}

fn parse_ratio(s: &str) -> Result<Ratio<u64>> {
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a, b),
        None => (s, "1"),
    };
    let n: u64 = num
        .trim()
        .parse()
        .map_err(|_| Error::domain(format!("bad rational '{s}'")))?;
    let d: u64 = den
        .trim()
        .parse()
        .map_err(|_| Error::domain(format!("bad rational '{s}'")))?;
    if n == 0 || d == 0 {
        return Err(Error::domain("rational must be positive"));
    }
    Ok(Ratio::new(n, d))
}

fn parse_ratio_list(s: &str) -> Result<Vec<Ratio<u64>>> {
    s.split(',').map(|t| parse_ratio(t.trim())).collect()
}

/// "deg:lead[:next:...]", coefficients from the leading one down; trailing
/// coefficients default to zero.
fn parse_poly(tok: &str) -> Result<PhasePoly> {
    let mut parts = tok.split(':');
    let deg: usize = parts
        .next()
        .and_then(|d| d.parse().ok())
        .ok_or_else(|| Error::domain(format!("bad polynomial token '{tok}'")))?;
    let mut coeffs = vec![0.0; deg + 1];
    let mut idx = deg as i64;
    for p in parts {
        if idx < 0 {
            return Err(Error::domain("too many polynomial coefficients"));
        }
        coeffs[idx as usize] = parse_real(p)?;
        idx -= 1;
    }
    Ok(PhasePoly::new(coeffs))
}

/// Weight tokens: `ones | constant[:re[,im]] | poly:<deg>:<coeffs> |`
/// `linear:<alpha> | step3:<deg>:<coeffs> | random | sparse:log[:re[,im]] |`
/// `parity | intervals:lo-hi[,lo-hi...]`
pub fn parse_weight_spec(
    tok: &str,
    n: u64,
    seed: Option<u64>,
    table: &FactorizationTable,
) -> Result<WeightSpec> {
    let (head, rest) = match tok.split_once(':') {
        Some((h, r)) => (h, Some(r)),
        None => (tok, None),
    };
    match head {
        "ones" | "constant" => {
            let (re, im) = match rest {
                None => (1.0, 0.0),
                Some(r) => match r.split_once(',') {
                    Some((a, b)) => (parse_real(a)?, parse_real(b)?),
                    None => (parse_real(r)?, 0.0),
                },
            };
            Ok(WeightSpec::Constant { re, im })
        }
        "poly" => {
            let p = parse_poly(rest.ok_or_else(|| Error::domain("poly needs coefficients"))?)?;
            Ok(WeightSpec::PolynomialPhase { coeffs: p.coeffs().to_vec() })
        }
        "linear" => Ok(WeightSpec::LinearPhaseCounterexample {
            alpha: parse_real(rest.ok_or_else(|| Error::domain("linear needs alpha"))?)?,
        }),
        "step3" => {
            let p = parse_poly(rest.ok_or_else(|| Error::domain("step3 needs a polynomial"))?)?;
            Ok(WeightSpec::StepWeight {
                cells: weights::three_cell_step(),
                coeffs: p.coeffs().to_vec(),
            })
        }
        "random" => Ok(WeightSpec::RandomSign { seed }),
        "sparse" => {
            let rest = rest.ok_or_else(|| Error::domain("sparse needs a rule"))?;
            let mut parts = rest.splitn(2, ':');
            let rule = match parts.next() {
                Some("log") => weights::DensityRule::OneOverLog,
                Some(other) => {
                    if let Some(a) = other.strip_prefix("pow=") {
                        weights::DensityRule::Power { a: parse_real(a)? }
                    } else if let Some(r) = other.strip_prefix("const=") {
                        weights::DensityRule::Constant { rho: parse_real(r)? }
                    } else {
                        return Err(Error::domain(format!("unknown density rule '{other}'")));
                    }
                }
                None => return Err(Error::domain("sparse needs a rule")),
            };
            let (c_re, c_im) = match parts.next() {
                None => (1.0, 0.0),
                Some(c) => match c.split_once(',') {
                    Some((a, b)) => (parse_real(a)?, parse_real(b)?),
                    None => (parse_real(c)?, 0.0),
                },
            };
            Ok(WeightSpec::SparseRandom { rule, c_re, c_im, seed })
        }
        "parity" => {
            let f = MultiplicativeFunctionSpec::one(table, n).to_json();
            Ok(WeightSpec::ParityTwist { f })
        }
        "intervals" => {
            let rest = rest.ok_or_else(|| Error::domain("intervals needs a list"))?;
            let intervals: Result<Vec<(u64, u64)>> = rest
                .split(',')
                .map(|iv| {
                    let (lo, hi) = iv
                        .split_once('-')
                        .ok_or_else(|| Error::domain(format!("bad interval '{iv}'")))?;
                    Ok((
                        lo.parse::<u64>()
                            .map_err(|_| Error::domain(format!("bad interval '{iv}'")))?,
                        hi.parse::<u64>()
                            .map_err(|_| Error::domain(format!("bad interval '{iv}'")))?,
                    ))
                })
                .collect();
            Ok(WeightSpec::IntervalIndicator { intervals: intervals? })
        }
        _ => Err(Error::domain(format!("unknown weight token '{tok}'"))),
    }
}

/// Sequence tokens: every weight token, plus liouville | cm-pm1 | cm-circle.
pub fn parse_sequence(
    tok: &str,
    n: u64,
    seed: Option<u64>,
    table: &FactorizationTable,
) -> Result<UnitDiscSequence> {
    match tok {
        "liouville" => {
            let lam = MultiplicativeFunctionSpec::liouville(table);
            let dense = lam.eval_range(table, n)?;
            UnitDiscSequence::new(dense[1..].to_vec(), "liouville")
        }
        "cm-pm1" | "cm-circle" => {
            let seed =
                seed.ok_or_else(|| Error::domain(format!("sequence '{tok}' requires a seed")))?;
            let spec = if tok == "cm-pm1" {
                MultiplicativeFunctionSpec::random_pm1(table, n, seed)?
            } else {
                MultiplicativeFunctionSpec::random_unit_circle(table, n, seed)?
            };
            let dense = spec.eval_range(table, n)?;
            UnitDiscSequence::new(dense[1..].to_vec(), spec.label())
        }
        _ => parse_weight_spec(tok, n, seed, table)?.materialize(n, table),
    }
}

fn parse_torus_function(tok: &str) -> Result<TorusFunction> {
    match tok.split_once(':') {
        None => match tok {
            "const" => Ok(TorusFunction::Constant { re: 1.0, im: 0.0 }),
            "step3" => Ok(TorusFunction::Step { cells: weights::three_cell_step() }),
            _ => Err(Error::domain(format!("unknown torus function '{tok}'"))),
        },
        Some(("harmonic", m)) => Ok(TorusFunction::Harmonic {
            m: m.parse()
                .map_err(|_| Error::domain(format!("bad harmonic index '{m}'")))?,
        }),
        Some(("const", v)) => Ok(TorusFunction::Constant { re: parse_real(v)?, im: 0.0 }),
        _ => Err(Error::domain(format!("unknown torus function '{tok}'"))),
    }
}

/// Sequence-function tokens for box-indexed averages.
fn parse_seq_fn(
    tok: &str,
    horizon: u64,
    seed: Option<u64>,
) -> Result<Box<dyn Fn(u64) -> Result<Complex64> + Sync>> {
    match tok {
        "ones" => Ok(Box::new(|_| Ok(Complex64::new(1.0, 0.0)))),
        "liouville" => {
            let table = FactorizationTable::build(horizon)?;
            Ok(Box::new(move |d| {
                let omega = table.big_omega(d)?;
                Ok(Complex64::new(if omega % 2 == 0 { 1.0 } else { -1.0 }, 0.0))
            }))
        }
        "random-circle" => {
            let seed = seed
                .ok_or_else(|| Error::domain("random-circle sequence requires a seed"))?;
            Ok(Box::new(move |d| Ok(crate::numeric::e2pi(crate::rng::unit_f64(seed, d)))))
        }
        _ => Err(Error::domain(format!("unknown sequence function '{tok}'"))),
    }
}

// ---------------------------------------------------------------------------
// run documents

#[derive(Serialize)]
pub struct ExperimentConfig {
    pub command: Vec<String>,
    pub params: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub format: String,
    pub workers: usize,
}

pub struct RunOutcome {
    pub exit_code: i32,
    pub summary: String,
    /// Full JSON document (config + result + meta).
    pub document: Value,
    /// CSV payload when the subcommand has a tabular form.
    pub csv: Option<String>,
}

struct RunParts {
    command: Vec<String>,
    params: BTreeMap<String, String>,
    seed: Option<u64>,
    result: Value,
    summary: String,
    csv: Option<String>,
    exit_code: i32,
}

fn fmt_f64(x: f64) -> String {
    // shortest round-trip formatting, stable across runs
    let mut s = format!("{x}");
    if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
        s.push_str(".0");
    }
    s
}

macro_rules! params {
    ($($k:expr => $v:expr),* $(,)?) => {{
        let mut m = BTreeMap::new();
        $(m.insert($k.to_string(), $v.to_string());)*
        m
    }};
}

fn run_parts(command: &Command) -> Result<RunParts> {
    match command {
        Command::Weight { action: WeightAction::Gen(a) } => {
            let table = FactorizationTable::build(a.n.max(2))?;
            let spec = parse_weight_spec(&a.spec, a.n, a.seed, &table)?;
            let w = spec.materialize(a.n, &table)?;
            let values: Vec<[f64; 2]> = w.values().iter().map(|v| [v.re, v.im]).collect();
            Ok(RunParts {
                command: vec!["weight".into(), "gen".into()],
                params: params! {"spec" => a.spec, "N" => a.n},
                seed: a.seed,
                result: json!({
                    "label": w.label(),
                    "n": a.n,
                    "spec": serde_json::to_value(&spec)?,
                    "values": values,
                }),
                summary: format!("weight gen: {} values of {}", a.n, w.label()),
                csv: Some(w.to_csv()),
                exit_code: EXIT_OK,
            })
        }
        Command::Discrepancy { action: DiscrepancyAction::Profile(a) } => {
            let table = FactorizationTable::build(a.n.max(2))?;
            let seq = parse_sequence(&a.a, a.n, a.seed, &table)?;
            let w = parse_sequence(&a.w, a.n, a.seed.map(|s| s.wrapping_add(1)), &table)?;
            let cps = parse_checkpoints(&a.checkpoints, a.n)?;
            let p = discrepancy::discrepancy_profile(&seq, &w, a.n, &cps, DiscrepancyMetric::Modulus)?;
            let last = *p.values.last().unwrap();
            Ok(RunParts {
                command: vec!["discrepancy".into(), "profile".into()],
                params: params! {"a" => a.a, "w" => a.w, "N" => a.n, "checkpoints" => a.checkpoints},
                seed: a.seed,
                result: serde_json::to_value(&p)?,
                summary: format!(
                    "discrepancy profile: value {} at N = {} (witness d={}, n={})",
                    fmt_f64(last),
                    p.checkpoints.last().unwrap(),
                    p.witnesses.last().unwrap().0,
                    p.witnesses.last().unwrap().1
                ),
                csv: Some(p.to_csv()),
                exit_code: EXIT_OK,
            })
        }
        Command::Discrepancy { action: DiscrepancyAction::Growth(a) } => {
            let sampler = match a.sampler.as_str() {
                "pm1" => SignSampler::Pm1,
                "circle" => SignSampler::Circle,
                other => return Err(Error::domain(format!("unknown sampler '{other}'"))),
            };
            let table = FactorizationTable::build(a.n.max(2))?;
            let w = parse_sequence(&a.w, a.n, None, &table)?;
            let cps = parse_checkpoints(&a.checkpoints, a.n)?;
            let g = discrepancy::growth_experiment(sampler, &w, a.n, &cps, a.samples, a.seed, &table)?;
            Ok(RunParts {
                command: vec!["discrepancy".into(), "growth".into()],
                params: params! {
                    "w" => a.w, "N" => a.n, "checkpoints" => a.checkpoints,
                    "samples" => a.samples, "sampler" => a.sampler
                },
                seed: Some(a.seed),
                summary: format!(
                    "discrepancy growth: median {} -> {} over {} samples",
                    fmt_f64(g.median[0]),
                    fmt_f64(*g.median.last().unwrap()),
                    a.samples
                ),
                result: serde_json::to_value(&g)?,
                csv: None,
                exit_code: EXIT_OK,
            })
        }
        Command::Search { action: SearchAction::Maxlen(a) } => {
            let mode = match a.mode.as_str() {
                "arbitrary" => SearchMode::ArbitrarySigns,
                "multiplicative" => SearchMode::CompletelyMultiplicativeSigns,
                other => return Err(Error::domain(format!("unknown search mode '{other}'"))),
            };
            let budget = parse_budget(&a.budget)?;
            let params = SearchParams::new(a.c, a.horizon, budget, mode);
            let result = if a.weight == "constant" || a.weight == "ones" {
                search::max_length_search(&params, None)?
            } else {
                let table = FactorizationTable::build(a.horizon as u64 * 2)?;
                let w = parse_sequence(&a.weight, a.horizon as u64, a.seed, &table)?;
                search::max_length_search(&params, Some(&w))?
            };
            let exit = if result.status == SearchStatus::Exhausted {
                EXIT_OK
            } else {
                EXIT_RESOURCE
            };
            // wall time is volatile; it lives in meta, not in the result
            let mut result_value = serde_json::to_value(&result)?;
            result_value.as_object_mut().unwrap().remove("wall_time");
            Ok(RunParts {
                command: vec!["search".into(), "maxlen".into()],
                params: params! {
                    "C" => fmt_f64(a.c), "weight" => a.weight, "mode" => a.mode,
                    "budget" => budget, "horizon" => a.horizon
                },
                seed: a.seed,
                summary: format!(
                    "search maxlen: max_length {} ({:?}), {} nodes",
                    result.max_length_found, result.status, result.nodes_expanded
                ),
                result: result_value,
                csv: None,
                exit_code: exit,
            })
        }
        Command::Correlate { action: CorrelateAction::SelfCorr(a) } => {
            let mode = parse_mode(&a.mode)?;
            let shifts = parse_shift_list(&a.h)?;
            let max_h = *shifts.iter().max().unwrap_or(&0);
            let table = FactorizationTable::build((a.n + max_h).max(2))?;
            let seq = parse_sequence(&a.w, a.n + max_h, a.seed, &table)?;
            let rep = CorrelationReport::compute(&seq, &shifts, a.n, mode)?;
            let worst = rep
                .estimates
                .iter()
                .map(|e| (e[0] * e[0] + e[1] * e[1]).sqrt())
                .fold(0.0f64, f64::max);
            Ok(RunParts {
                command: vec!["correlate".into(), "self-corr".into()],
                params: params! {"w" => a.w, "h" => a.h, "N" => a.n, "mode" => a.mode},
                seed: a.seed,
                result: serde_json::to_value(&rep)?,
                summary: format!(
                    "correlate self: max |gamma(h)| = {} over h in {:?}",
                    fmt_f64(worst),
                    shifts
                ),
                csv: Some(rep.to_csv()),
                exit_code: EXIT_OK,
            })
        }
        Command::Correlate { action: CorrelateAction::Window(a) } => {
            let mode = parse_mode(&a.mode)?;
            let windows = parse_u64_list(&a.windows)?;
            let max_w = *windows.iter().max().unwrap_or(&0);
            let table = FactorizationTable::build((a.n + max_w).max(2))?;
            let seq = parse_sequence(&a.w, a.n + max_w, a.seed, &table)?;
            let mut rows = Vec::new();
            for &h in &windows {
                let v = correlation::window_variance(&seq, h, a.n, mode)?;
                rows.push(json!({"H": h, "variance": v, "ratio_to_H": v / h as f64}));
            }
            let csv = {
                let mut s = String::from("H,variance,ratio_to_H\n");
                for r in &rows {
                    s.push_str(&format!(
                        "{},{},{}\n",
                        r["H"], r["variance"], r["ratio_to_H"]
                    ));
                }
                s
            };
            Ok(RunParts {
                command: vec!["correlate".into(), "window".into()],
                params: params! {"w" => a.w, "windows" => a.windows, "N" => a.n, "mode" => a.mode},
                seed: a.seed,
                result: json!({"rows": rows, "n": a.n, "mode": a.mode}),
                summary: format!("correlate window: {} window lengths at N = {}", windows.len(), a.n),
                csv: Some(csv),
                exit_code: EXIT_OK,
            })
        }
        Command::Correlate { action: CorrelateAction::Decouple(a) } => {
            let mode = parse_mode(&a.mode)?;
            let table = FactorizationTable::build(a.n.max(2))?;
            let sa = parse_sequence(&a.a, a.n, a.seed, &table)?;
            let sb = parse_sequence(&a.b, a.n, a.seed.map(|s| s.wrapping_add(1)), &table)?;
            let defect = correlation::decoupling_defect(
                &[ShiftFactor { seq: &sa, shift: 0, conjugate: false }],
                &[ShiftFactor { seq: &sb, shift: 0, conjugate: false }],
                a.n,
                mode,
            )?;
            Ok(RunParts {
                command: vec!["correlate".into(), "decouple".into()],
                params: params! {"a" => a.a, "b" => a.b, "N" => a.n, "mode" => a.mode},
                seed: a.seed,
                result: json!({"defect": defect, "n": a.n, "mode": a.mode}),
                summary: format!("correlate decouple: defect = {}", fmt_f64(defect)),
                csv: None,
                exit_code: EXIT_OK,
            })
        }
        Command::Correlate { action: CorrelateAction::Weyl(a) } => {
            let phi = parse_torus_function(&a.phi)?;
            let psi = parse_torus_function(&a.psi)?;
            let poly = parse_poly(&a.poly)?;
            let (est, target) = correlation::weyl_product_correlation(&phi, &psi, &poly, a.h, a.n)?;
            Ok(RunParts {
                command: vec!["correlate".into(), "weyl".into()],
                params: params! {"phi" => a.phi, "psi" => a.psi, "poly" => a.poly, "h" => a.h, "N" => a.n},
                seed: None,
                result: json!({
                    "estimate": [est.re, est.im],
                    "target": [target.re, target.im],
                    "deviation": (est - target).norm(),
                }),
                summary: format!(
                    "correlate weyl: |estimate - target| = {}",
                    fmt_f64((est - target).norm())
                ),
                csv: None,
                exit_code: EXIT_OK,
            })
        }
        Command::Folner { action: FolnerAction::Defects(a) } => {
            let rationals = parse_ratio_list(&a.r)?;
            let table = FactorizationTable::build(1_000)?;
            let folner = FolnerBox::build(a.primes, a.max_exp, &table)?;
            let mut rows = Vec::new();
            let mut csv = String::from("r,defect\n");
            for &r in &rationals {
                let d = averaging::dilation_defect(&folner, r)?;
                rows.push(json!({
                    "r": format!("{}/{}", r.numer(), r.denom()),
                    "defect": d,
                }));
                csv.push_str(&format!("{}/{},{}\n", r.numer(), r.denom(), d));
            }
            Ok(RunParts {
                command: vec!["folner".into(), "defects".into()],
                params: params! {"primes" => a.primes, "max-exp" => a.max_exp, "r" => a.r},
                seed: None,
                result: json!({
                    "box": {"primes": a.primes, "max_exponent": a.max_exp, "size": folner.len()},
                    "defects": rows,
                }),
                summary: format!(
                    "folner defects: box size {}, {} ratios",
                    folner.len(),
                    rationals.len()
                ),
                csv: Some(csv),
                exit_code: EXIT_OK,
            })
        }
        Command::Gram { action: GramAction::Check(a) } => {
            let rationals = parse_ratio_list(&a.rationals)?;
            let table = FactorizationTable::build(1_000)?;
            let folner = FolnerBox::build(a.primes, a.max_exp, &table)?;
            let max_elem = *folner.elements().last().unwrap();
            let max_num = rationals.iter().map(|r| *r.numer()).max().unwrap_or(1);
            let horizon = max_elem.saturating_mul(max_num);
            let f = parse_seq_fn(&a.a, horizon, a.seed)?;
            let forms: Vec<GramForm> = match a.form.as_str() {
                "exact" => vec![GramForm::ExactForm],
                "quotient" => vec![GramForm::QuotientForm],
                "both" => vec![GramForm::ExactForm, GramForm::QuotientForm],
                other => return Err(Error::domain(format!("unknown gram form '{other}'"))),
            };
            let mut reports = Vec::new();
            for &form in &forms {
                reports.push(gram::gram_psd_check(&*f, &rationals, &folner, form)?);
            }
            let mut result = json!({"reports": reports});
            if reports.len() == 2 {
                let m = rationals.len();
                let mut max_diff = 0.0f64;
                for i in 0..m {
                    for j in 0..m {
                        let d = Complex64::new(
                            reports[0].matrix[i][j][0] - reports[1].matrix[i][j][0],
                            reports[0].matrix[i][j][1] - reports[1].matrix[i][j][1],
                        )
                        .norm();
                        max_diff = max_diff.max(d);
                    }
                }
                let bound = 2.0 * reports[1].folner_defect_max;
                result["comparison"] = json!({
                    "max_entry_diff": max_diff,
                    "bound_two_max_defect": bound,
                    "within_bound": max_diff <= bound + 1e-9,
                });
            }
            let min_eig = reports.iter().map(|r| r.min_eigenvalue).fold(f64::INFINITY, f64::min);
            Ok(RunParts {
                command: vec!["gram".into(), "check".into()],
                params: params! {
                    "a" => a.a, "rationals" => a.rationals, "primes" => a.primes,
                    "max-exp" => a.max_exp, "form" => a.form
                },
                seed: a.seed,
                result,
                summary: format!("gram check: min eigenvalue {}", fmt_f64(min_eig)),
                csv: None,
                exit_code: EXIT_OK,
            })
        }
        Command::Randomized { action: RandomizedAction::Bernstein(a) } => {
            let table = FactorizationTable::build(a.n.max(2))?;
            let b = parse_sequence(&a.b, a.n, Some(a.seed.wrapping_add(1)), &table)?;
            let rep = randomized::bernstein_tail_mc(&b, a.n, a.delta, a.trials, a.seed)?;
            Ok(RunParts {
                command: vec!["randomized".into(), "bernstein".into()],
                params: params! {
                    "b" => a.b, "N" => a.n, "delta" => fmt_f64(a.delta), "trials" => a.trials
                },
                seed: Some(a.seed),
                summary: format!(
                    "randomized bernstein: empirical {} vs bound {}",
                    fmt_f64(rep.empirical_tail),
                    fmt_f64(rep.theoretical_bound)
                ),
                csv: Some(format!(
                    "N,delta,trials,empirical_tail,theoretical_bound,mc_halfwidth\n{},{},{},{},{},{}\n",
                    rep.n, rep.delta, rep.trials, rep.empirical_tail, rep.theoretical_bound,
                    rep.mc_halfwidth
                )),
                result: serde_json::to_value(&rep)?,
                exit_code: EXIT_OK,
            })
        }
        Command::Randomized { action: RandomizedAction::Netexp(a) } => {
            let grid = parse_u64_list(&a.n_grid)?;
            let shifts = parse_u64_list(&a.shifts)?;
            let top = *grid.last().ok_or_else(|| Error::domain("empty N grid"))?;
            let table = FactorizationTable::build(top.max(2))?;
            let seq = parse_sequence(&a.a, top, Some(a.seed.wrapping_add(1)), &table)?;
            let rep = randomized::net_orthogonality_experiment(
                &seq, a.ell, &shifts, &grid, a.samples, a.seed, &table,
            )?;
            Ok(RunParts {
                command: vec!["randomized".into(), "netexp".into()],
                params: params! {
                    "a" => a.a, "ell" => a.ell, "shifts" => a.shifts,
                    "n-grid" => a.n_grid, "samples" => a.samples
                },
                seed: Some(a.seed),
                summary: format!(
                    "randomized netexp: max |avg| {} at N = {}",
                    fmt_f64(rep.rows.last().unwrap().max_abs),
                    top
                ),
                csv: Some({
                    let mut s = String::from("N,epsilon,delta_N,max_abs\n");
                    for row in &rep.rows {
                        s.push_str(&format!(
                            "{},{},{},{}\n",
                            row.n, row.epsilon, row.delta_n, row.max_abs
                        ));
                    }
                    s
                }),
                result: serde_json::to_value(&rep)?,
                exit_code: EXIT_OK,
            })
        }
        Command::Certificate { action: CertificateAction::Find(a) } => {
            let r_max = parse_budget(&a.r_max)?;
            let m = a.m;
            if m < 1 || m > 20 {
                return Err(Error::domain("m must be in [1, 20]"));
            }
            let fact: u64 = (1..=m as u64).product();
            let horizon = r_max
                .checked_mul(fact)
                .and_then(|x| x.checked_add(m as u64))
                .ok_or_else(|| Error::resource("pattern horizon overflows u64"))?;
            let table = FactorizationTable::build(horizon.max(2))?;
            let w = parse_sequence(&a.weight, horizon, a.seed, &table)?;
            let c = Complex64::new(a.c_re, a.c_im);
            let cert = search::find_pattern_certificate(&w, c, m, r_max)?;
            let summary = match &cert {
                Some(c) => format!("certificate find: r = {} for m = {m}", c.r),
                None => format!("certificate find: none up to r_max = {r_max}"),
            };
            Ok(RunParts {
                command: vec!["certificate".into(), "find".into()],
                params: params! {
                    "weight" => a.weight, "c-re" => fmt_f64(a.c_re), "c-im" => fmt_f64(a.c_im),
                    "m" => m, "r-max" => r_max
                },
                seed: a.seed,
                result: json!({"certificate": cert}),
                summary,
                csv: None,
                exit_code: EXIT_OK,
            })
        }
        Command::Rerun { config } => {
            let text = std::fs::read_to_string(config)?;
            let doc: Value = serde_json::from_str(&text)?;
            let conf = doc
                .get("config")
                .ok_or_else(|| Error::domain("document has no config block"))?;
            let argv = argv_from_config(conf)?;
            let cli = Cli::try_parse_from(&argv)
                .map_err(|e| Error::domain(format!("rebuilt argv failed to parse: {e}")))?;
            run_parts(&cli.command)
        }
    }
}

/// Rebuilds an argv vector from an emitted config block.
pub fn argv_from_config(conf: &Value) -> Result<Vec<String>> {
    let mut argv = vec!["edplab".to_string()];
    let command = conf
        .get("command")
        .and_then(|c| c.as_array())
        .ok_or_else(|| Error::domain("config.command missing"))?;
    for c in command {
        argv.push(
            c.as_str()
                .ok_or_else(|| Error::domain("bad command element"))?
                .to_string(),
        );
    }
    if let Some(params) = conf.get("params").and_then(|p| p.as_object()) {
        for (k, v) in params {
            argv.push(format!("--{k}"));
            argv.push(
                v.as_str()
                    .ok_or_else(|| Error::domain("bad param value"))?
                    .to_string(),
            );
        }
    }
    if let Some(seed) = conf.get("seed").and_then(|s| s.as_u64()) {
        argv.push("--seed".into());
        argv.push(seed.to_string());
    }
    if let Some(w) = conf.get("workers").and_then(|w| w.as_u64()) {
        argv.push("--workers".into());
        argv.push(w.to_string());
    }
    Ok(argv)
}

/// Runs one parsed command under a worker pool and assembles the output
/// document. Pure given (command, workers): the meta block is the only
/// volatile part.
pub fn execute(cli: &Cli) -> Result<RunOutcome> {
    let workers = if cli.workers == 0 { 1 } else { cli.workers };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::domain(format!("cannot build worker pool: {e}")))?;
    let started = std::time::Instant::now();
    let parts = pool.install(|| run_parts(&cli.command))?;
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;

    if cli.format != "json" && cli.format != "csv" {
        return Err(Error::domain(format!("unknown format '{}'", cli.format)));
    }
    if cli.format == "csv" && parts.csv.is_none() {
        return Err(Error::domain(
            "this subcommand has no CSV form; use --format json",
        ));
    }

    let config = ExperimentConfig {
        command: parts.command,
        params: parts.params,
        seed: parts.seed,
        format: cli.format.clone(),
        workers,
    };
    let timestamp_ms = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0);
    let document = json!({
        "config": serde_json::to_value(&config)?,
        "result": parts.result,
        "meta": {
            "timestamp_unix_ms": timestamp_ms,
            "wall_ms": wall_ms,
            "version": env!("CARGO_PKG_VERSION"),
        },
    });

    let payload = match cli.format.as_str() {
        "csv" => parts.csv.clone().unwrap(),
        _ => serde_json::to_string_pretty(&document)? + "\n",
    };
    if let Some(path) = &cli.out {
        std::fs::write(path, payload)?;
    }
    Ok(RunOutcome {
        exit_code: parts.exit_code,
        summary: parts.summary,
        document,
        csv: parts.csv,
    })
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Resource(_) => EXIT_RESOURCE,
        _ => EXIT_DOMAIN,
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn run_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // --help / --version are not usage errors
            let benign = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if benign { EXIT_OK } else { EXIT_DOMAIN };
        }
    };
    let to_stdout = cli.out.is_none();
    match execute(&cli) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            if to_stdout {
                if cli.format == "csv" {
                    print!("{}", outcome.csv.unwrap_or_default());
                } else {
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&outcome.document).unwrap_or_default()
                    );
                }
            }
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}
