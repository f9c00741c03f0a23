//! Scaled-down versions of the limit theorems, packaged as reports.
//!
//! Every replication draws from its own stream keyed by
//! `(master_seed, family << 48 | index)`, so reports are pure functions of
//! their configuration whatever the thread count. Reports carry a JSON summary,
//! raw per-replication rows and histogram data for plotting.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bp::{self, Ctmbp, StopRule};
use crate::error::{domain, Error, Result};
use crate::fpp::{self, ExtremaOptions};
use crate::graph::{attach_weights, generate_er, giant_component, WeightedGraph};
use crate::randomness::{make_stream, PoissonSampler, RngStream};
use crate::stats::{self, EmpiricalDistribution};
use crate::theory;

const FAMILY_REPS: u64 = 0;
const FAMILY_REFERENCE: u64 = 1;
const FAMILY_AUX: u64 = 2;
const FAMILY_DRIFT: u64 = 3;
const FAMILY_TREE: u64 = 4;
const FAMILY_LADDER: u64 = 16;

fn stream_for(seed: u64, family: u64, index: u64) -> RngStream {
    make_stream(seed, (family << 48) | index)
}

/// Replications are generated in parallel batches of this many, and results are
/// consumed in index order.
const BATCH: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    HopcountClt,
    WeightLimit,
    Dense,
    CollisionTime,
    ThinningEquivalence,
    Extrema,
    TreeClt,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        Self::HopcountClt,
        Self::WeightLimit,
        Self::Dense,
        Self::CollisionTime,
        Self::ThinningEquivalence,
        Self::Extrema,
        Self::TreeClt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::HopcountClt => "hopcount_clt",
            Self::WeightLimit => "weight_limit",
            Self::Dense => "dense",
            Self::CollisionTime => "collision_time",
            Self::ThinningEquivalence => "thinning_equivalence",
            Self::Extrema => "extrema",
            Self::TreeClt => "tree_clt",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        let key = name.replace('-', "_");
        Self::ALL.into_iter().find(|k| k.name() == key)
    }

    pub fn default_reps(self) -> usize {
        match self {
            Self::HopcountClt | Self::WeightLimit | Self::Dense => 2000,
            Self::CollisionTime => 1000,
            Self::ThinningEquivalence => 500,
            Self::Extrema => 20,
            Self::TreeClt => 5000,
        }
    }

    /// Whether the experiment samples `G(n, λ/n)` graphs.
    pub fn uses_graphs(self) -> bool {
        !matches!(self, Self::TreeClt)
    }
}

/// Kind-specific knobs; unset values take the documented defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Extras {
    /// Tree size for `tree_clt` (default 10⁴).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Pairs sampled per fresh graph (default 10).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cadence: Option<usize>,
    /// Size of the first tree in `collision_time` (default `⌈√n⌉`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_n: Option<usize>,
    /// Index `k` for the coupling diagnostic `M_k` (default `min(100, a_n)`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling_k: Option<usize>,
    /// Graph sizes for `extrema` (default `[n]`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_ladder: Option<Vec<usize>>,
    /// Draws from the limit law used as reference sample (default 10⁵; `tree_clt`: reps).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit_samples: Option<usize>,
    /// Branching-process splits per `W` estimate (default 10⁴).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_splits: Option<usize>,
    /// Second graph size for the drift check of `weight_limit` (default `n/10`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift_n: Option<usize>,
    /// Target vertex (1-based) in `thinning_equivalence` (default 2; the root is 1).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub leaf_candidates: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random_candidates: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exhaustive_below: Option<usize>,
    /// Pairs per replication behind the median pair weight in `extrema` (default 101).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub median_pairs: Option<usize>,
    /// Histogram bins in the plot data (default 40).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    /// Overrides for check thresholds, by check name.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<BTreeMap<String, f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Vertex count (ignored by `tree_clt`).
    pub n: usize,
    /// `λ = np`; for `dense` this is `λ_n`.
    pub lambda: f64,
    pub reps: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub extras: Extras,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, n: usize, lambda: f64, master_seed: u64) -> Self {
        Self {
            kind,
            n,
            lambda,
            reps: kind.default_reps(),
            master_seed,
            extras: Extras::default(),
        }
    }

    pub fn with_reps(mut self, reps: usize) -> Self {
        self.reps = reps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return domain("reps must be at least 1");
        }
        if !(self.lambda > 1.0 && self.lambda.is_finite()) {
            return domain(format!("lambda must satisfy λ > 1, got {}", self.lambda));
        }
        if self.kind.uses_graphs() {
            if self.n < 2 {
                return domain(format!("n must be at least 2, got {}", self.n));
            }
            if self.lambda > self.n as f64 {
                return domain(format!(
                    "lambda = {} exceeds n = {}, so p = λ/n would exceed 1",
                    self.lambda, self.n
                ));
            }
        }
        let e = &self.extras;
        for (name, v) in [
            ("m", e.m),
            ("cadence", e.cadence),
            ("a_n", e.a_n),
            ("limit_samples", e.limit_samples),
            ("w_splits", e.w_splits),
            ("median_pairs", e.median_pairs),
            ("bins", e.bins),
        ] {
            if v == Some(0) {
                return domain(format!("extras.{name} must be positive"));
            }
        }
        if let Some(d) = e.drift_n {
            if d < 2 || self.lambda > d as f64 {
                return domain(format!("extras.drift_n = {d} is too small for λ = {}", self.lambda));
            }
        }
        if let Some(ladder) = &e.n_ladder {
            if ladder.is_empty() || ladder.iter().any(|&m| m < 2 || self.lambda > m as f64) {
                return domain("extras.n_ladder entries must be >= 2 and >= λ");
            }
        }
        if let Some(t) = e.target {
            if t < 2 || t > self.n {
                return domain(format!("extras.target must lie in 2..={}, got {t}", self.n));
            }
        }
        Ok(())
    }

    fn p(&self) -> f64 {
        edge_probability(self.n, self.lambda)
    }

    fn threshold(&self, name: &str, default: f64) -> f64 {
        self.extras
            .thresholds
            .as_ref()
            .and_then(|t| t.get(name).copied())
            .unwrap_or(default)
    }

    fn bins(&self) -> usize {
        self.extras.bins.unwrap_or(40)
    }

    fn w_splits(&self) -> usize {
        self.extras.w_splits.unwrap_or(bp::DEFAULT_W_SPLITS)
    }
}

/// `p = min(1, λ/n)`.
pub fn edge_probability(n: usize, lambda: f64) -> f64 {
    (lambda / n as f64).min(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = ">")]
    Above,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: &str, value: f64, relation: Relation, threshold: f64) -> Self {
        let passed = match relation {
            Relation::AtMost => value <= threshold,
            Relation::AtLeast => value >= threshold,
            Relation::Above => value > threshold,
        };
        Self {
            name: name.to_string(),
            value,
            relation,
            threshold,
            passed,
        }
    }
}

/// Histogram of a statistic with its reference law integrated over the same bins.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub variable: String,
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub density: Vec<f64>,
    /// Reference probability of each bin divided by its width.
    pub reference_density: Vec<f64>,
    /// Reference CDF at the right edge of each bin.
    pub reference_cdf: Vec<f64>,
}

enum Reference<'a> {
    Cdf(&'a dyn Fn(f64) -> f64),
    Sample(&'a EmpiricalDistribution),
}

fn make_histogram(variable: &str, values: &[f64], bins: usize, reference: Reference) -> Option<Histogram> {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return None;
    }
    let mut lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|k| lo + width * k as f64).collect();
    let counts = stats::histogram(&finite, lo, hi, bins);
    let total = finite.len() as f64;
    let density = counts.iter().map(|&c| c as f64 / (total * width)).collect();
    let cdf = |x: f64| match &reference {
        Reference::Cdf(f) => f(x),
        Reference::Sample(e) => e.ecdf(x),
    };
    let reference_cdf: Vec<f64> = edges[1..].iter().map(|&x| cdf(x)).collect();
    let reference_density = edges
        .windows(2)
        .map(|w| (cdf(w[1]) - cdf(w[0])) / width)
        .collect();
    Some(Histogram {
        variable: variable.to_string(),
        edges,
        counts,
        density,
        reference_density,
        reference_cdf,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub config: ExperimentConfig,
    pub seed_scheme: String,
    pub summary: BTreeMap<String, f64>,
    pub reference: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub histogram: Option<Histogram>,
    /// Raw rows, written to CSV rather than JSON.
    #[serde(skip)]
    pub columns: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<Vec<f64>>,
}

impl ExperimentReport {
    fn new(config: &ExperimentConfig, columns: &[&str]) -> Self {
        Self {
            kind: config.kind,
            config: config.clone(),
            seed_scheme: "ChaCha8 stream keyed by (master_seed, family << 48 | replication)".into(),
            summary: BTreeMap::new(),
            reference: BTreeMap::new(),
            checks: Vec::new(),
            notes: Vec::new(),
            histogram: None,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn put(&mut self, key: &str, value: f64) {
        self.summary.insert(key.to_string(), value);
    }

    fn put_ref(&mut self, key: &str, value: f64) {
        self.reference.insert(key.to_string(), value);
    }

    fn check(&mut self, name: &str, value: f64, relation: Relation, default: f64) {
        let threshold = self.config.threshold(name, default);
        self.checks.push(Check::new(name, value, relation, threshold));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check_named(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    /// Raw rows as CSV: header, LF line endings, reals with 17 significant digits.
    pub fn raw_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| format_real(x)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Histogram and reference-law overlay as CSV.
    pub fn plot_csv(&self) -> String {
        let mut out = String::from("variable,bin_lo,bin_hi,count,density,reference_density,reference_cdf\n");
        if let Some(h) = &self.histogram {
            for k in 0..h.counts.len() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    h.variable,
                    format_real(h.edges[k]),
                    format_real(h.edges[k + 1]),
                    h.counts[k],
                    format_real(h.density[k]),
                    format_real(h.reference_density[k]),
                    format_real(h.reference_cdf[k])
                );
            }
        }
        out
    }
}

/// Integers verbatim, other reals in scientific notation with 17 significant digits.
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{x}")
    } else {
        format!("{x:.16e}")
    }
}

/// Parses CSV text produced by [`ExperimentReport::raw_csv`].
pub fn parse_raw_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))?;
    let columns: Vec<String> = header.split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    for line in lines {
        let row: std::result::Result<Vec<f64>, _> = line.split(',').map(str::parse::<f64>).collect();
        let row = row.map_err(|e| Error::Parse(format!("{line:?}: {e}")))?;
        if row.len() != columns.len() {
            return Err(Error::Parse(format!("row {line:?} has {} cells", row.len())));
        }
        rows.push(row);
    }
    Ok((columns, rows))
}

/// Runs replications `0, 1, 2, …` in parallel batches until `done` accepts the
/// prefix computed so far or `cap` replications have been produced. Only the
/// consumed prefix is returned, so the result does not depend on batching.
fn run_until<T: Send>(
    cap: usize,
    job: impl Fn(usize) -> Result<T> + Sync,
    mut accept: impl FnMut(&T) -> bool,
) -> Result<Vec<T>> {
    let mut out = Vec::new();
    let mut next = 0;
    while next < cap {
        let end = (next + BATCH).min(cap);
        let batch: Vec<Result<T>> = (next..end).into_par_iter().map(&job).collect();
        for item in batch {
            let item = item?;
            let stop = accept(&item);
            out.push(item);
            if stop {
                return Ok(out);
            }
        }
        next = end;
    }
    Ok(out)
}

fn par_collect<T: Send>(count: usize, job: impl Fn(usize) -> Result<T> + Sync) -> Result<Vec<T>> {
    (0..count).into_par_iter().map(&job).collect()
}

fn weighted_er(n: usize, p: f64, stream: &RngStream) -> Result<WeightedGraph> {
    let g = generate_er(n, p, &mut stream.child(0))?;
    Ok(attach_weights(g, &mut stream.child(1)))
}

/// One sampled pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairRow {
    pub graph: usize,
    pub u: usize,
    pub v: usize,
    pub connected: bool,
    pub weight: f64,
    pub hops: usize,
}

/// Pairs drawn on fresh graphs until `wanted` connected pairs are found.
#[derive(Clone, Debug, PartialEq)]
pub struct PairSample {
    pub n: usize,
    pub p: f64,
    pub cadence: usize,
    /// Every sampled pair up to and including the last connected one used.
    pub rows: Vec<PairRow>,
}

impl PairSample {
    pub fn connected(&self) -> impl Iterator<Item = &PairRow> {
        self.rows.iter().filter(|r| r.connected)
    }

    pub fn connected_count(&self) -> usize {
        self.connected().count()
    }
}

/// Samples pairs on `G(n, p)` with exponential weights, a new graph every
/// `cadence` pairs.
pub fn sample_pairs(
    n: usize,
    p: f64,
    wanted: usize,
    cadence: usize,
    seed: u64,
    family: u64,
) -> Result<PairSample> {
    if cadence == 0 {
        return domain("cadence must be positive");
    }
    let cap_graphs = (50 * wanted).div_ceil(cadence) + 100;
    let mut found = 0;
    let blocks = run_until(
        cap_graphs,
        |b| {
            let s = stream_for(seed, family, b as u64);
            let wg = weighted_er(n, p, &s)?;
            let mut ps = s.child(2);
            (0..cadence)
                .map(|_| {
                    let (u, v) = fpp::uniform_pair(n, &mut ps);
                    let r = fpp::pair_result(&wg, u, v)?;
                    Ok(PairRow {
                        graph: b,
                        u,
                        v,
                        connected: r.connected,
                        weight: r.weight,
                        hops: r.hops,
                    })
                })
                .collect::<Result<Vec<PairRow>>>()
        },
        |block| {
            found += block.iter().filter(|r| r.connected).count();
            found >= wanted
        },
    )?;
    let mut rows = Vec::new();
    let mut have = 0;
    'outer: for block in blocks {
        for r in block {
            rows.push(r);
            if r.connected {
                have += 1;
                if have == wanted {
                    break 'outer;
                }
            }
        }
    }
    if have == 0 {
        return Err(Error::Exhausted(format!(
            "no connected pair among {} sampled pairs",
            rows.len()
        )));
    }
    Ok(PairSample { n, p, cadence, rows })
}

const PAIR_COLUMNS: [&str; 7] = ["graph", "u", "v", "connected", "weight", "hops", "jitter"];

/// One row per sampled pair (1-based labels). `jitter` holds the offsets added to
/// the hopcounts of connected pairs, in order; other rows get NaN.
fn pair_rows(sample: &PairSample, jitter: &[f64]) -> Vec<Vec<f64>> {
    let mut offsets = jitter.iter();
    sample
        .rows
        .iter()
        .map(|r| {
            let j = if r.connected {
                offsets.next().copied().unwrap_or(f64::NAN)
            } else {
                f64::NAN
            };
            vec![
                r.graph as f64,
                (r.u + 1) as f64,
                (r.v + 1) as f64,
                r.connected as u8 as f64,
                r.weight,
                r.hops as f64,
                j,
            ]
        })
        .collect()
}

/// Uniform offsets on `[-1/2, 1/2)` for `count` lattice values.
fn jitter_offsets(count: usize, seed: u64) -> Vec<f64> {
    let mut s = stream_for(seed, FAMILY_AUX, 0);
    stats::jitter(&vec![0.0; count], &mut s)
}

fn pair_sample_for(config: &ExperimentConfig, family: u64) -> Result<PairSample> {
    sample_pairs(
        config.n,
        config.p(),
        config.reps,
        config.extras.cadence.unwrap_or(10),
        config.master_seed,
        family,
    )
}

fn note_shortfall(report: &mut ExperimentReport, sample: &PairSample, wanted: usize) {
    let got = sample.connected_count();
    if got < wanted {
        report
            .notes
            .push(format!("only {got} of {wanted} requested connected pairs found within the sampling cap"));
    }
}

const JITTER_NOTE: &str =
    "KS statistics of integer-valued quantities use uniform jitter on [-1/2, 1/2); the raw lattice statistic is reported alongside";

/// Hopcount CLT: `(H_n − β log n)/√(β log n)` against N(0, 1).
pub fn run_hopcount_clt(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let sample = pair_sample_for(config, FAMILY_REPS)?;
    hopcount_report(config, &sample)
}

/// Builds the hopcount report from an existing pair sample.
pub fn hopcount_report(config: &ExperimentConfig, sample: &PairSample) -> Result<ExperimentReport> {
    let consts = theory::constants(config.lambda)?;
    let mut report = ExperimentReport::new(config, &PAIR_COLUMNS);
    let hops: Vec<f64> = sample.connected().map(|r| r.hops as f64).collect();
    let offsets = jitter_offsets(hops.len(), config.master_seed);
    report.rows = pair_rows(sample, &offsets);
    note_shortfall(&mut report, sample, config.reps);
    let log_n = (config.n as f64).ln();
    let center = consts.beta * log_n;
    let scale = center.sqrt();
    let z = stats::standardize(&hops, center, scale);
    let jittered: Vec<f64> = hops.iter().zip(&offsets).map(|(h, j)| h + j).collect();
    let zj = stats::standardize(&jittered, center, scale);
    let degenerate = stats::variance(&hops) == 0.0 || hops.len() < 2;

    report.put("pairs_sampled", sample.rows.len() as f64);
    report.put("connected_pairs", hops.len() as f64);
    report.put("connected_fraction", hops.len() as f64 / sample.rows.len() as f64);
    report.put("mean_hops", stats::mean(&hops));
    report.put("var_hops", stats::variance(&hops));
    report.put("standardized_mean", stats::mean(&z));
    report.put("standardized_variance", stats::variance(&z));
    report.put("ks_normal", stats::ks_one_sample(&EmpiricalDistribution::new(zj.clone())?, stats::normal_cdf));
    report.put("ks_normal_raw", stats::ks_one_sample(&EmpiricalDistribution::new(z.clone())?, stats::normal_cdf));
    report.put("degenerate", degenerate as u8 as f64);
    report.put_ref("beta", consts.beta);
    report.put_ref("beta_log_n", center);
    report.put_ref("giant_fraction_squared", (1.0 - consts.p_lambda).powi(2));
    if degenerate {
        report.notes.push("hopcount has zero variance; standardized statistics are degenerate".into());
    }
    report.notes.push(JITTER_NOTE.into());

    let mean_z = report.summary["standardized_mean"];
    let var_z = report.summary["standardized_variance"];
    let ks = report.summary["ks_normal"];
    report.check("abs_standardized_mean", mean_z.abs(), Relation::AtMost, 0.3);
    report.check("abs_standardized_variance_minus_one", (var_z - 1.0).abs(), Relation::AtMost, 0.3);
    report.check("ks_normal", ks, Relation::AtMost, 0.1);
    report.histogram = make_histogram("standardized_hopcount", &zj, config.bins(), Reference::Cdf(&stats::normal_cdf));
    Ok(report)
}

/// Draws `count` samples of the limit variable `X` in parallel.
pub fn limit_x_sample(lambda: f64, count: usize, splits: usize, seed: u64) -> Result<Vec<f64>> {
    par_collect(count, |i| {
        theory::sample_limit_x_with(lambda, splits, &mut stream_for(seed, FAMILY_REFERENCE, i as u64))
    })
}

/// Weight limit: `W_n − γ log n` against draws of `X`.
pub fn run_weight_limit(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let sample = pair_sample_for(config, FAMILY_REPS)?;
    weight_limit_report(config, &sample)
}

/// Builds the weight-limit report from an existing pair sample; the drift
/// sample at the smaller size is drawn here.
pub fn weight_limit_report(config: &ExperimentConfig, sample: &PairSample) -> Result<ExperimentReport> {
    let consts = theory::constants(config.lambda)?;
    let gamma = consts.gamma;
    let mut report = ExperimentReport::new(config, &PAIR_COLUMNS);
    report.rows = pair_rows(sample, &[]);
    note_shortfall(&mut report, sample, config.reps);
    let centered = |s: &PairSample| -> Vec<f64> {
        let shift = gamma * (s.n as f64).ln();
        s.connected().map(|r| r.weight - shift).collect()
    };
    let x = centered(sample);
    let limit_count = config.extras.limit_samples.unwrap_or(100_000);
    let reference = EmpiricalDistribution::new(limit_x_sample(
        config.lambda,
        limit_count,
        config.w_splits(),
        config.master_seed,
    )?)?;
    let emp = EmpiricalDistribution::new(x.clone())?;
    let ks = stats::ks_two_sample(&emp, &reference);
    let w1 = stats::wasserstein1_subsampled(&emp, &reference, &mut stream_for(config.master_seed, FAMILY_AUX, 1));

    let drift_n = config.extras.drift_n.unwrap_or((config.n / 10).max(2));
    let drift_cfg = ExperimentConfig {
        n: drift_n,
        ..config.clone()
    };
    drift_cfg.validate()?;
    let drift_sample = pair_sample_for(&drift_cfg, FAMILY_DRIFT)?;
    let drift_mean = stats::mean(&centered(&drift_sample));
    let drift = (emp.mean() - drift_mean).abs();

    report.put("connected_pairs", x.len() as f64);
    report.put("mean", emp.mean());
    report.put("variance", emp.variance());
    report.put("ks_two_sample", ks);
    report.put("wasserstein1", w1);
    report.put("drift_n", drift_n as f64);
    report.put("drift_mean", drift_mean);
    report.put("drift", drift);
    report.put_ref("gamma", gamma);
    report.put_ref("limit_samples", limit_count as f64);
    report.put_ref("limit_mean", reference.mean());
    report.put_ref("limit_variance", reference.variance());
    report.check("ks_two_sample", ks, Relation::AtMost, 0.1);
    report.check("mean_drift", drift, Relation::AtMost, 0.2);
    report.histogram = make_histogram("centered_weight", &x, config.bins(), Reference::Sample(&reference));
    Ok(report)
}

/// Dense-regime experiment: `(λ_n − 1)W_n − log n` against `M₁ + M₂ − M₃` and
/// `(H_n − β_n log n)/√(log n)` against N(0, 1).
pub fn run_dense(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let lambda_n = config.lambda;
    let n = config.n as f64;
    let log_n = n.ln();
    let centering = theory::dense_centering_report(lambda_n, n)?;
    let sample = pair_sample_for(config, FAMILY_REPS)?;
    let mut report = ExperimentReport::new(config, &PAIR_COLUMNS);
    let y: Vec<f64> = sample.connected().map(|r| (lambda_n - 1.0) * r.weight - log_n).collect();
    let hops: Vec<f64> = sample.connected().map(|r| r.hops as f64).collect();
    let offsets = jitter_offsets(hops.len(), config.master_seed);
    report.rows = pair_rows(&sample, &offsets);
    note_shortfall(&mut report, &sample, config.reps);
    let center = centering.beta_n * log_n;
    let scale = log_n.sqrt();
    let z = stats::standardize(&hops, center, scale);
    let jittered: Vec<f64> = hops.iter().zip(&offsets).map(|(h, j)| h + j).collect();
    let zj = stats::standardize(&jittered, center, scale);

    let limit_count = config.extras.limit_samples.unwrap_or(100_000);
    let reference = EmpiricalDistribution::new(par_collect(limit_count, |i| {
        Ok(theory::sample_dense_limit(&mut stream_for(config.master_seed, FAMILY_REFERENCE, i as u64)))
    })?)?;
    let emp_y = EmpiricalDistribution::new(y.clone())?;
    let ks_w = stats::ks_two_sample(&emp_y, &reference);
    let ks_h = stats::ks_one_sample(&EmpiricalDistribution::new(zj.clone())?, stats::normal_cdf);
    let ks_h_raw = stats::ks_one_sample(&EmpiricalDistribution::new(z.clone())?, stats::normal_cdf);

    report.put("pairs_sampled", sample.rows.len() as f64);
    report.put("connected_pairs", y.len() as f64);
    report.put("connected_fraction", y.len() as f64 / sample.rows.len() as f64);
    report.put("weight_mean", emp_y.mean());
    report.put("weight_ks", ks_w);
    report.put("hop_standardized_mean", stats::mean(&z));
    report.put("hop_standardized_variance", stats::variance(&z));
    report.put("hop_ks", ks_h);
    report.put("hop_ks_raw", ks_h_raw);
    report.put("beta_n", centering.beta_n);
    report.put("centering_discriminant", centering.discriminant);
    report.put("centering_replaceable", centering.replaceable as u8 as f64);
    report.put_ref("limit_mean", theory::EULER_GAMMA);
    report.put_ref("limit_sample_mean", reference.mean());
    report.notes.push(JITTER_NOTE.into());
    report.check("weight_ks", ks_w, Relation::AtMost, 0.08);
    report.check("hop_ks", ks_h, Relation::AtMost, 0.1);
    report.histogram = make_histogram("scaled_weight", &y, config.bins(), Reference::Sample(&reference));
    Ok(report)
}

/// Connection-time experiment: `C_n / a_n` against Exp(1) among replications
/// where both trees survive.
pub fn run_collision_time(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let n = config.n;
    let p = config.p();
    let a_n = config.extras.a_n.unwrap_or((n as f64).sqrt().ceil() as usize);
    let k = config.extras.coupling_k.unwrap_or(100.min(a_n));
    let consts = theory::constants(config.lambda)?;
    let cap = 20 * config.reps + 100;
    let mut survivors = 0;
    let outcomes = run_until(
        cap,
        |i| bp::collision_experiment_with(n, p, a_n, k, &mut stream_for(config.master_seed, FAMILY_REPS, i as u64)),
        |o| {
            survivors += o.survived as usize;
            survivors >= config.reps
        },
    )?;
    let mut report = ExperimentReport::new(
        config,
        &["rep", "survived", "c_n", "c_over_a", "g1_u", "g2_c", "hops", "a1_an", "a2_c", "weight", "m_k"],
    );
    report.rows = outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| {
            vec![
                i as f64,
                o.survived as u8 as f64,
                o.c_n as f64,
                o.c_n as f64 / a_n as f64,
                o.g1_u as f64,
                o.g2_c as f64,
                o.hops as f64,
                o.a1_an,
                o.a2_c,
                o.weight,
                o.m_k as f64,
            ]
        })
        .collect();
    let surv: Vec<_> = outcomes.iter().filter(|o| o.survived).collect();
    if surv.is_empty() {
        return Err(Error::Exhausted("no replication with two surviving trees".into()));
    }
    if surv.len() < config.reps {
        report
            .notes
            .push(format!("only {} of {} requested surviving replications", surv.len(), config.reps));
    }
    let ratio: Vec<f64> = surv.iter().map(|o| o.c_n as f64 / a_n as f64).collect();
    let ks = stats::ks_one_sample(&EmpiricalDistribution::new(ratio.clone())?, stats::exp_cdf);
    let survival = surv.len() as f64 / outcomes.len() as f64;
    let expected_survival = (1.0 - consts.p_lambda).powi(2);

    // M_k is defined whenever tree 1 reached k splits.
    let mk: Vec<f64> = outcomes
        .iter()
        .filter(|o| o.a1_an.is_finite())
        .map(|o| o.m_k as f64)
        .collect();
    let mk_mean = stats::mean(&mk);
    let mk_se = (stats::variance(&mk) / mk.len() as f64).sqrt();
    let rse = if mk_mean > 0.0 { mk_se / mk_mean } else { 0.0 };
    let bound = (k * k) as f64 / (n as f64 - a_n as f64);

    let (corr_cond, corr) = conditional_correlation(&surv);

    report.put("replications", outcomes.len() as f64);
    report.put("surviving", surv.len() as f64);
    report.put("survival_fraction", survival);
    report.put("a_n", a_n as f64);
    report.put("mean_c_over_a", stats::mean(&ratio));
    report.put("ks_exp", ks);
    report.put("coupling_k", k as f64);
    report.put("m_k_mean", mk_mean);
    report.put("m_k_relative_se", rse);
    report.put("generation_correlation", corr);
    report.put("generation_correlation_given_c", corr_cond);
    report.put_ref("survival_expected", expected_survival);
    report.put_ref("coupling_bound", bound);
    report.check("ks_exp", ks, Relation::AtMost, 0.06);
    report.check(
        "survival_gap",
        (survival - expected_survival).abs(),
        Relation::AtMost,
        0.03,
    );
    report.check("m_k_mean", mk_mean, Relation::AtMost, bound * (1.0 + 3.0 * rse));
    report.histogram = make_histogram("c_over_a", &ratio, config.bins(), Reference::Cdf(&stats::exp_cdf));
    Ok(report)
}

/// Correlation of `(G1_U, G2_C)` within quintiles of `C_n`, averaged with
/// weights proportional to bucket size, and the unconditional correlation.
fn conditional_correlation(surv: &[&bp::CollisionOutcome]) -> (f64, f64) {
    let mut sorted: Vec<&bp::CollisionOutcome> = surv.to_vec();
    sorted.sort_by_key(|o| o.c_n);
    let buckets = 5;
    let mut acc = 0.0;
    let mut weight = 0.0;
    for b in 0..buckets {
        let lo = b * sorted.len() / buckets;
        let hi = (b + 1) * sorted.len() / buckets;
        if hi - lo < 3 {
            continue;
        }
        let g1: Vec<f64> = sorted[lo..hi].iter().map(|o| o.g1_u as f64).collect();
        let g2: Vec<f64> = sorted[lo..hi].iter().map(|o| o.g2_c as f64).collect();
        let r = stats::correlation(&g1, &g2);
        if r.is_finite() {
            acc += r * (hi - lo) as f64;
            weight += (hi - lo) as f64;
        }
    }
    let g1: Vec<f64> = surv.iter().map(|o| o.g1_u as f64).collect();
    let g2: Vec<f64> = surv.iter().map(|o| o.g2_c as f64).collect();
    (acc / weight, stats::correlation(&g1, &g2))
}

/// One side of the thinning comparison: weight and hopcount from vertex 1 to the
/// target, `+∞` weight when unreachable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RootToTarget {
    pub weight: f64,
    pub hops: usize,
}

/// Root-to-target passage on a fresh weighted `G(n, p)`.
pub fn graph_root_to_target(n: usize, p: f64, target: usize, stream: &RngStream) -> Result<RootToTarget> {
    let wg = weighted_er(n, p, stream)?;
    let r = fpp::pair_result(&wg, 0, target)?;
    Ok(RootToTarget {
        weight: r.weight,
        hops: r.hops,
    })
}

/// Root-to-target passage in the thinned marked branching process: the first
/// unthinned individual carrying the target mark.
pub fn tree_root_to_target(n: usize, p: f64, target: usize, stream: &mut RngStream) -> Result<RootToTarget> {
    let tree = Ctmbp::new(n, p)?.with_pruning(true).simulate(
        &StopRule::HitsMarks {
            marks: vec![target],
            unthinned_only: true,
        },
        stream,
    )?;
    Ok(match tree.hit_index {
        Some(j) => RootToTarget {
            weight: tree.split_times[j],
            hops: tree.generation[j],
        },
        None => RootToTarget {
            weight: f64::INFINITY,
            hops: 0,
        },
    })
}

/// Compares root-to-target weight and hopcount in `G(n, p)` with those in the
/// thinned CTMBP.
pub fn run_thinning_equivalence(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let (n, p) = (config.n, config.p());
    let target = config.extras.target.unwrap_or(2) - 1;
    let seed = config.master_seed;
    let graph_side = par_collect(config.reps, |i| {
        graph_root_to_target(n, p, target, &stream_for(seed, FAMILY_REPS, i as u64))
    })?;
    let tree_side = par_collect(config.reps, |i| {
        tree_root_to_target(n, p, target, &mut stream_for(seed, FAMILY_TREE, i as u64))
    })?;
    let mut report = ExperimentReport::new(config, &["side", "rep", "connected", "weight", "hops"]);
    for (side, results) in [(0.0, &graph_side), (1.0, &tree_side)] {
        for (i, r) in results.iter().enumerate() {
            report.rows.push(vec![
                side,
                i as f64,
                r.weight.is_finite() as u8 as f64,
                r.weight,
                r.hops as f64,
            ]);
        }
    }
    let finite = |rs: &[RootToTarget]| -> (Vec<f64>, Vec<i64>) {
        rs.iter()
            .filter(|r| r.weight.is_finite())
            .map(|r| (r.weight, r.hops as i64))
            .unzip()
    };
    let (wg, hg) = finite(&graph_side);
    let (wt, ht) = finite(&tree_side);
    let disc_g = 1.0 - wg.len() as f64 / config.reps as f64;
    let disc_t = 1.0 - wt.len() as f64 / config.reps as f64;
    report.put("disconnected_graph", disc_g);
    report.put("disconnected_tree", disc_t);
    let gap = (disc_g - disc_t).abs();
    report.put("disconnection_gap", gap);
    let (ks_w, tv_h, ks_h) = if wg.is_empty() || wt.is_empty() {
        report.notes.push("one side never reached the target; distances undefined".into());
        (f64::NAN, f64::NAN, f64::NAN)
    } else {
        let eg = EmpiricalDistribution::new(wg.clone())?;
        let et = EmpiricalDistribution::new(wt.clone())?;
        let hgf: Vec<f64> = hg.iter().map(|&h| h as f64).collect();
        let htf: Vec<f64> = ht.iter().map(|&h| h as f64).collect();
        (
            stats::ks_two_sample(&eg, &et),
            stats::total_variation_counts(&hg, &ht),
            stats::ks_two_sample(&EmpiricalDistribution::new(hgf)?, &EmpiricalDistribution::new(htf)?),
        )
    };
    report.put("weight_ks", ks_w);
    report.put("hop_tv", tv_h);
    report.put("hop_ks", ks_h);
    report.put("mean_weight_graph", stats::mean(&wg));
    report.put("mean_weight_tree", stats::mean(&wt));
    report.put_ref("disconnected_expected", 1.0 - (1.0 - theory::extinction_probability(config.lambda)?).powi(2));
    report.check("weight_ks", ks_w, Relation::AtMost, 0.08);
    report.check("hop_tv", tv_h, Relation::AtMost, 0.1);
    report.check("disconnection_gap", gap, Relation::AtMost, 0.04);
    if let Ok(et) = EmpiricalDistribution::new(wt.clone()) {
        report.histogram = make_histogram("graph_weight", &wg, config.bins(), Reference::Sample(&et));
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
struct ExtremaRow {
    n: usize,
    rep: usize,
    result: fpp::ExtremaResult,
    median_pair_weight: f64,
}

/// Extremal shortest-weight paths over a ladder of graph sizes.
pub fn run_extrema(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let ladder = config.extras.n_ladder.clone().unwrap_or_else(|| vec![config.n]);
    let defaults = ExtremaOptions::default();
    let options = ExtremaOptions {
        leaf_candidates: config.extras.leaf_candidates.unwrap_or(defaults.leaf_candidates),
        random_candidates: config.extras.random_candidates.unwrap_or(defaults.random_candidates),
        exhaustive_below: config.extras.exhaustive_below.unwrap_or(defaults.exhaustive_below),
        lambda: Some(config.lambda),
    };
    let median_pairs = config.extras.median_pairs.unwrap_or(101);
    let consts = theory::constants(config.lambda)?;
    let jobs: Vec<(usize, usize, usize)> = ladder
        .iter()
        .enumerate()
        .flat_map(|(l, &n)| (0..config.reps).map(move |r| (l, n, r)))
        .collect();
    let rows: Vec<ExtremaRow> = jobs
        .par_iter()
        .map(|&(l, n, r)| {
            let s = stream_for(config.master_seed, FAMILY_LADDER + l as u64, r as u64);
            let wg = weighted_er(n, edge_probability(n, config.lambda), &s)?;
            let result = fpp::extrema_search(&wg, &options, &mut s.child(2))?;
            let giant = giant_component(wg.graph());
            let mut ps = s.child(3);
            let mut weights: Vec<f64> = (0..median_pairs)
                .map(|_| {
                    let (a, b) = fpp::uniform_pair(giant.len(), &mut ps);
                    fpp::pair_result(&wg, giant[a], giant[b]).map(|p| p.weight)
                })
                .collect::<Result<_>>()?;
            weights.sort_by(f64::total_cmp);
            Ok(ExtremaRow {
                n,
                rep: r,
                result,
                median_pair_weight: weights[weights.len() / 2],
            })
        })
        .collect::<Result<_>>()?;

    let mut report = ExperimentReport::new(
        config,
        &[
            "n",
            "rep",
            "w_max",
            "h_at_max",
            "h_max",
            "median_pair_weight",
            "w_max_over_log_n",
            "h_max_over_log_n",
            "weight_ratio",
            "hop_ratio",
            "candidates",
            "giant_size",
        ],
    );
    for row in &rows {
        let r = &row.result;
        let log_n = (row.n as f64).ln();
        report.rows.push(vec![
            row.n as f64,
            row.rep as f64,
            r.w_max,
            r.h_at_max as f64,
            r.h_max as f64,
            row.median_pair_weight,
            r.w_max / log_n,
            r.h_max as f64 / log_n,
            r.diagnostics.weight_ratio.unwrap_or(f64::NAN),
            r.diagnostics.hop_ratio.unwrap_or(f64::NAN),
            r.diagnostics.candidates as f64,
            r.diagnostics.giant_size as f64,
        ]);
    }
    let mut medians = Vec::new();
    for &n in &ladder {
        let of_n: Vec<&ExtremaRow> = rows.iter().filter(|r| r.n == n).collect();
        let med = |f: &dyn Fn(&ExtremaRow) -> f64| {
            EmpiricalDistribution::new(of_n.iter().map(|r| f(r)).collect())
                .map(|e| e.median())
                .unwrap_or(f64::NAN)
        };
        let mw = med(&|r| r.result.w_max);
        medians.push(mw);
        report.put(&format!("median_w_max_n{n}"), mw);
        report.put(&format!("median_h_max_n{n}"), med(&|r| r.result.h_max as f64));
        report.put(&format!("median_w_max_over_log_n_n{n}"), mw / (n as f64).ln());
        report.put(
            &format!("median_h_max_over_log_n_n{n}"),
            med(&|r| r.result.h_max as f64) / (n as f64).ln(),
        );
    }
    let min_step = medians
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let min_margin = rows
        .iter()
        .map(|r| r.result.w_max - r.median_pair_weight)
        .fold(f64::INFINITY, f64::min);
    report.put_ref("c_lambda", consts.c_lambda);
    report.put_ref("d_lambda", consts.d_lambda);
    report.put_ref("c_lambda_raw", consts.gamma + consts.raw_path_term());
    report.notes.push(
        "ratios to c(λ) log n and d(λ) log n are report-only; the asymptotic lower bound is not asserted".into(),
    );
    if ladder.len() >= 2 {
        report.check("median_w_max_min_increase", min_step, Relation::Above, 0.0);
    }
    report.check("w_max_minus_median_pair_weight", min_margin, Relation::AtLeast, 0.0);
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.result.diagnostics.weight_ratio).collect();
    report.histogram = make_histogram(
        "w_max_over_c_log_n",
        &ratios,
        config.bins(),
        Reference::Cdf(&|x| if x >= 1.0 { 1.0 } else { 0.0 }),
    );
    Ok(report)
}

/// Tree CLT conditioned on survival: `G_m` against N(0, 1) and `A_m − γ log m`
/// against `−γ log(γ W_λ)`.
pub fn run_tree_clt(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let lambda = config.lambda;
    let m = config.extras.m.unwrap_or(10_000);
    let consts = theory::constants(lambda)?;
    let (beta, gamma) = (consts.beta, consts.gamma);
    let pois = PoissonSampler::new(lambda)?;
    let seed = config.master_seed;
    struct Rep {
        g: u64,
        a: f64,
        rho_mean: f64,
        rho_var: f64,
        jitter: f64,
    }
    let reps: Vec<Rep> = par_collect(config.reps, |i| {
        let s = stream_for(seed, FAMILY_REPS, i as u64);
        let d = bp::sample_surviving_degrees(&pois, m, &mut s.child(0), 100_000)?;
        let d = bp::DegreeSequence::new(d);
        let rho = bp::attachment_probabilities(&d)?;
        let mut gs = s.child(1);
        let g = rho.iter().filter(|&&r| gs.bernoulli(r)).count() as u64;
        let a = bp::sample_split_time(&d, &mut s.child(2))?;
        Ok(Rep {
            g,
            a,
            rho_mean: rho.iter().sum(),
            rho_var: rho.iter().map(|r| r * (1.0 - r)).sum(),
            jitter: s.child(3).uniform() - 0.5,
        })
    })?;
    let log_m = (m as f64).ln();
    let z: Vec<f64> = reps.iter().map(|r| (r.g as f64 - r.rho_mean) / r.rho_var.sqrt()).collect();
    let zj: Vec<f64> = reps
        .iter()
        .map(|r| (r.g as f64 + r.jitter - r.rho_mean) / r.rho_var.sqrt())
        .collect();
    let z_theorem: Vec<f64> = reps
        .iter()
        .map(|r| (r.g as f64 + r.jitter - beta * log_m) / (beta * log_m).sqrt())
        .collect();
    let a_c: Vec<f64> = reps.iter().map(|r| r.a - gamma * log_m).collect();

    let limit_count = config.extras.limit_samples.unwrap_or(config.reps);
    let splits = config.w_splits();
    let reference = EmpiricalDistribution::new(par_collect(limit_count, |i| {
        let w = bp::sample_w_lambda_with(&pois, splits, &mut stream_for(seed, FAMILY_REFERENCE, i as u64))?;
        Ok(-gamma * (gamma * w).ln())
    })?)?;
    let ks_g = stats::ks_one_sample(&EmpiricalDistribution::new(zj.clone())?, stats::normal_cdf);
    let ks_g_raw = stats::ks_one_sample(&EmpiricalDistribution::new(z.clone())?, stats::normal_cdf);
    let ks_g_theorem = stats::ks_one_sample(&EmpiricalDistribution::new(z_theorem)?, stats::normal_cdf);
    let emp_a = EmpiricalDistribution::new(a_c.clone())?;
    let ks_a = stats::ks_two_sample(&emp_a, &reference);
    let corr = stats::correlation(&z, &a_c);
    let mut ns = stream_for(seed, FAMILY_AUX, 2);
    let normals: Vec<f64> = (0..z.len()).map(|_| StandardNormal.sample(&mut ns)).collect();
    let w1 = stats::wasserstein1(&EmpiricalDistribution::new(z.clone())?, &EmpiricalDistribution::new(normals)?)?;
    let bound = stats::mean(&reps.iter().map(|r| 3.0 / r.rho_var.sqrt()).collect::<Vec<_>>());

    let mut report = ExperimentReport::new(
        config,
        &["rep", "g_m", "a_m", "rho_sum_mean", "rho_sum_var", "standardized_g", "centered_a", "jitter"],
    );
    report.rows = reps
        .iter()
        .enumerate()
        .map(|(i, r)| vec![i as f64, r.g as f64, r.a, r.rho_mean, r.rho_var, z[i], a_c[i], r.jitter])
        .collect();
    report.put("m", m as f64);
    report.put("ks_g", ks_g);
    report.put("ks_g_raw", ks_g_raw);
    report.put("ks_g_beta_log_m", ks_g_theorem);
    report.put("mean_g", stats::mean(&reps.iter().map(|r| r.g as f64).collect::<Vec<_>>()));
    report.put("mean_rho_var", stats::mean(&reps.iter().map(|r| r.rho_var).collect::<Vec<_>>()));
    report.put("ks_a", ks_a);
    report.put("mean_centered_a", emp_a.mean());
    report.put("correlation", corr);
    report.put("wasserstein1", w1);
    report.put_ref("beta_log_m", beta * log_m);
    report.put_ref("wasserstein_bound", bound);
    report.put_ref("limit_mean", reference.mean());
    report.notes.push(
        "G_m is standardized per replication by Σρ_i and Σρ_i(1−ρ_i); the β log m standardization is reported as ks_g_beta_log_m".into(),
    );
    report.notes.push(JITTER_NOTE.into());
    report.check("ks_g", ks_g, Relation::AtMost, 0.05);
    report.check("ks_a", ks_a, Relation::AtMost, 0.08);
    report.check("abs_correlation", corr.abs(), Relation::AtMost, 0.05);
    report.check("wasserstein1", w1, Relation::AtMost, bound + 0.05);
    report.histogram = make_histogram("standardized_generation", &zj, config.bins(), Reference::Cdf(&stats::normal_cdf));
    Ok(report)
}

/// Dispatches on `config.kind`.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    match config.kind {
        ExperimentKind::HopcountClt => run_hopcount_clt(config),
        ExperimentKind::WeightLimit => run_weight_limit(config),
        ExperimentKind::Dense => run_dense(config),
        ExperimentKind::CollisionTime => run_collision_time(config),
        ExperimentKind::ThinningEquivalence => run_thinning_equivalence(config),
        ExperimentKind::Extrema => run_extrema(config),
        ExperimentKind::TreeClt => run_tree_clt(config),
    }
}
