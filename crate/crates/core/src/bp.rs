//! Branching-process machinery.
//!
//! Two families live here. The first is FPP on a fixed tree: a degree sequence
//! `d_1, d_2, …` where the `i`-th vertex to die leaves `d_i` children, with alive
//! counts `s_i = Σ_{j≤i} d_j − (i − 1)`. The second is the continuous-time marked
//! branching process (CTMBP) with `Bin(n − 1, p)` offspring whose individuals
//! carry vertex labels ("marks"); thinning its repeated marks recovers FPP on
//! `G(n, p)` seen from the root.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::randomness::{BinomialSampler, PoissonSampler, RngStream};

/// Default number of splits used to approximate the martingale limit `W`.
pub const DEFAULT_W_SPLITS: usize = 10_000;

/// Largest `m` accepted by [`discrete_attachment_oracle`].
pub const ORACLE_MAX_M: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeSequence {
    d: Vec<u64>,
}

impl DegreeSequence {
    pub fn new(d: Vec<u64>) -> Self {
        Self { d }
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.d
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }
}

impl From<Vec<u64>> for DegreeSequence {
    fn from(d: Vec<u64>) -> Self {
        Self::new(d)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AliveCounts {
    pub s: Vec<i64>,
    /// Whether every `s_i` is positive, i.e. the tree is still growing at step `m`.
    pub all_positive: bool,
}

pub fn alive_counts(d: &DegreeSequence) -> AliveCounts {
    let mut s = Vec::with_capacity(d.len());
    let mut cur = 1i64;
    for &di in &d.d {
        cur += di as i64 - 1;
        s.push(cur);
    }
    let all_positive = s.iter().all(|&x| x > 0);
    AliveCounts { s, all_positive }
}

fn positive_alive_counts(d: &DegreeSequence) -> Result<Vec<i64>> {
    let a = alive_counts(d);
    if let Some(i) = a.s.iter().position(|&x| x <= 0) {
        return domain(format!("alive count s_{} = {} is not positive", i + 1, a.s[i]));
    }
    Ok(a.s)
}

/// `ρ_i = d_i / s_i`.
pub fn attachment_probabilities(d: &DegreeSequence) -> Result<Vec<f64>> {
    let s = positive_alive_counts(d)?;
    Ok(d.d.iter().zip(&s).map(|(&di, &si)| di as f64 / si as f64).collect())
}

/// `G_m = Σ I_i` with independent `I_i ~ Bernoulli(d_i / s_i)`.
pub fn sample_generation(d: &DegreeSequence, stream: &mut RngStream) -> Result<u64> {
    let rho = attachment_probabilities(d)?;
    Ok(rho.iter().filter(|&&r| stream.bernoulli(r)).count() as u64)
}

/// `A_m = Σ E_i / s_i` with i.i.d. Exp(1) draws `E_i`.
pub fn sample_split_time(d: &DegreeSequence, stream: &mut RngStream) -> Result<f64> {
    let s = positive_alive_counts(d)?;
    Ok(s.iter().map(|&si| stream.exp1() / si as f64).sum())
}

/// Exact law of `G_m` as the convolution of the Bernoulli(`ρ_i`) laws; index = generation.
pub fn generation_pmf(d: &DegreeSequence) -> Result<Vec<f64>> {
    let rho = attachment_probabilities(d)?;
    let mut pmf = vec![1.0];
    for r in rho {
        let mut next = vec![0.0; pmf.len() + 1];
        for (k, &q) in pmf.iter().enumerate() {
            next[k] += q * (1.0 - r);
            next[k + 1] += q * r;
        }
        pmf = next;
    }
    Ok(pmf)
}

/// `Σ ρ_i (1 − ρ_i)`, the variance of `G_m`.
pub fn rho_sum(d: &DegreeSequence) -> Result<f64> {
    Ok(attachment_probabilities(d)?
        .iter()
        .map(|r| r * (1.0 - r))
        .sum())
}

/// Law of `G_m` by running the discrete-time construction exhaustively.
///
/// Starting from a single alive vertex, step `i` kills a uniformly chosen alive
/// vertex and gives it `d_i` children; after `m` steps a uniformly chosen alive
/// vertex is inspected. Choices are tracked through the multiset of alive
/// generations, which is all the final law depends on.
pub fn discrete_attachment_oracle(d: &DegreeSequence) -> Result<Vec<f64>> {
    let m = d.len();
    if m > ORACLE_MAX_M {
        return Err(Error::Refused(format!(
            "enumeration is limited to m <= {ORACLE_MAX_M}, got {m}"
        )));
    }
    positive_alive_counts(d)?;
    let mut states: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
    let mut start = vec![0u64; m + 1];
    start[0] = 1;
    states.insert(start, 1.0);
    for &di in &d.d {
        let mut next: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
        for (counts, prob) in &states {
            let total: u64 = counts.iter().sum();
            for g in 0..counts.len() {
                if counts[g] == 0 {
                    continue;
                }
                let mut c = counts.clone();
                c[g] -= 1;
                c[g + 1] += di;
                *next.entry(c).or_insert(0.0) += prob * counts[g] as f64 / total as f64;
            }
        }
        states = next;
    }
    let mut pmf = vec![0.0; m + 1];
    for (counts, prob) in &states {
        let total: u64 = counts.iter().sum();
        for (g, &c) in counts.iter().enumerate() {
            pmf[g] += prob * c as f64 / total as f64;
        }
    }
    Ok(pmf)
}

/// Length of the positive-conditioned prefix: `⌈√(log log m)⌉` for `m ≥ 16`, else 0.
pub fn delay_length(m: usize) -> usize {
    if m < 16 {
        0
    } else {
        (m as f64).ln().ln().sqrt().ceil() as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionedWalk {
    /// `S_1, …, S_m`.
    pub s: Vec<i64>,
    /// The Poisson draws `D_1, …, D_m` behind the walk.
    pub degrees: Vec<u64>,
    pub w_m: usize,
    pub lambda: f64,
}

/// Poisson(λ) − 1 increment walk from `S_0 = 1` whose first `w_m` values are
/// conditioned positive by rejection; later increments are unconditioned.
pub fn sample_conditioned_walk(lambda: f64, m: usize, stream: &mut RngStream) -> Result<ConditionedWalk> {
    if !(lambda > 1.0 && lambda.is_finite()) {
        return domain(format!("conditioned walk needs λ > 1, got {lambda}"));
    }
    if m == 0 {
        return domain("conditioned walk needs m >= 1");
    }
    let pois = PoissonSampler::new(lambda)?;
    let w = delay_length(m).min(m);
    let mut degrees = Vec::with_capacity(m);
    let mut s = Vec::with_capacity(m);
    'prefix: loop {
        degrees.clear();
        s.clear();
        let mut cur = 1i64;
        for _ in 0..w {
            let d = pois.sample(stream);
            cur += d as i64 - 1;
            degrees.push(d);
            s.push(cur);
            if cur <= 0 {
                continue 'prefix;
            }
        }
        break;
    }
    let mut cur = s.last().copied().unwrap_or(1);
    for _ in w..m {
        let d = pois.sample(stream);
        cur += d as i64 - 1;
        degrees.push(d);
        s.push(cur);
    }
    Ok(ConditionedWalk {
        s,
        degrees,
        w_m: w,
        lambda,
    })
}

/// Poisson(λ) degrees `D_1, …, D_m` conditioned on `S_i > 0` for all `i ≤ m`,
/// by rejection of whole sequences.
pub fn sample_surviving_degrees(
    pois: &PoissonSampler,
    m: usize,
    stream: &mut RngStream,
    max_attempts: usize,
) -> Result<Vec<u64>> {
    let mut d = Vec::with_capacity(m);
    for _ in 0..max_attempts {
        d.clear();
        let mut cur = 1i64;
        let mut ok = true;
        for _ in 0..m {
            let x = pois.sample(stream);
            cur += x as i64 - 1;
            d.push(x);
            if cur <= 0 {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(d);
        }
    }
    Err(Error::Exhausted(format!(
        "no surviving degree sequence in {max_attempts} attempts"
    )))
}

/// When to stop growing a CTMBP. Every rule also stops on extinction.
#[derive(Clone, Debug, PartialEq)]
pub enum StopRule {
    /// After this many splits.
    Splits(usize),
    /// Once this many unthinned individuals (root included) have been wetted.
    UnthinnedMarks(usize),
    /// At the first wetted individual whose mark is in `marks`.
    HitsMarks {
        marks: Vec<usize>,
        unthinned_only: bool,
    },
    /// Only on extinction.
    Extinction,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StopReason {
    SplitLimit,
    UnthinnedLimit,
    Hit,
    /// No alive individuals remain.
    Extinct,
    /// Only descendants of thinned individuals remain alive.
    ThinnedExtinct,
}

/// A CTMBP grown up to a stopping rule. Index `j` refers to the `j`-th wetted
/// individual (`j = 0` is the root).
#[derive(Clone, Debug, PartialEq)]
pub struct MarkedTree {
    pub n: usize,
    pub marks: Vec<usize>,
    /// `A_0 = 0 ≤ A_1 ≤ …`.
    pub split_times: Vec<f64>,
    pub generation: Vec<usize>,
    pub parent_index: Vec<Option<usize>>,
    pub thinned: Vec<bool>,
    /// `S_1, …, S_{k+1}`: alive individuals after each split (`S_1` after the root's brood).
    pub alive_walk: Vec<i64>,
    /// `X_1, …, X_{k+1}`: brood sizes of the wetted individuals.
    pub offspring: Vec<u64>,
    pub stop: StopReason,
    /// Index of the individual that triggered a `HitsMarks` stop.
    pub hit_index: Option<usize>,
}

impl MarkedTree {
    pub fn splits(&self) -> usize {
        self.marks.len() - 1
    }

    pub fn is_extinct(&self) -> bool {
        self.alive_walk.last() == Some(&0)
    }

    pub fn unthinned_count(&self) -> usize {
        self.thinned.iter().filter(|t| !**t).count()
    }

    /// Number of thinned individuals among indices `0..=k`.
    pub fn thinned_upto(&self, k: usize) -> usize {
        self.thinned[..=k.min(self.splits())]
            .iter()
            .filter(|t| **t)
            .count()
    }

    /// First index carrying `mark`.
    pub fn first_index_of(&self, mark: usize) -> Option<usize> {
        self.marks.iter().position(|&m| m == mark)
    }

    /// First unthinned index carrying `mark`.
    pub fn first_unthinned_index_of(&self, mark: usize) -> Option<usize> {
        self.marks
            .iter()
            .zip(&self.thinned)
            .position(|(&m, &t)| m == mark && !t)
    }
}

/// Thinning flags for a mark sequence with parent pointers: index `j` is thinned
/// when its parent is thinned or when its mark was already carried by an earlier
/// unthinned individual.
pub fn thinning_flags(marks: &[usize], parent_index: &[Option<usize>]) -> Vec<bool> {
    let mut seen = std::collections::HashSet::with_capacity(marks.len());
    let mut flags = Vec::with_capacity(marks.len());
    for (j, &mark) in marks.iter().enumerate() {
        let inherited = parent_index[j].is_some_and(|p| flags[p]);
        let t = inherited || seen.contains(&mark);
        if !t {
            seen.insert(mark);
        }
        flags.push(t);
    }
    flags
}

/// Recomputes the thinning flags of `tree` from its marks and parents.
pub fn thin(tree: &MarkedTree) -> MarkedTree {
    let mut out = tree.clone();
    out.thinned = thinning_flags(&tree.marks, &tree.parent_index);
    out
}

/// CTMBP parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Ctmbp {
    pub n: usize,
    pub p: f64,
    pub root_mark: usize,
    /// Thinned individuals get no offspring. The unthinned part of the process
    /// has the same law, and the process always dies out.
    pub pruned: bool,
}

impl Ctmbp {
    pub fn new(n: usize, p: f64) -> Result<Self> {
        if n == 0 {
            return domain("mark space must be non-empty");
        }
        if !(0.0..=1.0).contains(&p) {
            return domain(format!("edge probability must lie in [0, 1], got {p}"));
        }
        Ok(Self {
            n,
            p,
            root_mark: 0,
            pruned: false,
        })
    }

    pub fn with_root(mut self, mark: usize) -> Self {
        self.root_mark = mark;
        self
    }

    pub fn with_pruning(mut self, pruned: bool) -> Self {
        self.pruned = pruned;
        self
    }

    pub fn simulate(&self, stop: &StopRule, stream: &mut RngStream) -> Result<MarkedTree> {
        let n = self.n;
        if self.root_mark >= n {
            return domain(format!("root mark {} outside 0..{n}", self.root_mark));
        }
        let mut target = Vec::new();
        let mut unthinned_only = false;
        match stop {
            StopRule::UnthinnedMarks(k) if *k > n => {
                return domain(format!("cannot reach {k} distinct marks out of {n}"));
            }
            StopRule::HitsMarks { marks, unthinned_only: u } => {
                if marks.is_empty() {
                    return domain("hit rule needs a non-empty mark set");
                }
                target = vec![false; n];
                for &m in marks {
                    if m >= n {
                        return domain(format!("mark {m} outside 0..{n}"));
                    }
                    target[m] = true;
                }
                unthinned_only = *u;
            }
            StopRule::Extinction if !self.pruned && (n as f64 - 1.0) * self.p > 1.0 => {
                return domain("an unpruned supercritical process need not die out; use pruning");
            }
            _ => {}
        }
        // Rules that only look at unthinned individuals can stop once no
        // unthinned lineage is alive.
        let watches_unthinned = matches!(stop, StopRule::UnthinnedMarks(_)) || unthinned_only;

        let bin = BinomialSampler::new((n - 1) as u64, self.p)?;
        let mut tree = MarkedTree {
            n,
            marks: vec![self.root_mark],
            split_times: vec![0.0],
            generation: vec![0],
            parent_index: vec![None],
            thinned: vec![false],
            alive_walk: Vec::new(),
            offspring: Vec::new(),
            stop: StopReason::Extinct,
            hit_index: None,
        };
        let mut seen = vec![false; n];
        seen[self.root_mark] = true;
        let mut unthinned = 1usize;
        // Alive individuals as (mark, index of the wetted parent).
        let mut alive: Vec<(u32, u32)> = Vec::new();
        let mut alive_live = 0usize;
        let mut swaps: Vec<(u64, u64)> = Vec::new();
        let mut time = 0.0;

        let reproduce = |j: usize,
                         tree: &mut MarkedTree,
                         alive: &mut Vec<(u32, u32)>,
                         alive_live: &mut usize,
                         swaps: &mut Vec<(u64, u64)>,
                         stream: &mut RngStream| {
            let thinned = tree.thinned[j];
            let x = if self.pruned && thinned { 0 } else { bin.sample(stream) };
            let parent_mark = tree.marks[j] as u64;
            // Partial Fisher–Yates over 0..n−1, read as [n] without the parent's mark.
            swaps.clear();
            let pool = (n - 1) as u64;
            for i in 0..x {
                let k = i + stream.below(pool - i);
                let at = |pos: u64, swaps: &Vec<(u64, u64)>| {
                    swaps
                        .iter()
                        .rev()
                        .find(|(p, _)| *p == pos)
                        .map_or(pos, |&(_, v)| v)
                };
                let picked = at(k, swaps);
                let displaced = at(i, swaps);
                swaps.push((k, displaced));
                let mark = if picked < parent_mark { picked } else { picked + 1 };
                alive.push((mark as u32, j as u32));
            }
            if !thinned {
                *alive_live += x as usize;
            }
            tree.offspring.push(x);
            tree.alive_walk.push(alive.len() as i64);
        };

        let initial_stop = match stop {
            StopRule::Splits(0) => Some(StopReason::SplitLimit),
            StopRule::UnthinnedMarks(k) if *k <= 1 => Some(StopReason::UnthinnedLimit),
            StopRule::HitsMarks { .. } if target[self.root_mark] => {
                tree.hit_index = Some(0);
                Some(StopReason::Hit)
            }
            _ => None,
        };
        reproduce(0, &mut tree, &mut alive, &mut alive_live, &mut swaps, stream);
        if let Some(reason) = initial_stop {
            tree.stop = reason;
            return Ok(tree);
        }

        loop {
            if alive.is_empty() {
                tree.stop = StopReason::Extinct;
                break;
            }
            if watches_unthinned && alive_live == 0 {
                tree.stop = StopReason::ThinnedExtinct;
                break;
            }
            let s = alive.len();
            time += stream.exp1() / s as f64;
            let pick = stream.below(s as u64) as usize;
            let (mark, parent) = alive.swap_remove(pick);
            let (mark, parent) = (mark as usize, parent as usize);
            let j = tree.marks.len();
            let parent_thinned = tree.thinned[parent];
            let thinned = parent_thinned || seen[mark];
            if !parent_thinned {
                alive_live -= 1;
            }
            if !thinned {
                seen[mark] = true;
                unthinned += 1;
            }
            tree.marks.push(mark);
            tree.split_times.push(time);
            tree.generation.push(tree.generation[parent] + 1);
            tree.parent_index.push(Some(parent));
            tree.thinned.push(thinned);
            reproduce(j, &mut tree, &mut alive, &mut alive_live, &mut swaps, stream);

            let reason = match stop {
                StopRule::Splits(k) if j >= *k => Some(StopReason::SplitLimit),
                StopRule::UnthinnedMarks(k) if unthinned >= *k => Some(StopReason::UnthinnedLimit),
                StopRule::HitsMarks { .. } if target[mark] && !(unthinned_only && thinned) => {
                    tree.hit_index = Some(j);
                    Some(StopReason::Hit)
                }
                _ => None,
            };
            if let Some(reason) = reason {
                tree.stop = reason;
                break;
            }
        }
        Ok(tree)
    }
}

/// CTMBP rooted at mark 0 with `Bin(n − 1, p)` offspring, grown until `stop`.
pub fn simulate_ctmbp(n: usize, p: f64, stop: &StopRule, stream: &mut RngStream) -> Result<MarkedTree> {
    Ctmbp::new(n, p)?.simulate(stop, stream)
}

/// `S_{m+1} e^{−(λ−1) A_m}` for the Poisson(λ) process run for `m` splits, or 0
/// if it dies out first.
pub fn estimate_w(lambda: f64, m: usize, stream: &mut RngStream) -> Result<f64> {
    if !(lambda > 1.0 && lambda.is_finite()) {
        return domain(format!("W needs a supercritical offspring mean λ > 1, got {lambda}"));
    }
    if m == 0 {
        return domain("W estimate needs m >= 1 splits");
    }
    let pois = PoissonSampler::new(lambda)?;
    Ok(estimate_w_with(&pois, m, stream))
}

/// [`estimate_w`] with a prepared offspring sampler.
pub fn estimate_w_with(pois: &PoissonSampler, m: usize, stream: &mut RngStream) -> f64 {
    let alpha = pois.mean() - 1.0;
    let mut s = pois.sample(stream) as i64;
    let mut a = 0.0;
    for _ in 0..m {
        if s == 0 {
            return 0.0;
        }
        a += stream.exp1() / s as f64;
        s += pois.sample(stream) as i64 - 1;
    }
    s as f64 * (-alpha * a).exp()
}

/// Attempts allowed before a rejection sampler gives up.
const MAX_REJECTIONS: usize = 100_000;

/// `W_λ`: [`estimate_w`] conditioned to be positive.
pub fn sample_w_lambda(lambda: f64, m: usize, stream: &mut RngStream) -> Result<f64> {
    if !(lambda > 1.0 && lambda.is_finite()) {
        return domain(format!("W needs a supercritical offspring mean λ > 1, got {lambda}"));
    }
    if m == 0 {
        return domain("W estimate needs m >= 1 splits");
    }
    let pois = PoissonSampler::new(lambda)?;
    sample_w_lambda_with(&pois, m, stream)
}

pub fn sample_w_lambda_with(pois: &PoissonSampler, m: usize, stream: &mut RngStream) -> Result<f64> {
    for _ in 0..MAX_REJECTIONS {
        let w = estimate_w_with(pois, m, stream);
        if w > 0.0 {
            return Ok(w);
        }
    }
    Err(Error::Exhausted(format!(
        "branching process died out {MAX_REJECTIONS} times in a row"
    )))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CollisionOutcome {
    pub a_n: usize,
    /// Connection split count `C_n`; meaningful only when `survived`.
    pub c_n: usize,
    /// Generation in tree 1 of the mark that tree 2 hits.
    pub g1_u: usize,
    pub g2_c: usize,
    pub a1_an: f64,
    pub a2_c: f64,
    pub hops: usize,
    pub weight: f64,
    pub survived: bool,
    /// Thinned individuals among the first `k + 1` of tree 1 (`M_k`).
    pub m_k: usize,
}

/// Two-tree connection experiment with `a_n = ⌈√n⌉` and `M_k` at `k = a_n`.
pub fn collision_experiment(n: usize, p: f64, stream: &mut RngStream) -> Result<CollisionOutcome> {
    let a_n = (n as f64).sqrt().ceil() as usize;
    collision_experiment_with(n, p, a_n, a_n, stream)
}

/// Grows tree 1 (root mark 0) for `a_n` splits, then tree 2 (root mark 1) until
/// it wets a mark of tree 1.
pub fn collision_experiment_with(
    n: usize,
    p: f64,
    a_n: usize,
    coupling_k: usize,
    stream: &mut RngStream,
) -> Result<CollisionOutcome> {
    if n < 2 {
        return domain("collision experiment needs n >= 2");
    }
    if coupling_k > a_n {
        return domain(format!("coupling index {coupling_k} exceeds a_n = {a_n}"));
    }
    let mut out = CollisionOutcome {
        a_n,
        c_n: 0,
        g1_u: 0,
        g2_c: 0,
        a1_an: f64::NAN,
        a2_c: f64::NAN,
        hops: 0,
        weight: f64::NAN,
        survived: false,
        m_k: 0,
    };
    let base = Ctmbp::new(n, p)?;
    let tree1 = base.simulate(&StopRule::Splits(a_n), &mut stream.child(1))?;
    if tree1.splits() < a_n {
        return Ok(out);
    }
    out.m_k = tree1.thinned_upto(coupling_k);
    out.a1_an = tree1.split_times[a_n];
    let rule = StopRule::HitsMarks {
        marks: tree1.marks.clone(),
        unthinned_only: false,
    };
    let tree2 = base.with_root(1).simulate(&rule, &mut stream.child(2))?;
    let c = match tree2.hit_index {
        Some(c) => c,
        None => return Ok(out),
    };
    let hit = tree2.marks[c];
    out.c_n = c;
    out.g1_u = tree1.generation[tree1.first_index_of(hit).expect("hit mark is in tree 1")];
    out.g2_c = tree2.generation[c];
    out.a2_c = tree2.split_times[c];
    out.hops = out.g1_u + out.g2_c;
    out.weight = out.a1_an + out.a2_c;
    out.survived = true;
    Ok(out)
}

/// Maximal coupling of `Bin(n − 1, p)` and `Poi((n − 1)p)`: `m` pairs `(X, D)`.
pub fn couple_binomial_poisson(n: usize, p: f64, m: usize, stream: &mut RngStream) -> Result<Vec<(u64, u64)>> {
    let coupling = BinomialPoissonCoupling::new(n, p)?;
    Ok((0..m).map(|_| coupling.sample(stream)).collect())
}

/// Precomputed tables for [`couple_binomial_poisson`].
#[derive(Clone, Debug)]
pub struct BinomialPoissonCoupling {
    overlap_cdf: Vec<f64>,
    bin_excess_cdf: Vec<f64>,
    poi_excess_cdf: Vec<f64>,
    overlap_mass: f64,
}

impl BinomialPoissonCoupling {
    pub fn new(n: usize, p: f64) -> Result<Self> {
        if n == 0 {
            return domain("coupling needs n >= 1");
        }
        if !(0.0..=1.0).contains(&p) {
            return domain(format!("edge probability must lie in [0, 1], got {p}"));
        }
        let trials = (n - 1) as u64;
        let mean = trials as f64 * p;
        let kmax = (mean + 12.0 * mean.sqrt() + 40.0).ceil() as u64;
        let bin: Vec<f64> = (0..=kmax).map(|k| binomial_pmf(trials, p, k)).collect();
        let poi: Vec<f64> = (0..=kmax).map(|k| poisson_pmf(mean, k)).collect();
        let overlap: Vec<f64> = bin.iter().zip(&poi).map(|(a, b)| a.min(*b)).collect();
        let bx: Vec<f64> = bin.iter().zip(&overlap).map(|(a, o)| a - o).collect();
        let px: Vec<f64> = poi.iter().zip(&overlap).map(|(a, o)| a - o).collect();
        let cum = |v: &[f64]| {
            let mut acc = 0.0;
            v.iter()
                .map(|x| {
                    acc += x;
                    acc
                })
                .collect::<Vec<f64>>()
        };
        let overlap_cdf = cum(&overlap);
        let overlap_mass = *overlap_cdf.last().unwrap();
        Ok(Self {
            overlap_cdf,
            bin_excess_cdf: cum(&bx),
            poi_excess_cdf: cum(&px),
            overlap_mass,
        })
    }

    /// `P(X ≠ D)`: the total variation distance between the two marginals.
    pub fn disagreement_probability(&self) -> f64 {
        1.0 - self.overlap_mass
    }

    pub fn sample(&self, stream: &mut RngStream) -> (u64, u64) {
        let invert = |cdf: &[f64], u: f64| {
            let total = *cdf.last().unwrap();
            (cdf.partition_point(|&c| c <= u * total) as u64).min(cdf.len() as u64 - 1)
        };
        let u = stream.uniform();
        if u < self.overlap_mass {
            let k = invert(&self.overlap_cdf, u / self.overlap_mass);
            (k, k)
        } else {
            let x = invert(&self.bin_excess_cdf, stream.uniform());
            let d = invert(&self.poi_excess_cdf, stream.uniform());
            (x, d)
        }
    }
}

fn binomial_pmf(trials: u64, p: f64, k: u64) -> f64 {
    if k > trials {
        return 0.0;
    }
    if p == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p == 1.0 {
        return if k == trials { 1.0 } else { 0.0 };
    }
    let (nf, kf) = (trials as f64, k as f64);
    (libm::lgamma(nf + 1.0) - libm::lgamma(kf + 1.0) - libm::lgamma(nf - kf + 1.0)
        + kf * p.ln()
        + (nf - kf) * (-p).ln_1p())
    .exp()
}

fn poisson_pmf(mean: f64, k: u64) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (k as f64 * mean.ln() - mean - libm::lgamma(k as f64 + 1.0)).exp()
}
