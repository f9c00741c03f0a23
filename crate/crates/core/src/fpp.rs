//! Shortest-weight paths on weighted graphs.
//!
//! Path order is lexicographic in `(weight, hops)`: among paths of equal total
//! weight the one with fewer edges wins, and remaining ties go to the smaller
//! parent label. With continuous weights ties have probability zero; the rule
//! only matters for hand-built instances.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::graph::{component_labels, two_core, WeightedGraph};
use crate::randomness::RngStream;
use crate::theory;

const UNREACHED: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq)]
struct Entry {
    weight: f64,
    hops: u32,
    vertex: u32,
}

impl Eq for Entry {}

impl Ord for Entry {
    // Reversed so that `BinaryHeap` pops the smallest (weight, hops, vertex).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .weight
            .total_cmp(&self.weight)
            .then(other.hops.cmp(&self.hops))
            .then(other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra state from one source.
struct Search {
    weight: Vec<f64>,
    hops: Vec<u32>,
    parent: Vec<u32>,
    settled: Vec<bool>,
    heap: BinaryHeap<Entry>,
}

impl Search {
    fn new(n: usize, source: usize) -> Self {
        let mut s = Self {
            weight: vec![f64::INFINITY; n],
            hops: vec![UNREACHED; n],
            parent: vec![UNREACHED; n],
            settled: vec![false; n],
            heap: BinaryHeap::new(),
        };
        s.weight[source] = 0.0;
        s.hops[source] = 0;
        s.heap.push(Entry {
            weight: 0.0,
            hops: 0,
            vertex: source as u32,
        });
        s
    }

    /// Key of the next vertex to settle, discarding stale heap entries.
    fn peek(&mut self) -> Option<Entry> {
        while let Some(&top) = self.heap.peek() {
            if self.settled[top.vertex as usize] {
                self.heap.pop();
            } else {
                return Some(top);
            }
        }
        None
    }

    /// Settles the next vertex and relaxes its edges.
    fn step(&mut self, wg: &WeightedGraph) -> Option<usize> {
        let top = self.peek()?;
        self.heap.pop();
        let v = top.vertex as usize;
        self.settled[v] = true;
        for (u, w) in wg.weighted_neighbors(v) {
            if self.settled[u] {
                continue;
            }
            let nw = top.weight + w;
            let nh = top.hops + 1;
            let better = match nw.total_cmp(&self.weight[u]) {
                Ordering::Less => true,
                Ordering::Equal => {
                    nh < self.hops[u] || (nh == self.hops[u] && (v as u32) < self.parent[u])
                }
                Ordering::Greater => false,
            };
            if better {
                self.weight[u] = nw;
                self.hops[u] = nh;
                self.parent[u] = v as u32;
                self.heap.push(Entry {
                    weight: nw,
                    hops: nh,
                    vertex: u as u32,
                });
            }
        }
        Some(v)
    }
}

/// Minimal weights, hopcounts and parents from a single source.
#[derive(Clone, Debug, PartialEq)]
pub struct ShortestWeightTree {
    pub source: usize,
    weight: Vec<f64>,
    hops: Vec<u32>,
    parent: Vec<u32>,
    /// Vertices in the order they were finalised.
    pub order: Vec<usize>,
}

impl ShortestWeightTree {
    pub fn weight(&self, v: usize) -> Option<f64> {
        let w = self.weight[v];
        w.is_finite().then_some(w)
    }

    pub fn hops(&self, v: usize) -> Option<usize> {
        (self.hops[v] != UNREACHED).then_some(self.hops[v] as usize)
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        (self.parent[v] != UNREACHED).then_some(self.parent[v] as usize)
    }

    /// Raw weights (`+∞` for unreachable vertices).
    pub fn weights(&self) -> &[f64] {
        &self.weight
    }
}

pub fn shortest_weight_tree(wg: &WeightedGraph, source: usize) -> Result<ShortestWeightTree> {
    if source >= wg.n() {
        return domain(format!("source {source} outside 0..{}", wg.n()));
    }
    let mut search = Search::new(wg.n(), source);
    let mut order = Vec::new();
    while let Some(v) = search.step(wg) {
        order.push(v);
    }
    Ok(ShortestWeightTree {
        source,
        weight: search.weight,
        hops: search.hops,
        parent: search.parent,
        order,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairResult {
    pub u: usize,
    pub v: usize,
    pub connected: bool,
    /// Minimal weight; `+∞` when disconnected.
    pub weight: f64,
    /// Hopcount of the minimal-weight path; 0 when disconnected.
    pub hops: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollisionResult {
    /// Time at which the two unit-rate flows meet.
    pub s12: f64,
    /// Last vertex wetted from `u` on the optimal path.
    pub v1: usize,
    /// Last vertex wetted from `v` on the optimal path.
    pub v2: usize,
    pub weight: f64,
    pub hops: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Collision {
    Met(CollisionResult),
    Disconnected,
}

/// Runs unit-rate flows from `u` and `v` simultaneously and stops at the first
/// collision, which happens in the interior of the edge `(v1, v2)`.
pub fn bidirectional_collision(wg: &WeightedGraph, u: usize, v: usize) -> Result<Collision> {
    let n = wg.n();
    if u >= n || v >= n {
        return domain(format!("vertices ({u}, {v}) outside 0..{n}"));
    }
    if u == v {
        return domain("collision needs two distinct vertices");
    }
    let mut fwd = Search::new(n, u);
    let mut bwd = Search::new(n, v);
    // Best meeting edge so far: (total weight, hops, v1, v2).
    let mut best: Option<(f64, u32, usize, usize)> = None;
    loop {
        let tf = fwd.peek().map_or(f64::INFINITY, |e| e.weight);
        let tb = bwd.peek().map_or(f64::INFINITY, |e| e.weight);
        if let Some((w, ..)) = best {
            if tf + tb >= w {
                break;
            }
        }
        if tf.is_infinite() && tb.is_infinite() {
            break;
        }
        let forward = tf <= tb;
        let (this, other) = if forward {
            (&mut fwd, &bwd)
        } else {
            (&mut bwd, &fwd)
        };
        let x = this.step(wg).expect("peeked entry exists");
        for (y, w) in wg.weighted_neighbors(x) {
            if !other.settled[y] {
                continue;
            }
            let total = this.weight[x] + w + other.weight[y];
            let hops = this.hops[x] + other.hops[y] + 1;
            let (a, b) = if forward { (x, y) } else { (y, x) };
            let improves = match best {
                None => true,
                Some((bw, bh, ..)) => total < bw || (total == bw && hops < bh),
            };
            if improves {
                best = Some((total, hops, a, b));
            }
        }
    }
    Ok(match best {
        None => Collision::Disconnected,
        Some((w, h, a, b)) => Collision::Met(CollisionResult {
            s12: 0.5 * w,
            v1: a,
            v2: b,
            weight: w,
            hops: h as usize,
        }),
    })
}

/// Weight and hopcount between `u` and `v` (bidirectional search).
pub fn pair_result(wg: &WeightedGraph, u: usize, v: usize) -> Result<PairResult> {
    Ok(match bidirectional_collision(wg, u, v)? {
        Collision::Met(c) => PairResult {
            u,
            v,
            connected: true,
            weight: c.weight,
            hops: c.hops,
        },
        Collision::Disconnected => PairResult {
            u,
            v,
            connected: false,
            weight: f64::INFINITY,
            hops: 0,
        },
    })
}

/// Draws `reps` ordered pairs `u ≠ v` uniformly and records their pair statistics.
pub fn sample_pair_statistics(
    wg: &WeightedGraph,
    reps: usize,
    stream: &mut RngStream,
) -> Result<Vec<PairResult>> {
    let n = wg.n();
    if n < 2 {
        return domain("pair sampling needs at least two vertices");
    }
    if reps == 0 {
        return domain("pair sampling needs reps >= 1");
    }
    (0..reps)
        .map(|_| {
            let (u, v) = uniform_pair(n, stream);
            pair_result(wg, u, v)
        })
        .collect()
}

/// Uniform ordered pair of distinct vertices.
pub fn uniform_pair(n: usize, stream: &mut RngStream) -> (usize, usize) {
    let u = stream.below(n as u64) as usize;
    let mut v = stream.below(n as u64 - 1) as usize;
    if v >= u {
        v += 1;
    }
    (u, v)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtremaOptions {
    /// Number of degree-one giant vertices kept as candidates, deepest pendant first.
    pub leaf_candidates: usize,
    /// Additional uniformly drawn giant vertices.
    pub random_candidates: usize,
    /// Giant components up to this size use every vertex as a candidate.
    pub exhaustive_below: usize,
    /// Edge density parameter for the diagnostic ratios, if known.
    pub lambda: Option<f64>,
}

impl Default for ExtremaOptions {
    fn default() -> Self {
        Self {
            leaf_candidates: 64,
            random_candidates: 16,
            exhaustive_below: 2_000,
            lambda: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtremaDiagnostics {
    pub candidates: usize,
    pub leaves_in_giant: usize,
    pub giant_size: usize,
    pub exhaustive: bool,
    /// `W_max / (c(λ) log n)`.
    pub weight_ratio: Option<f64>,
    /// `H_max / (d(λ) log n)`.
    pub hop_ratio: Option<f64>,
    /// `W_max / ((γ + 2/log|μ_λ|) log n)` with the constant taken literally.
    pub weight_ratio_raw: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtremaResult {
    pub i_star: usize,
    pub j_star: usize,
    pub w_max: f64,
    pub h_at_max: usize,
    /// Endpoints of the shortest-weight path with the most edges.
    pub h_pair: (usize, usize),
    pub h_max: usize,
    pub diagnostics: ExtremaDiagnostics,
}

/// Largest shortest-path weight and hopcount found from a set of candidate
/// sources within the giant component.
pub fn extrema_search(
    wg: &WeightedGraph,
    options: &ExtremaOptions,
    stream: &mut RngStream,
) -> Result<ExtremaResult> {
    let g = wg.graph();
    let n = g.n();
    let (label, sizes) = component_labels(g);
    let giant_label = sizes
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(c, _)| c);
    let giant_label = match giant_label {
        Some(c) if sizes[c] >= 2 => c,
        _ => return domain("giant component has fewer than two vertices"),
    };
    let giant: Vec<usize> = (0..n).filter(|&v| label[v] == giant_label).collect();
    let leaves: Vec<usize> = giant.iter().copied().filter(|&v| g.degree(v) == 1).collect();
    let exhaustive = giant.len() <= options.exhaustive_below;

    let candidates: Vec<usize> = if exhaustive {
        giant.clone()
    } else {
        let depth = two_core(g).vertex_depths(n);
        let mut ranked = leaves.clone();
        ranked.sort_by_key(|&v| (std::cmp::Reverse(depth[v].unwrap_or(0)), v));
        ranked.truncate(options.leaf_candidates);
        let mut chosen = vec![false; n];
        for &v in &ranked {
            chosen[v] = true;
        }
        for _ in 0..options.random_candidates {
            let v = giant[stream.below(giant.len() as u64) as usize];
            if !chosen[v] {
                chosen[v] = true;
                ranked.push(v);
            }
        }
        ranked.sort_unstable();
        ranked
    };

    // Per candidate: (max weight, its target, hops there, max hops, its target).
    let per_source: Vec<(f64, usize, usize, usize, usize)> = candidates
        .par_iter()
        .map(|&s| {
            let tree = shortest_weight_tree(wg, s).expect("candidate in range");
            let mut best = (0.0, s, 0, 0, s);
            for &t in &tree.order {
                let w = tree.weight[t];
                let h = tree.hops[t] as usize;
                if w > best.0 {
                    best.0 = w;
                    best.1 = t;
                    best.2 = h;
                }
                if h > best.3 {
                    best.3 = h;
                    best.4 = t;
                }
            }
            best
        })
        .collect();

    let mut w_best = (0.0, 0, 0, 0);
    let mut h_best = (0, 0, 0);
    for (&s, &(w, tw, hw, h, th)) in candidates.iter().zip(&per_source) {
        if w > w_best.0 {
            w_best = (w, s.min(tw), s.max(tw), hw);
        }
        if h > h_best.0 {
            h_best = (h, s.min(th), s.max(th));
        }
    }

    let log_n = (n as f64).ln();
    let consts = options.lambda.and_then(|l| theory::constants(l).ok());
    let diagnostics = ExtremaDiagnostics {
        candidates: candidates.len(),
        leaves_in_giant: leaves.len(),
        giant_size: giant.len(),
        exhaustive,
        weight_ratio: consts.map(|c| w_best.0 / (c.c_lambda * log_n)),
        hop_ratio: consts.map(|c| h_best.0 as f64 / (c.d_lambda * log_n)),
        weight_ratio_raw: consts.map(|c| w_best.0 / ((c.gamma + c.raw_path_term()) * log_n)),
    };
    Ok(ExtremaResult {
        i_star: w_best.1,
        j_star: w_best.2,
        w_max: w_best.0,
        h_at_max: w_best.3,
        h_pair: (h_best.1, h_best.2),
        h_max: h_best.0,
        diagnostics,
    })
}
