//! Erdős–Rényi graphs, connected components and the 2-core.
//!
//! Vertices are `0..n` internally; the text dump uses the 1-based labels
//! `1..=n`. Adjacency is a frozen CSR layout with sorted neighbour lists, so a
//! graph can be shared read-only between worker threads.

use std::collections::VecDeque;
use std::io::{BufRead, Write};

use crate::error::{domain, Error, Result};
use crate::randomness::RngStream;

#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    n: usize,
    /// Unordered pairs stored as `(i, j)` with `i < j`, in lexicographic order.
    edges: Vec<(u32, u32)>,
    offsets: Vec<usize>,
    nbr: Vec<u32>,
    nbr_edge: Vec<u32>,
}

impl Graph {
    /// Builds a graph from an arbitrary edge list, rejecting self-loops,
    /// out-of-range endpoints and duplicates.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n > u32::MAX as usize {
            return domain(format!("vertex count {n} exceeds the supported range"));
        }
        let mut norm = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n || b >= n {
                return domain(format!("edge ({a}, {b}) has an endpoint outside 0..{n}"));
            }
            if a == b {
                return domain(format!("self-loop at vertex {a}"));
            }
            norm.push((a.min(b) as u32, a.max(b) as u32));
        }
        norm.sort_unstable();
        if let Some(w) = norm.windows(2).find(|w| w[0] == w[1]) {
            return domain(format!("duplicate edge ({}, {})", w[0].0, w[0].1));
        }
        Ok(Self::from_sorted_unique(n, norm))
    }

    fn from_sorted_unique(n: usize, edges: Vec<(u32, u32)>) -> Self {
        let mut offsets = vec![0usize; n + 1];
        for &(i, j) in &edges {
            offsets[i as usize + 1] += 1;
            offsets[j as usize + 1] += 1;
        }
        for v in 0..n {
            offsets[v + 1] += offsets[v];
        }
        let mut fill = offsets.clone();
        let mut nbr = vec![0u32; 2 * edges.len()];
        let mut nbr_edge = vec![0u32; 2 * edges.len()];
        // Lexicographic edge order leaves every neighbour list sorted.
        for (e, &(i, j)) in edges.iter().enumerate() {
            let (i, j) = (i as usize, j as usize);
            nbr[fill[i]] = j as u32;
            nbr_edge[fill[i]] = e as u32;
            fill[i] += 1;
            nbr[fill[j]] = i as u32;
            nbr_edge[fill[j]] = e as u32;
            fill[j] += 1;
        }
        Self {
            n,
            edges,
            offsets,
            nbr,
            nbr_edge,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        let (i, j) = self.edges[e];
        (i as usize, j as usize)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().map(|&(i, j)| (i as usize, j as usize))
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.nbr[self.offsets[v]..self.offsets[v + 1]]
            .iter()
            .map(|&u| u as usize)
    }

    /// `(neighbour, edge id)` pairs incident to `v`, neighbours ascending.
    pub fn incident(&self, v: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let r = self.offsets[v]..self.offsets[v + 1];
        self.nbr[r.clone()]
            .iter()
            .zip(&self.nbr_edge[r])
            .map(|(&u, &e)| (u as usize, e as usize))
    }

    pub fn edge_id(&self, a: usize, b: usize) -> Option<usize> {
        let r = self.offsets[a]..self.offsets[a + 1];
        let slice = &self.nbr[r.clone()];
        slice
            .binary_search(&(b as u32))
            .ok()
            .map(|k| self.nbr_edge[r.start + k] as usize)
    }

    /// Same vertex set, keeping only edges with both endpoints in `keep`.
    pub fn restrict(&self, keep: &[bool]) -> Graph {
        let edges = self
            .edges
            .iter()
            .copied()
            .filter(|&(i, j)| keep[i as usize] && keep[j as usize])
            .collect();
        Self::from_sorted_unique(self.n, edges)
    }
}

/// Samples `G(n, p)` by geometric skipping over the lexicographic pair order.
///
/// Expected cost is `O(n + edges)`.
pub fn generate_er(n: usize, p: f64, stream: &mut RngStream) -> Result<Graph> {
    if n == 0 {
        return domain("graph must have at least one vertex");
    }
    if !(0.0..=1.0).contains(&p) {
        return domain(format!("edge probability must lie in [0, 1], got {p}"));
    }
    if n > u32::MAX as usize {
        return domain(format!("vertex count {n} exceeds the supported range"));
    }
    let mut edges = Vec::new();
    if p == 0.0 || n < 2 {
        return Ok(Graph::from_sorted_unique(n, edges));
    }
    if p == 1.0 {
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i as u32, j as u32));
            }
        }
        return Ok(Graph::from_sorted_unique(n, edges));
    }
    let expected = (n as f64) * (n as f64 - 1.0) * 0.5 * p;
    edges.reserve((expected * 1.05 + 16.0) as usize);
    let log_q = (-p).ln_1p();
    let n64 = n as u64;
    let cap = n64.saturating_mul(n64);
    let (mut i, mut j) = (0u64, 1u64);
    loop {
        let skip = (stream.uniform_open().ln() / log_q).floor();
        let skip = if skip >= cap as f64 { cap } else { skip as u64 };
        j += skip;
        while j >= n64 {
            let overflow = j - n64;
            i += 1;
            if i + 1 >= n64 {
                return Ok(Graph::from_sorted_unique(n, edges));
            }
            j = i + 1 + overflow;
        }
        edges.push((i as u32, j as u32));
        j += 1;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGraph {
    graph: Graph,
    weights: Vec<f64>,
}

impl WeightedGraph {
    pub fn new(graph: Graph, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != graph.num_edges() {
            return domain(format!(
                "{} weights supplied for {} edges",
                weights.len(),
                graph.num_edges()
            ));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return domain(format!("edge weights must be positive and finite, got {w}"));
        }
        Ok(Self { graph, weights })
    }

    /// Convenience constructor from `(a, b, weight)` triples.
    pub fn from_weighted_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let pairs: Vec<(usize, usize)> = edges.iter().map(|&(a, b, _)| (a, b)).collect();
        let graph = Graph::from_edges(n, &pairs)?;
        let mut weights = vec![0.0; graph.num_edges()];
        for &(a, b, w) in edges {
            let e = graph.edge_id(a, b).expect("edge just inserted");
            weights[e] = w;
        }
        Self::new(graph, weights)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, e: usize) -> f64 {
        self.weights[e]
    }

    /// `(neighbour, edge weight)` pairs incident to `v`.
    pub fn weighted_neighbors(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.graph
            .incident(v)
            .map(move |(u, e)| (u, self.weights[e]))
    }

    /// Writes the debugging dump: header `n m seed`, then `i j weight` per edge
    /// with 1-based labels and 17 significant digits.
    pub fn write_dump<W: Write>(&self, mut out: W, seed: u64) -> Result<()> {
        writeln!(out, "{} {} {}", self.graph.n, self.graph.num_edges(), seed)?;
        for (e, (i, j)) in self.graph.edges().enumerate() {
            writeln!(out, "{} {} {:.16e}", i + 1, j + 1, self.weights[e])?;
        }
        Ok(())
    }

    pub fn read_dump<R: BufRead>(input: R) -> Result<(Self, u64)> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty dump".into()))??;
        let head: Vec<&str> = header.split_whitespace().collect();
        if head.len() != 3 {
            return Err(Error::Parse(format!("bad header line {header:?}")));
        }
        let parse_u = |s: &str| -> Result<u64> {
            s.parse::<u64>()
                .map_err(|e| Error::Parse(format!("{s:?}: {e}")))
        };
        let n = parse_u(head[0])? as usize;
        let m = parse_u(head[1])? as usize;
        let seed = parse_u(head[2])?;
        let mut triples = Vec::with_capacity(m);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(Error::Parse(format!("bad edge line {line:?}")));
            }
            let i = parse_u(f[0])? as usize;
            let j = parse_u(f[1])? as usize;
            if i == 0 || j == 0 {
                return Err(Error::Parse(format!("labels are 1-based: {line:?}")));
            }
            let w: f64 = f[2]
                .parse()
                .map_err(|e| Error::Parse(format!("{:?}: {e}", f[2])))?;
            triples.push((i - 1, j - 1, w));
        }
        if triples.len() != m {
            return Err(Error::Parse(format!(
                "header announces {m} edges, found {}",
                triples.len()
            )));
        }
        Ok((Self::from_weighted_edges(n, &triples)?, seed))
    }
}

/// Attaches i.i.d. Exp(1) weights, one per edge in lexicographic edge order.
pub fn attach_weights(graph: Graph, stream: &mut RngStream) -> WeightedGraph {
    let weights = (0..graph.num_edges()).map(|_| stream.exp1()).collect();
    WeightedGraph { graph, weights }
}

/// Component label per vertex plus component sizes. Labels are assigned in
/// order of each component's smallest vertex.
pub fn component_labels(graph: &Graph) -> (Vec<usize>, Vec<usize>) {
    let n = graph.n();
    let mut label = vec![usize::MAX; n];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        let c = sizes.len();
        label[s] = c;
        queue.push_back(s);
        let mut size = 0;
        while let Some(v) = queue.pop_front() {
            size += 1;
            for u in graph.neighbors(v) {
                if label[u] == usize::MAX {
                    label[u] = c;
                    queue.push_back(u);
                }
            }
        }
        sizes.push(size);
    }
    (label, sizes)
}

/// Connected components, largest first (ties broken by smallest vertex), each
/// sorted ascending.
pub fn components(graph: &Graph) -> Vec<Vec<usize>> {
    let (label, sizes) = component_labels(graph);
    let mut comps: Vec<Vec<usize>> = sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
    for (v, &c) in label.iter().enumerate() {
        comps[c].push(v);
    }
    comps.sort_by(|a, b| b.len().cmp(&a.len()));
    comps
}

/// Vertices of the largest component (ties broken by smallest vertex).
pub fn giant_component(graph: &Graph) -> Vec<usize> {
    components(graph).into_iter().next().unwrap_or_default()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PendantTree {
    /// Core vertex the tree hangs from; `None` for tree components without a core.
    pub attachment: Option<usize>,
    /// Tree vertices, ascending.
    pub vertices: Vec<usize>,
    /// Hop distance of each vertex (aligned with `vertices`) from the attachment;
    /// for unattached trees, from the tree's smallest vertex.
    pub depths: Vec<usize>,
    /// Maximum of `depths`.
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoreDecomposition {
    pub core_vertices: Vec<usize>,
    pub pendant_trees: Vec<PendantTree>,
}

impl CoreDecomposition {
    /// Per-vertex hop distance to the core attachment (`None` for core vertices).
    pub fn vertex_depths(&self, n: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; n];
        for t in &self.pendant_trees {
            for (&v, &d) in t.vertices.iter().zip(&t.depths) {
                out[v] = Some(d);
            }
        }
        out
    }
}

/// 2-core by repeated removal of vertices of degree at most one; removed
/// vertices are grouped into the trees hanging off the core.
pub fn two_core(graph: &Graph) -> CoreDecomposition {
    let n = graph.n();
    let mut deg: Vec<usize> = (0..n).map(|v| graph.degree(v)).collect();
    let mut removed = vec![false; n];
    let mut stack: Vec<usize> = (0..n).filter(|&v| deg[v] <= 1).collect();
    while let Some(v) = stack.pop() {
        if removed[v] {
            continue;
        }
        removed[v] = true;
        for u in graph.neighbors(v) {
            if !removed[u] {
                deg[u] -= 1;
                if deg[u] == 1 {
                    stack.push(u);
                }
            }
        }
    }
    let core_vertices: Vec<usize> = (0..n).filter(|&v| !removed[v]).collect();

    // Each component of the removed forest touches the core through at most one edge.
    let mut seen = vec![false; n];
    let mut trees = Vec::new();
    let mut queue = VecDeque::new();
    for s in 0..n {
        if !removed[s] || seen[s] {
            continue;
        }
        let mut members = Vec::new();
        let mut attachment = None;
        let mut entry = s;
        seen[s] = true;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            members.push(v);
            for u in graph.neighbors(v) {
                if !removed[u] {
                    attachment = Some(u);
                    entry = v;
                } else if !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        // Depths by BFS inside the tree from the entry vertex.
        let start_depth = if attachment.is_some() { 1 } else { 0 };
        let root = if attachment.is_some() {
            entry
        } else {
            *members.iter().min().unwrap()
        };
        let mut depth_of = std::collections::HashMap::with_capacity(members.len());
        depth_of.insert(root, start_depth);
        queue.push_back(root);
        while let Some(v) = queue.pop_front() {
            let d = depth_of[&v];
            for u in graph.neighbors(v) {
                if removed[u] && !depth_of.contains_key(&u) {
                    depth_of.insert(u, d + 1);
                    queue.push_back(u);
                }
            }
        }
        members.sort_unstable();
        let depths: Vec<usize> = members.iter().map(|v| depth_of[v]).collect();
        let depth = depths.iter().copied().max().unwrap_or(0);
        trees.push(PendantTree {
            attachment,
            vertices: members,
            depths,
            depth,
        });
    }
    trees.sort_by_key(|t| (t.attachment.map_or(usize::MAX, |a| a), t.vertices[0]));
    CoreDecomposition {
        core_vertices,
        pendant_trees: trees,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randomness::make_stream;

    fn path(n: usize) -> Graph {
        let e: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        Graph::from_edges(n, &e).unwrap()
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(Graph::from_edges(3, &[(0, 0)]).is_err());
        assert!(Graph::from_edges(3, &[(0, 3)]).is_err());
        assert!(Graph::from_edges(3, &[(0, 1), (1, 0)]).is_err());
    }

    #[test]
    fn neighbours_sorted() {
        let g = Graph::from_edges(5, &[(4, 2), (0, 2), (2, 3), (1, 2)]).unwrap();
        let nb: Vec<_> = g.neighbors(2).collect();
        assert_eq!(nb, vec![0, 1, 3, 4]);
        assert_eq!(g.degree(2), 4);
        assert_eq!(g.edge_id(2, 4), g.edge_id(4, 2));
    }

    #[test]
    fn er_degenerate_probabilities() {
        let mut s = make_stream(1, 0);
        assert_eq!(generate_er(5, 0.0, &mut s).unwrap().num_edges(), 0);
        assert_eq!(generate_er(5, 1.0, &mut s).unwrap().num_edges(), 10);
        assert!(generate_er(5, 1.5, &mut s).is_err());
        assert!(generate_er(0, 0.5, &mut s).is_err());
        assert_eq!(generate_er(1, 0.7, &mut s).unwrap().num_edges(), 0);
    }

    #[test]
    fn er_small_pair_frequencies() {
        // Every pair of a 6-vertex graph should appear with probability p.
        let n = 6;
        let p = 0.3;
        let mut counts = vec![0usize; n * n];
        let reps = 40_000;
        for r in 0..reps {
            let g = generate_er(n, p, &mut make_stream(3, r)).unwrap();
            for (i, j) in g.edges() {
                counts[i * n + j] += 1;
            }
        }
        let sd = (p * (1.0 - p) / reps as f64).sqrt();
        for i in 0..n {
            for j in i + 1..n {
                let f = counts[i * n + j] as f64 / reps as f64;
                assert!((f - p).abs() < 5.0 * sd, "pair ({i},{j}) freq {f}");
            }
        }
    }

    #[test]
    fn er_sparse_edge_count() {
        let n = 10_000;
        let p = 2.0 / n as f64;
        let reps = 100;
        let mean = (0..reps)
            .map(|r| generate_er(n, p, &mut make_stream(4, r)).unwrap().num_edges() as f64)
            .sum::<f64>()
            / reps as f64;
        let expected = (n * (n - 1) / 2) as f64 * p;
        assert!((mean - expected).abs() < 3.0 * expected.sqrt(), "{mean}");
    }

    #[test]
    fn weights_are_positive_and_deterministic() {
        let g = generate_er(200, 0.05, &mut make_stream(5, 0)).unwrap();
        let a = attach_weights(g.clone(), &mut make_stream(5, 1));
        let b = attach_weights(g, &mut make_stream(5, 1));
        assert_eq!(a, b);
        assert!(a.weights().iter().all(|&w| w > 0.0));
        let empty = attach_weights(Graph::from_edges(3, &[]).unwrap(), &mut make_stream(0, 0));
        assert!(empty.weights().is_empty());
    }

    #[test]
    fn pooled_weight_mean() {
        let mut total = 0.0;
        let mut count = 0usize;
        let mut r = 0;
        while count < 100_000 {
            let g = generate_er(1000, 0.004, &mut make_stream(6, r)).unwrap();
            let wg = attach_weights(g, &mut make_stream(6, 1_000_000 + r));
            total += wg.weights().iter().sum::<f64>();
            count += wg.weights().len();
            r += 1;
        }
        let mean = total / count as f64;
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
    }

    #[test]
    fn components_basic() {
        let g = Graph::from_edges(4, &[]).unwrap();
        assert_eq!(components(&g).len(), 4);
        let c = components(&path(5));
        assert_eq!(c, vec![vec![0, 1, 2, 3, 4]]);
        let g = Graph::from_edges(6, &[(0, 5), (2, 3), (3, 4)]).unwrap();
        assert_eq!(components(&g), vec![vec![2, 3, 4], vec![0, 5], vec![1]]);
    }

    #[test]
    fn two_core_of_tree_is_empty() {
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (1, 3), (3, 4), (3, 5)]).unwrap();
        let cd = two_core(&g);
        assert!(cd.core_vertices.is_empty());
        assert_eq!(cd.pendant_trees.len(), 1);
        assert_eq!(cd.pendant_trees[0].attachment, None);
        assert_eq!(cd.pendant_trees[0].vertices.len(), 6);
    }

    #[test]
    fn two_core_of_cycle() {
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
        let cd = two_core(&g);
        assert_eq!(cd.core_vertices, vec![0, 1, 2, 3, 4]);
        assert!(cd.pendant_trees.is_empty());
    }

    #[test]
    fn pendant_depths() {
        // Triangle 0-1-2 with a path 2-3-4-5 and a leaf 6 on 0, plus isolated 7.
        let g = Graph::from_edges(
            8,
            &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (0, 6)],
        )
        .unwrap();
        let cd = two_core(&g);
        assert_eq!(cd.core_vertices, vec![0, 1, 2]);
        assert_eq!(cd.pendant_trees.len(), 3);
        let t6 = &cd.pendant_trees[0];
        assert_eq!((t6.attachment, t6.depth), (Some(0), 1));
        let t3 = &cd.pendant_trees[1];
        assert_eq!(t3.attachment, Some(2));
        assert_eq!(t3.vertices, vec![3, 4, 5]);
        assert_eq!(t3.depths, vec![1, 2, 3]);
        assert_eq!(t3.depth, 3);
        let iso = &cd.pendant_trees[2];
        assert_eq!((iso.attachment, iso.depth), (None, 0));
    }

    #[test]
    fn dump_round_trip() {
        let g = generate_er(30, 0.2, &mut make_stream(9, 0)).unwrap();
        let wg = attach_weights(g, &mut make_stream(9, 1));
        let mut buf = Vec::new();
        wg.write_dump(&mut buf, 99).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&format!("30 {} 99\n", wg.graph().num_edges())));
        let (back, seed) = WeightedGraph::read_dump(&buf[..]).unwrap();
        assert_eq!(seed, 99);
        assert_eq!(back, wg);
    }
}
