//! Bitset graphs and the combinatorial kernels built on them.
//!
//! Adjacency is stored row-wise in ⌈n/64⌉-word bit vectors, so clique
//! checks and common-neighborhood counts are word-parallel AND + popcount.
//! Intended scale is n up to a few thousand.

use std::fmt;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::rng::StreamRng;

// ======================================================================
// errors
// ======================================================================

#[derive(Debug)]
pub enum GraphError {
    InvalidProbability(f64),
    EmptyVertexSet,
    BadSubsetSize { subset: usize, target: usize },
    TargetTooLarge { target: usize, n: usize },
    Parse { line: usize, reason: String },
    Io(io::Error),
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::InvalidProbability(p) => {
                write!(f, "edge probability {p} outside [0, 1]")
            }
            GraphError::EmptyVertexSet => write!(f, "graph must have at least one vertex"),
            GraphError::BadSubsetSize { subset, target } => {
                write!(f, "subset size {subset} exceeds target clique size {target}")
            }
            GraphError::TargetTooLarge { target, n } => {
                write!(f, "clique size {target} exceeds vertex count {n}")
            }
            GraphError::Parse { line, reason } => write!(f, "edge list line {line}: {reason}"),
            GraphError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for GraphError {}

impl From<io::Error> for GraphError {
    fn from(e: io::Error) -> Self {
        GraphError::Io(e)
    }
}

// ======================================================================
// vertex sets
// ======================================================================

/// Sorted, duplicate-free set of vertex ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexSet(Vec<u32>);

impl VertexSet {
    pub fn new(mut ids: Vec<u32>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        VertexSet(ids)
    }

    /// Caller guarantees `ids` is strictly increasing.
    pub fn from_sorted(ids: Vec<u32>) -> Self {
        debug_assert!(ids.windows(2).all(|w| w[0] < w[1]));
        VertexSet(ids)
    }

    pub fn empty() -> Self {
        VertexSet(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ids(&self) -> &[u32] {
        &self.0
    }

    pub fn contains(&self, v: u32) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|&v| v as usize)
    }
}

impl From<&[u32]> for VertexSet {
    fn from(ids: &[u32]) -> Self {
        VertexSet::new(ids.to_vec())
    }
}

// ======================================================================
// graph
// ======================================================================

/// Simple undirected graph, row-bitset adjacency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    words: usize,
    rows: Vec<u64>,
    edge_count: usize,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        assert!(n >= 1, "graph must have at least one vertex");
        let words = n.div_ceil(64);
        Graph {
            n,
            words,
            rows: vec![0u64; n * words],
            edge_count: 0,
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Graph::empty(n);
        for u in 0..n {
            for v in (u + 1)..n {
                g.add_edge(u, v);
            }
        }
        g
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn words_per_row(&self) -> usize {
        self.words
    }

    #[inline]
    pub fn row(&self, v: usize) -> &[u64] {
        &self.rows[v * self.words..(v + 1) * self.words]
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        debug_assert!(u < self.n && v < self.n);
        self.rows[u * self.words + v / 64] >> (v % 64) & 1 == 1
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        assert!(u != v, "no self-loops");
        if !self.has_edge(u, v) {
            self.rows[u * self.words + v / 64] |= 1 << (v % 64);
            self.rows[v * self.words + u / 64] |= 1 << (u % 64);
            self.edge_count += 1;
        }
    }

    pub fn remove_edge(&mut self, u: usize, v: usize) {
        if self.has_edge(u, v) {
            self.rows[u * self.words + v / 64] &= !(1 << (v % 64));
            self.rows[v * self.words + u / 64] &= !(1 << (u % 64));
            self.edge_count -= 1;
        }
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.row(v).iter().map(|w| w.count_ones() as usize).sum()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Edges as (u, v) with u < v, lexicographic.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.edge_count);
        for u in 0..self.n {
            let row = self.row(u);
            for (wi, &word) in row.iter().enumerate() {
                let mut t = word;
                // keep only v > u
                if wi == u / 64 {
                    t &= !((1u64 << (u % 64)) - 1) & !(1u64 << (u % 64));
                } else if wi < u / 64 {
                    t = 0;
                }
                while t != 0 {
                    let v = wi * 64 + t.trailing_zeros() as usize;
                    t &= t - 1;
                    out.push((u as u32, v as u32));
                }
            }
        }
        out
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.degree(v));
        for (wi, &word) in self.row(v).iter().enumerate() {
            let mut t = word;
            while t != 0 {
                out.push(wi * 64 + t.trailing_zeros() as usize);
                t &= t - 1;
            }
        }
        out
    }

    pub fn complement(&self) -> Graph {
        let mut g = Graph::empty(self.n);
        for v in 0..self.n {
            let src = self.row(v);
            let dst = &mut g.rows[v * g.words..(v + 1) * g.words];
            for w in 0..g.words {
                dst[w] = !src[w];
            }
            // clear the diagonal bit and the tail beyond n
            dst[v / 64] &= !(1u64 << (v % 64));
            let tail = self.n % 64;
            if tail != 0 {
                dst[g.words - 1] &= (1u64 << tail) - 1;
            }
        }
        g.edge_count = self.n * (self.n - 1) / 2 - self.edge_count;
        g
    }
}

/// G(n, p): each unordered pair is an edge independently with probability p.
pub fn sample_gnp(n: usize, p: f64, rng: &mut StreamRng) -> Result<Graph, GraphError> {
    if n == 0 {
        return Err(GraphError::EmptyVertexSet);
    }
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(GraphError::InvalidProbability(p));
    }
    let mut g = Graph::empty(n);
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.bernoulli(p) {
                g.add_edge(u, v);
            }
        }
    }
    Ok(g)
}

// ======================================================================
// clique kernels
// ======================================================================

// Depth-first extension over the candidate bitset. `cand` holds vertices
// adjacent to everything chosen so far and greater than the last choice;
// each level ANDs in one more adjacency row. The last level is not
// expanded vertex by vertex: its candidate bitset IS the completion set,
// so it streams to the visitor whole.
fn extend_tails<F: FnMut(&[u32], &[u64])>(
    g: &Graph,
    cand: &mut Vec<u64>,
    need: usize,
    stack: &mut Vec<u32>,
    visit: &mut F,
) {
    let words = g.words;
    let base = cand.len() - words;
    if need == 1 {
        visit(stack, &cand[base..]);
        return;
    }
    let live: usize = cand[base..].iter().map(|w| w.count_ones() as usize).sum();
    if live < need {
        return;
    }
    for wi in 0..words {
        let mut t = cand[base + wi];
        while t != 0 {
            let bit = t.trailing_zeros() as usize;
            t &= t - 1;
            let v = wi * 64 + bit;
            let row = g.row(v);
            let len = cand.len();
            cand.resize(len + words, 0);
            // candidates after v: intersect with row(v), mask off ids <= v
            for w in wi..words {
                cand[len + w] = cand[base + w] & row[w];
            }
            cand[len + wi] &= !((1u64 << bit) - 1) & !(1u64 << bit);
            stack.push(v as u32);
            extend_tails(g, cand, need - 1, stack, visit);
            cand.truncate(len);
            stack.pop();
        }
    }
}

fn base_candidates(g: &Graph, s: &VertexSet) -> Vec<u64> {
    let words = g.words;
    // common neighbors of s (all vertices when s = ∅), minus s itself
    let mut cand = vec![u64::MAX; words];
    let tail = g.n % 64;
    if tail != 0 {
        cand[words - 1] = (1u64 << tail) - 1;
    }
    for v in s.iter() {
        let row = g.row(v);
        for w in 0..words {
            cand[w] &= row[w];
        }
    }
    for v in s.iter() {
        cand[v / 64] &= !(1u64 << (v % 64));
    }
    cand
}

/// Streaming enumeration of C_{s,j} grouped by shared prefix: the visitor
/// receives the first j−|s|−1 extension vertices (ascending) plus the
/// bitset of valid final vertices, all greater than the last prefix
/// vertex. Requires j > |s|; iterating the tail bits in ascending order
/// reproduces the lexicographic extension order.
pub fn for_each_clique_tail<F: FnMut(&[u32], &[u64])>(
    g: &Graph,
    s: &VertexSet,
    j: usize,
    mut visit: F,
) -> Result<(), GraphError> {
    if j > g.n() {
        return Err(GraphError::TargetTooLarge { target: j, n: g.n() });
    }
    if s.len() >= j {
        return Err(GraphError::BadSubsetSize {
            subset: s.len(),
            target: j,
        });
    }
    let mut cand = base_candidates(g, s);
    let mut stack = Vec::with_capacity(j - s.len() - 1);
    extend_tails(g, &mut cand, j - s.len(), &mut stack, &mut visit);
    Ok(())
}

/// Streaming enumeration of the family C_{s,j}: every J ⊇ s with |J| = j
/// whose pairs outside s×s are all edges. The visitor receives only the
/// extension part (the j−|s| vertices added to s), in ascending order;
/// extensions arrive in lexicographic order.
pub fn for_each_clique_extension<F: FnMut(&[u32])>(
    g: &Graph,
    s: &VertexSet,
    j: usize,
    mut visit: F,
) -> Result<(), GraphError> {
    if j > g.n() {
        return Err(GraphError::TargetTooLarge { target: j, n: g.n() });
    }
    if s.len() > j {
        return Err(GraphError::BadSubsetSize {
            subset: s.len(),
            target: j,
        });
    }
    if s.len() == j {
        visit(&[]);
        return Ok(());
    }
    let mut buf: Vec<u32> = Vec::with_capacity(j - s.len());
    for_each_clique_tail(g, s, j, |prefix, tail| {
        buf.clear();
        buf.extend_from_slice(prefix);
        buf.push(0);
        let last = buf.len() - 1;
        for (wi, &word) in tail.iter().enumerate() {
            let mut t = word;
            while t != 0 {
                let bit = t.trailing_zeros();
                t &= t - 1;
                buf[last] = wi as u32 * 64 + bit;
                visit(&buf);
            }
        }
    })
}

/// All members of C_{s,j} as full vertex sets, lexicographically sorted.
pub fn enumerate_cliques(g: &Graph, s: &VertexSet, j: usize) -> Result<Vec<VertexSet>, GraphError> {
    let mut out = Vec::new();
    for_each_clique_extension(g, s, j, |ext| {
        let mut ids = Vec::with_capacity(j);
        ids.extend_from_slice(s.ids());
        ids.extend_from_slice(ext);
        out.push(VertexSet::new(ids));
    })?;
    out.sort_unstable();
    Ok(out)
}

/// |C_{s,j}| without materializing the family.
pub fn count_cliques(g: &Graph, s: &VertexSet, j: usize) -> Result<u64, GraphError> {
    if j > g.n() {
        return Err(GraphError::TargetTooLarge { target: j, n: g.n() });
    }
    if s.len() > j {
        return Err(GraphError::BadSubsetSize {
            subset: s.len(),
            target: j,
        });
    }
    if s.len() == j {
        return Ok(1);
    }
    let mut count = 0u64;
    for_each_clique_tail(g, s, j, |_, tail| {
        count += tail.iter().map(|w| w.count_ones() as u64).sum::<u64>();
    })?;
    Ok(count)
}

/// Number of vertices adjacent to every member of s (s itself excluded);
/// n for s = ∅.
pub fn count_common_neighbors(g: &Graph, s: &VertexSet) -> usize {
    if s.is_empty() {
        return g.n();
    }
    let words = g.words;
    let mut acc = vec![u64::MAX; words];
    let tail = g.n % 64;
    if tail != 0 {
        acc[words - 1] = (1u64 << tail) - 1;
    }
    for v in s.iter() {
        let row = g.row(v);
        for w in 0..words {
            acc[w] &= row[w];
        }
    }
    for v in s.iter() {
        acc[v / 64] &= !(1u64 << (v % 64));
    }
    acc.iter().map(|w| w.count_ones() as usize).sum()
}

// ======================================================================
// edge-list text format
// ======================================================================

/// Read "n m" followed by m lines "u v" (u < v). Rejects self-loops,
/// duplicates, and out-of-range ids.
pub fn read_edge_list<R: BufRead>(reader: R) -> Result<Graph, GraphError> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| GraphError::Parse {
            line: 1,
            reason: "missing header".into(),
        })??;
    let mut parts = header.split_whitespace();
    let n: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| GraphError::Parse {
            line: 1,
            reason: "header must be \"n m\"".into(),
        })?;
    let m: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| GraphError::Parse {
            line: 1,
            reason: "header must be \"n m\"".into(),
        })?;
    if n == 0 {
        return Err(GraphError::EmptyVertexSet);
    }
    let mut g = Graph::empty(n);
    let mut seen = 0usize;
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 2;
        let mut it = line.split_whitespace();
        let u: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| GraphError::Parse {
                line: lineno,
                reason: "expected \"u v\"".into(),
            })?;
        let v: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| GraphError::Parse {
                line: lineno,
                reason: "expected \"u v\"".into(),
            })?;
        if u == v {
            return Err(GraphError::Parse {
                line: lineno,
                reason: format!("self-loop at vertex {u}"),
            });
        }
        if u >= v {
            return Err(GraphError::Parse {
                line: lineno,
                reason: format!("edge ({u}, {v}) must satisfy u < v"),
            });
        }
        if v >= n {
            return Err(GraphError::Parse {
                line: lineno,
                reason: format!("vertex {v} out of range for n = {n}"),
            });
        }
        if g.has_edge(u, v) {
            return Err(GraphError::Parse {
                line: lineno,
                reason: format!("duplicate edge ({u}, {v})"),
            });
        }
        g.add_edge(u, v);
        seen += 1;
    }
    if seen != m {
        return Err(GraphError::Parse {
            line: 1,
            reason: format!("header promises {m} edges, found {seen}"),
        });
    }
    Ok(g)
}

pub fn write_edge_list<W: Write>(g: &Graph, mut writer: W) -> io::Result<()> {
    writeln!(writer, "{} {}", g.n(), g.edge_count())?;
    for (u, v) in g.edges() {
        writeln!(writer, "{u} {v}")?;
    }
    Ok(())
}

// ======================================================================
// tests
// ======================================================================
