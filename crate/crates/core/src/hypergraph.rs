//! Uniform hypergraphs with incidence indexing, near-regularity
//! measurement, and the two random edge-sequence samplers.

use std::collections::HashSet;
use std::fmt;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::graph::{for_each_clique_extension, Graph, GraphError, VertexSet};
use crate::rng::StreamRng;

// ======================================================================
// errors
// ======================================================================

#[derive(Debug)]
pub enum HypergraphError {
    NoVertices,
    UniformityTooSmall(usize),
    WrongEdgeSize { edge: usize, size: usize, r: usize },
    VertexOutOfRange { edge: usize, vertex: u32, n: usize },
    RepeatedVertex { edge: usize },
    DuplicateEdge { edge: usize },
    EmptyEdgeList,
    Parse { line: usize, reason: String },
    Io(io::Error),
}

impl fmt::Display for HypergraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HypergraphError::NoVertices => write!(f, "hypergraph needs at least one vertex"),
            HypergraphError::UniformityTooSmall(r) => {
                write!(f, "uniformity r = {r} must be at least 2")
            }
            HypergraphError::WrongEdgeSize { edge, size, r } => {
                write!(f, "edge {edge} has {size} vertices, expected {r}")
            }
            HypergraphError::VertexOutOfRange { edge, vertex, n } => {
                write!(f, "edge {edge} names vertex {vertex}, out of range for n = {n}")
            }
            HypergraphError::RepeatedVertex { edge } => {
                write!(f, "edge {edge} repeats a vertex")
            }
            HypergraphError::DuplicateEdge { edge } => {
                write!(f, "edge {edge} duplicates an earlier edge")
            }
            HypergraphError::EmptyEdgeList => write!(f, "hypergraph has no edges"),
            HypergraphError::Parse { line, reason } => {
                write!(f, "hypergraph line {line}: {reason}")
            }
            HypergraphError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for HypergraphError {}

impl From<io::Error> for HypergraphError {
    fn from(e: io::Error) -> Self {
        HypergraphError::Io(e)
    }
}

// ======================================================================
// hypergraph
// ======================================================================

/// r-uniform hypergraph: a duplicate-free ground list of r-sets plus a
/// per-vertex incidence index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hypergraph {
    n: usize,
    r: usize,
    edges: Vec<VertexSet>,
    incidence: Vec<Vec<u32>>,
}

impl Hypergraph {
    pub fn new(n: usize, r: usize, edges: Vec<VertexSet>) -> Result<Self, HypergraphError> {
        if n == 0 {
            return Err(HypergraphError::NoVertices);
        }
        if r < 2 {
            return Err(HypergraphError::UniformityTooSmall(r));
        }
        let mut seen: HashSet<&[u32]> = HashSet::with_capacity(edges.len());
        for (idx, e) in edges.iter().enumerate() {
            // VertexSet is already sorted and deduplicated, so a short
            // edge means a repeated vertex was collapsed or the input
            // was genuinely short; both are rejected
            if e.len() != r {
                return Err(HypergraphError::WrongEdgeSize {
                    edge: idx,
                    size: e.len(),
                    r,
                });
            }
            if let Some(&v) = e.ids().iter().find(|&&v| v as usize >= n) {
                return Err(HypergraphError::VertexOutOfRange { edge: idx, vertex: v, n });
            }
            if !seen.insert(e.ids()) {
                return Err(HypergraphError::DuplicateEdge { edge: idx });
            }
        }
        let mut incidence = vec![Vec::new(); n];
        for (idx, e) in edges.iter().enumerate() {
            for v in e.iter() {
                incidence[v].push(idx as u32);
            }
        }
        Ok(Hypergraph { n, r, edges, incidence })
    }

    /// Every r-subset of [n] as an edge.
    pub fn complete(n: usize, r: usize) -> Result<Self, HypergraphError> {
        if r > n {
            return Err(HypergraphError::WrongEdgeSize { edge: 0, size: r, r: n });
        }
        let mut edges = Vec::new();
        let mut current: Vec<u32> = Vec::with_capacity(r);
        fn rec(n: usize, r: usize, start: usize, current: &mut Vec<u32>, out: &mut Vec<VertexSet>) {
            if current.len() == r {
                out.push(VertexSet::from_sorted(current.clone()));
                return;
            }
            let remaining = r - current.len();
            for v in start..=(n - remaining) {
                current.push(v as u32);
                rec(n, r, v + 1, current, out);
                current.pop();
            }
        }
        rec(n, r, 0, &mut current, &mut edges);
        Hypergraph::new(n, r, edges)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn r(&self) -> usize {
        self.r
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn edge(&self, id: usize) -> &VertexSet {
        &self.edges[id]
    }

    pub fn edges(&self) -> &[VertexSet] {
        &self.edges
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.incidence[v].len()
    }

    /// Ids of edges containing v.
    pub fn incident_edges(&self, v: usize) -> &[u32] {
        &self.incidence[v]
    }
}

/// One edge per k-clique of g.
pub fn clique_hypergraph(g: &Graph, k: usize) -> Result<Hypergraph, HypergraphError> {
    let mut edges = Vec::new();
    for_each_clique_extension(g, &VertexSet::empty(), k, |ext| {
        edges.push(VertexSet::from_sorted(ext.to_vec()));
    })
    .map_err(|e| match e {
        GraphError::TargetTooLarge { target, n } => {
            HypergraphError::WrongEdgeSize { edge: 0, size: target, r: n }
        }
        other => HypergraphError::Parse {
            line: 0,
            reason: other.to_string(),
        },
    })?;
    if edges.is_empty() {
        return Err(HypergraphError::EmptyEdgeList);
    }
    Hypergraph::new(g.n(), k, edges)
}

// ======================================================================
// regularity
// ======================================================================

/// How close the hypergraph is to D-regular with small codegrees.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegularityReport {
    /// Mean degree r·|E|/n.
    pub d_estimate: f64,
    /// max_v |deg(v) − D| / D.
    pub max_degree_deviation: f64,
    pub max_codegree: usize,
    /// Largest sigma with max degree deviation and max codegree both at
    /// most n^{-sigma}·D; +inf when both are zero, -inf when either is
    /// at least D (no positive sigma works).
    pub sigma_implied: f64,
}

/// Measure degree spread and codegrees against the mean degree.
pub fn check_regularity(h: &Hypergraph) -> Result<RegularityReport, HypergraphError> {
    if h.edge_count() == 0 {
        return Err(HypergraphError::EmptyEdgeList);
    }
    let n = h.n();
    let d = h.r() as f64 * h.edge_count() as f64 / n as f64;

    let max_deg_dev = (0..n)
        .map(|v| (h.degree(v) as f64 - d).abs())
        .fold(0.0f64, f64::max);

    let mut pair_counts = vec![0u32; n * (n - 1) / 2];
    for e in h.edges() {
        let ids = e.ids();
        for (ai, &a) in ids.iter().enumerate() {
            for &b in ids.iter().skip(ai + 1) {
                let (u, v) = (a as usize, b as usize);
                pair_counts[v * (v - 1) / 2 + u] += 1;
            }
        }
    }
    let max_codegree = pair_counts.iter().copied().max().unwrap_or(0) as usize;

    let worst = max_deg_dev.max(max_codegree as f64);
    let sigma_implied = if worst == 0.0 {
        f64::INFINITY
    } else {
        let sigma = (d / worst).ln() / (n as f64).ln();
        if sigma > 0.0 {
            sigma
        } else {
            f64::NEG_INFINITY
        }
    };

    Ok(RegularityReport {
        d_estimate: d,
        max_degree_deviation: max_deg_dev / d,
        max_codegree,
        sigma_implied,
    })
}

// ======================================================================
// random sequences
// ======================================================================

/// m i.i.d. uniform draws (with replacement) from the ground edge list,
/// as edge ids.
pub fn sample_sequence_fixed_m(
    h: &Hypergraph,
    m: usize,
    rng: &mut StreamRng,
) -> Result<Vec<u32>, HypergraphError> {
    if m == 0 {
        return Err(HypergraphError::Parse {
            line: 0,
            reason: "sequence length m must be at least 1".into(),
        });
    }
    if h.edge_count() == 0 {
        return Err(HypergraphError::EmptyEdgeList);
    }
    Ok((0..m).map(|_| rng.index(h.edge_count()) as u32).collect())
}

/// Independent inclusion of each ground edge with probability q_incl.
pub fn sample_subhypergraph_bernoulli(
    h: &Hypergraph,
    q_incl: f64,
    rng: &mut StreamRng,
) -> Result<Hypergraph, HypergraphError> {
    if !(0.0..=1.0).contains(&q_incl) || q_incl.is_nan() {
        return Err(HypergraphError::Parse {
            line: 0,
            reason: format!("inclusion probability {q_incl} outside [0, 1]"),
        });
    }
    let kept: Vec<VertexSet> = h
        .edges()
        .iter()
        .filter(|_| rng.bernoulli(q_incl))
        .cloned()
        .collect();
    Hypergraph::new(h.n(), h.r(), kept)
}

// ======================================================================
// text format
// ======================================================================

/// Read "n r m" followed by m lines of r vertex ids.
pub fn read_hypergraph<R: BufRead>(reader: R) -> Result<Hypergraph, HypergraphError> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| HypergraphError::Parse {
            line: 1,
            reason: "missing header".into(),
        })??;
    let fields: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().ok())
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| HypergraphError::Parse {
            line: 1,
            reason: "header must be \"n r m\"".into(),
        })?;
    let [n, r, m] = fields[..] else {
        return Err(HypergraphError::Parse {
            line: 1,
            reason: "header must be \"n r m\"".into(),
        });
    };
    let mut edges = Vec::with_capacity(m);
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 2;
        let ids: Vec<u32> = line
            .split_whitespace()
            .map(|t| t.parse().ok())
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| HypergraphError::Parse {
                line: lineno,
                reason: "expected vertex ids".into(),
            })?;
        if ids.len() != r {
            return Err(HypergraphError::Parse {
                line: lineno,
                reason: format!("expected {r} vertices, found {}", ids.len()),
            });
        }
        let set = VertexSet::new(ids);
        if set.len() != r {
            return Err(HypergraphError::RepeatedVertex { edge: edges.len() });
        }
        edges.push(set);
    }
    if edges.len() != m {
        return Err(HypergraphError::Parse {
            line: 1,
            reason: format!("header promises {m} edges, found {}", edges.len()),
        });
    }
    Hypergraph::new(n, r, edges)
}

pub fn write_hypergraph<W: Write>(h: &Hypergraph, mut writer: W) -> io::Result<()> {
    writeln!(writer, "{} {} {}", h.n(), h.r(), h.edge_count())?;
    for e in h.edges() {
        let ids: Vec<String> = e.ids().iter().map(|v| v.to_string()).collect();
        writeln!(writer, "{}", ids.join(" "))?;
    }
    Ok(())
}

// ======================================================================
// tests
// ======================================================================
