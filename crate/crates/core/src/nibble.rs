//! Iterated semi-random clique partition. Each round samples cliques of
//! the scheduled size, keeps a greedy edge-disjoint subfamily, stabilizes
//! under-covered edges, and removes everything touched; edges surviving
//! all rounds become 2-cliques.

use std::fmt;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::graph::{for_each_clique_tail, Graph, GraphError, VertexSet};
use crate::rng::StreamRng;
use crate::schedule::{
    build_schedule, mu, round_q, stabilization_probability, NibbleParams, QBasis, RoundQ,
    Schedule, ScheduleError,
};

// ======================================================================
// errors
// ======================================================================

#[derive(Debug)]
pub enum NibbleError {
    Schedule(ScheduleError),
    Graph(GraphError),
    VertexCountMismatch { graph: usize, schedule: usize },
    /// The per-clique sampling probability exceeded one while cliques of
    /// the scheduled size are still present; the schedule cannot drive
    /// this round honestly.
    SamplingSaturated { round: usize, clique_count: u64 },
    PartitionParse { line: usize, reason: String },
    Io(io::Error),
}

impl fmt::Display for NibbleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NibbleError::Schedule(e) => write!(f, "schedule error: {e}"),
            NibbleError::Graph(e) => write!(f, "graph error: {e}"),
            NibbleError::VertexCountMismatch { graph, schedule } => {
                write!(f, "graph has {graph} vertices but schedule expects {schedule}")
            }
            NibbleError::SamplingSaturated { round, clique_count } => write!(
                f,
                "round {round}: sampling probability exceeds 1 with {clique_count} cliques present"
            ),
            NibbleError::PartitionParse { line, reason } => {
                write!(f, "partition line {line}: {reason}")
            }
            NibbleError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for NibbleError {}

impl From<ScheduleError> for NibbleError {
    fn from(e: ScheduleError) -> Self {
        NibbleError::Schedule(e)
    }
}

impl From<GraphError> for NibbleError {
    fn from(e: GraphError) -> Self {
        NibbleError::Graph(e)
    }
}

impl From<io::Error> for NibbleError {
    fn from(e: io::Error) -> Self {
        NibbleError::Io(e)
    }
}

// ======================================================================
// provenance
// ======================================================================

/// Where a part of the partition came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CliqueTag {
    /// Kept member of the round's edge-disjoint subfamily.
    GammaStar(usize),
    /// Edge of a sampled-but-dropped clique, not covered by the kept ones.
    D(usize),
    /// Edge stabilized this round without being in any sampled clique.
    S(usize),
    /// Edge surviving every round.
    FinalEdges,
}

impl CliqueTag {
    pub fn name(&self) -> &'static str {
        match self {
            CliqueTag::GammaStar(_) => "gamma_star",
            CliqueTag::D(_) => "d",
            CliqueTag::S(_) => "s",
            CliqueTag::FinalEdges => "final",
        }
    }

    pub fn round(&self) -> Option<usize> {
        match self {
            CliqueTag::GammaStar(i) | CliqueTag::D(i) | CliqueTag::S(i) => Some(*i),
            CliqueTag::FinalEdges => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedClique {
    pub vertices: VertexSet,
    pub tag: CliqueTag,
}

#[derive(Serialize, Deserialize)]
struct TaggedCliqueWire {
    vertices: Vec<u32>,
    tag: String,
    round: Option<usize>,
}

impl Serialize for TaggedClique {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        TaggedCliqueWire {
            vertices: self.vertices.ids().to_vec(),
            tag: self.tag.name().to_string(),
            round: self.tag.round(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TaggedClique {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = TaggedCliqueWire::deserialize(deserializer)?;
        let tag = match (wire.tag.as_str(), wire.round) {
            ("gamma_star", Some(i)) => CliqueTag::GammaStar(i),
            ("d", Some(i)) => CliqueTag::D(i),
            ("s", Some(i)) => CliqueTag::S(i),
            ("final", None) => CliqueTag::FinalEdges,
            (t, r) => {
                return Err(serde::de::Error::custom(format!(
                    "bad tag/round combination ({t:?}, {r:?})"
                )))
            }
        };
        Ok(TaggedClique {
            vertices: VertexSet::new(wire.vertices),
            tag,
        })
    }
}

/// The partition: tagged vertex sets whose pair sets tile the edge set.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliquePartition {
    pub n: usize,
    pub cliques: Vec<TaggedClique>,
}

impl CliquePartition {
    pub fn len(&self) -> usize {
        self.cliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    pub fn max_clique_size(&self) -> usize {
        self.cliques.iter().map(|c| c.vertices.len()).max().unwrap_or(0)
    }
}

/// Every edge of g as its own 2-clique. The fallback mode for densities
/// too small to support the scheduled process.
pub fn trivial_partition(g: &Graph) -> CliquePartition {
    let cliques = g
        .edges()
        .into_iter()
        .map(|(u, v)| TaggedClique {
            vertices: VertexSet::from_sorted(vec![u, v]),
            tag: CliqueTag::FinalEdges,
        })
        .collect();
    CliquePartition { n: g.n(), cliques }
}

// ======================================================================
// round machinery
// ======================================================================

#[inline]
fn edge_index(u: usize, v: usize) -> usize {
    debug_assert!(u < v);
    v * (v - 1) / 2 + u
}

struct EdgeBits {
    words: Vec<u64>,
}

impl EdgeBits {
    fn new(pair_count: usize) -> Self {
        EdgeBits {
            words: vec![0u64; pair_count.div_ceil(64)],
        }
    }

    #[inline]
    fn get(&self, e: usize) -> bool {
        self.words[e / 64] >> (e % 64) & 1 == 1
    }

    #[inline]
    fn set(&mut self, e: usize) {
        self.words[e / 64] |= 1 << (e % 64);
    }
}

/// Greedy maximal edge-disjoint subfamily: scan in order, keep a clique
/// iff it shares no edge with anything already kept. Returns the indices
/// of the kept cliques.
pub fn greedy_edge_disjoint(n: usize, cliques: &[VertexSet]) -> Vec<usize> {
    let mut used = EdgeBits::new(n * (n - 1) / 2);
    let mut kept = Vec::new();
    'scan: for (ci, c) in cliques.iter().enumerate() {
        let ids = c.ids();
        for (ai, &a) in ids.iter().enumerate() {
            for &b in ids.iter().skip(ai + 1) {
                if used.get(edge_index(a as usize, b as usize)) {
                    continue 'scan;
                }
            }
        }
        for (ai, &a) in ids.iter().enumerate() {
            for &b in ids.iter().skip(ai + 1) {
                used.set(edge_index(a as usize, b as usize));
            }
        }
        kept.push(ci);
    }
    kept
}

/// Everything produced by one round.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundOutput {
    pub round: usize,
    pub k_i: usize,
    pub p_i: f64,
    pub q: RoundQ,
    /// Number of k_i-cliques present in the round's input graph.
    pub clique_count: u64,
    /// Sampled cliques, in enumeration order.
    pub gamma: Vec<VertexSet>,
    /// Kept edge-disjoint subfamily, in sampling order.
    pub gamma_star: Vec<VertexSet>,
    /// Edges of sampled cliques not covered by the kept subfamily.
    pub d_edges: Vec<(u32, u32)>,
    /// Stabilized edges outside every sampled clique.
    pub s_edges: Vec<(u32, u32)>,
    pub removed_edge_count: usize,
}

/// One round with the sampling probability supplied by the caller; the
/// clamp flag is treated as saturation and refused when cliques exist.
pub fn run_round_with_q(
    g: &Graph,
    i: usize,
    sched: &Schedule,
    q: RoundQ,
    rng: &mut StreamRng,
) -> Result<(RoundOutput, Graph), NibbleError> {
    if g.n() != sched.n {
        return Err(NibbleError::VertexCountMismatch {
            graph: g.n(),
            schedule: sched.n,
        });
    }
    let rp = sched.round(i)?;
    let n = g.n();
    let pair_count = n * (n - 1) / 2;

    // single enumeration pass: total count, per-edge counts, and the
    // Bernoulli(q) sample; cliques sharing a prefix arrive as one bitset
    // of final vertices, so the prefix's internal pairs batch their counts
    let mut counts = vec![0u32; pair_count];
    let mut gamma: Vec<VertexSet> = Vec::new();
    let mut clique_count = 0u64;
    let mut clique_rng = rng.split("cliques");
    let empty = VertexSet::empty();
    let mut ids: Vec<u32> = Vec::with_capacity(rp.k_i);
    for_each_clique_tail(g, &empty, rp.k_i, |prefix, tail| {
        let completions: u64 = tail.iter().map(|w| w.count_ones() as u64).sum();
        if completions == 0 {
            return;
        }
        clique_count += completions;
        for (ai, &a) in prefix.iter().enumerate() {
            for &b in prefix.iter().skip(ai + 1) {
                counts[edge_index(a as usize, b as usize)] += completions as u32;
            }
        }
        for (wi, &word) in tail.iter().enumerate() {
            let mut t = word;
            while t != 0 {
                let bit = t.trailing_zeros() as usize;
                t &= t - 1;
                let v = wi * 64 + bit;
                for &a in prefix {
                    counts[edge_index(a as usize, v)] += 1;
                }
                if !q.clamped && clique_rng.bernoulli(q.value) {
                    ids.clear();
                    ids.extend_from_slice(prefix);
                    ids.push(v as u32);
                    gamma.push(VertexSet::from_sorted(ids.clone()));
                }
            }
        }
    })?;
    if q.clamped {
        return Err(NibbleError::SamplingSaturated {
            round: i,
            clique_count,
        });
    }

    // greedy maximal edge-disjoint subfamily
    let kept = greedy_edge_disjoint(n, &gamma);
    let mut star_mask = EdgeBits::new(pair_count);
    let mut star_edge_count = 0usize;
    let gamma_star: Vec<VertexSet> = kept
        .iter()
        .map(|&ci| {
            let ids = gamma[ci].ids();
            for (ai, &a) in ids.iter().enumerate() {
                for &b in ids.iter().skip(ai + 1) {
                    star_mask.set(edge_index(a as usize, b as usize));
                    star_edge_count += 1;
                }
            }
            gamma[ci].clone()
        })
        .collect();

    // leftover edges of sampled cliques
    let mut d_mask = EdgeBits::new(pair_count);
    let mut d_edges: Vec<(u32, u32)> = Vec::new();
    for c in &gamma {
        let ids = c.ids();
        for (ai, &a) in ids.iter().enumerate() {
            for &b in ids.iter().skip(ai + 1) {
                let e = edge_index(a as usize, b as usize);
                if !star_mask.get(e) && !d_mask.get(e) {
                    d_mask.set(e);
                    d_edges.push((a, b));
                }
            }
        }
    }
    d_edges.sort_unstable();

    // stabilization pass over every surviving edge, in edge order
    let target = (1.0 + sched.eps) * mu(2, rp.k_i, i, sched)?;
    let mut stab_rng = rng.split("stabilize");
    let mut s_edges: Vec<(u32, u32)> = Vec::new();
    let mut g_next = g.clone();
    let mut removed = 0usize;
    for (u, v) in g.edges() {
        let e = edge_index(u as usize, v as usize);
        let z = stabilization_probability(counts[e] as u64, q.value, target);
        let stabilized = stab_rng.bernoulli(z);
        let in_sampled_clique = star_mask.get(e) || d_mask.get(e);
        if stabilized && !in_sampled_clique {
            s_edges.push((u, v));
        }
        if stabilized || in_sampled_clique {
            g_next.remove_edge(u as usize, v as usize);
            removed += 1;
        }
    }

    debug_assert_eq!(removed, star_edge_count + d_edges.len() + s_edges.len());
    debug_assert_eq!(g.edge_count(), g_next.edge_count() + removed);

    Ok((
        RoundOutput {
            round: i,
            k_i: rp.k_i,
            p_i: rp.p_i,
            q,
            clique_count,
            gamma,
            gamma_star,
            d_edges,
            s_edges,
            removed_edge_count: removed,
        },
        g_next,
    ))
}

/// One round with the sampling probability taken from the schedule's
/// predicted clique counts.
pub fn run_round(
    g: &Graph,
    i: usize,
    sched: &Schedule,
    rng: &mut StreamRng,
) -> Result<(RoundOutput, Graph), NibbleError> {
    let q = round_q(i, sched, QBasis::Predicted)?;
    run_round_with_q(g, i, sched, q, rng)
}

// ======================================================================
// whole runs
// ======================================================================

/// Why the round loop ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum StopReason {
    AllRoundsRun,
    EdgesExhausted { round: usize },
    /// Scheduled clique size fell to 2 or below; later rounds would only
    /// emit bare edges.
    CliqueSizeFloor { round: usize },
    /// Sampling probability clamped with no cliques left to sample.
    SamplingSaturated { round: usize },
}

/// A full run: per-round outputs, surviving edges, and the assembled
/// partition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionRun {
    pub schedule: Schedule,
    pub rounds: Vec<RoundOutput>,
    pub final_edges: Vec<(u32, u32)>,
    pub stop: StopReason,
    #[serde(skip)]
    pub partition: CliquePartition,
}

/// Run every scheduled round on g, then turn surviving edges into
/// 2-cliques.
pub fn run_partition_scheduled(
    g: &Graph,
    sched: &Schedule,
    rng: &mut StreamRng,
) -> Result<PartitionRun, NibbleError> {
    if g.n() != sched.n {
        return Err(NibbleError::VertexCountMismatch {
            graph: g.n(),
            schedule: sched.n,
        });
    }
    let mut rounds: Vec<RoundOutput> = Vec::new();
    let mut g_cur = g.clone();
    let mut stop = StopReason::AllRoundsRun;
    for i in 0..sched.rounds_planned {
        if g_cur.edge_count() == 0 {
            stop = StopReason::EdgesExhausted { round: i };
            break;
        }
        let rp = sched.round(i)?;
        if rp.k_i <= 2 {
            stop = StopReason::CliqueSizeFloor { round: i };
            break;
        }
        let mut round_rng = rng.split(&format!("round{i}"));
        match run_round(&g_cur, i, sched, &mut round_rng) {
            Ok((out, next)) => {
                rounds.push(out);
                g_cur = next;
            }
            Err(NibbleError::SamplingSaturated { round, clique_count }) if clique_count == 0 => {
                let _ = round;
                stop = StopReason::SamplingSaturated { round: i };
                break;
            }
            Err(e) => return Err(e),
        }
    }

    let final_edges = g_cur.edges();
    let mut cliques = Vec::new();
    for r in &rounds {
        for c in &r.gamma_star {
            cliques.push(TaggedClique {
                vertices: c.clone(),
                tag: CliqueTag::GammaStar(r.round),
            });
        }
        for &(u, v) in &r.d_edges {
            cliques.push(TaggedClique {
                vertices: VertexSet::from_sorted(vec![u, v]),
                tag: CliqueTag::D(r.round),
            });
        }
        for &(u, v) in &r.s_edges {
            cliques.push(TaggedClique {
                vertices: VertexSet::from_sorted(vec![u, v]),
                tag: CliqueTag::S(r.round),
            });
        }
    }
    for &(u, v) in &final_edges {
        cliques.push(TaggedClique {
            vertices: VertexSet::from_sorted(vec![u, v]),
            tag: CliqueTag::FinalEdges,
        });
    }

    Ok(PartitionRun {
        schedule: sched.clone(),
        rounds,
        final_edges,
        stop,
        partition: CliquePartition { n: g.n(), cliques },
    })
}

/// Build the schedule for (n, p) and run the full partition process.
pub fn run_partition(
    g: &Graph,
    p: f64,
    params: NibbleParams,
    rng: &mut StreamRng,
) -> Result<PartitionRun, NibbleError> {
    let sched = build_schedule(g.n(), p, params)?;
    run_partition_scheduled(g, &sched, rng)
}

// ======================================================================
// verification
// ======================================================================

/// Result of checking a partition against its graph.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionAudit {
    pub pass: bool,
    /// Total number of parts.
    pub clique_count: usize,
    pub max_clique_size: usize,
    /// Max over vertices of the number of parts containing it.
    pub thickness: usize,
    /// Edges of g covered at least once.
    pub covered_edges: usize,
    pub violation_count: usize,
    /// First 10 violations, human-readable.
    pub violations: Vec<String>,
}

/// Check that the parts are cliques of g and that their pair sets cover
/// every edge exactly once.
pub fn verify_partition(g: &Graph, part: &CliquePartition) -> PartitionAudit {
    const MAX_LISTED: usize = 10;
    let n = g.n();
    let mut violation_count = 0usize;
    let mut violations = Vec::new();
    let note = |violations: &mut Vec<String>, count: &mut usize, msg: String| {
        if violations.len() < MAX_LISTED {
            violations.push(msg);
        }
        *count += 1;
    };

    if part.n != n {
        note(
            &mut violations,
            &mut violation_count,
            format!("partition declares {} vertices, graph has {n}", part.n),
        );
    }

    let mut coverage = vec![0u32; n * (n - 1) / 2];
    let mut per_vertex = vec![0usize; n];
    let mut max_size = 0usize;

    for (idx, part_entry) in part.cliques.iter().enumerate() {
        let ids = part_entry.vertices.ids();
        max_size = max_size.max(ids.len());
        if ids.len() < 2 {
            note(
                &mut violations,
                &mut violation_count,
                format!("part {idx} has fewer than 2 vertices"),
            );
            continue;
        }
        if let Some(&bad) = ids.iter().find(|&&v| v as usize >= n) {
            note(
                &mut violations,
                &mut violation_count,
                format!("part {idx} names vertex {bad}, out of range for n = {n}"),
            );
            continue;
        }
        for &v in ids {
            per_vertex[v as usize] += 1;
        }
        for (ai, &a) in ids.iter().enumerate() {
            for &b in ids.iter().skip(ai + 1) {
                if !g.has_edge(a as usize, b as usize) {
                    note(
                        &mut violations,
                        &mut violation_count,
                        format!("part {idx} contains non-edge ({a}, {b})"),
                    );
                } else {
                    coverage[edge_index(a as usize, b as usize)] += 1;
                }
            }
        }
    }

    let mut covered_edges = 0usize;
    for (u, v) in g.edges() {
        let c = coverage[edge_index(u as usize, v as usize)];
        if c >= 1 {
            covered_edges += 1;
        }
        if c == 0 {
            note(
                &mut violations,
                &mut violation_count,
                format!("edge ({u}, {v}) uncovered"),
            );
        } else if c > 1 {
            note(
                &mut violations,
                &mut violation_count,
                format!("edge ({u}, {v}) covered {c} times"),
            );
        }
    }

    PartitionAudit {
        pass: violation_count == 0,
        clique_count: part.cliques.len(),
        max_clique_size: max_size,
        thickness: per_vertex.iter().copied().max().unwrap_or(0),
        covered_edges,
        violation_count,
        violations,
    }
}

// ======================================================================
// partition text format
// ======================================================================

/// One JSON record per line: {"vertices": [...], "tag": ..., "round": ...}.
pub fn write_partition_jsonl<W: Write>(
    part: &CliquePartition,
    mut writer: W,
) -> Result<(), NibbleError> {
    for c in &part.cliques {
        let line = serde_json::to_string(c)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

pub fn read_partition_jsonl<R: BufRead>(n: usize, reader: R) -> Result<CliquePartition, NibbleError> {
    let mut cliques = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let c: TaggedClique =
            serde_json::from_str(&line).map_err(|e| NibbleError::PartitionParse {
                line: idx + 1,
                reason: e.to_string(),
            })?;
        cliques.push(c);
    }
    Ok(CliquePartition { n, cliques })
}

// ======================================================================
// tests
// ======================================================================
