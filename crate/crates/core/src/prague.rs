//! Product representations over complete-graph factors: color a clique
//! partition of the complement, turn color classes into coordinates,
//! certify the embedding, and evaluate the matching counting lower
//! bounds.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::coloring::{graph_edge_color_greedy, greedy_color, ColoringError};
use crate::graph::{Graph, GraphError, VertexSet};
use crate::hypergraph::{Hypergraph, HypergraphError};
use crate::nibble::{
    run_partition_scheduled, CliquePartition, CliqueTag, NibbleError, RoundOutput, StopReason,
    TaggedClique,
};
use crate::rng::StreamRng;
use crate::schedule::{build_schedule, NibbleParams};

// ======================================================================
// errors
// ======================================================================

#[derive(Debug)]
pub enum PragueError {
    Nibble(NibbleError),
    Coloring(ColoringError),
    Graph(GraphError),
    Hypergraph(HypergraphError),
    PaletteListTooShort { rounds: usize, given: usize },
    CliquePaletteExhausted { round: usize, attempts: usize, last_q: usize },
    ImproperCover { clique_a: usize, clique_b: usize, vertex: u32 },
    VertexCountMismatch { graph: usize, cover: usize },
    LabelShapeMismatch { rows: usize, expected_rows: usize },
    /// The one extra coordinate cannot witness every remaining
    /// non-adjacency; the incoming cover was not a partition.
    ExtraCoordinateConflict { u: u32, v: u32 },
    EmbeddingRejected { violation_count: usize },
    InvalidProbability(f64),
    InvalidSlack(f64),
    /// The bound scale s fell below 2, so the denominators vanish.
    DegenerateScale { s: usize },
    TooFewVertices(usize),
}

impl fmt::Display for PragueError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PragueError::Nibble(e) => write!(f, "partition error: {e}"),
            PragueError::Coloring(e) => write!(f, "coloring error: {e}"),
            PragueError::Graph(e) => write!(f, "graph error: {e}"),
            PragueError::Hypergraph(e) => write!(f, "hypergraph error: {e}"),
            PragueError::PaletteListTooShort { rounds, given } => {
                write!(f, "{rounds} rounds need palettes, only {given} given")
            }
            PragueError::CliquePaletteExhausted { round, attempts, last_q } => {
                write!(
                    f,
                    "clique coloring for round {round} still failing after {attempts} \
                     palette doublings (last size {last_q})"
                )
            }
            PragueError::ImproperCover { clique_a, clique_b, vertex } => {
                write!(
                    f,
                    "cliques {clique_a} and {clique_b} share vertex {vertex} and a color"
                )
            }
            PragueError::VertexCountMismatch { graph, cover } => {
                write!(f, "graph has {graph} vertices, cover claims {cover}")
            }
            PragueError::LabelShapeMismatch { rows, expected_rows } => {
                write!(f, "label matrix has {rows} rows, expected {expected_rows}")
            }
            PragueError::ExtraCoordinateConflict { u, v } => {
                write!(
                    f,
                    "non-adjacency of ({u}, {v}) cannot be witnessed by one extra coordinate"
                )
            }
            PragueError::EmbeddingRejected { violation_count } => {
                write!(f, "assembled representation failed verification with {violation_count} violations")
            }
            PragueError::InvalidProbability(p) => {
                write!(f, "probability {p} must lie strictly between 0 and 1")
            }
            PragueError::InvalidSlack(e) => {
                write!(f, "slack {e} must lie strictly between 0 and 1")
            }
            PragueError::DegenerateScale { s } => {
                write!(f, "bound scale s = {s} is too small; increase n or decrease p")
            }
            PragueError::TooFewVertices(n) => write!(f, "need at least 2 vertices, got {n}"),
        }
    }
}

impl std::error::Error for PragueError {}

impl From<NibbleError> for PragueError {
    fn from(e: NibbleError) -> Self {
        PragueError::Nibble(e)
    }
}

impl From<ColoringError> for PragueError {
    fn from(e: ColoringError) -> Self {
        PragueError::Coloring(e)
    }
}

impl From<GraphError> for PragueError {
    fn from(e: GraphError) -> Self {
        PragueError::Graph(e)
    }
}

impl From<HypergraphError> for PragueError {
    fn from(e: HypergraphError) -> Self {
        PragueError::Hypergraph(e)
    }
}

// ======================================================================
// colored covers
// ======================================================================

/// One contiguous slice of the global palette, spent on one summand of
/// the partition (a round's kept cliques, its leftover edge families,
/// or the final surviving edges).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PaletteBlock {
    /// "gamma_star" | "d" | "s" | "final".
    pub source: String,
    pub round: Option<usize>,
    pub offset: usize,
    pub size: usize,
    /// Palette doublings needed before the block's coloring succeeded.
    pub retries: usize,
}

/// A clique partition together with a proper coloring of its cliques:
/// cliques sharing a vertex always have distinct colors, so each color
/// class is a vertex-disjoint union of cliques.
#[derive(Debug, Clone)]
pub struct ColoredCover {
    pub cliques: CliquePartition,
    /// Color per clique, aligned with `cliques.cliques`.
    pub colors: Vec<u32>,
    /// Palette size after compaction; colors lie in [0, d).
    pub d: usize,
    pub blocks: Vec<PaletteBlock>,
}

/// First clique pair sharing a vertex and a color, if any.
pub fn certify_properness(cover: &ColoredCover) -> Result<(), PragueError> {
    let mut seen: HashMap<(u32, u32), usize> = HashMap::new();
    for (ci, tc) in cover.cliques.cliques.iter().enumerate() {
        let color = cover.colors[ci];
        for v in tc.vertices.ids() {
            if let Some(&prev) = seen.get(&(color, *v)) {
                return Err(PragueError::ImproperCover {
                    clique_a: prev,
                    clique_b: ci,
                    vertex: *v,
                });
            }
            seen.insert((color, *v), ci);
        }
    }
    Ok(())
}

// remap colors onto 0..distinct so the reported palette is tight
fn compact_colors(raw: &[u32]) -> (Vec<u32>, usize) {
    let mut distinct: Vec<u32> = raw.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let remap: HashMap<u32, u32> = distinct
        .iter()
        .enumerate()
        .map(|(i, &c)| (c, i as u32))
        .collect();
    (raw.iter().map(|c| remap[c]).collect(), distinct.len())
}

fn color_clique_block(
    n: usize,
    round: usize,
    cliques: &[VertexSet],
    q_start: usize,
    max_retries: usize,
    rng: &mut StreamRng,
) -> Result<(Vec<u32>, usize, usize), PragueError> {
    let r = cliques[0].len();
    let h = Hypergraph::new(n, r, cliques.to_vec())?;
    let sequence: Vec<u32> = (0..cliques.len() as u32).collect();
    let mut q = q_start.max(1);
    let mut attempts = 0usize;
    loop {
        let run = greedy_color(&h, &sequence, q, &mut rng.split(&format!("try{attempts}")))?;
        if run.succeeded() {
            let raw: Vec<u32> = run.colors.iter().map(|c| c.unwrap()).collect();
            let (colors, size) = compact_colors(&raw);
            return Ok((colors, size, attempts));
        }
        if attempts >= max_retries {
            return Err(PragueError::CliquePaletteExhausted {
                round,
                attempts,
                last_q: q,
            });
        }
        attempts += 1;
        q *= 2;
    }
}

fn color_edge_block(edges: &[(u32, u32)]) -> Result<(Vec<u32>, usize), PragueError> {
    let coloring = graph_edge_color_greedy(edges)?;
    let (colors, size) = compact_colors(&coloring.colors);
    Ok((colors, size))
}

/// Color every family produced by a partition run on disjoint palette
/// blocks: each round's kept cliques get a randomized hypergraph
/// coloring (palette doubling on failure), the per-round leftover edges
/// and the surviving edges get first-fit graph colorings. The result is
/// certified proper before returning.
pub fn color_partition_assembled(
    rounds: &[RoundOutput],
    final_edges: &[(u32, u32)],
    n: usize,
    q_per_round: &[usize],
    max_retries: usize,
    rng: &mut StreamRng,
) -> Result<ColoredCover, PragueError> {
    if q_per_round.len() < rounds.len() {
        return Err(PragueError::PaletteListTooShort {
            rounds: rounds.len(),
            given: q_per_round.len(),
        });
    }
    let mut cliques: Vec<TaggedClique> = Vec::new();
    let mut colors: Vec<u32> = Vec::new();
    let mut blocks: Vec<PaletteBlock> = Vec::new();
    let mut offset = 0usize;

    let push_block =
        |tag_for: &dyn Fn(usize) -> CliqueTag,
         members: Vec<VertexSet>,
         local: Vec<u32>,
         size: usize,
         retries: usize,
         cliques: &mut Vec<TaggedClique>,
         colors: &mut Vec<u32>,
         blocks: &mut Vec<PaletteBlock>,
         offset: &mut usize| {
            let sample_tag = tag_for(0);
            for (idx, vs) in members.into_iter().enumerate() {
                cliques.push(TaggedClique {
                    vertices: vs,
                    tag: tag_for(idx),
                });
                colors.push(*offset as u32 + local[idx]);
            }
            blocks.push(PaletteBlock {
                source: sample_tag.name().to_string(),
                round: sample_tag.round(),
                offset: *offset,
                size,
                retries,
            });
            *offset += size;
        };

    for (ri, r) in rounds.iter().enumerate() {
        if !r.gamma_star.is_empty() {
            let mut block_rng = rng.split(&format!("block{}", r.round));
            let (local, size, retries) = color_clique_block(
                n,
                r.round,
                &r.gamma_star,
                q_per_round[ri],
                max_retries,
                &mut block_rng,
            )?;
            let round = r.round;
            push_block(
                &|_| CliqueTag::GammaStar(round),
                r.gamma_star.clone(),
                local,
                size,
                retries,
                &mut cliques,
                &mut colors,
                &mut blocks,
                &mut offset,
            );
        }
        for (edges, make_tag) in [
            (&r.d_edges, CliqueTag::D as fn(usize) -> CliqueTag),
            (&r.s_edges, CliqueTag::S as fn(usize) -> CliqueTag),
        ] {
            if edges.is_empty() {
                continue;
            }
            let (local, size) = color_edge_block(edges)?;
            let members: Vec<VertexSet> = edges
                .iter()
                .map(|&(u, v)| VertexSet::from_sorted(vec![u, v]))
                .collect();
            let round = r.round;
            push_block(
                &|_| make_tag(round),
                members,
                local,
                size,
                0,
                &mut cliques,
                &mut colors,
                &mut blocks,
                &mut offset,
            );
        }
    }

    if !final_edges.is_empty() {
        let (local, size) = color_edge_block(final_edges)?;
        let members: Vec<VertexSet> = final_edges
            .iter()
            .map(|&(u, v)| VertexSet::from_sorted(vec![u, v]))
            .collect();
        push_block(
            &|_| CliqueTag::FinalEdges,
            members,
            local,
            size,
            0,
            &mut cliques,
            &mut colors,
            &mut blocks,
            &mut offset,
        );
    }

    let cover = ColoredCover {
        cliques: CliquePartition { n, cliques },
        colors,
        d: offset,
        blocks,
    };
    certify_properness(&cover)?;
    Ok(cover)
}

// ======================================================================
// product representations
// ======================================================================

/// Per-vertex coordinate vectors: two vertices are adjacent exactly
/// when their vectors differ in every coordinate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProductRepresentation {
    pub d: usize,
    pub labels: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EmbeddingViolation {
    IdenticalVectors { u: u32, v: u32 },
    /// Non-adjacent pair whose vectors differ in every coordinate.
    MissingAgreement { u: u32, v: u32 },
    /// Adjacent pair whose vectors agree in some coordinate.
    SpuriousAgreement { u: u32, v: u32, coordinate: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingAudit {
    pub pass: bool,
    pub violation_count: usize,
    /// First ten violations, for diagnosis.
    pub violations: Vec<EmbeddingViolation>,
}

/// Exhaustive pairwise check of distinctness and the adjacency
/// equivalence, O(n² d).
pub fn verify_embedding(g: &Graph, rep: &ProductRepresentation) -> Result<EmbeddingAudit, PragueError> {
    let n = g.n();
    if rep.labels.len() != n {
        return Err(PragueError::LabelShapeMismatch {
            rows: rep.labels.len(),
            expected_rows: n,
        });
    }
    let mut violations = Vec::new();
    let mut violation_count = 0usize;
    let record = |v: EmbeddingViolation, violations: &mut Vec<EmbeddingViolation>| {
        if violations.len() < 10 {
            violations.push(v);
        }
    };
    for u in 0..n {
        for v in (u + 1)..n {
            let (lu, lv) = (&rep.labels[u], &rep.labels[v]);
            let agree_at = (0..rep.d).find(|&c| lu[c] == lv[c]);
            let identical = rep.d == 0 || (0..rep.d).all(|c| lu[c] == lv[c]);
            if identical {
                violation_count += 1;
                record(
                    EmbeddingViolation::IdenticalVectors { u: u as u32, v: v as u32 },
                    &mut violations,
                );
            }
            let adjacent = g.has_edge(u, v);
            match (adjacent, agree_at) {
                (true, Some(coordinate)) => {
                    violation_count += 1;
                    record(
                        EmbeddingViolation::SpuriousAgreement {
                            u: u as u32,
                            v: v as u32,
                            coordinate,
                        },
                        &mut violations,
                    );
                }
                (false, None) if !identical => {
                    violation_count += 1;
                    record(
                        EmbeddingViolation::MissingAgreement { u: u as u32, v: v as u32 },
                        &mut violations,
                    );
                }
                _ => {}
            }
        }
    }
    Ok(EmbeddingAudit {
        pass: violation_count == 0,
        violation_count,
        violations,
    })
}

/// Build coordinates from a properly colored clique partition of the
/// complement: coordinate c labels each vertex with its clique id in
/// color class c (fresh unique labels elsewhere). One extra coordinate
/// is appended when needed: shared fresh labels to witness any
/// non-adjacency no class witnessed, or an all-distinct coordinate when
/// only vector distinctness fails.
pub fn build_product_representation(
    g: &Graph,
    cover: &ColoredCover,
) -> Result<ProductRepresentation, PragueError> {
    let n = g.n();
    if cover.cliques.n != n {
        return Err(PragueError::VertexCountMismatch {
            graph: n,
            cover: cover.cliques.n,
        });
    }
    certify_properness(cover)?;
    let gb = g.complement();
    let d0 = cover.d;

    let mut labels: Vec<Vec<u32>> = vec![Vec::with_capacity(d0 + 1); n];
    let mut classes: Vec<Vec<usize>> = vec![Vec::new(); d0];
    for (ci, &color) in cover.colors.iter().enumerate() {
        classes[color as usize].push(ci);
    }
    for class in &classes {
        let mut assigned: Vec<Option<u32>> = vec![None; n];
        for (j, &ci) in class.iter().enumerate() {
            for v in cover.cliques.cliques[ci].vertices.iter() {
                assigned[v] = Some(j as u32);
            }
        }
        let mut fresh = class.len() as u32;
        for (v, a) in assigned.iter().enumerate() {
            let label = a.unwrap_or_else(|| {
                let l = fresh;
                fresh += 1;
                l
            });
            labels[v].push(label);
        }
    }

    // non-adjacencies no coordinate witnesses yet
    let unwitnessed: Vec<(u32, u32)> = gb
        .edges()
        .into_iter()
        .filter(|&(u, v)| {
            let (lu, lv) = (&labels[u as usize], &labels[v as usize]);
            (0..d0).all(|c| lu[c] != lv[c])
        })
        .collect();

    let mut d = d0;
    if !unwitnessed.is_empty() {
        // group the uncovered pairs into vertex-disjoint complement
        // cliques; each group shares one fresh label in the extra
        // coordinate
        let mut group_of: Vec<Option<usize>> = vec![None; n];
        let mut groups: Vec<Vec<u32>> = Vec::new();
        let compatible = |group: &[u32], w: u32, gb: &Graph| {
            group.iter().all(|&x| gb.has_edge(x as usize, w as usize))
        };
        for &(u, v) in &unwitnessed {
            match (group_of[u as usize], group_of[v as usize]) {
                (None, None) => {
                    group_of[u as usize] = Some(groups.len());
                    group_of[v as usize] = Some(groups.len());
                    groups.push(vec![u, v]);
                }
                (Some(gid), None) => {
                    if !compatible(&groups[gid], v, &gb) {
                        return Err(PragueError::ExtraCoordinateConflict { u, v });
                    }
                    groups[gid].push(v);
                    group_of[v as usize] = Some(gid);
                }
                (None, Some(gid)) => {
                    if !compatible(&groups[gid], u, &gb) {
                        return Err(PragueError::ExtraCoordinateConflict { u, v });
                    }
                    groups[gid].push(u);
                    group_of[u as usize] = Some(gid);
                }
                (Some(ga), Some(gc)) => {
                    if ga == gc {
                        continue;
                    }
                    let cross_ok = groups[ga]
                        .iter()
                        .all(|&x| compatible(&groups[gc], x, &gb));
                    if !cross_ok {
                        return Err(PragueError::ExtraCoordinateConflict { u, v });
                    }
                    let moved = std::mem::take(&mut groups[gc]);
                    for &x in &moved {
                        group_of[x as usize] = Some(ga);
                    }
                    groups[ga].extend(moved);
                }
            }
        }
        groups.retain(|g| !g.is_empty());
        let mut group_label: Vec<Option<u32>> = vec![None; n];
        for (gi, group) in groups.iter().enumerate() {
            for &v in group {
                group_label[v as usize] = Some(gi as u32);
            }
        }
        let mut fresh = groups.len() as u32;
        for (v, row) in labels.iter_mut().enumerate() {
            let label = group_label[v].unwrap_or_else(|| {
                let l = fresh;
                fresh += 1;
                l
            });
            row.push(label);
        }
        d += 1;
    } else {
        let mut seen: HashMap<&[u32], usize> = HashMap::new();
        let duplicate = labels
            .iter()
            .enumerate()
            .any(|(v, row)| seen.insert(row.as_slice(), v).is_some());
        if duplicate && n >= 2 {
            for (v, row) in labels.iter_mut().enumerate() {
                row.push(v as u32);
            }
            d += 1;
        }
    }

    let rep = ProductRepresentation { d, labels };
    let audit = verify_embedding(g, &rep)?;
    if !audit.pass {
        return Err(PragueError::EmbeddingRejected {
            violation_count: audit.violation_count,
        });
    }
    Ok(rep)
}

// ======================================================================
// counting lower bounds
// ======================================================================

/// (1−p)·ln(1−p) / (p·ln p), positive and increasing on (0, 1). The
/// numerator uses ln_1p so the decay toward 0 stays visible for p
/// below machine epsilon.
pub fn phi(p: f64) -> Result<f64, PragueError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(PragueError::InvalidProbability(p));
    }
    Ok((1.0 - p) * (-p).ln_1p() / (p * p.ln()))
}

/// Values pinning the shape of phi: vanishing near 0, exactly 1 at 1/2,
/// exploding near 1.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PhiAnchors {
    pub near_zero: f64,
    pub at_half: f64,
    pub near_one: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LowerBounds {
    pub n: usize,
    pub p: f64,
    pub eps: f64,
    /// Clique scale ⌈2·log_{1/p} n⌉.
    pub s: usize,
    pub phi: f64,
    /// Lower bound on the number of cliques in any edge partition.
    pub ccn_lb: f64,
    /// Lower bound on the thickness of any edge partition.
    pub cct_lb: f64,
    pub anchors: PhiAnchors,
}

// snap near-integers before the ceiling so exact powers don't round up
fn ceil_snapped(x: f64) -> f64 {
    let nearest = x.round();
    if (x - nearest).abs() < 1e-9 {
        nearest
    } else {
        x.ceil()
    }
}

/// Evaluate the counting lower bounds at (n, p) with slack eps.
pub fn lower_bounds(n: usize, p: f64, eps: f64) -> Result<LowerBounds, PragueError> {
    if n < 2 {
        return Err(PragueError::TooFewVertices(n));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(PragueError::InvalidProbability(p));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(PragueError::InvalidSlack(eps));
    }
    let s = ceil_snapped(2.0 * (n as f64).ln() / (1.0 / p).ln()) as usize;
    if s < 2 {
        return Err(PragueError::DegenerateScale { s });
    }
    let phi_p = phi(p)?;
    let pairs_n = (n * (n - 1) / 2) as f64;
    let pairs_s = (s * (s - 1) / 2) as f64;
    let scale = (1.0 - eps) * (1.0 + phi_p);
    Ok(LowerBounds {
        n,
        p,
        eps,
        s,
        phi: phi_p,
        ccn_lb: scale * pairs_n * p / pairs_s,
        cct_lb: scale * n as f64 * p / (s - 1) as f64,
        anchors: PhiAnchors {
            near_zero: phi(1e-3)?,
            at_half: phi(0.5)?,
            near_one: phi(1.0 - 1e-3)?,
        },
    })
}

// ======================================================================
// the full upper-bound pipeline
// ======================================================================

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PragueParams {
    pub nibble: NibbleParams,
    /// Density driving the complement's schedule; estimated from the
    /// complement's edge count when absent.
    pub complement_p: Option<f64>,
    /// Multiplier sizing each clique block's starting palette above the
    /// per-vertex average.
    pub palette_slack: f64,
    pub max_palette_retries: usize,
}

impl Default for PragueParams {
    fn default() -> Self {
        PragueParams {
            nibble: NibbleParams::default(),
            complement_p: None,
            palette_slack: 0.5,
            max_palette_retries: 8,
        }
    }
}

/// Everything the pipeline produced, for reporting.
#[derive(Debug, Clone)]
pub struct PragueRun {
    pub cover: ColoredCover,
    pub representation: ProductRepresentation,
    /// False when the density fell outside the schedule's range and the
    /// partition fell back to bare edges.
    pub scheduled: bool,
    pub stop: Option<StopReason>,
}

/// Partition the complement, color the partition, assemble and certify
/// the representation.
pub fn prague_upper_detailed(
    g: &Graph,
    params: &PragueParams,
    rng: &mut StreamRng,
) -> Result<PragueRun, PragueError> {
    let n = g.n();
    let gb = g.complement();
    let pair_count = n * (n - 1) / 2;
    let density = params.complement_p.unwrap_or(if pair_count == 0 {
        0.0
    } else {
        gb.edge_count() as f64 / pair_count as f64
    });

    let (rounds, final_edges, scheduled, stop) = match build_schedule(n, density, params.nibble) {
        Ok(sched) => {
            let run = run_partition_scheduled(&gb, &sched, &mut rng.split("partition"))?;
            (run.rounds, run.final_edges, true, Some(run.stop))
        }
        Err(_) => (Vec::new(), gb.edges(), false, None),
    };

    let q_per_round: Vec<usize> = rounds
        .iter()
        .map(|r| {
            let load = r.k_i as f64 * r.gamma_star.len() as f64 / n as f64;
            (((1.0 + params.palette_slack) * load).floor() as usize).max(1)
        })
        .collect();
    let cover = color_partition_assembled(
        &rounds,
        &final_edges,
        n,
        &q_per_round,
        params.max_palette_retries,
        &mut rng.split("colors"),
    )?;
    let representation = build_product_representation(g, &cover)?;
    Ok(PragueRun {
        cover,
        representation,
        scheduled,
        stop,
    })
}

/// The headline number and its certificate.
pub fn prague_upper(
    g: &Graph,
    params: &PragueParams,
    rng: &mut StreamRng,
) -> Result<(usize, ProductRepresentation), PragueError> {
    let run = prague_upper_detailed(g, params, rng)?;
    Ok((run.representation.d, run.representation))
}

// ======================================================================
// tests
// ======================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::sample_gnp;
    use crate::nibble::{trivial_partition, verify_partition};
    use crate::schedule::RoundQ;

    fn path_graph() -> Graph {
        let mut g = Graph::empty(3);
        g.add_edge(0, 1);
        g.add_edge(1, 2);
        g
    }

    #[test]
    fn phi_matches_anchors() {
        assert_eq!(phi(0.5).unwrap(), 1.0);
        // decays like 1/ln(1/p): still 0.145 at 1e-3, under 0.01 only
        // around 1e-45
        let near_zero = phi(1e-3).unwrap();
        assert!((near_zero - 0.14469242074789120).abs() < 1e-14, "{near_zero}");
        let tiny = phi(1e-45).unwrap();
        assert!(tiny > 0.009 && tiny < 0.01, "{tiny}");
        let anchors = lower_bounds(100, 0.4, 0.5).unwrap().anchors;
        assert!(anchors.near_zero < anchors.at_half);
        assert!(anchors.at_half < anchors.near_one);
        assert!(anchors.near_one > 6.0);
    }

    #[test]
    fn phi_rejects_boundaries() {
        assert!(phi(0.0).is_err());
        assert!(phi(1.0).is_err());
        assert!(phi(-0.2).is_err());
        assert!(phi(1.2).is_err());
    }

    #[test]
    fn lower_bound_example_values() {
        let lb = lower_bounds(1024, 0.5, 0.5).unwrap();
        assert_eq!(lb.s, 20);
        assert_eq!(lb.phi, 1.0);
        // 0.5 · 2 · C(1024,2) · 0.5 / C(20,2)
        let ccn = 0.5 * 2.0 * 523_776.0 * 0.5 / 190.0;
        assert!((lb.ccn_lb - ccn).abs() / ccn < 1e-12);
        // 0.5 · 2 · 1024 · 0.5 / 19
        let cct = 512.0 / 19.0;
        assert!((lb.cct_lb - cct).abs() / cct < 1e-12);
        assert!(lb.ccn_lb > 0.0 && lb.cct_lb > 0.0);
    }

    #[test]
    fn lower_bounds_reject_bad_input() {
        assert!(matches!(
            lower_bounds(100, 0.0, 0.5),
            Err(PragueError::InvalidProbability(_))
        ));
        assert!(matches!(
            lower_bounds(100, 1.0, 0.5),
            Err(PragueError::InvalidProbability(_))
        ));
        assert!(matches!(
            lower_bounds(100, 0.5, 0.0),
            Err(PragueError::InvalidSlack(_))
        ));
        assert!(matches!(
            lower_bounds(100, 0.5, 1.0),
            Err(PragueError::InvalidSlack(_))
        ));
        assert!(matches!(
            lower_bounds(1, 0.5, 0.5),
            Err(PragueError::TooFewVertices(1))
        ));
        // 2·log_1000(2) rounds to s = 1
        assert!(matches!(
            lower_bounds(2, 1e-3, 0.5),
            Err(PragueError::DegenerateScale { s: 1 })
        ));
    }

    #[test]
    fn embedding_verifier_examples() {
        let k3 = Graph::complete(3);
        let rep = ProductRepresentation {
            d: 1,
            labels: vec![vec![1], vec![2], vec![3]],
        };
        assert!(verify_embedding(&k3, &rep).unwrap().pass);

        let k2 = Graph::complete(2);
        let dup = ProductRepresentation {
            d: 1,
            labels: vec![vec![1], vec![1]],
        };
        let audit = verify_embedding(&k2, &dup).unwrap();
        assert!(!audit.pass);
        assert!(matches!(
            audit.violations[0],
            EmbeddingViolation::IdenticalVectors { u: 0, v: 1 }
        ));

        // single edge {0,1} on 3 vertices, hand-built representation
        let mut g = Graph::empty(3);
        g.add_edge(0, 1);
        let good = ProductRepresentation {
            d: 2,
            labels: vec![vec![0, 1], vec![1, 0], vec![0, 0]],
        };
        assert!(verify_embedding(&g, &good).unwrap().pass);

        // adjacent pair agreeing in coordinate 0
        let spurious = ProductRepresentation {
            d: 2,
            labels: vec![vec![0, 0], vec![0, 1], vec![1, 2]],
        };
        let audit = verify_embedding(&g, &spurious).unwrap();
        assert!(!audit.pass);
        assert!(audit.violations.iter().any(|vi| matches!(
            vi,
            EmbeddingViolation::SpuriousAgreement { u: 0, v: 1, coordinate: 0 }
        )));

        // non-adjacent pair differing everywhere
        let missing = ProductRepresentation {
            d: 1,
            labels: vec![vec![0], vec![1], vec![2]],
        };
        let audit = verify_embedding(&g, &missing).unwrap();
        assert!(!audit.pass);
        assert!(audit.violations.iter().any(|vi| matches!(
            vi,
            EmbeddingViolation::MissingAgreement { .. }
        )));

        let short = ProductRepresentation { d: 1, labels: vec![vec![0]] };
        assert!(verify_embedding(&g, &short).is_err());
    }

    #[test]
    fn leftover_triangle_costs_three() {
        let mut rng = StreamRng::new(11, "tri");
        let cover = color_partition_assembled(
            &[],
            &[(0, 1), (0, 2), (1, 2)],
            3,
            &[],
            4,
            &mut rng,
        )
        .unwrap();
        assert_eq!(cover.d, 3);
        assert_eq!(cover.blocks.len(), 1);
        assert_eq!(cover.blocks[0].source, "final");
        assert_eq!(cover.blocks[0].size, 3);
        assert_eq!(cover.cliques.len(), 3);
    }

    fn round_with_cliques(cliques: Vec<VertexSet>) -> RoundOutput {
        RoundOutput {
            round: 0,
            k_i: cliques[0].len(),
            p_i: 0.5,
            q: RoundQ { value: 1.0, raw: 1.0, clamped: false },
            clique_count: cliques.len() as u64,
            gamma: cliques.clone(),
            gamma_star: cliques,
            d_edges: Vec::new(),
            s_edges: Vec::new(),
            removed_edge_count: 0,
        }
    }

    #[test]
    fn disjoint_cliques_share_one_color() {
        let round = round_with_cliques(vec![
            VertexSet::new(vec![0, 1, 2]),
            VertexSet::new(vec![3, 4, 5]),
        ]);
        let mut rng = StreamRng::new(12, "disjoint");
        let cover = color_partition_assembled(&[round], &[], 6, &[1], 4, &mut rng).unwrap();
        assert_eq!(cover.d, 1);
        assert_eq!(cover.blocks[0].size, 1);
        assert_eq!(cover.blocks[0].retries, 0);
        assert_eq!(cover.colors, vec![0, 0]);
    }

    #[test]
    fn intersecting_cliques_force_palette_doubling() {
        // edge-disjoint but sharing vertex 0, so one color cannot work
        let round = round_with_cliques(vec![
            VertexSet::new(vec![0, 1, 2]),
            VertexSet::new(vec![0, 3, 4]),
        ]);
        let mut rng = StreamRng::new(13, "double");
        let cover = color_partition_assembled(&[round], &[], 5, &[1], 4, &mut rng).unwrap();
        assert_eq!(cover.d, 2);
        assert_eq!(cover.blocks[0].retries, 1);
        assert_ne!(cover.colors[0], cover.colors[1]);
    }

    #[test]
    fn retry_budget_is_enforced() {
        let round = round_with_cliques(vec![
            VertexSet::new(vec![0, 1, 2]),
            VertexSet::new(vec![0, 3, 4]),
        ]);
        let mut rng = StreamRng::new(14, "budget");
        let err = color_partition_assembled(&[round], &[], 5, &[1], 0, &mut rng).unwrap_err();
        assert!(matches!(
            err,
            PragueError::CliquePaletteExhausted { round: 0, attempts: 0, last_q: 1 }
        ));
    }

    #[test]
    fn palette_list_must_cover_rounds() {
        let round = round_with_cliques(vec![VertexSet::new(vec![0, 1, 2])]);
        let mut rng = StreamRng::new(15, "short");
        assert!(matches!(
            color_partition_assembled(&[round], &[], 3, &[], 4, &mut rng),
            Err(PragueError::PaletteListTooShort { rounds: 1, given: 0 })
        ));
    }

    #[test]
    fn properness_guard_catches_bad_covers() {
        let cover = ColoredCover {
            cliques: CliquePartition {
                n: 4,
                cliques: vec![
                    TaggedClique {
                        vertices: VertexSet::new(vec![0, 1]),
                        tag: CliqueTag::FinalEdges,
                    },
                    TaggedClique {
                        vertices: VertexSet::new(vec![1, 2]),
                        tag: CliqueTag::FinalEdges,
                    },
                ],
            },
            colors: vec![0, 0],
            d: 1,
            blocks: Vec::new(),
        };
        assert!(matches!(
            certify_properness(&cover),
            Err(PragueError::ImproperCover { clique_a: 0, clique_b: 1, vertex: 1 })
        ));
        let g = path_graph();
        assert!(build_product_representation(&g, &cover).is_err());
    }

    #[test]
    fn complete_graph_needs_one_coordinate() {
        // complement is edgeless, so the cover is empty and the
        // all-distinct coordinate carries everything
        for n in [2usize, 3, 8] {
            let g = Graph::complete(n);
            let cover =
                color_partition_assembled(&[], &[], n, &[], 4, &mut StreamRng::new(16, "kn"))
                    .unwrap();
            let rep = build_product_representation(&g, &cover).unwrap();
            assert_eq!(rep.d, 1, "n = {n}");
            assert!(verify_embedding(&g, &rep).unwrap().pass);
        }
    }

    #[test]
    fn path_boundary_case_adds_one_coordinate() {
        // complement of the path 0-1-2 is the single edge {0,2}; one
        // clique, one class, and the endpoints collide until the extra
        // coordinate separates them
        let g = path_graph();
        let cover = color_partition_assembled(
            &[],
            &[(0, 2)],
            3,
            &[],
            4,
            &mut StreamRng::new(17, "path"),
        )
        .unwrap();
        assert_eq!(cover.d, 1);
        let rep = build_product_representation(&g, &cover).unwrap();
        assert_eq!(rep.d, 2);
        assert!(verify_embedding(&g, &rep).unwrap().pass);
    }

    #[test]
    fn edgeless_graphs_embed_verified() {
        for n in 2usize..=8 {
            let g = Graph::empty(n);
            let gb = g.complement();
            let part = trivial_partition(&gb);
            let final_edges = gb.edges();
            let cover = color_partition_assembled(
                &[],
                &final_edges,
                n,
                &[],
                4,
                &mut StreamRng::new(n as u64, "edgeless"),
            )
            .unwrap();
            assert_eq!(cover.cliques.len(), part.len());
            let rep = build_product_representation(&g, &cover).unwrap();
            assert!(verify_embedding(&g, &rep).unwrap().pass, "n = {n}");
        }
    }

    #[test]
    fn pipeline_on_complete_inputs() {
        for n in [2usize, 4, 16, 64] {
            let g = Graph::complete(n);
            let (d, rep) =
                prague_upper(&g, &PragueParams::default(), &mut StreamRng::new(18, "pk")).unwrap();
            assert_eq!(d, 1, "n = {n}");
            assert!(verify_embedding(&g, &rep).unwrap().pass);
        }
    }

    #[test]
    fn pipeline_on_edgeless_four_vertices() {
        // complement K_4 is too dense for any schedule, so the partition
        // falls back to bare edges; first-fit needs exactly 3 colors and
        // the vectors come out distinct
        let g = Graph::empty(4);
        let run =
            prague_upper_detailed(&g, &PragueParams::default(), &mut StreamRng::new(19, "e4"))
                .unwrap();
        assert!(!run.scheduled);
        assert_eq!(run.representation.d, 3);
        assert!(verify_embedding(&g, &run.representation).unwrap().pass);
    }

    #[test]
    fn pipeline_on_random_graphs_always_verifies() {
        let params = PragueParams {
            nibble: NibbleParams { ca: 0.45, ..NibbleParams::default() },
            ..PragueParams::default()
        };
        for seed in 0..10u64 {
            let g = sample_gnp(64, 0.5, &mut StreamRng::new(seed, "pr-g")).unwrap();
            let run =
                prague_upper_detailed(&g, &params, &mut StreamRng::new(seed, "pr-run")).unwrap();
            assert!(verify_embedding(&g, &run.representation).unwrap().pass, "seed {seed}");

            // the cover partitions the complement
            let gb = g.complement();
            let audit = verify_partition(&gb, &run.cover.cliques);
            assert!(audit.pass, "seed {seed}: {:?}", audit.violations);

            // palette accounting: block sizes sum to d, colors are dense
            let block_sum: usize = run.cover.blocks.iter().map(|b| b.size).sum();
            assert_eq!(block_sum, run.cover.d);
            if run.cover.d > 0 {
                let max_color = run.cover.colors.iter().copied().max().unwrap() as usize;
                assert_eq!(max_color + 1, run.cover.d);
            }

            // counting self-consistency on the covered graph
            let omega = run.cover.cliques.max_clique_size();
            if omega >= 2 {
                let max_deg = (0..gb.n()).map(|v| gb.degree(v)).max().unwrap();
                assert!(audit.thickness * (omega - 1) >= max_deg);
                let pairs_omega = omega * (omega - 1) / 2;
                assert!(run.cover.cliques.len() * pairs_omega >= gb.edge_count());
            }
        }
    }

    #[test]
    fn pipeline_is_deterministic() {
        let g = sample_gnp(48, 0.5, &mut StreamRng::new(77, "det-g")).unwrap();
        let a = prague_upper(&g, &PragueParams::default(), &mut StreamRng::new(7, "det")).unwrap();
        let b = prague_upper(&g, &PragueParams::default(), &mut StreamRng::new(7, "det")).unwrap();
        assert_eq!(serde_json::to_string(&a.1).unwrap(), serde_json::to_string(&b.1).unwrap());
        assert_eq!(a.0, b.0);
    }
}
