//! Random greedy edge coloring of hypergraph edge sequences, with exact
//! availability bookkeeping, trajectory audits against the predicted
//! decay curves, and a first-fit proper edge coloring for plain graphs.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::hypergraph::Hypergraph;
use crate::rng::StreamRng;

// ======================================================================
// errors
// ======================================================================

#[derive(Debug)]
pub enum ColoringError {
    EmptyPalette,
    EdgeIdOutOfRange { step: usize, id: u32, edges: usize },
    InvalidTime(f64),
    InvalidGamma(f64),
    InvalidDelta(f64),
    InvalidSigma(f64),
    PaletteDegenerate { q: usize },
    SelfLoop { index: usize },
    DuplicateEdge { index: usize },
}

impl fmt::Display for ColoringError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColoringError::EmptyPalette => write!(f, "palette size q must be at least 1"),
            ColoringError::EdgeIdOutOfRange { step, id, edges } => {
                write!(f, "sequence step {step} names edge {id}, ground list has {edges}")
            }
            ColoringError::InvalidTime(t) => {
                write!(f, "time {t} must lie in [0, 1)")
            }
            ColoringError::InvalidGamma(g) => {
                write!(f, "gamma = {g} must lie strictly between 0 and 1")
            }
            ColoringError::InvalidDelta(d) => write!(f, "delta = {d} must be positive"),
            ColoringError::InvalidSigma(s) => write!(f, "sigma = {s} must be positive"),
            ColoringError::PaletteDegenerate { q } => {
                write!(f, "planned palette size {q} is below 1; m too small for this n and r")
            }
            ColoringError::SelfLoop { index } => write!(f, "edge {index} is a self-loop"),
            ColoringError::DuplicateEdge { index } => {
                write!(f, "edge {index} duplicates an earlier edge")
            }
        }
    }
}

impl std::error::Error for ColoringError {}

// ======================================================================
// palette bitsets
// ======================================================================

fn palette_words(q: usize) -> usize {
    q.div_ceil(64)
}

// set bits above q-1 never appear; the top word is masked on reads
fn palette_mask(q: usize, word: usize, words: usize) -> u64 {
    if word + 1 < words || q % 64 == 0 {
        u64::MAX
    } else {
        (1u64 << (q % 64)) - 1
    }
}

fn count_available(used_union: &[u64], q: usize) -> usize {
    let words = used_union.len();
    let mut count = 0usize;
    for (w, &word) in used_union.iter().enumerate() {
        count += (!word & palette_mask(q, w, words)).count_ones() as usize;
    }
    count
}

// idx-th available color (0-based among free colors)
fn select_available(used_union: &[u64], q: usize, mut idx: usize) -> usize {
    let words = used_union.len();
    for (w, &word) in used_union.iter().enumerate() {
        let mut free = !word & palette_mask(q, w, words);
        let here = free.count_ones() as usize;
        if idx < here {
            for _ in 0..idx {
                free &= free - 1;
            }
            return w * 64 + free.trailing_zeros() as usize;
        }
        idx -= here;
    }
    unreachable!("index beyond available colors");
}

// ======================================================================
// the coloring process
// ======================================================================

/// Result of one greedy run over an edge sequence.
#[derive(Debug, Clone)]
pub struct ColoringRun {
    /// Palette size; colors are 0-based.
    pub q: usize,
    /// Edge ids, with multiplicity, in arrival order.
    pub sequence: Vec<u32>,
    /// One entry per attempted step; None marks the failing step, after
    /// which the run stops.
    pub colors: Vec<Option<u32>>,
    /// 1-based index of the failing step.
    pub failure_index: Option<usize>,
    /// Final per-vertex used-color bitsets.
    pub used_final: Vec<Vec<u64>>,
}

impl ColoringRun {
    pub fn succeeded(&self) -> bool {
        self.failure_index.is_none()
    }

    /// Number of steps that actually received a color.
    pub fn colored_steps(&self) -> usize {
        self.colors.iter().filter(|c| c.is_some()).count()
    }
}

/// Color the sequence greedily: each step draws uniformly from the
/// colors not yet used at any vertex of the edge; an empty choice set
/// stops the run and records the step.
pub fn greedy_color(
    h: &Hypergraph,
    sequence: &[u32],
    q: usize,
    rng: &mut StreamRng,
) -> Result<ColoringRun, ColoringError> {
    if q == 0 {
        return Err(ColoringError::EmptyPalette);
    }
    for (step, &id) in sequence.iter().enumerate() {
        if id as usize >= h.edge_count() {
            return Err(ColoringError::EdgeIdOutOfRange {
                step,
                id,
                edges: h.edge_count(),
            });
        }
    }
    let words = palette_words(q);
    let mut used = vec![vec![0u64; words]; h.n()];
    let mut scratch = vec![0u64; words];
    let mut colors: Vec<Option<u32>> = Vec::with_capacity(sequence.len());
    let mut failure_index = None;

    for (step, &id) in sequence.iter().enumerate() {
        let edge = h.edge(id as usize);
        scratch.fill(0);
        for v in edge.iter() {
            for (w, s) in scratch.iter_mut().enumerate() {
                *s |= used[v][w];
            }
        }
        let available = count_available(&scratch, q);
        if available == 0 {
            colors.push(None);
            failure_index = Some(step + 1);
            break;
        }
        let c = select_available(&scratch, q, rng.index(available));
        colors.push(Some(c as u32));
        for v in edge.iter() {
            used[v][c / 64] |= 1 << (c % 64);
        }
    }

    Ok(ColoringRun {
        q,
        sequence: sequence.to_vec(),
        colors,
        failure_index,
        used_final: used,
    })
}

/// Per-vertex used-color bitsets after the first `steps` colored steps.
pub fn used_colors_at_step(h: &Hypergraph, run: &ColoringRun, steps: usize) -> Vec<Vec<u64>> {
    let words = palette_words(run.q);
    let mut used = vec![vec![0u64; words]; h.n()];
    for (i, color) in run.colors.iter().enumerate().take(steps) {
        let Some(c) = color else { break };
        let c = *c as usize;
        for v in h.edge(run.sequence[i] as usize).iter() {
            used[v][c / 64] |= 1 << (c % 64);
        }
    }
    used
}

/// |Q_e| at a reconstructed state: colors unused at every vertex of e.
pub fn available_at(h: &Hypergraph, used: &[Vec<u64>], edge_id: usize, q: usize) -> usize {
    let words = palette_words(q);
    let mut union = vec![0u64; words];
    for v in h.edge(edge_id).iter() {
        for (w, s) in union.iter_mut().enumerate() {
            *s |= used[v][w];
        }
    }
    count_available(&union, q)
}

/// |Y_{v,c}|: incident edges that could still take color c, judging by
/// the other endpoints only.
pub fn open_incidences_at(
    h: &Hypergraph,
    used: &[Vec<u64>],
    v: usize,
    c: usize,
) -> usize {
    let mut count = 0usize;
    for &eid in h.incident_edges(v) {
        let mut open = true;
        for w in h.edge(eid as usize).iter() {
            if w != v && used[w][c / 64] >> (c % 64) & 1 == 1 {
                open = false;
                break;
            }
        }
        if open {
            count += 1;
        }
    }
    count
}

// ======================================================================
// predicted trajectories
// ======================================================================

/// Predicted availability count at time t: (1−t)^r · q.
pub fn q_hat(t: f64, r: usize, q: usize) -> Result<f64, ColoringError> {
    if !(0.0..1.0).contains(&t) {
        return Err(ColoringError::InvalidTime(t));
    }
    Ok((1.0 - t).powi(r as i32) * q as f64)
}

/// Predicted open-incidence count at time t: (1−t)^(r−1) · D.
pub fn y_hat(t: f64, r: usize, d: f64) -> Result<f64, ColoringError> {
    if !(0.0..1.0).contains(&t) {
        return Err(ColoringError::InvalidTime(t));
    }
    Ok((1.0 - t).powi(r as i32 - 1) * d)
}

/// Relative error envelope at time t: (1−t)^(−9r) · n^(−sigma/3).
pub fn e_hat(t: f64, r: usize, n: usize, sigma: f64) -> Result<f64, ColoringError> {
    if !(0.0..1.0).contains(&t) {
        return Err(ColoringError::InvalidTime(t));
    }
    if sigma <= 0.0 {
        return Err(ColoringError::InvalidSigma(sigma));
    }
    Ok((1.0 - t).powi(-(9 * r as i32)) * (n as f64).powf(-sigma / 3.0))
}

// ======================================================================
// trajectory audit
// ======================================================================

/// How many objects to measure at each checkpoint.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SampleSpec {
    /// (vertex, color) pairs per checkpoint.
    pub vc_samples: usize,
    /// Cap on measured edges; None measures every ground edge.
    pub edge_cap: Option<usize>,
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec {
            vc_samples: 200,
            edge_cap: None,
        }
    }
}

/// Observed statistics at one checkpoint, against the predicted curves.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectorySnapshot {
    pub step: usize,
    pub t: f64,
    pub q_observed_min: usize,
    pub q_observed_mean: f64,
    pub q_observed_max: usize,
    pub y_observed_min: usize,
    pub y_observed_mean: f64,
    pub y_observed_max: usize,
    pub q_hat: f64,
    pub y_hat: f64,
    pub e_hat: f64,
    /// Max over measured edges of (|Q_e| − q̂) − ê·q̂ and its mirror.
    pub q_plus_max: f64,
    pub q_minus_max: f64,
    pub y_plus_max: f64,
    pub y_minus_max: f64,
    /// Fraction of measured edges outside the ê·q̂ envelope.
    pub q_band_violation_fraction: f64,
    /// Fraction of measured (v, c) pairs outside the ê·ŷ envelope.
    pub y_band_violation_fraction: f64,
    pub edges_measured: usize,
    pub pairs_measured: usize,
}

/// Reconstruct the run state at each checkpoint time and measure the
/// availability and open-incidence statistics against the predictions.
/// Checkpoints falling at or past a failure are skipped (that state was
/// never reached).
pub fn trajectory_audit(
    run: &ColoringRun,
    h: &Hypergraph,
    checkpoints: &[f64],
    sigma: f64,
    spec: &SampleSpec,
    rng: &mut StreamRng,
) -> Result<Vec<TrajectorySnapshot>, ColoringError> {
    let m = run.sequence.len();
    let r = h.r();
    let d = r as f64 * h.edge_count() as f64 / h.n() as f64;
    let colored = run.colored_steps();
    let mut out = Vec::new();

    for (ci, &t) in checkpoints.iter().enumerate() {
        if !(0.0..1.0).contains(&t) {
            return Err(ColoringError::InvalidTime(t));
        }
        let step = ((t * m as f64).round() as usize).min(m);
        if step > colored {
            continue;
        }
        let used = used_colors_at_step(h, run, step);
        let qh = q_hat(t, r, run.q)?;
        let yh = y_hat(t, r, d)?;
        let eh = e_hat(t, r, h.n(), sigma)?;
        let check_rng = rng.split(&format!("checkpoint{ci}"));

        // edges: all of them, or a with-replacement sample
        let mut q_min = usize::MAX;
        let mut q_max = 0usize;
        let mut q_sum = 0f64;
        let mut q_plus_max = f64::NEG_INFINITY;
        let mut q_minus_max = f64::NEG_INFINITY;
        let mut q_violations = 0usize;
        let edge_total = h.edge_count();
        let edges_measured = match spec.edge_cap {
            Some(cap) if cap < edge_total => cap,
            _ => edge_total,
        };
        let mut edge_rng = check_rng.split("edges");
        for sample_idx in 0..edges_measured {
            let eid = if edges_measured == edge_total {
                sample_idx
            } else {
                edge_rng.index(edge_total)
            };
            let q_obs = available_at(h, &used, eid, run.q);
            q_min = q_min.min(q_obs);
            q_max = q_max.max(q_obs);
            q_sum += q_obs as f64;
            let centered = q_obs as f64 - qh;
            let plus = centered - eh * qh;
            let minus = -centered - eh * qh;
            q_plus_max = q_plus_max.max(plus);
            q_minus_max = q_minus_max.max(minus);
            if plus > 0.0 || minus > 0.0 {
                q_violations += 1;
            }
        }

        // (v, c) pairs, uniform
        let mut y_min = usize::MAX;
        let mut y_max = 0usize;
        let mut y_sum = 0f64;
        let mut y_plus_max = f64::NEG_INFINITY;
        let mut y_minus_max = f64::NEG_INFINITY;
        let mut y_violations = 0usize;
        let mut pair_rng = check_rng.split("pairs");
        for _ in 0..spec.vc_samples {
            let v = pair_rng.index(h.n());
            let c = pair_rng.index(run.q);
            let y_obs = open_incidences_at(h, &used, v, c);
            y_min = y_min.min(y_obs);
            y_max = y_max.max(y_obs);
            y_sum += y_obs as f64;
            let centered = y_obs as f64 - yh;
            let plus = centered - eh * yh;
            let minus = -centered - eh * yh;
            y_plus_max = y_plus_max.max(plus);
            y_minus_max = y_minus_max.max(minus);
            if plus > 0.0 || minus > 0.0 {
                y_violations += 1;
            }
        }

        out.push(TrajectorySnapshot {
            step,
            t,
            q_observed_min: if edges_measured == 0 { 0 } else { q_min },
            q_observed_mean: if edges_measured == 0 { 0.0 } else { q_sum / edges_measured as f64 },
            q_observed_max: q_max,
            y_observed_min: if spec.vc_samples == 0 { 0 } else { y_min },
            y_observed_mean: if spec.vc_samples == 0 { 0.0 } else { y_sum / spec.vc_samples as f64 },
            y_observed_max: y_max,
            q_hat: qh,
            y_hat: yh,
            e_hat: eh,
            q_plus_max,
            q_minus_max,
            y_plus_max,
            y_minus_max,
            q_band_violation_fraction: if edges_measured == 0 {
                0.0
            } else {
                q_violations as f64 / edges_measured as f64
            },
            y_band_violation_fraction: if spec.vc_samples == 0 {
                0.0
            } else {
                y_violations as f64 / spec.vc_samples as f64
            },
            edges_measured,
            pairs_measured: spec.vc_samples,
        });
    }
    Ok(out)
}

// ======================================================================
// planning and hypothesis checks
// ======================================================================

/// How the palette size and audit window are derived from (n, r, m).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum PaletteRule {
    /// q = ⌊r·m/n⌋; audit window ⌊(1−gamma)·m⌋.
    Literal { gamma: f64 },
    /// Plan for an inflated sequence length (1+delta)·m, so the whole
    /// length-m sequence sits inside the audit window:
    /// q = ⌊r·(1+delta)·m/n⌋, window = m.
    SlackReparameterized { delta: f64 },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ColoringPlan {
    pub q: usize,
    pub m: usize,
    /// Steps covered by the concentration statement.
    pub audit_window: usize,
    /// Effective gamma (derived for the reparameterized rule).
    pub gamma: f64,
}

/// Derive palette size and audit window for a length-m sequence on an
/// (n, r) hypergraph.
pub fn plan_coloring(
    n: usize,
    r: usize,
    m: usize,
    rule: PaletteRule,
) -> Result<ColoringPlan, ColoringError> {
    let plan = match rule {
        PaletteRule::Literal { gamma } => {
            if !(gamma > 0.0 && gamma < 1.0) {
                return Err(ColoringError::InvalidGamma(gamma));
            }
            let q = r * m / n;
            ColoringPlan {
                q,
                m,
                audit_window: ((1.0 - gamma) * m as f64).floor() as usize,
                gamma,
            }
        }
        PaletteRule::SlackReparameterized { delta } => {
            if !(delta > 0.0 && delta.is_finite()) {
                return Err(ColoringError::InvalidDelta(delta));
            }
            let q = (r as f64 * (1.0 + delta) * m as f64 / n as f64).floor() as usize;
            ColoringPlan {
                q,
                m,
                audit_window: m,
                gamma: 1.0 - 1.0 / (1.0 + delta),
            }
        }
    };
    if plan.q == 0 {
        return Err(ColoringError::PaletteDegenerate { q: plan.q });
    }
    Ok(plan)
}

/// The two hypothesis-chain inequalities, reported but never enforced.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConstraintReport {
    /// r / ln n, the tightest admissible rate coefficient.
    pub r_per_log_n: f64,
    /// (r/ln n) · ln(1/gamma) vs sigma/30.
    pub decay_lhs: f64,
    pub decay_rhs: f64,
    pub decay_ok: bool,
    /// r/ln n vs delta·sigma/30.
    pub slack_lhs: f64,
    pub slack_rhs: f64,
    pub slack_ok: bool,
}

pub fn check_constraints(
    n: usize,
    r: usize,
    gamma: f64,
    delta: f64,
    sigma: f64,
) -> Result<ConstraintReport, ColoringError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(ColoringError::InvalidGamma(gamma));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(ColoringError::InvalidDelta(delta));
    }
    if sigma <= 0.0 {
        return Err(ColoringError::InvalidSigma(sigma));
    }
    let rate = r as f64 / (n as f64).ln();
    let decay_lhs = rate * (1.0 / gamma).ln();
    let decay_rhs = sigma / 30.0;
    let slack_lhs = rate;
    let slack_rhs = delta * sigma / 30.0;
    Ok(ConstraintReport {
        r_per_log_n: rate,
        decay_lhs,
        decay_rhs,
        decay_ok: decay_lhs <= decay_rhs,
        slack_lhs,
        slack_rhs,
        slack_ok: slack_lhs <= slack_rhs,
    })
}

// ======================================================================
// plain graph edge coloring
// ======================================================================

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphEdgeColoring {
    /// Color per input edge, aligned with the input order.
    pub colors: Vec<u32>,
    pub color_count: usize,
    pub max_degree: usize,
}

/// First-fit proper edge coloring: process edges in sorted order, give
/// each the smallest color unused at both endpoints. Uses at most
/// 2·maxdeg − 1 colors.
pub fn graph_edge_color_greedy(edges: &[(u32, u32)]) -> Result<GraphEdgeColoring, ColoringError> {
    if edges.is_empty() {
        return Ok(GraphEdgeColoring {
            colors: Vec::new(),
            color_count: 0,
            max_degree: 0,
        });
    }
    let mut seen = std::collections::HashSet::with_capacity(edges.len());
    let mut n = 0usize;
    for (idx, &(u, v)) in edges.iter().enumerate() {
        if u == v {
            return Err(ColoringError::SelfLoop { index: idx });
        }
        let key = (u.min(v), u.max(v));
        if !seen.insert(key) {
            return Err(ColoringError::DuplicateEdge { index: idx });
        }
        n = n.max(u.max(v) as usize + 1);
    }

    let mut degree = vec![0usize; n];
    for &(u, v) in edges {
        degree[u as usize] += 1;
        degree[v as usize] += 1;
    }
    let max_degree = degree.iter().copied().max().unwrap_or(0);
    let palette_cap = 2 * max_degree.max(1) - 1;
    let words = palette_words(palette_cap);

    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.sort_unstable_by_key(|&i| {
        let (u, v) = edges[i];
        (u.min(v), u.max(v))
    });

    let mut used = vec![vec![0u64; words]; n];
    let mut colors = vec![0u32; edges.len()];
    let mut color_count = 0usize;
    for &i in &order {
        let (u, v) = (edges[i].0 as usize, edges[i].1 as usize);
        let mut c = None;
        for w in 0..words {
            let free = !(used[u][w] | used[v][w]) & palette_mask(palette_cap, w, words);
            if free != 0 {
                c = Some(w * 64 + free.trailing_zeros() as usize);
                break;
            }
        }
        // a 2·maxdeg − 1 palette always has a free slot: the two
        // endpoints block at most 2·(maxdeg − 1) colors
        let c = c.expect("first-fit palette exhausted");
        colors[i] = c as u32;
        used[u][c / 64] |= 1 << (c % 64);
        used[v][c / 64] |= 1 << (c % 64);
        color_count = color_count.max(c + 1);
    }

    Ok(GraphEdgeColoring {
        colors,
        color_count,
        max_degree,
    })
}

// ======================================================================
// tests
// ======================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::VertexSet;
    use crate::hypergraph::sample_sequence_fixed_m;
    use proptest::prelude::*;

    fn triangle_as_two_uniform() -> Hypergraph {
        Hypergraph::new(
            3,
            2,
            vec![
                VertexSet::new(vec![0, 1]),
                VertexSet::new(vec![0, 2]),
                VertexSet::new(vec![1, 2]),
            ],
        )
        .unwrap()
    }

    // |Q_e(i)| recomputed from the definition: colors never used at any
    // step j <= i whose edge meets e
    fn availability_from_scratch(
        h: &Hypergraph,
        run: &ColoringRun,
        steps: usize,
        edge_id: usize,
    ) -> usize {
        let e = h.edge(edge_id);
        let mut blocked = vec![false; run.q];
        for j in 0..steps.min(run.colors.len()) {
            let Some(c) = run.colors[j] else { break };
            let f = h.edge(run.sequence[j] as usize);
            if e.iter().any(|v| f.contains(v as u32)) {
                blocked[c as usize] = true;
            }
        }
        blocked.iter().filter(|&&b| !b).count()
    }

    #[test]
    fn triangle_needs_three_colors() {
        let h = triangle_as_two_uniform();
        let seq = vec![0u32, 1, 2];
        for seed in 0..100 {
            let ok = greedy_color(&h, &seq, 3, &mut StreamRng::new(seed, "tri3")).unwrap();
            assert!(ok.succeeded(), "seed {seed}");
            let mut cs: Vec<u32> = ok.colors.iter().map(|c| c.unwrap()).collect();
            cs.sort_unstable();
            cs.dedup();
            assert_eq!(cs.len(), 3);

            let fail = greedy_color(&h, &seq, 2, &mut StreamRng::new(seed, "tri2")).unwrap();
            assert_eq!(fail.failure_index, Some(3), "seed {seed}");
            assert_eq!(fail.colors.len(), 3);
            assert!(fail.colors[2].is_none());
        }
    }

    #[test]
    fn disjoint_edges_need_one_color() {
        let h = Hypergraph::new(
            6,
            2,
            vec![
                VertexSet::new(vec![0, 1]),
                VertexSet::new(vec![2, 3]),
                VertexSet::new(vec![4, 5]),
            ],
        )
        .unwrap();
        let run = greedy_color(&h, &[0, 1, 2], 1, &mut StreamRng::new(1, "m")).unwrap();
        assert!(run.succeeded());
        assert!(run.colors.iter().all(|&c| c == Some(0)));
    }

    #[test]
    fn repeated_edge_gets_distinct_colors() {
        let h = Hypergraph::new(4, 3, vec![VertexSet::new(vec![0, 1, 2])]).unwrap();
        let run = greedy_color(&h, &[0, 0, 0], 5, &mut StreamRng::new(2, "rep")).unwrap();
        assert!(run.succeeded());
        let mut cs: Vec<u32> = run.colors.iter().map(|c| c.unwrap()).collect();
        cs.sort_unstable();
        cs.dedup();
        assert_eq!(cs.len(), 3);
    }

    #[test]
    fn runs_are_always_proper() {
        let h = Hypergraph::complete(9, 3).unwrap();
        for seed in 0..20 {
            let seq =
                sample_sequence_fixed_m(&h, 150, &mut StreamRng::new(seed, "prop-seq")).unwrap();
            let run = greedy_color(&h, &seq, 80, &mut StreamRng::new(seed, "prop-col")).unwrap();
            let n_colored = run.colored_steps();
            for i in 0..n_colored {
                for j in (i + 1)..n_colored {
                    let (Some(ci), Some(cj)) = (run.colors[i], run.colors[j]) else {
                        continue;
                    };
                    if ci != cj {
                        continue;
                    }
                    let ei = h.edge(run.sequence[i] as usize);
                    let ej = h.edge(run.sequence[j] as usize);
                    let meet = ei.iter().any(|v| ej.contains(v as u32));
                    assert!(!meet, "seed {seed}: steps {i},{j} share color {ci} and a vertex");
                }
            }
        }
    }

    #[test]
    fn bitset_availability_matches_definition_every_tenth_step() {
        let h = Hypergraph::complete(9, 3).unwrap();
        let seq = sample_sequence_fixed_m(&h, 200, &mut StreamRng::new(3, "av-seq")).unwrap();
        let run = greedy_color(&h, &seq, 86, &mut StreamRng::new(3, "av-col")).unwrap();
        let colored = run.colored_steps();
        for step in (0..=colored).step_by(10) {
            let used = used_colors_at_step(&h, &run, step);
            for eid in [0usize, 17, 42, 83] {
                assert_eq!(
                    available_at(&h, &used, eid, run.q),
                    availability_from_scratch(&h, &run, step, eid),
                    "step {step}, edge {eid}"
                );
            }
        }
    }

    #[test]
    fn success_rate_with_slack_palette() {
        // complete 3-uniform on 9 vertices, m = 200, palette from the
        // reparameterized rule; delta = 1.0 keeps the predicted
        // availability around 16 at the final step, far from exhaustion
        let h = Hypergraph::complete(9, 3).unwrap();
        let plan = plan_coloring(9, 3, 200, PaletteRule::SlackReparameterized { delta: 1.0 })
            .unwrap();
        assert_eq!(plan.q, 133);
        assert_eq!(plan.audit_window, 200);
        let seeds = 500u64;
        let mut successes = 0usize;
        for s in 0..seeds {
            let seq = sample_sequence_fixed_m(&h, 200, &mut StreamRng::new(s, "sr-seq")).unwrap();
            let run = greedy_color(&h, &seq, plan.q, &mut StreamRng::new(s, "sr-col")).unwrap();
            if run.succeeded() {
                successes += 1;
            }
        }
        let rate = successes as f64 / seeds as f64;
        assert!(rate >= 0.95, "success rate {rate}");
    }

    #[test]
    fn success_is_monotone_in_palette_size() {
        // same seeds across a palette grid; the trend must be visible at
        // 3 sigma between the endpoints and non-decreasing pairwise up to
        // 2 sigma of noise
        let h = Hypergraph::complete(9, 3).unwrap();
        let seeds = 300u64;
        let grid = [95usize, 105, 115];
        let mut rates = Vec::new();
        for &q in &grid {
            let mut successes = 0usize;
            for s in 0..seeds {
                let seq =
                    sample_sequence_fixed_m(&h, 200, &mut StreamRng::new(s, "mono-seq")).unwrap();
                let run = greedy_color(&h, &seq, q, &mut StreamRng::new(s, "mono-col")).unwrap();
                if run.succeeded() {
                    successes += 1;
                }
            }
            rates.push(successes as f64 / seeds as f64);
        }
        let se = |p: f64| (p * (1.0 - p) / seeds as f64).sqrt().max(1.0 / seeds as f64);
        let spread = rates[2] - rates[0];
        let spread_se = (se(rates[2]).powi(2) + se(rates[0]).powi(2)).sqrt();
        assert!(
            spread > 3.0 * spread_se,
            "rates {rates:?} show no trend (spread {spread}, se {spread_se})"
        );
        for w in rates.windows(2) {
            let pair_se = (se(w[0]).powi(2) + se(w[1]).powi(2)).sqrt();
            assert!(
                w[1] >= w[0] - 2.0 * pair_se,
                "rates {rates:?} not monotone within noise"
            );
        }
    }

    #[test]
    fn availability_is_monotone_and_drops_at_most_one() {
        let h = Hypergraph::complete(8, 3).unwrap();
        let seq = sample_sequence_fixed_m(&h, 80, &mut StreamRng::new(4, "drop-seq")).unwrap();
        let run = greedy_color(&h, &seq, 40, &mut StreamRng::new(4, "drop-col")).unwrap();
        let colored = run.colored_steps();
        let probes = [0usize, 13, 29, 55];
        let mut prev: Vec<usize> = probes
            .iter()
            .map(|&eid| available_at(&h, &used_colors_at_step(&h, &run, 0), eid, run.q))
            .collect();
        for step in 1..=colored {
            let used = used_colors_at_step(&h, &run, step);
            for (pi, &eid) in probes.iter().enumerate() {
                let cur = available_at(&h, &used, eid, run.q);
                assert!(cur <= prev[pi], "step {step}: availability grew");
                assert!(prev[pi] - cur <= 1, "step {step}: availability fell by more than 1");
                prev[pi] = cur;
            }
        }
    }

    #[test]
    fn open_incidence_drop_bounded_by_codegrees() {
        let h = Hypergraph::complete(8, 3).unwrap();
        let seq = sample_sequence_fixed_m(&h, 60, &mut StreamRng::new(5, "ydrop-seq")).unwrap();
        let run = greedy_color(&h, &seq, 40, &mut StreamRng::new(5, "ydrop-col")).unwrap();
        // codegree in the complete 3-uniform on 8 vertices: C(6,1) = 6
        let codeg = 6usize;
        let colored = run.colored_steps();
        let v = 2usize;
        let c = 7usize;
        let mut prev =
            open_incidences_at(&h, &used_colors_at_step(&h, &run, 0), v, c);
        for step in 1..=colored {
            let used = used_colors_at_step(&h, &run, step);
            let cur = open_incidences_at(&h, &used, v, c);
            assert!(cur <= prev, "step {step}: open incidences grew");
            let edge = h.edge(run.sequence[step - 1] as usize);
            let step_color = run.colors[step - 1].unwrap() as usize;
            if step_color == c {
                // each non-v vertex of the step edge blocks at most its
                // codegree with v
                let others = edge.iter().filter(|&w| w != v).count();
                assert!(prev - cur <= others * codeg, "step {step}: drop too large");
            } else {
                assert_eq!(cur, prev, "step {step}: unrelated color changed the count");
            }
            prev = cur;
        }
    }

    #[test]
    fn predicted_curves_basic_values() {
        assert_eq!(q_hat(0.0, 3, 90).unwrap(), 90.0);
        assert_eq!(y_hat(0.0, 3, 21.0).unwrap(), 21.0);
        // (1/2)^3 · 90 = 11.25
        assert_eq!(q_hat(0.5, 3, 90).unwrap(), 11.25);
        assert!(q_hat(1.0, 3, 90).is_err());
        assert!(q_hat(-0.1, 3, 90).is_err());
        assert!(e_hat(0.5, 3, 100, 0.0).is_err());
        // e_hat(0) = n^{-sigma/3}
        let e0 = e_hat(0.0, 3, 1000, 0.9).unwrap();
        assert!((e0 - 1000f64.powf(-0.3)).abs() < 1e-15);
    }

    #[test]
    fn initial_snapshot_is_exact() {
        let h = Hypergraph::complete(9, 3).unwrap();
        let seq = sample_sequence_fixed_m(&h, 100, &mut StreamRng::new(6, "t0-seq")).unwrap();
        let run = greedy_color(&h, &seq, 50, &mut StreamRng::new(6, "t0-col")).unwrap();
        let snaps = trajectory_audit(
            &run,
            &h,
            &[0.0],
            0.9,
            &SampleSpec { vc_samples: 100, edge_cap: None },
            &mut StreamRng::new(6, "t0-aud"),
        )
        .unwrap();
        assert_eq!(snaps.len(), 1);
        let s = &snaps[0];
        assert_eq!(s.step, 0);
        assert_eq!(s.q_observed_min, 50);
        assert_eq!(s.q_observed_max, 50);
        // every vertex has degree C(8,2) = 28, and no color is used yet
        assert_eq!(s.y_observed_min, 28);
        assert_eq!(s.y_observed_max, 28);
        assert_eq!(s.q_hat, 50.0);
        assert_eq!(s.y_hat, 28.0);
    }

    #[test]
    fn one_step_state_is_forced() {
        let h = Hypergraph::complete(6, 3).unwrap();
        let seq = vec![0u32]; // the edge {0, 1, 2}
        let run = greedy_color(&h, &seq, 10, &mut StreamRng::new(7, "one")).unwrap();
        let c = run.colors[0].unwrap() as usize;
        let used = used_colors_at_step(&h, &run, 1);
        for v in 0..6 {
            let expected = if v <= 2 { 1 } else { 0 };
            let set_bits: u32 = used[v].iter().map(|w| w.count_ones()).sum();
            assert_eq!(set_bits, expected, "vertex {v}");
            if v <= 2 {
                assert_eq!(used[v][c / 64] >> (c % 64) & 1, 1);
            }
        }
        for eid in 0..h.edge_count() {
            let meets = h.edge(eid).iter().any(|v| v <= 2);
            let qv = available_at(&h, &used, eid, 10);
            assert_eq!(qv, if meets { 9 } else { 10 }, "edge {eid}");
        }
    }

    #[test]
    fn audit_skips_checkpoints_past_failure() {
        let h = triangle_as_two_uniform();
        // q = 2 always fails at step 3 of 3, so t = 0.9 maps past the
        // last colored step and must be skipped
        let run = greedy_color(&h, &[0, 1, 2], 2, &mut StreamRng::new(8, "skip")).unwrap();
        assert_eq!(run.failure_index, Some(3));
        let snaps = trajectory_audit(
            &run,
            &h,
            &[0.0, 0.34, 0.9],
            0.9,
            &SampleSpec { vc_samples: 10, edge_cap: None },
            &mut StreamRng::new(8, "skip-aud"),
        )
        .unwrap();
        let steps: Vec<usize> = snaps.iter().map(|s| s.step).collect();
        assert_eq!(steps, vec![0, 1]);
    }

    #[test]
    fn plan_literal_and_reparameterized() {
        let lit = plan_coloring(60, 3, 20_000, PaletteRule::Literal { gamma: 0.25 }).unwrap();
        assert_eq!(lit.q, 1000);
        assert_eq!(lit.audit_window, 15_000);
        assert_eq!(lit.gamma, 0.25);

        let rep =
            plan_coloring(9, 3, 200, PaletteRule::SlackReparameterized { delta: 0.3 }).unwrap();
        assert_eq!(rep.q, 86);
        assert_eq!(rep.audit_window, 200);
        assert!((rep.gamma - (1.0 - 1.0 / 1.3)).abs() < 1e-15);

        assert!(plan_coloring(60, 3, 20_000, PaletteRule::Literal { gamma: 0.0 }).is_err());
        assert!(plan_coloring(60, 3, 20_000, PaletteRule::Literal { gamma: 1.0 }).is_err());
        assert!(
            plan_coloring(60, 3, 20_000, PaletteRule::SlackReparameterized { delta: -0.5 })
                .is_err()
        );
        // m far too small for the vertex count
        assert!(plan_coloring(1000, 3, 10, PaletteRule::Literal { gamma: 0.25 }).is_err());
    }

    #[test]
    fn constraint_chains_report_both_ways() {
        // generous sigma and delta on a large n: both chains hold
        let ok = check_constraints(1_000_000, 3, 0.9, 100.0, 3.0).unwrap();
        assert!(ok.decay_ok, "{ok:?}");
        assert!(ok.slack_ok, "{ok:?}");
        // desk-scale n with small sigma: both chains fail, report says so
        let bad = check_constraints(60, 3, 0.25, 0.3, 0.9).unwrap();
        assert!(!bad.decay_ok);
        assert!(!bad.slack_ok);
        assert!((bad.r_per_log_n - 3.0 / 60f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn graph_coloring_examples() {
        // triangle: 3 colors, maxdeg 2, bound 3
        let tri = graph_edge_color_greedy(&[(0, 1), (0, 2), (1, 2)]).unwrap();
        assert_eq!(tri.color_count, 3);
        assert_eq!(tri.max_degree, 2);

        // star: 5 colors = maxdeg
        let star = graph_edge_color_greedy(&[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)]).unwrap();
        assert_eq!(star.color_count, 5);

        // matching: 1 color
        let matching = graph_edge_color_greedy(&[(0, 1), (2, 3), (4, 5)]).unwrap();
        assert_eq!(matching.color_count, 1);
        assert!(matching.colors.iter().all(|&c| c == 0));

        assert!(graph_edge_color_greedy(&[(1, 1)]).is_err());
        assert!(graph_edge_color_greedy(&[(0, 1), (1, 0)]).is_err());
        assert_eq!(graph_edge_color_greedy(&[]).unwrap().color_count, 0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn graph_coloring_is_proper_within_bound(seed in 0u64..5000, n in 4usize..40) {
            let g = crate::graph::sample_gnp(n, 0.4, &mut StreamRng::new(seed, "gc")).unwrap();
            let edges = g.edges();
            let coloring = graph_edge_color_greedy(&edges).unwrap();
            if !edges.is_empty() {
                prop_assert!(coloring.color_count <= 2 * coloring.max_degree - 1);
            }
            let mut at_vertex: std::collections::HashMap<(u32, u32), ()> =
                std::collections::HashMap::new();
            for (i, &(u, v)) in edges.iter().enumerate() {
                let c = coloring.colors[i];
                for end in [u, v] {
                    prop_assert!(
                        at_vertex.insert((end, c), ()).is_none(),
                        "color {c} reused at vertex {end}"
                    );
                }
            }
        }
    }
}
