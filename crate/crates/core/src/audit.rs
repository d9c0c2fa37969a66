//! Sampled audits of how closely the evolving graphs track their
//! predicted statistics: clique counts against mu, common-neighborhood
//! counts against lambda.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::{count_cliques, count_common_neighbors, Graph, GraphError, VertexSet};
use crate::nibble::{run_round, NibbleError};
use crate::rng::StreamRng;
use crate::schedule::{lambda, mu, Schedule, ScheduleError};

// ======================================================================
// errors
// ======================================================================

#[derive(Debug)]
pub enum AuditError {
    Schedule(ScheduleError),
    Graph(GraphError),
    Round(NibbleError),
    BadCliqueCell { s_size: usize, j: usize, k_i: usize },
    BadNeighborhoodCell { s_size: usize, k_i: usize },
    NoSamplesRequested { s_size: usize, j: usize },
}

impl fmt::Display for AuditError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AuditError::Schedule(e) => write!(f, "schedule error: {e}"),
            AuditError::Graph(e) => write!(f, "graph error: {e}"),
            AuditError::Round(e) => write!(f, "round error: {e}"),
            AuditError::BadCliqueCell { s_size, j, k_i } => {
                write!(f, "cell ({s_size}, {j}) must satisfy s <= j <= k_i = {k_i}")
            }
            AuditError::BadNeighborhoodCell { s_size, k_i } => {
                write!(f, "neighborhood cell s = {s_size} must satisfy s <= k_i − 1 = {}", k_i - 1)
            }
            AuditError::NoSamplesRequested { s_size, j } => {
                write!(f, "cell ({s_size}, {j}) requests zero samples")
            }
        }
    }
}

impl std::error::Error for AuditError {}

impl From<ScheduleError> for AuditError {
    fn from(e: ScheduleError) -> Self {
        AuditError::Schedule(e)
    }
}

impl From<GraphError> for AuditError {
    fn from(e: GraphError) -> Self {
        AuditError::Graph(e)
    }
}

impl From<NibbleError> for AuditError {
    fn from(e: NibbleError) -> Self {
        AuditError::Round(e)
    }
}

// ======================================================================
// audit plumbing
// ======================================================================

/// One shape of statistic to sample: anchor sets of size s_size, counted
/// objects of size j (ignored by the neighborhood audit).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AuditCell {
    pub s_size: usize,
    pub j: usize,
    pub samples: usize,
}

/// What to audit and how hard to try.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditSpec {
    pub cells: Vec<AuditCell>,
    pub rounds_to_audit: Vec<usize>,
    /// Scales the theoretical deviation band before the pass check.
    pub tolerance_multiplier: f64,
    /// Attempts allowed per sampled anchor set before giving up.
    pub retry_cap: usize,
}

impl Default for AuditSpec {
    fn default() -> Self {
        AuditSpec {
            cells: vec![
                AuditCell { s_size: 0, j: 2, samples: 1 },
                AuditCell { s_size: 2, j: 3, samples: 20 },
            ],
            rounds_to_audit: vec![0],
            tolerance_multiplier: 1.0,
            retry_cap: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditKind {
    /// Counts of j-sets extending an anchor clique, vs mu.
    CliqueCounts,
    /// Common-neighbor counts of an anchor clique, vs lambda.
    Neighborhoods,
}

/// Outcome for one (round, cell) pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellReport {
    pub round: usize,
    pub s_size: usize,
    /// Counted-set size; None for neighborhood cells.
    pub j: Option<usize>,
    /// Predicted value (mu or lambda).
    pub expected: f64,
    /// Allowed relative deviation after the tolerance multiplier.
    pub band: f64,
    pub samples_used: usize,
    /// Raw observed counts, one per sampled anchor.
    pub observed: Vec<u64>,
    pub max_rel_deviation: f64,
    /// Anchor achieving the max deviation.
    pub worst_set: Option<VertexSet>,
    pub insufficient_samples: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditReport {
    pub kind: AuditKind,
    pub cells: Vec<CellReport>,
    pub pass: bool,
}

// Uniform anchor among s-cliques of g, by rejection from uniform
// s-subsets. None when the retry budget runs out.
fn sample_clique_anchor(
    g: &Graph,
    s_size: usize,
    retry_cap: usize,
    rng: &mut StreamRng,
) -> Option<VertexSet> {
    if s_size == 0 {
        return Some(VertexSet::empty());
    }
    if s_size > g.n() {
        return None;
    }
    let mut ids: Vec<u32> = Vec::with_capacity(s_size);
    'attempt: for _ in 0..retry_cap {
        ids.clear();
        while ids.len() < s_size {
            let v = rng.index(g.n()) as u32;
            if !ids.contains(&v) {
                ids.push(v);
            }
        }
        for (ai, &a) in ids.iter().enumerate() {
            for &b in ids.iter().skip(ai + 1) {
                if !g.has_edge(a as usize, b as usize) {
                    continue 'attempt;
                }
            }
        }
        return Some(VertexSet::new(ids));
    }
    None
}

fn rel_deviation(observed: u64, expected: f64) -> f64 {
    if expected == 0.0 {
        if observed == 0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (observed as f64 / expected - 1.0).abs()
    }
}

fn run_cell<F: Fn(&VertexSet) -> Result<u64, AuditError>>(
    g: &Graph,
    cell: &AuditCell,
    round: usize,
    j: Option<usize>,
    expected: f64,
    band: f64,
    retry_cap: usize,
    rng: &mut StreamRng,
    count: F,
) -> Result<CellReport, AuditError> {
    // the empty anchor is unique, so one sample tells the whole story
    let wanted = if cell.s_size == 0 { 1 } else { cell.samples };
    let mut observed = Vec::with_capacity(wanted);
    let mut max_rel = 0.0f64;
    let mut worst: Option<VertexSet> = None;
    let mut insufficient = false;
    for sample_idx in 0..wanted {
        let mut anchor_rng = rng.split(&format!("anchor{sample_idx}"));
        let Some(anchor) = sample_clique_anchor(g, cell.s_size, retry_cap, &mut anchor_rng)
        else {
            insufficient = true;
            break;
        };
        let x = count(&anchor)?;
        observed.push(x);
        let dev = rel_deviation(x, expected);
        if dev >= max_rel {
            max_rel = dev;
            worst = Some(anchor);
        }
    }
    let samples_used = observed.len();
    Ok(CellReport {
        round,
        s_size: cell.s_size,
        j,
        expected,
        band,
        samples_used,
        observed,
        max_rel_deviation: max_rel,
        worst_set: worst,
        insufficient_samples: insufficient,
        pass: !insufficient && max_rel <= band,
    })
}

/// Sampled check that j-clique counts over anchor cliques track mu within
/// tolerance_multiplier · eps.
pub fn audit_r(
    g: &Graph,
    i: usize,
    sched: &Schedule,
    spec: &AuditSpec,
    rng: &mut StreamRng,
) -> Result<AuditReport, AuditError> {
    let rp = sched.round(i)?;
    let band = spec.tolerance_multiplier * sched.eps;
    let mut cells = Vec::with_capacity(spec.cells.len());
    for (ci, cell) in spec.cells.iter().enumerate() {
        if cell.s_size > cell.j || cell.j > rp.k_i {
            return Err(AuditError::BadCliqueCell {
                s_size: cell.s_size,
                j: cell.j,
                k_i: rp.k_i,
            });
        }
        if cell.samples == 0 {
            return Err(AuditError::NoSamplesRequested {
                s_size: cell.s_size,
                j: cell.j,
            });
        }
        let expected = mu(cell.s_size, cell.j, i, sched)?;
        let mut cell_rng = rng.split(&format!("r-cell{ci}"));
        let report = run_cell(
            g,
            cell,
            i,
            Some(cell.j),
            expected,
            band,
            spec.retry_cap,
            &mut cell_rng,
            |anchor| Ok(count_cliques(g, anchor, cell.j)?),
        )?;
        cells.push(report);
    }
    let pass = cells.iter().all(|c| c.pass);
    Ok(AuditReport {
        kind: AuditKind::CliqueCounts,
        cells,
        pass,
    })
}

/// Sampled check that common-neighbor counts over anchor cliques track
/// lambda within (i+1) · eps² · tolerance_multiplier.
pub fn audit_n(
    g: &Graph,
    i: usize,
    sched: &Schedule,
    spec: &AuditSpec,
    rng: &mut StreamRng,
) -> Result<AuditReport, AuditError> {
    let rp = sched.round(i)?;
    let band = (i + 1) as f64 * sched.eps * sched.eps * spec.tolerance_multiplier;
    // one cell per distinct anchor size, largest sample request wins
    let mut sizes: Vec<(usize, usize)> = Vec::new();
    for cell in &spec.cells {
        match sizes.iter_mut().find(|(s, _)| *s == cell.s_size) {
            Some((_, samples)) => *samples = (*samples).max(cell.samples),
            None => sizes.push((cell.s_size, cell.samples)),
        }
    }
    let mut cells = Vec::with_capacity(sizes.len());
    for (ci, &(s_size, samples)) in sizes.iter().enumerate() {
        if s_size + 1 > rp.k_i {
            return Err(AuditError::BadNeighborhoodCell { s_size, k_i: rp.k_i });
        }
        if samples == 0 {
            return Err(AuditError::NoSamplesRequested { s_size, j: 0 });
        }
        let expected = lambda(s_size, i, sched)?;
        let cell = AuditCell { s_size, j: 0, samples };
        let mut cell_rng = rng.split(&format!("n-cell{ci}"));
        let report = run_cell(
            g,
            &cell,
            i,
            None,
            expected,
            band,
            spec.retry_cap,
            &mut cell_rng,
            |anchor| Ok(count_common_neighbors(g, anchor) as u64),
        )?;
        cells.push(report);
    }
    let pass = cells.iter().all(|c| c.pass);
    Ok(AuditReport {
        kind: AuditKind::Neighborhoods,
        cells,
        pass,
    })
}

/// Both audits for one round.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundAudit {
    pub round: usize,
    pub clique_counts: AuditReport,
    pub neighborhoods: AuditReport,
}

/// Step the partition process from g_0, running both audits on g_i for
/// every i in rounds_to_audit (audits see the graph BEFORE round i runs).
pub fn audit_rounds(
    g0: &Graph,
    sched: &Schedule,
    spec: &AuditSpec,
    rng: &mut StreamRng,
) -> Result<Vec<RoundAudit>, AuditError> {
    let last = spec.rounds_to_audit.iter().copied().max().unwrap_or(0);
    let mut out = Vec::new();
    let mut g_cur = g0.clone();
    for i in 0..=last {
        if spec.rounds_to_audit.contains(&i) {
            let audit_rng = rng.split(&format!("audit{i}"));
            let clique_counts = audit_r(&g_cur, i, sched, spec, &mut audit_rng.split("r"))?;
            let neighborhoods = audit_n(&g_cur, i, sched, spec, &mut audit_rng.split("n"))?;
            out.push(RoundAudit {
                round: i,
                clique_counts,
                neighborhoods,
            });
        }
        if i == last {
            break;
        }
        if g_cur.edge_count() == 0 || sched.round(i)?.k_i <= 2 {
            break;
        }
        let mut round_rng = rng.split(&format!("round{i}"));
        let (_, next) = run_round(&g_cur, i, sched, &mut round_rng)?;
        g_cur = next;
    }
    Ok(out)
}

// ======================================================================
// tests
// ======================================================================
