//! Round schedule for the iterated clique-partition process: per-round
//! densities, clique sizes, and the sampling probabilities derived from
//! predicted clique counts.

use std::fmt;

use serde::{Deserialize, Serialize};

// ======================================================================
// errors
// ======================================================================

#[derive(Debug)]
pub enum ScheduleError {
    InvalidDensity(f64),
    TooFewVertices(usize),
    InvalidSizeCoefficient(f64),
    InvalidRoundExponent(u32),
    InvalidSlackExponent(f64),
    CliqueSizeBelowTwo { k: usize },
    RoundOutOfRange { round: usize, rounds: usize },
    BadCellShape { s_size: usize, j: usize },
}

impl fmt::Display for ScheduleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleError::InvalidDensity(p) => {
                write!(f, "edge density {p} must lie strictly between 0 and 1")
            }
            ScheduleError::TooFewVertices(n) => write!(f, "need at least 2 vertices, got {n}"),
            ScheduleError::InvalidSizeCoefficient(c) => {
                write!(f, "size coefficient ca = {c} must be positive and finite")
            }
            ScheduleError::InvalidRoundExponent(t) => {
                write!(f, "round exponent tau = {t} must be at least 2")
            }
            ScheduleError::InvalidSlackExponent(b) => {
                write!(f, "slack exponent beps = {b} must lie strictly between 0 and 1")
            }
            ScheduleError::CliqueSizeBelowTwo { k } => {
                write!(f, "derived clique size {k} is below 2; use the trivial edge partition")
            }
            ScheduleError::RoundOutOfRange { round, rounds } => {
                write!(f, "round {round} out of range (schedule has {rounds} entries)")
            }
            ScheduleError::BadCellShape { s_size, j } => {
                write!(f, "cell shape requires s <= j, got s = {s_size}, j = {j}")
            }
        }
    }
}

impl std::error::Error for ScheduleError {}

// ======================================================================
// parameters and schedule
// ======================================================================

/// Tunables for the iterated partition process.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NibbleParams {
    /// Multiplier on log_{1/p} n when choosing the clique size k.
    pub ca: f64,
    /// Exponent driving both the round count and the density decay rate.
    pub tau: u32,
    /// Concentration slack is n^{-beps}.
    pub beps: f64,
    /// Hard upper bound on k, to keep enumeration affordable.
    pub max_clique_cap: Option<usize>,
}

impl Default for NibbleParams {
    fn default() -> Self {
        NibbleParams {
            ca: 1.0 / 3.0,
            tau: 2,
            beps: 0.25,
            max_clique_cap: None,
        }
    }
}

/// Per-round density and clique size.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RoundParams {
    pub p_i: f64,
    pub k_i: usize,
}

/// Frozen plan for a run: derived sizes, slack, and the density/size
/// sequence for rounds 0 through I inclusive (the entry at I describes
/// the residual graph after the last executed round).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Schedule {
    pub n: usize,
    pub p: f64,
    /// Clique size k = ceil(ca · log_{1/p} n), possibly capped.
    pub k: usize,
    /// Number of rounds I = ceil(tau · k^tau · ln k).
    pub rounds_planned: usize,
    /// Concentration slack n^{-beps}.
    pub eps: f64,
    /// True when max_clique_cap reduced k below its derived value.
    pub k_capped: bool,
    pub params: NibbleParams,
    pub rounds: Vec<RoundParams>,
}

fn log_base_recip(n: usize, p: f64) -> f64 {
    (n as f64).ln() / (1.0 / p).ln()
}

/// Derive the full round schedule from (n, p) and the tunables.
///
/// Density decays as p_i = p · exp(-i / k^tau); the per-round clique size
/// k_i = ceil(ca · log_{1/p_i} n) never exceeds k.
pub fn build_schedule(n: usize, p: f64, params: NibbleParams) -> Result<Schedule, ScheduleError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(ScheduleError::InvalidDensity(p));
    }
    if n < 2 {
        return Err(ScheduleError::TooFewVertices(n));
    }
    if !(params.ca > 0.0 && params.ca.is_finite()) {
        return Err(ScheduleError::InvalidSizeCoefficient(params.ca));
    }
    if params.tau < 2 {
        return Err(ScheduleError::InvalidRoundExponent(params.tau));
    }
    if !(params.beps > 0.0 && params.beps < 1.0) {
        return Err(ScheduleError::InvalidSlackExponent(params.beps));
    }

    let mut k = (params.ca * log_base_recip(n, p)).ceil() as usize;
    let mut k_capped = false;
    if let Some(cap) = params.max_clique_cap {
        if k > cap {
            k = cap;
            k_capped = true;
        }
    }
    if k < 2 {
        return Err(ScheduleError::CliqueSizeBelowTwo { k });
    }

    let kt = (k as f64).powi(params.tau as i32);
    let rounds_planned = (params.tau as f64 * kt * (k as f64).ln()).ceil() as usize;
    let eps = (n as f64).powf(-params.beps);

    let mut rounds = Vec::with_capacity(rounds_planned + 1);
    for i in 0..=rounds_planned {
        let p_i = p * (-(i as f64) / kt).exp();
        let k_i = ((params.ca * log_base_recip(n, p_i)).ceil() as usize).min(k);
        rounds.push(RoundParams { p_i, k_i });
    }

    Ok(Schedule {
        n,
        p,
        k,
        rounds_planned,
        eps,
        k_capped,
        params,
        rounds,
    })
}

impl Schedule {
    pub fn round(&self, i: usize) -> Result<RoundParams, ScheduleError> {
        self.rounds
            .get(i)
            .copied()
            .ok_or(ScheduleError::RoundOutOfRange {
                round: i,
                rounds: self.rounds.len(),
            })
    }
}

// ======================================================================
// predicted counts
// ======================================================================

fn choose_ln(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let mut acc = 0.0f64;
    for i in 0..k {
        acc += ((n - i) as f64).ln() - ((i + 1) as f64).ln();
    }
    acc
}

// Exact binomial coefficient while it fits; log-space beyond that.
fn choose_f64(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut acc: u128 = 1;
    for i in 0..k {
        match acc.checked_mul((n - i) as u128) {
            Some(v) => acc = v / (i as u128 + 1),
            None => return choose_ln(n, k).exp(),
        }
    }
    if acc <= (1u128 << 53) {
        acc as f64
    } else {
        choose_ln(n, k).exp()
    }
}

fn pairs(x: usize) -> usize {
    if x < 2 {
        0
    } else {
        x * (x - 1) / 2
    }
}

/// Expected size of C_{s,j} in round i under the scheduled density:
/// C(n−s, j−s) · p_i^(C(j,2) − C(s,2)). Computed in log space.
pub fn mu(s_size: usize, j: usize, i: usize, sched: &Schedule) -> Result<f64, ScheduleError> {
    if s_size > j {
        return Err(ScheduleError::BadCellShape { s_size, j });
    }
    let rp = sched.round(i)?;
    if j > sched.n {
        return Ok(0.0);
    }
    if rp.p_i == 1.0 {
        // degenerate density: the count is the bare binomial, exactly
        return Ok(choose_f64(sched.n - s_size, j - s_size));
    }
    let exponent = (pairs(j) - pairs(s_size)) as f64;
    let ln_mu = choose_ln(sched.n - s_size, j - s_size) + exponent * rp.p_i.ln();
    Ok(ln_mu.exp())
}

/// Expected common-neighbor count over an s-set in round i: (n − s) · p_i^s.
pub fn lambda(s_size: usize, i: usize, sched: &Schedule) -> Result<f64, ScheduleError> {
    let rp = sched.round(i)?;
    Ok((sched.n.saturating_sub(s_size)) as f64 * rp.p_i.powi(s_size as i32))
}

// ======================================================================
// sampling probabilities
// ======================================================================

/// How the per-clique sampling probability divides the clique mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QBasis {
    /// Divide by the predicted per-edge clique count.
    Predicted,
    /// Divide by an observed per-edge mean clique count.
    Observed { mean_cliques_per_edge: f64 },
}

/// Per-clique sampling probability for round i, with clamp bookkeeping.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RoundQ {
    /// Value actually used, clamped into [0, 1].
    pub value: f64,
    /// Raw unclamped ratio.
    pub raw: f64,
    pub clamped: bool,
}

/// q_i = 1 / ((1+eps) · k^tau · mu(2, k_i, i)), or the observed-basis
/// analog. Clamped into [0, 1]; the clamp flag is how callers detect an
/// infeasible round (raw value above one).
pub fn round_q(i: usize, sched: &Schedule, basis: QBasis) -> Result<RoundQ, ScheduleError> {
    let rp = sched.round(i)?;
    let kt = (sched.k as f64).powi(sched.params.tau as i32);
    let per_edge = match basis {
        QBasis::Predicted => mu(2, rp.k_i, i, sched)?,
        QBasis::Observed { mean_cliques_per_edge } => mean_cliques_per_edge,
    };
    let raw = 1.0 / ((1.0 + sched.eps) * kt * per_edge);
    let value = raw.clamp(0.0, 1.0);
    Ok(RoundQ {
        value,
        raw,
        clamped: raw > 1.0,
    })
}

// 1 − (1−q)^max{target − count, 0}, evaluated as −expm1(d · ln1p(−q)).
pub(crate) fn stabilization_probability(clique_count: u64, q: f64, target: f64) -> f64 {
    let deficit = (target - clique_count as f64).max(0.0);
    if deficit == 0.0 {
        return 0.0;
    }
    if q >= 1.0 {
        return 1.0;
    }
    if q <= 0.0 {
        return 0.0;
    }
    -(deficit * (-q).ln_1p()).exp_m1()
}

/// Per-edge stabilization probability for round i. With q the round's
/// per-clique probability, c the number of size-k_i cliques through the
/// edge, and m the predicted per-edge count:
/// zeta = 1 − (1−q)^max{(1+eps)·m − c, 0}.
pub fn zeta(clique_count_at_edge: u64, i: usize, sched: &Schedule) -> Result<f64, ScheduleError> {
    let rp = sched.round(i)?;
    let q = round_q(i, sched, QBasis::Predicted)?.value;
    let target = (1.0 + sched.eps) * mu(2, rp.k_i, i, sched)?;
    Ok(stabilization_probability(clique_count_at_edge, q, target))
}

// ======================================================================
// tests
// ======================================================================

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_example_values() {
        // n = 4096, p = 1/2, ca = 1/3, tau = 2:
        // log_2 4096 = 12, k = ceil(12/3) = 4, I = ceil(2·16·ln 4) = 45
        let sched = build_schedule(
            4096,
            0.5,
            NibbleParams {
                ca: 1.0 / 3.0,
                tau: 2,
                beps: 0.25,
                max_clique_cap: None,
            },
        )
        .unwrap();
        assert_eq!(sched.k, 4);
        assert_eq!(sched.rounds_planned, 45);
        assert!(!sched.k_capped);
        assert_eq!(sched.rounds.len(), 46);
        assert_eq!(sched.rounds[0].p_i, 0.5);
        assert_eq!(sched.rounds[0].k_i, 4);

        // p_i at i = k^tau = 16 equals p/e to 12 significant digits
        let p16 = sched.rounds[16].p_i;
        let expected = 0.5 / std::f64::consts::E;
        assert!(
            (p16 - expected).abs() / expected < 1e-12,
            "p_16 = {p16}, expected {expected}"
        );
    }

    #[test]
    fn schedule_rejects_bad_input() {
        let ok = NibbleParams::default();
        assert!(build_schedule(100, 0.0, ok).is_err());
        assert!(build_schedule(100, 1.0, ok).is_err());
        assert!(build_schedule(1, 0.5, ok).is_err());
        assert!(build_schedule(100, 0.5, NibbleParams { ca: 0.0, ..ok }).is_err());
        assert!(build_schedule(100, 0.5, NibbleParams { ca: f64::NAN, ..ok }).is_err());
        assert!(build_schedule(100, 0.5, NibbleParams { tau: 1, ..ok }).is_err());
        assert!(build_schedule(100, 0.5, NibbleParams { beps: 0.0, ..ok }).is_err());
        assert!(build_schedule(100, 0.5, NibbleParams { beps: 1.0, ..ok }).is_err());
        // k = ceil((1/3) log_2 4) = 1 < 2
        assert!(matches!(
            build_schedule(4, 0.5, ok),
            Err(ScheduleError::CliqueSizeBelowTwo { k: 1 })
        ));
    }

    #[test]
    fn cap_flags_and_reduces_k() {
        let sched = build_schedule(
            1 << 30,
            0.5,
            NibbleParams {
                ca: 1.0,
                tau: 2,
                beps: 0.25,
                max_clique_cap: Some(5),
            },
        )
        .unwrap();
        assert_eq!(sched.k, 5);
        assert!(sched.k_capped);
        assert!(sched.rounds.iter().all(|r| r.k_i <= 5));
    }

    #[test]
    fn density_decays_and_sizes_stay_bounded() {
        let sched = build_schedule(2000, 0.6, NibbleParams::default()).unwrap();
        assert_eq!(sched.rounds.len(), sched.rounds_planned + 1);
        for w in sched.rounds.windows(2) {
            assert!(w[1].p_i < w[0].p_i);
        }
        assert!(sched.rounds.iter().all(|r| r.k_i <= sched.k));
        assert_eq!(sched.rounds[0].p_i, 0.6);
        assert_eq!(sched.rounds[0].k_i, sched.k);
    }

    #[test]
    fn mu_example_small_exact() {
        // n = 500, p = 1/2, k_0 = 3: mu(2, 3, 0) = 498 · (1/2)^2 = 124.5
        let sched = build_schedule(
            500,
            0.5,
            NibbleParams {
                ca: 1.0 / 3.0,
                tau: 2,
                beps: 0.25,
                max_clique_cap: None,
            },
        )
        .unwrap();
        assert_eq!(sched.k, 3);
        let m = mu(2, 3, 0, &sched).unwrap();
        assert!((m - 124.5).abs() / 124.5 < 1e-10, "mu = {m}");
    }

    #[test]
    fn mu_example_direct_rational() {
        // n = 100, p = 0.5, s = 2, j = 4: C(98,2) · 0.5^5 = 4753/32 = 148.53125
        let sched = build_schedule(100, 0.5, NibbleParams::default()).unwrap();
        let m = mu(2, 4, 0, &sched).unwrap();
        assert!((m - 148.53125).abs() / 148.53125 < 1e-12, "mu = {m}");
    }

    #[test]
    fn mu_log_space_matches_direct_product() {
        // n = 40, p = 0.35, s = 2, j = 5: C(38,3) · 0.35^(10−1) = 8436 · 0.35^9
        let sched = build_schedule(
            40,
            0.35,
            NibbleParams {
                ca: 1.2,
                tau: 2,
                beps: 0.25,
                max_clique_cap: None,
            },
        )
        .unwrap();
        let direct = 8436.0 * 0.35f64.powi(9);
        let m = mu(2, 5, 0, &sched).unwrap();
        assert!((m - direct).abs() / direct < 1e-12);
    }

    #[test]
    fn mu_degenerate_shapes() {
        let sched = build_schedule(100, 0.5, NibbleParams::default()).unwrap();
        // s = j: C(n−s, 0) · p^0 = 1
        assert_eq!(mu(3, 3, 0, &sched).unwrap(), 1.0);
        assert_eq!(mu(0, 0, 0, &sched).unwrap(), 1.0);
        // mu(0, 2, 0) = C(n, 2) · p, up to log-space rounding
        let pair_mass = mu(0, 2, 0, &sched).unwrap();
        assert!((pair_mass - 2475.0).abs() / 2475.0 < 1e-12);
        // more vertices requested than exist
        assert_eq!(mu(0, 101, 0, &sched).unwrap(), 0.0);
        assert!(mu(4, 3, 0, &sched).is_err());
        assert!(mu(2, 3, 10_000, &sched).is_err());
    }

    #[test]
    fn lambda_example() {
        // n = 100, p = 1/2: lambda(3, 0) = 97 · (1/2)^3 = 12.125
        let sched = build_schedule(100, 0.5, NibbleParams::default()).unwrap();
        assert_eq!(lambda(3, 0, &sched).unwrap(), 12.125);
    }

    #[test]
    fn round_q_matches_independent_log_space_evaluation() {
        let sched = build_schedule(
            500,
            0.5,
            NibbleParams {
                ca: 1.0 / 3.0,
                tau: 2,
                beps: 0.25,
                max_clique_cap: None,
            },
        )
        .unwrap();
        let q = round_q(0, &sched, QBasis::Predicted).unwrap();
        // ln q_0 = −[ln(1+eps) + tau·ln k + ln C(498,1) + 2·ln p]
        let eps = (500f64).powf(-0.25);
        let ln_mu = (498f64).ln() + 2.0 * 0.5f64.ln();
        let expected = (-((1.0 + eps).ln() + 2.0 * (3f64).ln() + ln_mu)).exp();
        assert!(
            (q.value - expected).abs() / expected < 1e-10,
            "q = {}, expected {expected}",
            q.value
        );
        assert!(!q.clamped);
        assert_eq!(q.raw, q.value);
    }

    #[test]
    fn round_q_round_trip_identity() {
        let sched = build_schedule(300, 0.4, NibbleParams::default()).unwrap();
        for i in [0, 3, 7] {
            let rp = sched.round(i).unwrap();
            let q = round_q(i, &sched, QBasis::Predicted).unwrap();
            let kt = (sched.k as f64).powi(sched.params.tau as i32);
            let product = q.value * (1.0 + sched.eps) * kt * mu(2, rp.k_i, i, &sched).unwrap();
            assert!((product - 1.0).abs() < 1e-12, "round {i}: product = {product}");
        }
    }

    #[test]
    fn round_q_observed_basis() {
        let sched = build_schedule(500, 0.5, NibbleParams::default()).unwrap();
        let predicted = round_q(0, &sched, QBasis::Predicted).unwrap();
        let m = mu(2, sched.rounds[0].k_i, 0, &sched).unwrap();
        let observed = round_q(
            0,
            &sched,
            QBasis::Observed { mean_cliques_per_edge: m },
        )
        .unwrap();
        assert!((predicted.value - observed.value).abs() < 1e-15);
        // halving the observed mass doubles q
        let observed2 = round_q(
            0,
            &sched,
            QBasis::Observed { mean_cliques_per_edge: m / 2.0 },
        )
        .unwrap();
        assert!((observed2.value / observed.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn round_q_clamps_and_reports() {
        let sched = build_schedule(500, 0.5, NibbleParams::default()).unwrap();
        let q = round_q(
            0,
            &sched,
            QBasis::Observed { mean_cliques_per_edge: 1e-9 },
        )
        .unwrap();
        assert!(q.clamped);
        assert_eq!(q.value, 1.0);
        assert!(q.raw > 1.0);
    }

    #[test]
    fn zeta_direct_arithmetic_example() {
        // q = 0.1 with exponent 2: 1 − 0.9² = 0.19
        let z = stabilization_probability(0, 0.1, 2.0);
        assert!((z - 0.19).abs() < 1e-15, "zeta = {z}");
    }

    #[test]
    fn zeta_matches_naive_power() {
        let sched = build_schedule(
            500,
            0.5,
            NibbleParams {
                ca: 1.0 / 3.0,
                tau: 2,
                beps: 0.25,
                max_clique_cap: None,
            },
        )
        .unwrap();
        let q = round_q(0, &sched, QBasis::Predicted).unwrap().value;
        let m = mu(2, 3, 0, &sched).unwrap();
        let c = 40u64;
        let d = (1.0 + sched.eps) * m - c as f64;
        let expected = 1.0 - (1.0 - q).powf(d);
        let z = zeta(c, 0, &sched).unwrap();
        assert!((z - expected).abs() < 1e-12, "zeta = {z}, expected {expected}");
        assert!(z > 0.0 && z < 1.0);
    }

    #[test]
    fn zeta_saturated_edge_is_never_stabilized() {
        let sched = build_schedule(500, 0.5, NibbleParams::default()).unwrap();
        let m = mu(2, sched.rounds[0].k_i, 0, &sched).unwrap();
        let c = ((1.0 + sched.eps) * m).ceil() as u64 + 5;
        assert_eq!(zeta(c, 0, &sched).unwrap(), 0.0);
    }

    #[test]
    fn zeta_degenerate_q() {
        assert_eq!(stabilization_probability(0, 0.0, 5.0), 0.0);
        assert_eq!(stabilization_probability(0, 1.0, 5.0), 1.0);
        assert_eq!(stabilization_probability(10, 1.0, 5.0), 0.0);
    }

    #[test]
    fn zeta_monotone_in_clique_count() {
        let sched = build_schedule(500, 0.5, NibbleParams::default()).unwrap();
        let z0 = zeta(0, 0, &sched).unwrap();
        let z50 = zeta(50, 0, &sched).unwrap();
        let z120 = zeta(120, 0, &sched).unwrap();
        assert!(z0 > z50 && z50 > z120);
    }
}
