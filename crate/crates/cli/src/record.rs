//! Trial records: one JSON object per (grid point, replicate), with one
//! schema across every mode. Fields a mode does not produce are null,
//! never absent, so downstream readers can rely on a fixed key set.

use serde::{Deserialize, Serialize};

use crate::config::{GridPoint, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialStatus {
    /// The trial ran to completion (a coloring that halts at its failure
    /// step is still a completed trial; the halt is a measurement).
    Ok,
    /// The trial returned an error or panicked; see `error`.
    Error,
}

/// Field names whose values legitimately differ between reruns of the
/// same config. Everything else must be byte-identical.
pub const TIMING_FIELDS: &[&str] = &["wall_ms"];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub mode: Mode,
    pub grid_index: usize,
    pub replicate: usize,
    /// Base seed this replicate was declared with.
    pub base_seed: u64,
    /// Derived seed the trial actually ran with.
    pub seed: u64,
    // grid coordinates; None where the mode has no such axis
    pub n: Option<usize>,
    pub p: Option<f64>,
    pub ca: Option<f64>,
    pub tau: Option<u32>,
    pub beps: Option<f64>,
    pub r: Option<usize>,
    pub m: Option<usize>,
    pub q: Option<usize>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub sigma: Option<f64>,
    pub eps: Option<f64>,
    // headline metrics; None where the mode does not produce them
    /// Number of parts in the clique partition.
    pub parts: Option<usize>,
    /// Max over vertices of the number of parts containing it.
    pub thickness: Option<usize>,
    pub max_clique: Option<usize>,
    pub rounds_run: Option<usize>,
    /// Why the round loop stopped.
    pub stop: Option<String>,
    /// Partition or embedding verifier verdict.
    pub verified: Option<bool>,
    /// Coordinates per vertex in the product representation.
    pub dimension: Option<usize>,
    /// Colors spent: palette size after compaction (prague) or distinct
    /// colors appearing in the run (color).
    pub colors_used: Option<usize>,
    /// Palette block sizes, one per partition summand (prague).
    pub block_sizes: Option<Vec<usize>>,
    pub colored_steps: Option<usize>,
    /// 1-based step where the greedy coloring ran out of colors.
    pub failure_index: Option<usize>,
    /// Max over checkpoints of the availability deviation |obs/q̂ − 1|.
    pub max_q_deviation: Option<f64>,
    /// Max over checkpoints of the open-incidence deviation |obs/ŷ − 1|.
    pub max_y_deviation: Option<f64>,
    /// Max relative deviation over all audited cells and rounds.
    pub max_audit_deviation: Option<f64>,
    pub audit_pass: Option<bool>,
    /// Lower bound on partition size.
    pub ccn_lb: Option<f64>,
    /// Lower bound on partition thickness.
    pub cct_lb: Option<f64>,
    pub phi: Option<f64>,
    pub status: TrialStatus,
    pub error: Option<String>,
    pub wall_ms: u64,
}

impl TrialRecord {
    /// A record carrying only its coordinates, ready for a mode runner to
    /// fill in metrics.
    pub fn blank(mode: Mode, point: &GridPoint, replicate: usize, base_seed: u64, seed: u64) -> Self {
        TrialRecord {
            mode,
            grid_index: point.index,
            replicate,
            base_seed,
            seed,
            n: point.n,
            p: point.p,
            ca: point.ca,
            tau: point.tau,
            beps: point.beps,
            r: point.r,
            m: point.m,
            q: point.q,
            gamma: point.gamma,
            delta: point.delta,
            sigma: point.sigma,
            eps: point.eps,
            parts: None,
            thickness: None,
            max_clique: None,
            rounds_run: None,
            stop: None,
            verified: None,
            dimension: None,
            colors_used: None,
            block_sizes: None,
            colored_steps: None,
            failure_index: None,
            max_q_deviation: None,
            max_y_deviation: None,
            max_audit_deviation: None,
            audit_pass: None,
            ccn_lb: None,
            cct_lb: None,
            phi: None,
            status: TrialStatus::Ok,
            error: None,
            wall_ms: 0,
        }
    }

    pub fn with_error(mut self, message: String) -> Self {
        self.status = TrialStatus::Error;
        self.error = Some(message);
        self
    }

    /// Numeric metric by name, for summaries. Names cover every numeric
    /// metric field; unknown names get None.
    pub fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "parts" => self.parts.map(|v| v as f64),
            "thickness" => self.thickness.map(|v| v as f64),
            "max_clique" => self.max_clique.map(|v| v as f64),
            "rounds_run" => self.rounds_run.map(|v| v as f64),
            "dimension" => self.dimension.map(|v| v as f64),
            "colors_used" => self.colors_used.map(|v| v as f64),
            "colored_steps" => self.colored_steps.map(|v| v as f64),
            "failure_index" => self.failure_index.map(|v| v as f64),
            "max_q_deviation" => self.max_q_deviation,
            "max_y_deviation" => self.max_y_deviation,
            "max_audit_deviation" => self.max_audit_deviation,
            "ccn_lb" => self.ccn_lb,
            "cct_lb" => self.cct_lb,
            "phi" => self.phi,
            "q" => self.q.map(|v| v as f64),
            "wall_ms" => Some(self.wall_ms as f64),
            _ => None,
        }
    }
}

/// Metric names `TrialRecord::metric` understands, for error messages.
pub const METRIC_NAMES: &[&str] = &[
    "parts",
    "thickness",
    "max_clique",
    "rounds_run",
    "dimension",
    "colors_used",
    "colored_steps",
    "failure_index",
    "max_q_deviation",
    "max_y_deviation",
    "max_audit_deviation",
    "ccn_lb",
    "cct_lb",
    "phi",
    "q",
    "wall_ms",
];

/// Null out the timing fields of a parsed record so reruns compare equal.
pub fn strip_timing(record: &mut serde_json::Value) {
    if let serde_json::Value::Object(map) = record {
        for field in TIMING_FIELDS {
            if let Some(slot) = map.get_mut(*field) {
                *slot = serde_json::Value::Null;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point() -> GridPoint {
        let config = crate::config::ExperimentConfig::from_json(
            r#"{"mode": "lowerbound", "seeds": [1], "n": [100], "p": [0.5]}"#,
        )
        .unwrap();
        config.grid_points()[0]
    }

    #[test]
    fn blank_record_serializes_every_field() {
        let record = TrialRecord::blank(Mode::Lowerbound, &point(), 0, 1, 42);
        let value: serde_json::Value = serde_json::to_value(&record).unwrap();
        let map = value.as_object().unwrap();
        for key in ["mode", "seed", "parts", "phi", "status", "error", "wall_ms"] {
            assert!(map.contains_key(key), "missing {key}");
        }
        assert_eq!(map["status"], "ok");
        assert_eq!(map["parts"], serde_json::Value::Null);
    }

    #[test]
    fn metric_lookup_matches_fields() {
        let mut record = TrialRecord::blank(Mode::Lowerbound, &point(), 0, 1, 42);
        record.ccn_lb = Some(12.5);
        assert_eq!(record.metric("ccn_lb"), Some(12.5));
        assert_eq!(record.metric("parts"), None);
        assert_eq!(record.metric("no-such-metric"), None);
        for name in METRIC_NAMES {
            record.metric(name);
        }
    }

    #[test]
    fn strip_timing_nulls_wall_time_only() {
        let record = TrialRecord::blank(Mode::Lowerbound, &point(), 0, 1, 42);
        let mut value = serde_json::to_value(&record).unwrap();
        value["wall_ms"] = serde_json::json!(777);
        strip_timing(&mut value);
        assert_eq!(value["wall_ms"], serde_json::Value::Null);
        assert_eq!(value["seed"], serde_json::json!(42));
    }
}
