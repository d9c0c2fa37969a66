//! Summaries over trial records: per-grid-point statistics for the batch
//! summary CSV, and normalized scaling ratios per (n, p) with normal-
//! approximation confidence half-widths.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};

use crate::record::{TrialRecord, TrialStatus, METRIC_NAMES};

/// Sample statistics of one metric at one grid point.
#[derive(Debug, Clone, Copy)]
struct Stats {
    count: usize,
    mean: f64,
    /// Sample standard deviation; None for a single value.
    std: Option<f64>,
    min: f64,
    max: f64,
}

fn stats(values: &[f64]) -> Option<Stats> {
    if values.is_empty() {
        return None;
    }
    let count = values.len();
    let mean = values.iter().sum::<f64>() / count as f64;
    let std = if count > 1 {
        let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
        Some((ss / (count - 1) as f64).sqrt())
    } else {
        None
    };
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Some(Stats { count, mean, std, min, max })
}

fn opt_cell<T: fmt::Display>(value: Option<T>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

fn float_cell(value: f64) -> String {
    // shortest round-trip form, so reruns emit identical bytes
    format!("{value}")
}

/// Long-format summary: one row per (grid point, metric) with
/// count/mean/std/min/max over the point's non-error replicates, plus an
/// `errors` row counting failed replicates. std is NA for a single value.
pub fn write_grid_summary_csv<W: Write>(records: &[TrialRecord], writer: &mut W) -> io::Result<()> {
    writeln!(
        writer,
        "mode,grid_index,n,p,ca,tau,beps,r,m,q,gamma,delta,sigma,eps,metric,count,mean,std,min,max"
    )?;
    let mut by_point: BTreeMap<usize, Vec<&TrialRecord>> = BTreeMap::new();
    for record in records {
        by_point.entry(record.grid_index).or_default().push(record);
    }
    for (grid_index, group) in by_point {
        let head = group[0];
        let coords = format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            head.mode,
            grid_index,
            opt_cell(head.n),
            opt_cell(head.p),
            opt_cell(head.ca),
            opt_cell(head.tau),
            opt_cell(head.beps),
            opt_cell(head.r),
            opt_cell(head.m),
            opt_cell(head.q),
            opt_cell(head.gamma),
            opt_cell(head.delta),
            opt_cell(head.sigma),
            opt_cell(head.eps),
        );
        for &metric in METRIC_NAMES {
            let values: Vec<f64> = group
                .iter()
                .filter(|r| r.status == TrialStatus::Ok)
                .filter_map(|r| r.metric(metric))
                .collect();
            if let Some(s) = stats(&values) {
                writeln!(
                    writer,
                    "{coords},{metric},{},{},{},{},{}",
                    s.count,
                    float_cell(s.mean),
                    s.std.map(float_cell).unwrap_or_else(|| "NA".to_string()),
                    float_cell(s.min),
                    float_cell(s.max),
                )?;
            }
        }
        let errors = group.iter().filter(|r| r.status == TrialStatus::Error).count();
        writeln!(writer, "{coords},errors,{errors},,,,")?;
    }
    Ok(())
}

// ======================================================================
// scaling summaries
// ======================================================================

#[derive(Debug, Clone, PartialEq)]
pub enum SummarizeError {
    NoRecords,
    MixedModes { first: String, second: String },
    UnknownMetric { name: String },
    UnknownNormalizer { name: String },
    /// Records lack a coordinate the normalizer or grouping needs.
    MissingCoordinate { field: &'static str },
}

impl fmt::Display for SummarizeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SummarizeError::NoRecords => {
                write!(f, "no usable records (empty input, all errors, or metric absent)")
            }
            SummarizeError::MixedModes { first, second } => {
                write!(f, "records mix modes {first} and {second}; summarize one mode at a time")
            }
            SummarizeError::UnknownMetric { name } => {
                write!(f, "unknown metric {name:?}; known metrics: {}", METRIC_NAMES.join(", "))
            }
            SummarizeError::UnknownNormalizer { name } => write!(
                f,
                "unknown normalizer {name:?}; known: {}",
                Normalizer::NAMES.join(", ")
            ),
            SummarizeError::MissingCoordinate { field } => {
                write!(f, "records lack the {field} coordinate this summary needs")
            }
        }
    }
}

impl std::error::Error for SummarizeError {}

/// Named denominator formulas for scaling ratios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalizer {
    /// Constant 1: raw metric values.
    Unit,
    /// n²p / (log_{1/p} n)², the partition-size scale.
    PairsOverLogSq,
    /// np / log_{1/p} n, the thickness/dimension scale.
    DegreeOverLog,
}

impl Normalizer {
    pub const NAMES: [&'static str; 3] = ["unit", "n2p_over_log2", "np_over_log"];

    pub fn parse(name: &str) -> Result<Self, SummarizeError> {
        match name {
            "unit" | "1" => Ok(Normalizer::Unit),
            "n2p_over_log2" => Ok(Normalizer::PairsOverLogSq),
            "np_over_log" => Ok(Normalizer::DegreeOverLog),
            _ => Err(SummarizeError::UnknownNormalizer { name: name.to_string() }),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Normalizer::Unit => "unit",
            Normalizer::PairsOverLogSq => "n2p_over_log2",
            Normalizer::DegreeOverLog => "np_over_log",
        }
    }

    /// Denominator at (n, p). The non-unit formulas need p.
    fn value(&self, n: usize, p: Option<f64>) -> Result<f64, SummarizeError> {
        match self {
            Normalizer::Unit => Ok(1.0),
            Normalizer::PairsOverLogSq | Normalizer::DegreeOverLog => {
                let p = p.ok_or(SummarizeError::MissingCoordinate { field: "p" })?;
                let log = (n as f64).ln() / (1.0 / p).ln();
                Ok(match self {
                    Normalizer::PairsOverLogSq => (n as f64) * (n as f64) * p / (log * log),
                    Normalizer::DegreeOverLog => n as f64 * p / log,
                    Normalizer::Unit => unreachable!(),
                })
            }
        }
    }
}

/// Mean normalized ratio at one (n, p) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub n: usize,
    pub p: Option<f64>,
    pub count: usize,
    pub mean_ratio: f64,
    /// Sample standard deviation of the ratios; None for one record.
    pub std: Option<f64>,
    /// 1.96·std/√count, the normal-approximation 95% half-width; None
    /// (reported as NA) for one record.
    pub half_width: Option<f64>,
}

/// Normalized scaling table: metric/normalizer averaged per (n, p) over
/// non-error records, rows ordered by (n, p).
pub fn summarize_scaling(
    records: &[TrialRecord],
    metric: &str,
    normalizer: Normalizer,
) -> Result<Vec<ScalingRow>, SummarizeError> {
    if !METRIC_NAMES.contains(&metric) {
        return Err(SummarizeError::UnknownMetric { name: metric.to_string() });
    }
    if let Some(first) = records.first() {
        if let Some(other) = records.iter().find(|r| r.mode != first.mode) {
            return Err(SummarizeError::MixedModes {
                first: first.mode.to_string(),
                second: other.mode.to_string(),
            });
        }
    }
    // group by (n, p); p is keyed by bits so distinct values never merge
    let mut cells: BTreeMap<(usize, Option<u64>), (Option<f64>, Vec<f64>)> = BTreeMap::new();
    for record in records {
        if record.status != TrialStatus::Ok {
            continue;
        }
        let Some(value) = record.metric(metric) else { continue };
        let n = record.n.ok_or(SummarizeError::MissingCoordinate { field: "n" })?;
        let denom = normalizer.value(n, record.p)?;
        let key = (n, record.p.map(f64::to_bits));
        cells.entry(key).or_insert((record.p, Vec::new())).1.push(value / denom);
    }
    if cells.is_empty() {
        return Err(SummarizeError::NoRecords);
    }
    let mut rows = Vec::new();
    for ((n, _), (p, ratios)) in cells {
        let s = stats(&ratios).expect("cell holds at least one ratio");
        rows.push(ScalingRow {
            n,
            p,
            count: s.count,
            mean_ratio: s.mean,
            std: s.std,
            half_width: s.std.map(|sd| 1.96 * sd / (s.count as f64).sqrt()),
        });
    }
    Ok(rows)
}

/// Plot-ready CSV: one row per (n, p), NA where a single record leaves
/// the spread undefined.
pub fn write_scaling_csv<W: Write>(
    rows: &[ScalingRow],
    metric: &str,
    normalizer: Normalizer,
    writer: &mut W,
) -> io::Result<()> {
    writeln!(writer, "metric,normalizer,n,p,count,mean_ratio,std,half_width")?;
    for row in rows {
        writeln!(
            writer,
            "{},{},{},{},{},{},{},{}",
            metric,
            normalizer.name(),
            row.n,
            opt_cell(row.p),
            row.count,
            float_cell(row.mean_ratio),
            row.std.map(float_cell).unwrap_or_else(|| "NA".to_string()),
            row.half_width.map(float_cell).unwrap_or_else(|| "NA".to_string()),
        )?;
    }
    Ok(())
}
