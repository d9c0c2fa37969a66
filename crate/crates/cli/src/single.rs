//! Single-run entry points behind the direct CLI flags: one seed, one
//! parameter point, full detail artifacts (schedules, partitions,
//! coloring trajectories, audit reports, representations) instead of the
//! batch record stream.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use praguedim::audit::{audit_rounds, AuditCell, AuditSpec, RoundAudit};
use praguedim::coloring::{
    greedy_color, plan_coloring, trajectory_audit, PaletteRule, SampleSpec, TrajectorySnapshot,
};
use praguedim::hypergraph::{read_hypergraph, sample_sequence_fixed_m, Hypergraph};
use praguedim::nibble::{run_partition_scheduled, write_partition_jsonl};
use praguedim::prague::{lower_bounds, prague_upper_detailed, PragueParams};
use praguedim::{
    build_schedule, sample_gnp, verify_embedding, verify_partition, NibbleParams, StreamRng,
};
use serde::Serialize;

fn err_str<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), String> {
    let mut file = BufWriter::new(File::create(path).map_err(err_str)?);
    serde_json::to_writer_pretty(&mut file, value).map_err(err_str)?;
    file.write_all(b"\n").map_err(err_str)?;
    file.flush().map_err(err_str)
}

fn ensure_dir(out: &Path) -> Result<(), String> {
    fs::create_dir_all(out).map_err(err_str)
}

/// Sample G(n, p), run the scheduled partition, verify it. Writes
/// schedule.json and partition.jsonl; prints one verdict line.
pub fn partition_single(
    n: usize,
    p: f64,
    seed: u64,
    params: NibbleParams,
    out: &Path,
) -> Result<(), String> {
    ensure_dir(out)?;
    let sched = build_schedule(n, p, params).map_err(err_str)?;
    let rng = StreamRng::new(seed, "partition");
    let g = sample_gnp(n, p, &mut rng.split("graph")).map_err(err_str)?;
    let run = run_partition_scheduled(&g, &sched, &mut rng.split("nibble")).map_err(err_str)?;
    let audit = verify_partition(&g, &run.partition);
    write_json(&out.join("schedule.json"), &sched)?;
    let file = File::create(out.join("partition.jsonl")).map_err(err_str)?;
    write_partition_jsonl(&run.partition, BufWriter::new(file)).map_err(err_str)?;
    println!(
        "partition n={n} p={p} seed={seed}: parts={} thickness={} max_clique={} verified={}",
        audit.clique_count, audit.thickness, audit.max_clique_size, audit.pass
    );
    if !audit.pass {
        return Err(format!("partition verification failed: {:?}", audit.violations));
    }
    Ok(())
}

/// Ground hypergraph for a single coloring run: an explicit file or the
/// complete r-uniform hypergraph on n vertices.
pub enum ColorSource<'a> {
    File(&'a Path),
    Complete { n: usize, r: usize },
}

#[derive(Serialize)]
struct ColorRunReport {
    q: usize,
    m: usize,
    seed: u64,
    failure_index: Option<usize>,
    colored_steps: usize,
    snapshots: Vec<TrajectorySnapshot>,
}

/// Greedy-color a length-m random sequence once per seed. Writes
/// run-{seed}.json with the palette, failure step, and any checkpoint
/// snapshots.
#[allow(clippy::too_many_arguments)]
pub fn color_single(
    source: ColorSource<'_>,
    m: usize,
    q: Option<usize>,
    gamma: Option<f64>,
    delta: Option<f64>,
    sigma: Option<f64>,
    checkpoints: &[f64],
    seeds: &[u64],
    out: &Path,
) -> Result<(), String> {
    ensure_dir(out)?;
    let h = match source {
        ColorSource::File(path) => {
            let file = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
            read_hypergraph(BufReader::new(file)).map_err(err_str)?
        }
        ColorSource::Complete { n, r } => Hypergraph::complete(n, r).map_err(err_str)?,
    };
    let q = match (q, gamma, delta) {
        (Some(q), None, None) => q,
        (None, Some(gamma), None) => {
            plan_coloring(h.n(), h.r(), m, PaletteRule::Literal { gamma }).map_err(err_str)?.q
        }
        (None, None, Some(delta)) => {
            plan_coloring(h.n(), h.r(), m, PaletteRule::SlackReparameterized { delta })
                .map_err(err_str)?
                .q
        }
        _ => return Err("give exactly one of --q, --gamma, --delta".to_string()),
    };
    if !checkpoints.is_empty() && sigma.is_none() {
        return Err("--checkpoints needs --sigma for the error envelope".to_string());
    }
    for &seed in seeds {
        let rng = StreamRng::new(seed, "color");
        let sequence =
            sample_sequence_fixed_m(&h, m, &mut rng.split("sequence")).map_err(err_str)?;
        let run = greedy_color(&h, &sequence, q, &mut rng.split("colors")).map_err(err_str)?;
        let snapshots = if checkpoints.is_empty() {
            Vec::new()
        } else {
            trajectory_audit(
                &run,
                &h,
                checkpoints,
                sigma.expect("checked above"),
                &SampleSpec::default(),
                &mut rng.split("trajectory"),
            )
            .map_err(err_str)?
        };
        let report = ColorRunReport {
            q,
            m,
            seed,
            failure_index: run.failure_index,
            colored_steps: run.colored_steps(),
            snapshots,
        };
        write_json(&out.join(format!("run-{seed}.json")), &report)?;
        println!(
            "color seed={seed}: q={q} colored={}/{m} failure_index={}",
            report.colored_steps,
            report.failure_index.map(|i| i.to_string()).unwrap_or_else(|| "none".to_string())
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct AuditRunReport {
    n: usize,
    p: f64,
    seed: u64,
    rounds: Vec<RoundAudit>,
}

/// Audit the partition process at the given rounds. Writes audit.json.
#[allow(clippy::too_many_arguments)]
pub fn audit_single(
    n: usize,
    p: f64,
    seed: u64,
    params: NibbleParams,
    rounds: &[usize],
    samples: usize,
    out: &Path,
) -> Result<(), String> {
    ensure_dir(out)?;
    let sched = build_schedule(n, p, params).map_err(err_str)?;
    let rng = StreamRng::new(seed, "audit");
    let g = sample_gnp(n, p, &mut rng.split("graph")).map_err(err_str)?;
    let spec = AuditSpec {
        cells: vec![
            AuditCell { s_size: 0, j: 2, samples: 1 },
            AuditCell { s_size: 2, j: 3, samples },
        ],
        rounds_to_audit: if rounds.is_empty() { vec![0] } else { rounds.to_vec() },
        tolerance_multiplier: 1.0,
        retry_cap: 100_000,
    };
    let audits = audit_rounds(&g, &sched, &spec, &mut rng.split("rounds")).map_err(err_str)?;
    for round_audit in &audits {
        for report in [&round_audit.clique_counts, &round_audit.neighborhoods] {
            for cell in &report.cells {
                println!(
                    "audit round={} s={} j={:?}: expected={:.4} max_rel_dev={:.4} pass={}",
                    round_audit.round,
                    cell.s_size,
                    cell.j,
                    cell.expected,
                    cell.max_rel_deviation,
                    cell.pass
                );
            }
        }
    }
    write_json(&out.join("audit.json"), &AuditRunReport { n, p, seed, rounds: audits })
}

/// Full product-representation pipeline on one G(n, p) sample. Writes
/// representation.json and embedding.json; fails on a failed certificate.
pub fn prague_single(
    n: usize,
    p: f64,
    seed: u64,
    nibble: Option<NibbleParams>,
    out: &Path,
) -> Result<(), String> {
    ensure_dir(out)?;
    let params = PragueParams { nibble: nibble.unwrap_or_default(), ..PragueParams::default() };
    let rng = StreamRng::new(seed, "prague");
    let g = sample_gnp(n, p, &mut rng.split("graph")).map_err(err_str)?;
    let run = prague_upper_detailed(&g, &params, &mut rng.split("pipeline")).map_err(err_str)?;
    let audit = verify_embedding(&g, &run.representation).map_err(err_str)?;
    write_json(&out.join("representation.json"), &run.representation)?;
    write_json(&out.join("embedding.json"), &audit)?;
    println!(
        "prague n={n} p={p} seed={seed}: d={} parts={} verified={}",
        run.representation.d,
        run.cover.cliques.len(),
        audit.pass
    );
    if !audit.pass {
        return Err(format!("embedding certificate failed: {:?}", audit.violations));
    }
    Ok(())
}

/// Evaluate the counting lower bounds at (n, p). Writes lowerbound.json.
pub fn lowerbound_single(n: usize, p: f64, eps: f64, out: &Path) -> Result<(), String> {
    ensure_dir(out)?;
    let lb = lower_bounds(n, p, eps).map_err(err_str)?;
    write_json(&out.join("lowerbound.json"), &lb)?;
    println!(
        "lowerbound n={n} p={p} eps={eps}: phi={:.6} ccn_lb={:.3} cct_lb={:.3}",
        lb.phi, lb.ccn_lb, lb.cct_lb
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_single_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let params = NibbleParams { ca: 0.6, tau: 2, beps: 0.25, max_clique_cap: None };
        partition_single(30, 0.5, 11, params, dir.path()).unwrap();
        assert!(dir.path().join("schedule.json").is_file());
        assert!(dir.path().join("partition.jsonl").is_file());
    }

    #[test]
    fn color_single_reports_runs_per_seed() {
        let dir = tempfile::tempdir().unwrap();
        color_single(
            ColorSource::Complete { n: 12, r: 3 },
            100,
            Some(40),
            None,
            None,
            None,
            &[],
            &[1, 2],
            dir.path(),
        )
        .unwrap();
        assert!(dir.path().join("run-1.json").is_file());
        assert!(dir.path().join("run-2.json").is_file());
    }
}
