//! Batch execution: expand the grid into trials, run them on a
//! work-stealing pool, and stream records to disk through a single
//! serialized sink that preserves trial order, so identical configs
//! produce byte-identical record files regardless of thread count.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::Instant;

use praguedim::audit::{audit_rounds, AuditCell, AuditSpec};
use praguedim::coloring::{
    greedy_color, plan_coloring, trajectory_audit, PaletteRule, SampleSpec,
};
use praguedim::hypergraph::{sample_sequence_fixed_m, Hypergraph};
use praguedim::nibble::StopReason;
use praguedim::prague::{lower_bounds, prague_upper_detailed, verify_embedding, PragueParams};
use praguedim::{
    build_schedule, run_partition, sample_gnp, verify_partition, NibbleParams, StreamRng,
};
use rayon::prelude::*;

use crate::config::{trial_seed, ConfigError, ExperimentConfig, GridPoint, Mode};
use crate::record::{TrialRecord, TrialStatus};
use crate::summary::write_grid_summary_csv;

#[derive(Debug)]
pub enum HarnessError {
    Config(ConfigError),
    Io(io::Error),
    Serialize(serde_json::Error),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Config(e) => write!(f, "{e}"),
            HarnessError::Io(e) => write!(f, "io: {e}"),
            HarnessError::Serialize(e) => write!(f, "serialize: {e}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<ConfigError> for HarnessError {
    fn from(e: ConfigError) -> Self {
        HarnessError::Config(e)
    }
}

impl From<io::Error> for HarnessError {
    fn from(e: io::Error) -> Self {
        HarnessError::Io(e)
    }
}

impl From<serde_json::Error> for HarnessError {
    fn from(e: serde_json::Error) -> Self {
        HarnessError::Serialize(e)
    }
}

/// One unit of work: a grid point plus a replicate and its seeds.
#[derive(Debug, Clone)]
pub struct Trial {
    pub point: GridPoint,
    pub replicate: usize,
    pub base_seed: u64,
    /// Derived seed, `trial_seed(base_seed, point.index, replicate)`.
    pub seed: u64,
}

/// Grid outer, replicates inner: record order matches the config's axis
/// order, so reruns line up record for record.
pub fn plan_trials(config: &ExperimentConfig) -> Vec<Trial> {
    let bases = config.seeds.replicate_bases();
    let mut trials = Vec::new();
    for point in config.grid_points() {
        for (replicate, &base_seed) in bases.iter().enumerate() {
            trials.push(Trial {
                point,
                replicate,
                base_seed,
                seed: trial_seed(base_seed, point.index, replicate),
            });
        }
    }
    trials
}

fn err_str<E: fmt::Display>(e: E) -> String {
    e.to_string()
}

fn stop_name(stop: &StopReason) -> String {
    match stop {
        StopReason::AllRoundsRun => "all_rounds_run".to_string(),
        StopReason::EdgesExhausted { round } => format!("edges_exhausted:{round}"),
        StopReason::CliqueSizeFloor { round } => format!("clique_size_floor:{round}"),
        StopReason::SamplingSaturated { round } => format!("sampling_saturated:{round}"),
    }
}

fn need<T: Copy>(value: Option<T>, axis: &'static str) -> Result<T, String> {
    value.ok_or_else(|| format!("trial is missing its {axis} coordinate"))
}

fn nibble_params(point: &GridPoint) -> Result<NibbleParams, String> {
    Ok(NibbleParams {
        ca: need(point.ca, "ca")?,
        tau: need(point.tau, "tau")?,
        beps: need(point.beps, "beps")?,
        max_clique_cap: None,
    })
}

fn run_partition_trial(record: &mut TrialRecord, trial: &Trial) -> Result<(), String> {
    let n = need(trial.point.n, "n")?;
    let p = need(trial.point.p, "p")?;
    let params = nibble_params(&trial.point)?;
    let rng = StreamRng::new(trial.seed, "partition");
    let g = sample_gnp(n, p, &mut rng.split("graph")).map_err(err_str)?;
    let run = run_partition(&g, p, params, &mut rng.split("nibble")).map_err(err_str)?;
    let audit = verify_partition(&g, &run.partition);
    record.parts = Some(audit.clique_count);
    record.thickness = Some(audit.thickness);
    record.max_clique = Some(audit.max_clique_size);
    record.rounds_run = Some(run.rounds.len());
    record.stop = Some(stop_name(&run.stop));
    record.verified = Some(audit.pass);
    Ok(())
}

fn run_color_trial(
    record: &mut TrialRecord,
    trial: &Trial,
    checkpoints: &[f64],
) -> Result<(), String> {
    let n = need(trial.point.n, "n")?;
    let r = need(trial.point.r, "r")?;
    let m = need(trial.point.m, "m")?;
    let rng = StreamRng::new(trial.seed, "color");
    let h = Hypergraph::complete(n, r).map_err(err_str)?;
    let q = match (trial.point.q, trial.point.gamma, trial.point.delta) {
        (Some(q), None, None) => q,
        (None, Some(gamma), None) => {
            plan_coloring(n, r, m, PaletteRule::Literal { gamma }).map_err(err_str)?.q
        }
        (None, None, Some(delta)) => {
            plan_coloring(n, r, m, PaletteRule::SlackReparameterized { delta })
                .map_err(err_str)?
                .q
        }
        _ => return Err("color trial needs exactly one of q, gamma, delta".to_string()),
    };
    record.q = Some(q);
    let sequence = sample_sequence_fixed_m(&h, m, &mut rng.split("sequence")).map_err(err_str)?;
    let run = greedy_color(&h, &sequence, q, &mut rng.split("colors")).map_err(err_str)?;
    record.colored_steps = Some(run.colored_steps());
    record.failure_index = run.failure_index;
    let distinct: HashSet<u32> = run.colors.iter().flatten().copied().collect();
    record.colors_used = Some(distinct.len());
    if !checkpoints.is_empty() {
        let sigma = need(trial.point.sigma, "sigma")?;
        let snapshots = trajectory_audit(
            &run,
            &h,
            checkpoints,
            sigma,
            &SampleSpec::default(),
            &mut rng.split("trajectory"),
        )
        .map_err(err_str)?;
        if !snapshots.is_empty() {
            let rel = |observed: f64, hat: f64| (observed / hat - 1.0).abs();
            let mut q_dev = 0.0f64;
            let mut y_dev = 0.0f64;
            for s in &snapshots {
                q_dev = q_dev
                    .max(rel(s.q_observed_max as f64, s.q_hat))
                    .max(rel(s.q_observed_min as f64, s.q_hat));
                y_dev = y_dev
                    .max(rel(s.y_observed_max as f64, s.y_hat))
                    .max(rel(s.y_observed_min as f64, s.y_hat));
            }
            record.max_q_deviation = Some(q_dev);
            record.max_y_deviation = Some(y_dev);
        }
    }
    Ok(())
}

fn run_audit_trial(
    record: &mut TrialRecord,
    trial: &Trial,
    rounds: &[usize],
    samples: Option<usize>,
) -> Result<(), String> {
    let n = need(trial.point.n, "n")?;
    let p = need(trial.point.p, "p")?;
    let params = nibble_params(&trial.point)?;
    let sched = build_schedule(n, p, params).map_err(err_str)?;
    let rng = StreamRng::new(trial.seed, "audit");
    let g = sample_gnp(n, p, &mut rng.split("graph")).map_err(err_str)?;
    let spec = AuditSpec {
        cells: vec![
            AuditCell { s_size: 0, j: 2, samples: 1 },
            AuditCell { s_size: 2, j: 3, samples: samples.unwrap_or(20) },
        ],
        rounds_to_audit: if rounds.is_empty() { vec![0] } else { rounds.to_vec() },
        tolerance_multiplier: 1.0,
        retry_cap: 100_000,
    };
    let audits = audit_rounds(&g, &sched, &spec, &mut rng.split("rounds")).map_err(err_str)?;
    let mut max_dev = 0.0f64;
    let mut pass = true;
    for round_audit in &audits {
        for report in [&round_audit.clique_counts, &round_audit.neighborhoods] {
            pass &= report.pass;
            for cell in &report.cells {
                max_dev = max_dev.max(cell.max_rel_deviation);
            }
        }
    }
    record.rounds_run = Some(audits.len());
    record.max_audit_deviation = Some(max_dev);
    record.audit_pass = Some(pass);
    Ok(())
}

fn run_prague_trial(record: &mut TrialRecord, trial: &Trial) -> Result<(), String> {
    let n = need(trial.point.n, "n")?;
    let p = need(trial.point.p, "p")?;
    let nibble = match (trial.point.ca, trial.point.tau, trial.point.beps) {
        (Some(ca), Some(tau), Some(beps)) => {
            NibbleParams { ca, tau, beps, max_clique_cap: None }
        }
        _ => NibbleParams::default(),
    };
    // record the schedule constants the pipeline actually ran with
    record.ca = Some(nibble.ca);
    record.tau = Some(nibble.tau);
    record.beps = Some(nibble.beps);
    let params = PragueParams { nibble, ..PragueParams::default() };
    let rng = StreamRng::new(trial.seed, "prague");
    let g = sample_gnp(n, p, &mut rng.split("graph")).map_err(err_str)?;
    let run = prague_upper_detailed(&g, &params, &mut rng.split("pipeline")).map_err(err_str)?;
    let audit = verify_embedding(&g, &run.representation).map_err(err_str)?;
    let cover = &run.cover;
    let mut per_vertex = vec![0usize; n];
    for clique in &cover.cliques.cliques {
        for v in clique.vertices.iter() {
            per_vertex[v] += 1;
        }
    }
    record.dimension = Some(run.representation.d);
    record.verified = Some(audit.pass);
    record.parts = Some(cover.cliques.len());
    record.thickness = per_vertex.iter().copied().max();
    record.max_clique = Some(cover.cliques.max_clique_size());
    record.colors_used = Some(cover.d);
    record.block_sizes = Some(cover.blocks.iter().map(|b| b.size).collect());
    record.stop = run.stop.as_ref().map(stop_name);
    Ok(())
}

fn run_lowerbound_trial(record: &mut TrialRecord, trial: &Trial) -> Result<(), String> {
    let n = need(trial.point.n, "n")?;
    let p = need(trial.point.p, "p")?;
    let eps = trial.point.eps.unwrap_or(0.5);
    record.eps = Some(eps);
    let lb = lower_bounds(n, p, eps).map_err(err_str)?;
    record.ccn_lb = Some(lb.ccn_lb);
    record.cct_lb = Some(lb.cct_lb);
    record.phi = Some(lb.phi);
    Ok(())
}

/// Run one trial to a finished record. Errors come back as strings; the
/// caller turns them into status=error records.
pub fn execute_trial(config: &ExperimentConfig, trial: &Trial) -> Result<TrialRecord, String> {
    let mut record = TrialRecord::blank(
        config.mode,
        &trial.point,
        trial.replicate,
        trial.base_seed,
        trial.seed,
    );
    match config.mode {
        Mode::Partition => run_partition_trial(&mut record, trial)?,
        Mode::Color => run_color_trial(&mut record, trial, &config.checkpoints)?,
        Mode::Audit => run_audit_trial(&mut record, trial, &config.rounds, config.samples)?,
        Mode::Prague => run_prague_trial(&mut record, trial)?,
        Mode::Lowerbound => run_lowerbound_trial(&mut record, trial)?,
    }
    Ok(record)
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        format!("panic: {s}")
    } else if let Some(s) = payload.downcast_ref::<String>() {
        format!("panic: {s}")
    } else {
        "panic: unknown payload".to_string()
    }
}

/// Paths and records produced by one batch run.
#[derive(Debug)]
pub struct RunOutput {
    pub records_path: PathBuf,
    pub summary_path: PathBuf,
    pub echo_path: PathBuf,
    pub records: Vec<TrialRecord>,
}

impl RunOutput {
    pub fn error_count(&self) -> usize {
        self.records.iter().filter(|r| r.status == TrialStatus::Error).count()
    }
}

/// Standard batch entry point: validate, then run every trial with the
/// real mode runners.
pub fn run_experiment(
    config: &ExperimentConfig,
    out_dir: &Path,
    jobs: Option<usize>,
) -> Result<RunOutput, HarnessError> {
    run_experiment_with(config, out_dir, jobs, &execute_trial)
}

type TrialRunner<'a> = &'a (dyn Fn(&ExperimentConfig, &Trial) -> Result<TrialRecord, String> + Sync);

/// Batch execution with an injectable trial runner (the tests use this to
/// exercise crash isolation with a deliberately panicking trial).
///
/// A panic or error inside one trial becomes that trial's status=error
/// record; sibling trials run to completion. Records are flushed to
/// records.jsonl as they arrive, in trial order.
pub fn run_experiment_with(
    config: &ExperimentConfig,
    out_dir: &Path,
    jobs: Option<usize>,
    runner: TrialRunner<'_>,
) -> Result<RunOutput, HarnessError> {
    config.validate()?;
    fs::create_dir_all(out_dir)?;

    let echo_path = out_dir.join("config-echo.json");
    let mut echo = BufWriter::new(File::create(&echo_path)?);
    serde_json::to_writer_pretty(&mut echo, config)?;
    echo.write_all(b"\n")?;
    echo.flush()?;

    let trials = plan_trials(config);
    let records_path = out_dir.join("records.jsonl");

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| io::Error::other(e.to_string()))?;

    let (tx, rx) = mpsc::channel::<(usize, TrialRecord)>();
    let writer_path = records_path.clone();
    let writer = std::thread::spawn(move || -> Result<Vec<TrialRecord>, HarnessError> {
        let mut file = BufWriter::new(File::create(&writer_path)?);
        let mut pending: BTreeMap<usize, TrialRecord> = BTreeMap::new();
        let mut next = 0usize;
        let mut done: Vec<TrialRecord> = Vec::new();
        for (index, record) in rx {
            pending.insert(index, record);
            // flush the contiguous prefix so partial output is usable
            // and the final file is in trial order
            while let Some(record) = pending.remove(&next) {
                let line = serde_json::to_string(&record)?;
                writeln!(file, "{line}")?;
                file.flush()?;
                done.push(record);
                next += 1;
            }
        }
        Ok(done)
    });

    pool.install(|| {
        trials.par_iter().enumerate().for_each_with(tx, |tx, (index, trial)| {
            let start = Instant::now();
            let outcome = catch_unwind(AssertUnwindSafe(|| runner(config, trial)));
            let mut record = match outcome {
                Ok(Ok(record)) => record,
                Ok(Err(message)) => TrialRecord::blank(
                    config.mode,
                    &trial.point,
                    trial.replicate,
                    trial.base_seed,
                    trial.seed,
                )
                .with_error(message),
                Err(payload) => TrialRecord::blank(
                    config.mode,
                    &trial.point,
                    trial.replicate,
                    trial.base_seed,
                    trial.seed,
                )
                .with_error(panic_message(payload)),
            };
            record.wall_ms = start.elapsed().as_millis() as u64;
            // a closed channel means the writer failed; the error
            // surfaces from its join below
            let _ = tx.send((index, record));
        });
    });

    let records = writer
        .join()
        .unwrap_or_else(|payload| Err(HarnessError::Io(io::Error::other(panic_message(payload)))))?;

    let summary_path = out_dir.join("summary.csv");
    let mut summary = BufWriter::new(File::create(&summary_path)?);
    write_grid_summary_csv(&records, &mut summary)?;
    summary.flush()?;

    Ok(RunOutput { records_path, summary_path, echo_path, records })
}
