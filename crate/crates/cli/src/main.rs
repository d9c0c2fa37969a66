//! praguedim: experiment harness CLI. Every mode runs either a full
//! config-driven grid (--config) or a single parameter point given by
//! direct flags; summarize turns a records file into a scaling table.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use praguedim::NibbleParams;

use praguedim_cli::single::{self, ColorSource};
use praguedim_cli::{
    run_experiment, summarize_scaling, write_scaling_csv, ExperimentConfig, Normalizer,
    TrialRecord,
};

#[derive(Parser)]
#[command(
    name = "praguedim",
    version,
    about = "Clique partitions, hypergraph colorings, and product representations of random graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct BatchArgs {
    /// Experiment config (JSON); runs the whole grid
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config's "out"
    #[arg(long, env = "PRAGUEDIM_OUT")]
    out: Option<PathBuf>,
    /// Worker threads for the trial pool (default: all cores)
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct ScheduleArgs {
    /// Clique-size multiplier on log_{1/p} n
    #[arg(long)]
    ca: Option<f64>,
    /// Round-count and density-decay exponent
    #[arg(long)]
    tau: Option<u32>,
    /// Concentration slack exponent: eps = n^(-beps)
    #[arg(long)]
    beps: Option<f64>,
}

impl ScheduleArgs {
    fn any_given(&self) -> bool {
        self.ca.is_some() || self.tau.is_some() || self.beps.is_some()
    }

    /// Direct-flag schedule constants, defaulting axis by axis.
    fn params(&self, max_k: Option<usize>) -> NibbleParams {
        let defaults = NibbleParams::default();
        NibbleParams {
            ca: self.ca.unwrap_or(defaults.ca),
            tau: self.tau.unwrap_or(defaults.tau),
            beps: self.beps.unwrap_or(defaults.beps),
            max_clique_cap: max_k,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Clique partitions of G(n, p) samples
    Partition {
        #[command(flatten)]
        batch: BatchArgs,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        schedule: ScheduleArgs,
        /// Hard cap on the clique size k
        #[arg(long = "max-k")]
        max_k: Option<usize>,
    },
    /// Greedy edge coloring of random sequences
    Color {
        #[command(flatten)]
        batch: BatchArgs,
        /// Ground hypergraph file ("n r m" header, one edge per line)
        #[arg(long)]
        hypergraph: Option<PathBuf>,
        /// Use the complete r-uniform ground hypergraph instead
        #[arg(long = "complete-r")]
        complete_r: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        /// Sequence length
        #[arg(long)]
        m: Option<usize>,
        /// Literal palette size
        #[arg(long)]
        q: Option<usize>,
        /// Palette rule q = floor(r m / n), window (1-gamma) m
        #[arg(long)]
        gamma: Option<f64>,
        /// Palette rule planned for an inflated sequence (1+delta) m
        #[arg(long)]
        delta: Option<f64>,
        /// Error-envelope exponent for trajectory checkpoints
        #[arg(long)]
        sigma: Option<f64>,
        /// Checkpoint times in (0,1), comma separated
        #[arg(long, value_delimiter = ',')]
        checkpoints: Vec<f64>,
        /// Seeds, comma separated; one run file per seed
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
    },
    /// Pseudo-randomness audit of the partition process
    Audit {
        #[command(flatten)]
        batch: BatchArgs,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        schedule: ScheduleArgs,
        /// Rounds to audit, comma separated (default 0)
        #[arg(long, value_delimiter = ',')]
        rounds: Vec<usize>,
        /// Sampled anchors per audit cell
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Product representation with embedding certificate
    Prague {
        #[command(flatten)]
        batch: BatchArgs,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        schedule: ScheduleArgs,
    },
    /// Counting lower bounds at (n, p)
    Lowerbound {
        #[command(flatten)]
        batch: BatchArgs,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        p: Option<f64>,
        /// Slack in the bound (default 0.5)
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Scaling table from a records.jsonl file
    Summarize {
        /// records.jsonl from a batch run
        #[arg(long)]
        records: PathBuf,
        /// Metric field to normalize
        #[arg(long)]
        metric: String,
        /// unit | n2p_over_log2 | np_over_log
        #[arg(long, default_value = "unit")]
        normalizer: String,
        /// CSV destination (default: stdout)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

/// Batch path: read, parse, and fully validate the config, then run the
/// grid and report the output files.
fn run_batch(config_path: &Path, out: Option<PathBuf>, jobs: Option<usize>) -> Result<(), String> {
    let text = fs::read_to_string(config_path)
        .map_err(|e| format!("{}: {e}", config_path.display()))?;
    let config = ExperimentConfig::from_json(&text).map_err(|e| e.to_string())?;
    let out_dir = out
        .or_else(|| config.out.clone())
        .ok_or_else(|| praguedim_cli::ConfigError::NoOutputDir.to_string())?;
    let output = run_experiment(&config, &out_dir, jobs).map_err(|e| e.to_string())?;
    println!(
        "{} trials -> {} ({} errors); summary {}",
        output.records.len(),
        output.records_path.display(),
        output.error_count(),
        output.summary_path.display()
    );
    Ok(())
}

fn need<T>(value: Option<T>, flag: &str) -> Result<T, String> {
    value.ok_or_else(|| format!("missing {flag} (or use --config for a grid run)"))
}

/// Direct-flag runs write into --out, defaulting to the current
/// directory.
fn out_dir(out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| PathBuf::from("."))
}

fn reject_direct_flags(config_given: bool, any_direct: bool) -> Result<(), String> {
    if config_given && any_direct {
        return Err("--config runs the whole grid; drop the direct flags".to_string());
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Partition { batch, n, p, seed, schedule, max_k } => {
            let direct =
                n.is_some() || p.is_some() || seed.is_some() || schedule.any_given() || max_k.is_some();
            reject_direct_flags(batch.config.is_some(), direct)?;
            if let Some(config) = batch.config {
                return run_batch(&config, batch.out, batch.jobs);
            }
            single::partition_single(
                need(n, "--n")?,
                need(p, "--p")?,
                need(seed, "--seed")?,
                schedule.params(max_k),
                &out_dir(batch.out),
            )
        }
        Command::Color {
            batch,
            hypergraph,
            complete_r,
            n,
            m,
            q,
            gamma,
            delta,
            sigma,
            checkpoints,
            seeds,
        } => {
            let direct = hypergraph.is_some()
                || complete_r.is_some()
                || n.is_some()
                || m.is_some()
                || q.is_some()
                || gamma.is_some()
                || delta.is_some()
                || sigma.is_some()
                || !checkpoints.is_empty()
                || !seeds.is_empty();
            reject_direct_flags(batch.config.is_some(), direct)?;
            if let Some(config) = batch.config {
                return run_batch(&config, batch.out, batch.jobs);
            }
            let source = match (&hypergraph, complete_r) {
                (Some(path), None) => ColorSource::File(path),
                (None, Some(r)) => ColorSource::Complete { n: need(n, "--n")?, r },
                (Some(_), Some(_)) => {
                    return Err("give --hypergraph or --complete-r, not both".to_string())
                }
                (None, None) => {
                    return Err("give --hypergraph FILE or --complete-r R".to_string())
                }
            };
            if seeds.is_empty() {
                return Err("missing --seeds (or use --config for a grid run)".to_string());
            }
            single::color_single(
                source,
                need(m, "--m")?,
                q,
                gamma,
                delta,
                sigma,
                &checkpoints,
                &seeds,
                &out_dir(batch.out),
            )
        }
        Command::Audit { batch, n, p, seed, schedule, rounds, samples } => {
            let direct = n.is_some()
                || p.is_some()
                || seed.is_some()
                || schedule.any_given()
                || !rounds.is_empty()
                || samples.is_some();
            reject_direct_flags(batch.config.is_some(), direct)?;
            if let Some(config) = batch.config {
                return run_batch(&config, batch.out, batch.jobs);
            }
            single::audit_single(
                need(n, "--n")?,
                need(p, "--p")?,
                need(seed, "--seed")?,
                schedule.params(None),
                &rounds,
                samples.unwrap_or(20),
                &out_dir(batch.out),
            )
        }
        Command::Prague { batch, n, p, seed, schedule } => {
            let direct = n.is_some() || p.is_some() || seed.is_some() || schedule.any_given();
            reject_direct_flags(batch.config.is_some(), direct)?;
            if let Some(config) = batch.config {
                return run_batch(&config, batch.out, batch.jobs);
            }
            let nibble = schedule.any_given().then(|| schedule.params(None));
            single::prague_single(
                need(n, "--n")?,
                need(p, "--p")?,
                need(seed, "--seed")?,
                nibble,
                &out_dir(batch.out),
            )
        }
        Command::Lowerbound { batch, n, p, eps } => {
            let direct = n.is_some() || p.is_some() || eps.is_some();
            reject_direct_flags(batch.config.is_some(), direct)?;
            if let Some(config) = batch.config {
                return run_batch(&config, batch.out, batch.jobs);
            }
            single::lowerbound_single(
                need(n, "--n")?,
                need(p, "--p")?,
                eps.unwrap_or(0.5),
                &out_dir(batch.out),
            )
        }
        Command::Summarize { records, metric, normalizer, out } => {
            let normalizer = Normalizer::parse(&normalizer).map_err(|e| e.to_string())?;
            let file =
                File::open(&records).map_err(|e| format!("{}: {e}", records.display()))?;
            let mut parsed: Vec<TrialRecord> = Vec::new();
            for (idx, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| e.to_string())?;
                if line.trim().is_empty() {
                    continue;
                }
                let record: TrialRecord = serde_json::from_str(&line)
                    .map_err(|e| format!("records line {}: {e}", idx + 1))?;
                parsed.push(record);
            }
            let rows =
                summarize_scaling(&parsed, &metric, normalizer).map_err(|e| e.to_string())?;
            let mut csv = Vec::new();
            write_scaling_csv(&rows, &metric, normalizer, &mut csv).map_err(|e| e.to_string())?;
            match out {
                Some(path) => {
                    let mut file =
                        File::create(&path).map_err(|e| format!("{}: {e}", path.display()))?;
                    file.write_all(&csv).map_err(|e| e.to_string())?;
                    println!("{} rows -> {}", rows.len(), path.display());
                }
                None => {
                    let text = String::from_utf8(csv).map_err(|e| e.to_string())?;
                    print!("{text}");
                }
            }
            Ok(())
        }
    }
}
