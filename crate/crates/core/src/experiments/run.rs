use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ExperimentConfig, ExperimentError};
use crate::metrics::{self, PopulationRecord};
use crate::soup::Soup;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.csv";

/// Seed for replicate `index` (numbered across all cells), taken from the
/// first eight bytes of `sha256(master_seed || index)`.
pub fn replicate_seed(master_seed: u64, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update(index.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("eight bytes"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplicateStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateEntry {
    pub cell: String,
    pub replicate: u32,
    pub seed: u64,
    /// Relative to the experiment directory.
    pub csv: PathBuf,
    pub status: ReplicateStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub software: String,
    pub version: String,
    pub rng: String,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub replicates: Vec<ReplicateEntry>,
    pub failed: usize,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self, ExperimentError> {
        let file = File::open(dir.join(MANIFEST_FILE))?;
        serde_json::from_reader(BufReader::new(file))
            .map_err(|e| ExperimentError::Runtime(format!("unreadable manifest: {e}")))
    }
}

/// Per cell and tracked label, over the cell's completed replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub cell: String,
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub label: String,
    pub replicates: u32,
    pub completed: u32,
    /// Replicates whose final measurement is at or above the threshold.
    pub end_hits: u32,
    pub end_rate: f64,
    /// Share of replicates that were at or above the threshold at any measurement.
    pub reach_rate: f64,
    pub time_average: f64,
    pub mean_final_fraction: f64,
    pub max_peak_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub summary: Vec<SummaryRow>,
}

struct Job {
    cell: usize,
    replicate: u32,
    seed: u64,
    csv: PathBuf,
}

/// Runs every replicate of every cell and writes, under `output_dir`, one
/// CSV per replicate, the manifest and the summary.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    config.validate()?;
    let dir = config.output_dir.clone();
    let populations = config
        .cells
        .iter()
        .map(|c| config.population(c))
        .collect::<Result<Vec<_>, _>>()?;
    let motifs = config.motifs()?;
    let labels: Vec<&str> = motifs.labels().collect();

    let mut jobs = Vec::new();
    for (ci, cell) in config.cells.iter().enumerate() {
        fs::create_dir_all(dir.join(&cell.name))?;
        for r in 0..config.replicates {
            let index = ci as u64 * config.replicates as u64 + r as u64;
            jobs.push(Job {
                cell: ci,
                replicate: r,
                seed: replicate_seed(config.master_seed, index),
                csv: Path::new(&cell.name).join(format!("rep-{r:04}.csv")),
            });
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.worker_count())
        .build()
        .map_err(|e| ExperimentError::Runtime(e.to_string()))?;
    log::info!(
        "{}: {} replicates on {} workers",
        config.preset,
        jobs.len(),
        pool.current_num_threads()
    );
    let outcomes: Vec<Result<(), String>> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let run = || -> Result<(), String> {
                    let mut soup =
                        Soup::new(&populations[job.cell], config.limits, job.seed).map_err(|e| e.to_string())?;
                    let mut observer = motifs.clone();
                    let records = soup.run(config.total_collisions, &config.schedules, &mut observer);
                    let file = File::create(dir.join(&job.csv)).map_err(|e| e.to_string())?;
                    metrics::write_csv(&records, &labels, BufWriter::new(file)).map_err(|e| e.to_string())
                };
                let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|payload| Err(panic_message(&*payload)));
                match &outcome {
                    Ok(()) => log::debug!("{} done", job.csv.display()),
                    Err(e) => log::warn!("{} failed: {e}", job.csv.display()),
                }
                outcome
            })
            .collect()
    });

    let replicates: Vec<ReplicateEntry> = jobs
        .iter()
        .zip(outcomes)
        .map(|(job, outcome)| ReplicateEntry {
            cell: config.cells[job.cell].name.clone(),
            replicate: job.replicate,
            seed: job.seed,
            csv: job.csv.clone(),
            status: if outcome.is_ok() { ReplicateStatus::Ok } else { ReplicateStatus::Failed },
            error: outcome.err(),
        })
        .collect();
    let failed = replicates.iter().filter(|r| r.status == ReplicateStatus::Failed).count();
    let manifest = Manifest {
        software: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        rng: config.rng.clone(),
        config_hash: config.hash(),
        config: config.clone(),
        replicates,
        failed,
    };
    let file = File::create(dir.join(MANIFEST_FILE))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &manifest)
        .map_err(|e| ExperimentError::Runtime(e.to_string()))?;

    let summary = summarize(&dir)?;
    Ok(ExperimentReport { dir, manifest, summary })
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    let text = payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".to_string());
    format!("panicked: {text}")
}

/// Recomputes the summary from the manifest and replicate CSVs in `dir` and
/// writes it to `summary.csv`.
pub fn summarize(dir: &Path) -> Result<Vec<SummaryRow>, ExperimentError> {
    let manifest = Manifest::load(dir)?;
    let config = &manifest.config;
    let labels: Vec<String> = config.track.iter().map(|t| t.label.clone()).collect();
    let mut rows = Vec::new();
    for cell in &config.cells {
        let mut runs: Vec<Vec<PopulationRecord>> = Vec::new();
        for entry in manifest
            .replicates
            .iter()
            .filter(|r| r.cell == cell.name && r.status == ReplicateStatus::Ok)
        {
            let (_, records) = metrics::read_csv(BufReader::new(File::open(dir.join(&entry.csv))?))?;
            runs.push(records);
        }
        for label in &labels {
            let mut row = SummaryRow {
                cell: cell.name.clone(),
                x: cell.x,
                y: cell.y,
                label: label.clone(),
                replicates: config.replicates,
                completed: runs.len() as u32,
                end_hits: 0,
                end_rate: 0.0,
                reach_rate: 0.0,
                time_average: 0.0,
                mean_final_fraction: 0.0,
                max_peak_fraction: 0.0,
            };
            let mut reached = 0u32;
            for records in &runs {
                if metrics::threshold_fraction(records, label, config.threshold)? {
                    row.end_hits += 1;
                }
                let peak = metrics::peak_fraction(records, label)?;
                if peak >= config.threshold {
                    reached += 1;
                }
                row.max_peak_fraction = row.max_peak_fraction.max(peak);
                row.time_average += metrics::time_averaged_population(records, label)?;
                row.mean_final_fraction += records.last().expect("non-empty").fraction(label)?;
            }
            if !runs.is_empty() {
                let n = runs.len() as f64;
                row.end_rate = row.end_hits as f64 / n;
                row.reach_rate = reached as f64 / n;
                row.time_average /= n;
                row.mean_final_fraction /= n;
            }
            rows.push(row);
        }
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(dir.join(SUMMARY_FILE))?;
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(rows)
}
