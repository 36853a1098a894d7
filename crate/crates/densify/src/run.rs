//! Offline runs: a dataset through the three pipeline stages on separate
//! threads, then the output directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicIsize, Ordering};
use std::sync::mpsc::sync_channel;
use std::time::{Duration, Instant};

use densify_core::pipeline::{
    ConsistencyStage, DepthFrame, DepthJob, DepthStage, FusedCloud, Fusion, KeyframeGate,
};
use densify_core::synth::{completeness, CompletenessReport};
use serde::Serialize;

use crate::config::EngineConfig;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::formats::{write_depth, write_ply};

/// Bounded capacity of both inter-stage queues.
pub const QUEUE_CAPACITY: usize = 8;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// rayon threads for the depth and fusion stages; all cores when `None`
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViewFilterEntry {
    pub id: u64,
    pub accepted: bool,
    /// absent for the first keyframe
    pub common: Option<usize>,
    pub passing: Option<usize>,
    pub fraction: Option<f64>,
    pub rejection: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthEntry {
    pub id: u64,
    pub mean_cost: f64,
    pub raw_valid: usize,
    pub median_valid: usize,
    pub consistent_valid: usize,
    /// pixels initialized by warping; absent without warping
    pub warp_filled: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueueMetrics {
    pub capacity: usize,
    /// most items between send and receive at any time
    pub max_in_flight: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageSeconds {
    pub ingest: f64,
    pub depth: f64,
    pub fusion: f64,
}

/// Everything that depends on the machine and scheduling.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Runtime {
    pub workers: usize,
    pub wall_seconds: f64,
    /// busy time per stage, blocking on queues excluded
    pub stage_seconds: StageSeconds,
    pub depth_job_seconds: Vec<f64>,
    pub job_queue: QueueMetrics,
    pub depth_queue: QueueMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub keyframes: usize,
    pub accepted: usize,
    pub acceptance_rate: f64,
    pub depth_jobs: usize,
    pub points: usize,
    pub processing_resolution: [u32; 2],
    pub view_filter: Vec<ViewFilterEntry>,
    pub depth_maps: Vec<DepthEntry>,
    /// at every dataset keyframe pose
    pub completeness: CompletenessReport,
    pub mean_completeness: f64,
    pub runtime: Runtime,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub cloud: FusedCloud,
    /// consistency-filtered depth maps in keyframe order
    pub depth: Vec<DepthFrame>,
    pub metrics: Metrics,
}

#[derive(Default)]
struct Gauge {
    now: AtomicIsize,
    max: AtomicIsize,
}

impl Gauge {
    fn enter(&self) {
        let n = self.now.fetch_add(1, Ordering::SeqCst) + 1;
        self.max.fetch_max(n, Ordering::SeqCst);
    }

    fn leave(&self) {
        self.now.fetch_sub(1, Ordering::SeqCst);
    }

    fn metrics(&self) -> QueueMetrics {
        QueueMetrics {
            capacity: QUEUE_CAPACITY,
            max_in_flight: self.max.load(Ordering::SeqCst).max(0) as usize,
        }
    }
}

fn timed<T>(busy: &mut Duration, f: impl FnOnce() -> T) -> T {
    let t = Instant::now();
    let out = f();
    *busy += t.elapsed();
    out
}

/// Runs every keyframe of `dataset` through the pipeline. Outputs depend
/// only on the dataset and `config`, never on `options`.
pub fn run_offline(dataset: &Dataset, config: &EngineConfig, options: &RunOptions) -> Result<RunOutput> {
    let pipeline = config.pipeline_config()?;
    let processing = config.processing_camera()?.unwrap_or(dataset.camera);
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = options.workers {
            b = b.num_threads(n.max(1));
        }
        b.build().expect("thread pool")
    };
    let wall = Instant::now();
    let mut gate = KeyframeGate::new(dataset.camera, pipeline.view_filter)?;
    let mut depth_stage = DepthStage::new(processing, pipeline.depth)?;
    let mut consistency = ConsistencyStage::new(pipeline.consistency)?;
    let mut fusion = Fusion::new(pipeline.fusion)?;
    let (job_tx, job_rx) = sync_channel::<DepthJob>(QUEUE_CAPACITY);
    let (frame_tx, frame_rx) = sync_channel::<DepthFrame>(QUEUE_CAPACITY);
    let (job_gauge, frame_gauge) = (Gauge::default(), Gauge::default());

    let (ingest, depth, (filtered, fusion_busy)) = std::thread::scope(|s| {
        let ingest = s.spawn(|| -> Result<(Vec<ViewFilterEntry>, Duration)> {
            let mut busy = Duration::ZERO;
            let mut entries = Vec::with_capacity(dataset.len());
            for i in 0..dataset.len() {
                let outcome = timed(&mut busy, || -> Result<_> {
                    let kf = dataset.keyframe(i)?;
                    Ok(gate.submit(kf)?)
                })?;
                let r = outcome.filter.as_ref();
                let id = dataset.manifest.keyframes[i].id;
                log::debug!(
                    "keyframe {id}: {}{}",
                    if outcome.accepted { "accepted" } else { "rejected" },
                    r.map_or(String::new(), |r| format!(" ({:.3} of {} in range)", r.fraction, r.common))
                );
                entries.push(ViewFilterEntry {
                    id,
                    accepted: outcome.accepted,
                    common: r.map(|r| r.common),
                    passing: r.map(|r| r.passing),
                    fraction: r.map(|r| r.fraction),
                    rejection: r.and_then(|r| r.rejection).map(|j| j.to_string()),
                });
                if let Some(job) = outcome.job {
                    job_gauge.enter();
                    if job_tx.send(job).is_err() {
                        break;
                    }
                }
            }
            drop(job_tx);
            Ok((entries, busy))
        });
        let depth = s.spawn(|| -> Result<(Vec<f64>, Duration)> {
            let mut busy = Duration::ZERO;
            let mut seconds = Vec::new();
            for job in job_rx {
                job_gauge.leave();
                let t = Instant::now();
                let frame = pool.install(|| depth_stage.compute(&job))?;
                let dt = t.elapsed();
                busy += dt;
                seconds.push(dt.as_secs_f64());
                log::info!(
                    "depth {}: {:.2}s, {} valid",
                    frame.id,
                    dt.as_secs_f64(),
                    frame.stats.valid
                );
                frame_gauge.enter();
                if frame_tx.send(frame).is_err() {
                    break;
                }
            }
            drop(frame_tx);
            Ok((seconds, busy))
        });
        let mut busy = Duration::ZERO;
        let mut filtered: Vec<DepthFrame> = Vec::new();
        let mut accept = |frames: Vec<DepthFrame>, busy: &mut Duration| {
            for f in frames {
                filtered.push(f.clone());
                timed(busy, || pool.install(|| fusion.push(f)));
            }
        };
        for frame in frame_rx {
            frame_gauge.leave();
            let out = timed(&mut busy, || pool.install(|| consistency.push(frame)));
            accept(out, &mut busy);
        }
        let rest = timed(&mut busy, || pool.install(|| consistency.finish()));
        accept(rest, &mut busy);
        (
            ingest.join().expect("ingest thread"),
            depth.join().expect("depth thread"),
            (filtered, busy),
        )
    });
    let (view_filter, ingest_busy) = ingest?;
    let (depth_job_seconds, depth_busy) = depth?;
    let t = Instant::now();
    let cloud = pool.install(|| fusion.finish());
    let completeness = pool.install(|| completeness(&cloud.positions(), &dataset.poses));
    let fusion_busy = fusion_busy + t.elapsed();

    let depth_maps = filtered
        .iter()
        .map(|f| DepthEntry {
            id: f.id,
            mean_cost: f.stats.mean_cost,
            raw_valid: f.stats.raw_valid,
            median_valid: f.stats.valid,
            consistent_valid: f.depth.valid_count(),
            warp_filled: f.stats.warp.map(|w| w.filled),
        })
        .collect();
    let accepted = view_filter.iter().filter(|e| e.accepted).count();
    let metrics = Metrics {
        keyframes: dataset.len(),
        accepted,
        acceptance_rate: if dataset.is_empty() {
            0.0
        } else {
            accepted as f64 / dataset.len() as f64
        },
        depth_jobs: depth_job_seconds.len(),
        points: cloud.len(),
        processing_resolution: [processing.width(), processing.height()],
        view_filter,
        depth_maps,
        mean_completeness: completeness.mean(),
        completeness,
        runtime: Runtime {
            workers: pool.current_num_threads(),
            wall_seconds: wall.elapsed().as_secs_f64(),
            stage_seconds: StageSeconds {
                ingest: ingest_busy.as_secs_f64(),
                depth: depth_busy.as_secs_f64(),
                fusion: fusion_busy.as_secs_f64(),
            },
            depth_job_seconds,
            job_queue: job_gauge.metrics(),
            depth_queue: frame_gauge.metrics(),
        },
    };
    Ok(RunOutput {
        cloud,
        depth: filtered,
        metrics,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunInfo {
    pub seed: u64,
    pub manifest_sha256: String,
    pub dataset: PathBuf,
    pub version: &'static str,
}

pub const CLOUD_FILE: &str = "cloud.ply";
pub const METRICS_FILE: &str = "metrics.json";
pub const CONFIG_FILE: &str = "effective_config.toml";
pub const RUN_INFO_FILE: &str = "run_info.json";
pub const DEPTH_DIR: &str = "depth";

pub fn depth_stem(id: u64) -> String {
    format!("{id:06}")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes the cloud, metrics, effective config, run info and, when
/// configured, the depth maps into `out`.
pub fn write_outputs(
    out: &Path,
    dataset: &Dataset,
    config: &EngineConfig,
    output: &RunOutput,
) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_text(&out.join(CONFIG_FILE), &config.to_toml_string())?;
    let info = RunInfo {
        seed: config.patchmatch.seed,
        manifest_sha256: dataset.manifest_sha256.clone(),
        dataset: dataset.root.clone(),
        version: env!("CARGO_PKG_VERSION"),
    };
    write_text(
        &out.join(RUN_INFO_FILE),
        &serde_json::to_string_pretty(&info).expect("serializes"),
    )?;
    write_ply(&out.join(CLOUD_FILE), &output.cloud)?;
    if config.output.save_depth {
        let dir = out.join(DEPTH_DIR);
        for f in &output.depth {
            write_depth(&dir, &depth_stem(f.id), f.id, &f.depth)?;
        }
    }
    write_text(
        &out.join(METRICS_FILE),
        &serde_json::to_string_pretty(&output.metrics).expect("serializes"),
    )
}
