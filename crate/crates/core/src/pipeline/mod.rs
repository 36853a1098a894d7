//! Keyframes in, dense cloud out.
//!
//! The flow has three stages connected by FIFO queues:
//!
//! 1. [`KeyframeGate`]: ordering check, [`view_filter_accept`] against the
//!    newest accepted keyframe, and a sliding buffer that emits a
//!    [`DepthJob`] for every new triple of accepted keyframes.
//! 2. [`DepthStage`]: PatchMatch for the middle keyframe of each job,
//!    warm-started by warping the previous job's planes, then median outlier
//!    removal.
//! 3. [`ConsistencyStage`] and [`Fusion`]: multi-view consistency filtering
//!    over a window of depth maps, then buffered fusion with duplicate
//!    erasure.
//!
//! [`Pipeline`] chains the stages on the calling thread. The stages keep no
//! hidden state besides their buffers, so running them on separate threads
//! in the same order yields identical results.

mod consistency;
mod depth_stage;
mod fusion;
mod gate;
mod view_filter;

use alloc::sync::Arc;
use alloc::vec::Vec;

use nalgebra::Vector3;

pub use consistency::{consistency_filter, ConsistencyConfig, ConsistencyStage};
pub use depth_stage::{job_seed, DepthStage, DepthStageConfig, MedianConfig};
pub use fusion::{fuse_frame, CloudPoint, FusedCloud, Fusion, FusionConfig};
pub use gate::{DepthJob, GateOutcome, KeyframeGate};
pub use view_filter::{
    triangulation_angle_deg, view_filter_accept, Rejection, ViewFilterConfig, ViewFilterReport,
};

use crate::depth::DepthPanorama;
use crate::error::ConfigError;
use crate::geometry::{EquirectCamera, RigidPose};
use crate::patchmatch::{PatchMatchError, WarpStats};
use crate::raster::RgbImage;

#[derive(Debug, Clone, PartialEq)]
pub struct Keyframe {
    /// strictly increasing within a sequence
    pub id: u64,
    pub image: RgbImage,
    /// camera to world
    pub pose: RigidPose,
    /// world coordinates of the landmarks observed in this keyframe
    pub sparse_points: Vec<Vector3<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DepthStats {
    /// `None` when the job started from random planes
    #[cfg_attr(feature = "serde", serde(skip))]
    pub warp: Option<WarpStats>,
    pub mean_cost: f64,
    /// valid pixels straight out of PatchMatch
    pub raw_valid: usize,
    /// valid pixels after the median filter
    pub valid: usize,
}

/// A depth map of one reference keyframe at the processing resolution.
#[derive(Debug, Clone)]
pub struct DepthFrame {
    pub id: u64,
    pub pose: RigidPose,
    pub depth: DepthPanorama,
    /// reference colors at the processing resolution
    pub colors: Arc<RgbImage>,
    pub stats: DepthStats,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("keyframe id {got} does not follow {previous}")]
    OutOfOrder { previous: u64, got: u64 },
    #[error("keyframe {id} is {got:?}, the camera is {expected:?}")]
    ImageSize {
        id: u64,
        expected: (u32, u32),
        got: (u32, u32),
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    PatchMatch(#[from] PatchMatchError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub view_filter: ViewFilterConfig,
    pub depth: DepthStageConfig,
    pub consistency: ConsistencyConfig,
    pub fusion: FusionConfig,
}

/// Counters of a finished run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineSummary {
    pub submitted: usize,
    pub accepted: usize,
    pub depth_jobs: usize,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub cloud: FusedCloud,
    /// consistency-filtered depth maps in keyframe order
    pub depth: Vec<DepthFrame>,
    pub summary: PipelineSummary,
}

/// All stages on the calling thread.
#[derive(Debug, Clone)]
pub struct Pipeline {
    gate: KeyframeGate,
    depth: DepthStage,
    consistency: ConsistencyStage,
    fusion: Fusion,
    filtered: Vec<DepthFrame>,
    jobs: usize,
}

impl Pipeline {
    /// `input` is the keyframe camera, `processing` the depth map
    /// resolution.
    pub fn new(
        input: EquirectCamera,
        processing: EquirectCamera,
        config: &PipelineConfig,
    ) -> Result<Self, PipelineError> {
        Ok(Pipeline {
            gate: KeyframeGate::new(input, config.view_filter)?,
            depth: DepthStage::new(processing, config.depth)?,
            consistency: ConsistencyStage::new(config.consistency)?,
            fusion: Fusion::new(config.fusion)?,
            filtered: Vec::new(),
            jobs: 0,
        })
    }

    pub fn submit_keyframe(&mut self, keyframe: Keyframe) -> Result<GateOutcome, PipelineError> {
        let outcome = self.gate.submit(keyframe)?;
        if let Some(job) = &outcome.job {
            let frame = self.depth.compute(job)?;
            self.jobs += 1;
            for f in self.consistency.push(frame) {
                self.accept_filtered(f);
            }
        }
        Ok(outcome)
    }

    fn accept_filtered(&mut self, frame: DepthFrame) {
        self.filtered.push(frame.clone());
        self.fusion.push(frame);
    }

    pub fn finish(mut self) -> PipelineOutput {
        let consistency = core::mem::replace(
            &mut self.consistency,
            ConsistencyStage::new(ConsistencyConfig::default()).expect("defaults are valid"),
        );
        for f in consistency.finish() {
            self.accept_filtered(f);
        }
        PipelineOutput {
            cloud: self.fusion.finish(),
            depth: self.filtered,
            summary: PipelineSummary {
                submitted: self.gate.submitted(),
                accepted: self.gate.accepted(),
                depth_jobs: self.jobs,
            },
        }
    }
}
