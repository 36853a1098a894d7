use alloc::format;
use alloc::sync::Arc;

use super::gate::DepthJob;
use super::{DepthFrame, DepthStats, Keyframe, PipelineError};
use crate::error::ConfigError;
use crate::geometry::{EquirectCamera, RigidPose};
use crate::patchmatch::{
    median_outlier_filter, run_patchmatch, warp_plane_map, PatchMatchParams, PlaneMap, StereoGroup,
    StereoView,
};
use crate::raster::RgbImage;

/// Median outlier removal applied to every raw depth map.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MedianConfig {
    /// odd, pixels
    pub window: u32,
    /// relative deviation from the median above which a depth is dropped
    pub rel_threshold: f32,
}

impl Default for MedianConfig {
    fn default() -> Self {
        MedianConfig {
            window: 5,
            rel_threshold: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthStageConfig {
    pub params: PatchMatchParams,
    /// initialize from the previous reference's optimized planes
    pub warp: bool,
    pub median: Option<MedianConfig>,
}

impl DepthStageConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params.validate()?;
        if let Some(m) = &self.median {
            if m.window < 3 || m.window % 2 == 0 {
                return Err(ConfigError::new(
                    "patchmatch.median_window",
                    format!("must be odd and >= 3, got {}", m.window),
                ));
            }
            if !(m.rel_threshold > 0.0) {
                return Err(ConfigError::new("patchmatch.median_threshold", "must be > 0"));
            }
        }
        Ok(())
    }
}

/// Per-keyframe seed derived from the run seed, so that consecutive jobs do
/// not share random initializations.
pub fn job_seed(seed: u64, id: u64) -> u64 {
    let mut z = seed ^ id.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Depth computation: one PatchMatch run per job at the processing
/// resolution, optionally warm-started from the previous job.
#[derive(Debug, Clone)]
pub struct DepthStage {
    camera: EquirectCamera,
    config: DepthStageConfig,
    previous: Option<(PlaneMap, RigidPose)>,
}

impl DepthStage {
    pub fn new(camera: EquirectCamera, config: DepthStageConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        Ok(DepthStage {
            camera,
            config,
            previous: None,
        })
    }

    pub fn camera(&self) -> &EquirectCamera {
        &self.camera
    }

    fn color(&self, kf: &Keyframe) -> RgbImage {
        let (w, h) = (self.camera.width(), self.camera.height());
        if (kf.image.width(), kf.image.height()) == (w, h) {
            kf.image.clone()
        } else {
            kf.image.resize(w, h)
        }
    }

    pub fn compute(&mut self, job: &DepthJob) -> Result<DepthFrame, PipelineError> {
        let reference = &job.reference;
        let colors = self.color(reference);
        let view = |kf: &Keyframe, rgb: Option<&RgbImage>| StereoView {
            image: match rgb {
                Some(c) => c.to_gray(),
                None => self.color(kf).to_gray(),
            },
            pose: kf.pose,
        };
        let group = StereoGroup::new(
            self.camera,
            view(reference, Some(&colors)),
            [view(&job.neighbors[0], None), view(&job.neighbors[1], None)],
        )?;
        let mut params = self.config.params;
        params.seed = job_seed(params.seed, reference.id);
        let (init, warp) = match (&self.previous, self.config.warp) {
            (Some((map, pose)), true) => {
                let (m, s) = warp_plane_map(map, pose, &reference.pose, self.camera, &params.depth);
                (m, Some(s))
            }
            _ => (PlaneMap::invalid(self.camera), None),
        };
        let (map, raw) = run_patchmatch(&group, init, &params)?;
        let depth = match &self.config.median {
            Some(m) => median_outlier_filter(&raw, m.window, m.rel_threshold)?,
            None => raw.clone(),
        };
        let stats = DepthStats {
            warp,
            mean_cost: map.mean_cost(),
            raw_valid: raw.valid_count(),
            valid: depth.valid_count(),
        };
        if self.config.warp {
            self.previous = Some((map, reference.pose));
        }
        Ok(DepthFrame {
            id: reference.id,
            pose: reference.pose,
            depth,
            colors: Arc::new(colors),
            stats,
        })
    }
}
