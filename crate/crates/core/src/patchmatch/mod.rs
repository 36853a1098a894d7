//! Equirectangular PatchMatch stereo for one reference keyframe against two
//! neighbors.
//!
//! A [`PlaneMap`] holds one plane per reference pixel. Costs are truncated
//! `1 - NCC` of a square reference patch against its plane-induced footprint
//! in each neighbor, averaged over the two neighbors. Optimization alternates
//! checkerboard passes: red pixels read only black neighbors and vice versa,
//! so every pass is data-parallel and independent of scheduling.

mod cost;
mod median;
mod plane_map;
mod propagate;
mod refine;
mod rng;
mod warp;

use alloc::format;

pub use cost::{patch_cost, GroupMatcher};
pub use median::median_outlier_filter;
pub use plane_map::{random_init, PlaneMap};
pub use propagate::{red_black_iteration, Parity, NEIGHBOR_OFFSETS};
pub use refine::{random_refinement, RefineSchedule, REFINEMENT_TESTS};
pub use warp::{warp_plane_map, WarpStats};

use crate::depth::DepthPanorama;
use crate::error::ConfigError;
use crate::geometry::{EquirectCamera, RigidPose};
use crate::raster::GrayImage;

#[derive(Debug, thiserror::Error)]
pub enum PatchMatchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("stereo group images must all be {width}x{height}, got {got_w}x{got_h}")]
    SizeMismatch {
        width: u32,
        height: u32,
        got_w: u32,
        got_h: u32,
    },
    #[error("neighbor {0} has no baseline to the reference")]
    ZeroBaseline(usize),
    #[error("plane map does not match the stereo group resolution")]
    PlaneMapMismatch,
}

/// Closed depth interval in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthRange {
    min: f32,
    max: f32,
}

impl DepthRange {
    pub fn new(min: f32, max: f32) -> Result<Self, ConfigError> {
        if !(min > 0.0 && min.is_finite()) {
            return Err(ConfigError::new("patchmatch.depth_min", "must be > 0"));
        }
        if !(max > min && max.is_finite()) {
            return Err(ConfigError::new(
                "patchmatch.depth_max",
                format!("must be > depth_min ({min})"),
            ));
        }
        Ok(DepthRange { min, max })
    }

    pub fn min(&self) -> f32 {
        self.min
    }

    pub fn max(&self) -> f32 {
        self.max
    }

    pub fn contains(&self, d: f32) -> bool {
        d >= self.min && d <= self.max
    }

    pub fn clamp(&self, d: f32) -> f32 {
        d.clamp(self.min, self.max)
    }
}

/// Reference patch geometry: `(2 * half_window + 1)^2` pixels sampled every
/// `sample_stride` pixels (the center is always sampled).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PatchSpec {
    pub half_window: u32,
    pub sample_stride: u32,
    pub cost_truncation: f32,
}

impl Default for PatchSpec {
    fn default() -> Self {
        PatchSpec {
            half_window: 5,
            sample_stride: 2,
            cost_truncation: 1.2,
        }
    }
}

impl PatchSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.half_window < 1 {
            return Err(ConfigError::new("patchmatch.half_window", "must be >= 1"));
        }
        if self.sample_stride < 1 {
            return Err(ConfigError::new("patchmatch.sample_stride", "must be >= 1"));
        }
        if !(self.cost_truncation > 0.0 && self.cost_truncation <= 2.0) {
            return Err(ConfigError::new(
                "patchmatch.cost_truncation",
                "must be in (0, 2]",
            ));
        }
        Ok(())
    }

    /// Sample offsets in row-major order.
    pub fn offsets(&self) -> alloc::vec::Vec<(i32, i32)> {
        let h = self.half_window as i32;
        let s = self.sample_stride as i32;
        let steps: alloc::vec::Vec<i32> = (-(h / s)..=h / s).map(|k| k * s).collect();
        steps
            .iter()
            .flat_map(|&dy| steps.iter().map(move |&dx| (dx, dy)))
            .collect()
    }
}

/// Everything that controls one PatchMatch run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchMatchParams {
    pub patch: PatchSpec,
    pub iterations: u32,
    pub depth: DepthRange,
    pub refine: RefineSchedule,
    /// Pixels whose final cost exceeds this are left without depth.
    pub max_cost: f32,
    pub seed: u64,
}

impl PatchMatchParams {
    pub fn new(patch: PatchSpec, iterations: u32, depth: DepthRange, seed: u64) -> Self {
        PatchMatchParams {
            patch,
            iterations,
            depth,
            refine: RefineSchedule::for_range(&depth),
            max_cost: 0.5,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.patch.validate()?;
        if self.iterations < 1 {
            return Err(ConfigError::new("patchmatch.iterations", "must be >= 1"));
        }
        self.refine.validate()?;
        if !(self.max_cost > 0.0) {
            return Err(ConfigError::new("patchmatch.max_cost", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct StereoView {
    pub image: GrayImage,
    pub pose: RigidPose,
}

/// A reference view and exactly two neighbors sharing one camera.
#[derive(Debug, Clone)]
pub struct StereoGroup {
    camera: EquirectCamera,
    reference: StereoView,
    neighbors: [StereoView; 2],
}

impl StereoGroup {
    pub fn new(
        camera: EquirectCamera,
        reference: StereoView,
        neighbors: [StereoView; 2],
    ) -> Result<Self, PatchMatchError> {
        for view in core::iter::once(&reference).chain(neighbors.iter()) {
            let (w, h) = (view.image.width(), view.image.height());
            if w != camera.width() || h != camera.height() {
                return Err(PatchMatchError::SizeMismatch {
                    width: camera.width(),
                    height: camera.height(),
                    got_w: w,
                    got_h: h,
                });
            }
        }
        for (i, nb) in neighbors.iter().enumerate() {
            if (nb.pose.center() - reference.pose.center()).norm() < 1e-9 {
                return Err(PatchMatchError::ZeroBaseline(i));
            }
        }
        Ok(StereoGroup {
            camera,
            reference,
            neighbors,
        })
    }

    pub fn camera(&self) -> &EquirectCamera {
        &self.camera
    }

    pub fn reference(&self) -> &StereoView {
        &self.reference
    }

    pub fn neighbors(&self) -> &[StereoView; 2] {
        &self.neighbors
    }
}

/// Optimizes `init` (which must be fully valid or is completed by random
/// initialization) and extracts the depth of every pixel whose final cost is
/// at most `params.max_cost`.
pub fn run_patchmatch(
    group: &StereoGroup,
    init: PlaneMap,
    params: &PatchMatchParams,
) -> Result<(PlaneMap, DepthPanorama), PatchMatchError> {
    params.validate()?;
    if init.camera() != group.camera() {
        return Err(PatchMatchError::PlaneMapMismatch);
    }
    let matcher = GroupMatcher::new(group, &params.patch);
    let mut map = init;
    map.fill_invalid(&params.depth, params.seed);
    propagate::evaluate_all(&mut map, &matcher);
    let mut dirty = propagate::DirtySet::all(&map);
    for iteration in 0..params.iterations {
        for parity in [Parity::Red, Parity::Black] {
            map = propagate::sweep(&map, &matcher, params, parity, Some(iteration), &mut dirty);
        }
    }
    let depth = extract_depth(&map, params.max_cost);
    Ok((map, depth))
}

/// Depth of every valid plane with cost `<= max_cost`.
pub fn extract_depth(map: &PlaneMap, max_cost: f32) -> DepthPanorama {
    let values = (0..map.len())
        .map(|i| {
            let (h, c) = map.get_index(i)?;
            (c <= max_cost).then_some(h.depth)
        })
        .collect();
    DepthPanorama::from_values(*map.camera(), values).expect("sizes match")
}
