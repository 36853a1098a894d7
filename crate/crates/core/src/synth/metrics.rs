use alloc::vec::Vec;

use nalgebra::Vector3;
#[allow(unused_imports)]
use num_traits::Float;

use crate::depth::DepthPanorama;
use crate::geometry::{EquirectCamera, RigidPose};
use crate::par::map_range;

/// Width of the completeness raster.
pub const COMPLETENESS_WIDTH: u32 = 720;
/// Height of the completeness raster.
pub const COMPLETENESS_HEIGHT: u32 = 360;

/// Relative depth error below which a pixel counts as an inlier.
pub const INLIER_REL_ERROR: f64 = 0.02;

pub fn completeness_camera() -> EquirectCamera {
    EquirectCamera::new(COMPLETENESS_WIDTH, COMPLETENESS_HEIGHT).expect("2:1")
}

/// Z-buffered depth raster of a point cloud seen from `pose`: each pixel
/// keeps the nearest point projecting into it.
pub fn point_depth_raster(
    points: &[Vector3<f64>],
    pose: &RigidPose,
    camera: &EquirectCamera,
) -> DepthPanorama {
    let mut out = DepthPanorama::empty(*camera);
    for p in points {
        let local = pose.to_camera(p);
        let Ok(pixel) = camera.ray_to_pixel(&local) else {
            continue;
        };
        let Some((x, y)) = camera.nearest_pixel(&pixel) else {
            continue;
        };
        let d = local.norm() as f32;
        if out.get(x, y).is_none_or(|old| d < old) {
            out.set(x, y, Some(d));
        }
    }
    out
}

/// Fraction of raster pixels covered by the cloud, per keyframe pose.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CompletenessReport {
    pub width: u32,
    pub height: u32,
    pub per_keyframe: Vec<f64>,
    pub total_points: usize,
}

impl CompletenessReport {
    pub fn mean(&self) -> f64 {
        if self.per_keyframe.is_empty() {
            0.0
        } else {
            self.per_keyframe.iter().sum::<f64>() / self.per_keyframe.len() as f64
        }
    }
}

/// Projects the whole cloud into a 720x360 panorama at every pose and
/// reports the covered fraction of pixels.
pub fn completeness(points: &[Vector3<f64>], poses: &[RigidPose]) -> CompletenessReport {
    completeness_at(points, poses, &completeness_camera())
}

/// [`completeness`] on an arbitrary raster.
pub fn completeness_at(
    points: &[Vector3<f64>],
    poses: &[RigidPose],
    camera: &EquirectCamera,
) -> CompletenessReport {
    let per_keyframe = map_range(poses.len(), |i| {
        point_depth_raster(points, &poses[i], camera).fill_ratio()
    });
    CompletenessReport {
        width: camera.width(),
        height: camera.height(),
        per_keyframe,
        total_points: points.len(),
    }
}

/// Depth error statistics over pixels valid in both prediction and truth.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AccuracyReport {
    /// jointly valid pixels; the statistics are undefined (and zero) when 0
    pub count: usize,
    pub mean_abs_rel: f64,
    pub rmse: f64,
    pub inlier_fraction: f64,
}

impl AccuracyReport {
    pub fn is_defined(&self) -> bool {
        self.count > 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("prediction is {got:?}, ground truth is {expected:?}")]
pub struct ResolutionMismatch {
    pub got: (u32, u32),
    pub expected: (u32, u32),
}

pub fn accuracy(
    prediction: &DepthPanorama,
    truth: &DepthPanorama,
) -> Result<AccuracyReport, ResolutionMismatch> {
    let (pc, tc) = (prediction.camera(), truth.camera());
    if pc != tc {
        return Err(ResolutionMismatch {
            got: (pc.width(), pc.height()),
            expected: (tc.width(), tc.height()),
        });
    }
    let (mut n, mut rel, mut sq, mut inliers) = (0usize, 0.0f64, 0.0f64, 0usize);
    for (p, t) in prediction.values().iter().zip(truth.values()) {
        if let (Some(p), Some(t)) = (p, t) {
            let (p, t) = (*p as f64, *t as f64);
            let e = (p - t).abs() / t;
            n += 1;
            rel += e;
            sq += (p - t) * (p - t);
            if e <= INLIER_REL_ERROR {
                inliers += 1;
            }
        }
    }
    if n == 0 {
        return Ok(AccuracyReport {
            count: 0,
            mean_abs_rel: 0.0,
            rmse: 0.0,
            inlier_fraction: 0.0,
        });
    }
    Ok(AccuracyReport {
        count: n,
        mean_abs_rel: rel / n as f64,
        rmse: Float::sqrt(sq / n as f64),
        inlier_fraction: inliers as f64 / n as f64,
    })
}
