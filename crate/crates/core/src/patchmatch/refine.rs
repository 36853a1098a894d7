use nalgebra::Vector3;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use super::DepthRange;
use crate::error::ConfigError;
use crate::fastmath::{dot3, normalize3};
use crate::geometry::PlaneHypothesis;

/// Random hypothesis tests per refinement call.
pub const REFINEMENT_TESTS: u32 = 6;

/// Perturbed normals must face the camera at least this much (cosine).
const MIN_FACING: f32 = 0.05;

/// Search radii of the first refinement test; each following test halves
/// both.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineSchedule {
    /// meters, depth moves within `+-depth_step`
    pub depth_step: f32,
    /// degrees, normal tilts by at most this angle
    pub normal_radius_deg: f32,
}

impl RefineSchedule {
    /// A quarter of the depth range and 60 degrees.
    pub fn for_range(range: &DepthRange) -> Self {
        RefineSchedule {
            depth_step: (range.max() - range.min()) / 4.0,
            normal_radius_deg: 60.0,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.depth_step > 0.0 && self.depth_step.is_finite()) {
            return Err(ConfigError::new(
                "patchmatch.depth_perturbation",
                "must be > 0",
            ));
        }
        if !(self.normal_radius_deg > 0.0 && self.normal_radius_deg <= 90.0) {
            return Err(ConfigError::new(
                "patchmatch.normal_perturbation_deg",
                "must be in (0, 90]",
            ));
        }
        Ok(())
    }
}

/// Tests [`REFINEMENT_TESTS`] random perturbations of `current`, each with
/// half the search radius of the previous, and keeps any that lowers the
/// cost.
///
/// `frame` is the pixel's `(ray, east, north)` basis; perturbations are drawn
/// in it. `cost(plane, bound)` returns the cost of `plane`, or any value
/// `>= bound` when it can tell early that `plane` will not win.
#[allow(clippy::too_many_arguments)]
pub fn random_refinement<R, C>(
    current: PlaneHypothesis,
    current_cost: f32,
    frame: (&Vector3<f32>, &Vector3<f32>, &Vector3<f32>),
    schedule: &RefineSchedule,
    range: &DepthRange,
    rng: &mut R,
    mut cost: C,
) -> (PlaneHypothesis, f32)
where
    R: Rng,
    C: FnMut(&PlaneHypothesis, f32) -> f32,
{
    let (ray, east, north) = frame;
    let (mut best, mut best_cost) = (current, current_cost);
    let mut depth_step = schedule.depth_step;
    let mut tilt = Float::sin(schedule.normal_radius_deg.to_radians());
    for _ in 0..REFINEMENT_TESTS {
        let u: f32 = rng.random();
        let depth = range.clamp(best.depth + (2.0 * u - 1.0) * depth_step);
        // uniform in the cube inscribed in the unit ball
        let s = tilt * (1.0 / Float::sqrt(3.0f32));
        let a = s * (2.0 * rng.random::<f32>() - 1.0);
        let b = s * (2.0 * rng.random::<f32>() - 1.0);
        let c = s * (2.0 * rng.random::<f32>() - 1.0);
        let n = &best.normal;
        let moved = normalize3(&Vector3::new(
            n.x + (a * east.x + b * north.x + c * ray.x),
            n.y + (a * east.y + b * north.y + c * ray.y),
            n.z + (a * east.z + b * north.z + c * ray.z),
        ));
        let normal = if dot3(&moved, ray) < -MIN_FACING {
            moved
        } else {
            best.normal
        };
        let candidate = PlaneHypothesis::new(depth, normal);
        let c = cost(&candidate, best_cost);
        if c < best_cost {
            best = candidate;
            best_cost = c;
        }
        depth_step *= 0.5;
        tilt *= 0.5;
    }
    (best, best_cost)
}
