use alloc::vec;

use nalgebra::{Matrix3, Vector3};

use super::{DepthRange, PlaneMap};
use crate::fastmath::{dot3, normalize3, SphereGrid};
use crate::geometry::{EquirectCamera, PlaneHypothesis, RigidPose};

/// What happened to the source planes during a warp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WarpStats {
    /// valid source pixels
    pub source: usize,
    /// target pixels that received a plane
    pub filled: usize,
    /// source planes dropped: behind the target camera, facing away from it
    /// or outside the depth range
    pub dropped: usize,
    /// source planes that lost a target pixel to a cheaper one
    pub conflicts: usize,
}

impl WarpStats {
    pub fn fill_ratio(&self, pixels: usize) -> f64 {
        if pixels == 0 {
            0.0
        } else {
            self.filled as f64 / pixels as f64
        }
    }
}

/// Transfers the planes of `previous` (optimized at `pose_prev`) into the
/// frame of a camera at `pose_cur`.
///
/// Each valid plane is lifted to its 3D point and normal, moved into the new
/// camera frame and stored at the pixel nearest to the point's projection,
/// with its depth re-intersected along that pixel's own ray. When several
/// planes land on one pixel the one with the lower source cost wins (ties go
/// to the earlier source pixel). Pixels nobody lands on stay invalid; all
/// warped costs are reset to unevaluated.
pub fn warp_plane_map(
    previous: &PlaneMap,
    pose_prev: &RigidPose,
    pose_cur: &RigidPose,
    camera: EquirectCamera,
    range: &DepthRange,
) -> (PlaneMap, WarpStats) {
    let mut out = PlaneMap::invalid(camera);
    let mut stats = WarpStats::default();
    let rel = RigidPose::relative(pose_prev, pose_cur);
    let r: Matrix3<f32> = rel.rotation().map(|v| v as f32);
    let t: Vector3<f32> = rel.translation().map(|v| v as f32);
    let rows = [r.row(0).transpose(), r.row(1).transpose(), r.row(2).transpose()];
    let apply = |v: &Vector3<f32>| Vector3::new(dot3(&rows[0], v), dot3(&rows[1], v), dot3(&rows[2], v));
    let src_grid = SphereGrid::new(previous.camera());
    let dst_grid = if previous.camera() == &camera {
        None
    } else {
        Some(SphereGrid::new(&camera))
    };
    let grid = dst_grid.as_ref().unwrap_or(&src_grid);
    let (w, h) = (camera.width() as i32, camera.height() as i32);
    let mut winner = vec![f32::INFINITY; camera.pixel_count()];
    for i in 0..previous.len() {
        let Some((plane, cost)) = previous.get_index(i) else {
            continue;
        };
        stats.source += 1;
        let ray = src_grid.ray_at(i);
        let p = apply(&(ray * plane.depth)) + t;
        let n = normalize3(&apply(&plane.normal));
        let fp = grid.project(&p);
        let x = (fp.col + (fp.fx >= 0.5) as i32).rem_euclid(w);
        let y = (fp.row + (fp.fy >= 0.5) as i32).clamp(0, h - 1);
        let q = grid.ray(x as u32, y as u32);
        let facing = dot3(&n, q);
        let offset = dot3(&n, &p);
        if !(facing < 0.0 && offset < 0.0) {
            stats.dropped += 1;
            continue;
        }
        let depth = offset / facing;
        if !range.contains(depth) {
            stats.dropped += 1;
            continue;
        }
        let j = y as usize * w as usize + x as usize;
        // a NaN source cost never wins
        let cost = if cost.is_nan() { f32::INFINITY } else { cost };
        if out.get_index(j).is_some() {
            stats.conflicts += 1;
            if !(cost < winner[j]) {
                continue;
            }
        } else {
            stats.filled += 1;
        }
        winner[j] = cost;
        out.set_index(j, PlaneHypothesis::new(depth, n), f32::INFINITY);
    }
    (out, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patchmatch::random_init;

    fn setup() -> (EquirectCamera, DepthRange) {
        (
            EquirectCamera::new(64, 32).unwrap(),
            DepthRange::new(0.5, 20.0).unwrap(),
        )
    }

    #[test]
    fn identity_warp_keeps_planes() {
        let (cam, range) = setup();
        let src = random_init(cam, &range, 5);
        let pose = RigidPose::from_translation(Vector3::new(0.3, -0.1, 2.0));
        let (out, stats) = warp_plane_map(&src, &pose, &pose, cam, &range);
        assert_eq!(stats.dropped, 0);
        let mut same = 0;
        for i in 0..src.len() {
            if let (Some((a, _)), Some((b, c))) = (src.get_index(i), out.get_index(i)) {
                assert_eq!(c, f32::INFINITY);
                if (a.depth - b.depth).abs() <= 1e-4 * a.depth
                    && (a.normal - b.normal).norm() < 1e-5
                {
                    same += 1;
                }
            }
        }
        assert_eq!(same, src.len());
    }

    #[test]
    fn empty_source_stays_empty() {
        let (cam, range) = setup();
        let src = PlaneMap::invalid(cam);
        let pose = RigidPose::identity();
        let moved = RigidPose::from_translation(Vector3::new(0.0, 0.0, 0.3));
        let (out, stats) = warp_plane_map(&src, &pose, &moved, cam, &range);
        assert_eq!(out.valid_count(), 0);
        assert_eq!(stats, WarpStats::default());
    }
}
