use alloc::vec::Vec;

use nalgebra::Vector3;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SyntheticScene;
use crate::geometry::RigidPose;

/// Candidate landmarks cast per pose and requested landmark.
const POOL_FACTOR: usize = 6;

fn random_direction<R: Rng>(rng: &mut R) -> Vector3<f64> {
    let z = 2.0 * rng.random::<f64>() - 1.0;
    let phi = core::f64::consts::TAU * rng.random::<f64>();
    let r = Float::sqrt(1.0 - z * z);
    Vector3::new(r * Float::cos(phi), r * Float::sin(phi), z)
}

/// True when nothing blocks the line of sight from `from` to `point`.
pub fn is_visible(scene: &SyntheticScene, from: &Vector3<f64>, point: &Vector3<f64>) -> bool {
    let d = point - from;
    let dist = d.norm();
    if dist == 0.0 {
        return false;
    }
    scene
        .intersect(from, &(d / dist))
        .is_some_and(|hit| hit.t >= dist * (1.0 - 1e-9))
}

/// Emulates SLAM landmarks: a shared pool of surface points is cast from
/// all poses, and every pose observes the first `per_pose` visible points of
/// the pool. Because the order is shared, neighboring poses observe mostly
/// the same landmarks. A pose sees fewer than `per_pose` only if fewer are
/// visible.
pub fn sparse_landmarks(
    scene: &SyntheticScene,
    poses: &[RigidPose],
    per_pose: usize,
    seed: u64,
) -> Vec<Vec<Vector3<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_source = per_pose * POOL_FACTOR;
    let mut pool = Vec::with_capacity(per_source * poses.len());
    for pose in poses {
        let c = pose.center();
        for _ in 0..per_source {
            if let Some(hit) = scene.intersect(&c, &random_direction(&mut rng)) {
                pool.push(hit.point);
            }
        }
    }
    // interleave sources so every region is represented early in the pool
    let n = pool.len();
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    poses
        .iter()
        .map(|pose| {
            let c = pose.center();
            order
                .iter()
                .map(|&i| pool[i])
                .filter(|p| is_visible(scene, &c, p))
                .take(per_pose)
                .collect()
        })
        .collect()
}
