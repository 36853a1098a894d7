use alloc::vec;
use alloc::vec::Vec;
use core::f32::consts::TAU;

use nalgebra::Vector3;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use super::rng::{pixel_rng, INIT_PASS};
use super::DepthRange;
use crate::fastmath::{normalize3, SphereGrid};
use crate::geometry::{EquirectCamera, PlaneHypothesis};
use crate::par::map_range;

/// Random normals stay within this many degrees of facing the camera head-on.
const MAX_INIT_TILT_DEG: f32 = 75.0;

/// One plane hypothesis and its matching cost per pixel.
///
/// Pixels may be flagged invalid (for example after warping). A cost of
/// `f32::INFINITY` means the plane has not been evaluated yet.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneMap {
    camera: EquirectCamera,
    planes: Vec<PlaneHypothesis>,
    costs: Vec<f32>,
    valid: Vec<bool>,
}

impl PlaneMap {
    /// All pixels invalid.
    pub fn invalid(camera: EquirectCamera) -> Self {
        let n = camera.pixel_count();
        PlaneMap {
            camera,
            planes: vec![PlaneHypothesis::new(0.0, Vector3::new(0.0, 0.0, -1.0)); n],
            costs: vec![f32::INFINITY; n],
            valid: vec![false; n],
        }
    }

    pub fn camera(&self) -> &EquirectCamera {
        &self.camera
    }

    pub fn len(&self) -> usize {
        self.planes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.planes.is_empty()
    }

    pub fn index(&self, x: u32, y: u32) -> usize {
        y as usize * self.camera.width() as usize + x as usize
    }

    pub fn get(&self, x: u32, y: u32) -> Option<(PlaneHypothesis, f32)> {
        self.get_index(self.index(x, y))
    }

    pub fn get_index(&self, i: usize) -> Option<(PlaneHypothesis, f32)> {
        self.valid[i].then(|| (self.planes[i], self.costs[i]))
    }

    pub fn set(&mut self, x: u32, y: u32, plane: PlaneHypothesis, cost: f32) {
        let i = self.index(x, y);
        self.set_index(i, plane, cost);
    }

    pub fn set_index(&mut self, i: usize, plane: PlaneHypothesis, cost: f32) {
        self.planes[i] = plane;
        self.costs[i] = cost;
        self.valid[i] = true;
    }

    pub fn invalidate(&mut self, x: u32, y: u32) {
        let i = self.index(x, y);
        self.valid[i] = false;
        self.costs[i] = f32::INFINITY;
    }

    pub fn is_valid(&self, x: u32, y: u32) -> bool {
        self.valid[self.index(x, y)]
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    pub fn planes(&self) -> &[PlaneHypothesis] {
        &self.planes
    }

    pub fn costs(&self) -> &[f32] {
        &self.costs
    }

    /// Mean cost over valid pixels.
    pub fn mean_cost(&self) -> f64 {
        let (sum, n) = self
            .costs
            .iter()
            .zip(&self.valid)
            .filter(|(_, v)| **v)
            .fold((0.0f64, 0usize), |(s, n), (c, _)| (s + *c as f64, n + 1));
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }

    /// Replaces every invalid pixel with a random hypothesis.
    pub fn fill_invalid(&mut self, range: &DepthRange, seed: u64) {
        if self.valid.iter().all(|v| *v) {
            return;
        }
        let grid = SphereGrid::new(&self.camera);
        let w = self.camera.width();
        let fresh = map_range(self.len(), |i| {
            if self.valid[i] {
                None
            } else {
                let (x, y) = ((i % w as usize) as u32, (i / w as usize) as u32);
                Some(random_plane(&grid, x, y, range, seed))
            }
        });
        for (i, plane) in fresh.into_iter().enumerate() {
            if let Some(plane) = plane {
                self.set_index(i, plane, f32::INFINITY);
            }
        }
    }

    /// Rolls every row right by `shift` columns, rotating the camera-frame
    /// normals with it. Exact for quarter turns.
    pub fn roll_quarter_turns(&self, quarters: i32) -> PlaneMap {
        let w = self.camera.width() as i64;
        assert!(w % 4 == 0, "quarter-turn roll needs a width divisible by 4");
        let shift = quarters as i64 * (w / 4);
        let turns = quarters.rem_euclid(4);
        let mut out = PlaneMap::invalid(self.camera);
        for y in 0..self.camera.height() {
            for x in 0..self.camera.width() {
                let i = self.index(x, y);
                let nx = (x as i64 + shift).rem_euclid(w) as u32;
                let j = out.index(nx, y);
                let mut n = self.planes[i].normal;
                for _ in 0..turns {
                    n = Vector3::new(n.z, n.y, -n.x);
                }
                out.planes[j] = PlaneHypothesis::new(self.planes[i].depth, n);
                out.costs[j] = self.costs[i];
                out.valid[j] = self.valid[i];
            }
        }
        out
    }
}

/// Fresh plane map with a random front-facing plane at every pixel. Depths
/// are uniform in inverse depth; the result depends only on `seed`.
pub fn random_init(camera: EquirectCamera, range: &DepthRange, seed: u64) -> PlaneMap {
    let mut map = PlaneMap::invalid(camera);
    map.fill_invalid(range, seed);
    map
}

fn random_plane(grid: &SphereGrid, x: u32, y: u32, range: &DepthRange, seed: u64) -> PlaneHypothesis {
    let mut rng = pixel_rng(seed, INIT_PASS, x, y, grid.quarter());
    let ray = grid.ray(x, y);
    let (east, north) = grid.tangents(x, y);
    let depth = sample_inverse_depth(&mut rng, range);
    let min_cos = Float::cos(MAX_INIT_TILT_DEG.to_radians());
    let cos_t = min_cos + (1.0 - min_cos) * rng.random::<f32>();
    let sin_t = Float::sqrt(1.0 - cos_t * cos_t);
    let (sp, cp) = Float::sin_cos(TAU * rng.random::<f32>());
    let n = Vector3::new(
        -(cos_t * ray.x + sin_t * (cp * east.x + sp * north.x)),
        -(cos_t * ray.y + sin_t * (cp * east.y + sp * north.y)),
        -(cos_t * ray.z + sin_t * (cp * east.z + sp * north.z)),
    );
    PlaneHypothesis::new(depth, normalize3(&n))
}

pub(crate) fn sample_inverse_depth<R: Rng>(rng: &mut R, range: &DepthRange) -> f32 {
    let (lo, hi) = (1.0 / range.max(), 1.0 / range.min());
    let inv = lo + (hi - lo) * rng.random::<f32>();
    range.clamp(1.0 / inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fastmath::dot3;

    fn cam() -> EquirectCamera {
        EquirectCamera::new(64, 32).unwrap()
    }

    #[test]
    fn deterministic_for_seed() {
        let r = DepthRange::new(0.5, 20.0).unwrap();
        assert_eq!(random_init(cam(), &r, 42), random_init(cam(), &r, 42));
        assert_ne!(random_init(cam(), &r, 42), random_init(cam(), &r, 43));
    }

    #[test]
    fn samples_satisfy_constraints() {
        let r = DepthRange::new(0.5, 20.0).unwrap();
        let map = random_init(cam(), &r, 7);
        let grid = SphereGrid::new(&cam());
        for y in 0..32 {
            for x in 0..64 {
                let (h, _) = map.get(x, y).unwrap();
                assert!(r.contains(h.depth));
                assert!((h.normal.norm() - 1.0).abs() < 1e-6);
                assert!(dot3(&h.normal, grid.ray(x, y)) < 0.0);
            }
        }
    }

    #[test]
    fn fill_only_touches_invalid() {
        let r = DepthRange::new(0.5, 20.0).unwrap();
        let mut map = PlaneMap::invalid(cam());
        let keep = PlaneHypothesis::new(3.0, Vector3::new(0.0, 0.0, -1.0));
        map.set(31, 16, keep, 0.25);
        map.fill_invalid(&r, 1);
        assert_eq!(map.get(31, 16), Some((keep, 0.25)));
        assert_eq!(map.valid_count(), map.len());
    }
}
