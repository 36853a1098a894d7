use alloc::vec;
use alloc::vec::Vec;

use nalgebra::Vector3;

use crate::geometry::{EquirectCamera, RigidPose};

/// Per-pixel depth in meters along each pixel's viewing ray; `None` marks
/// pixels without a depth.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthPanorama {
    camera: EquirectCamera,
    depth: Vec<Option<f32>>,
}

impl DepthPanorama {
    pub fn empty(camera: EquirectCamera) -> Self {
        DepthPanorama {
            camera,
            depth: vec![None; camera.pixel_count()],
        }
    }

    pub fn from_values(camera: EquirectCamera, depth: Vec<Option<f32>>) -> Option<Self> {
        (depth.len() == camera.pixel_count()).then_some(DepthPanorama { camera, depth })
    }

    /// Every pixel valid with the given depth.
    pub fn constant(camera: EquirectCamera, value: f32) -> Self {
        DepthPanorama {
            camera,
            depth: vec![Some(value); camera.pixel_count()],
        }
    }

    pub fn camera(&self) -> &EquirectCamera {
        &self.camera
    }

    pub fn width(&self) -> u32 {
        self.camera.width()
    }

    pub fn height(&self) -> u32 {
        self.camera.height()
    }

    pub fn values(&self) -> &[Option<f32>] {
        &self.depth
    }

    pub fn get(&self, x: u32, y: u32) -> Option<f32> {
        self.depth[self.index(x, y)]
    }

    pub fn set(&mut self, x: u32, y: u32, value: Option<f32>) {
        let i = self.index(x, y);
        self.depth[i] = value;
    }

    pub fn invalidate(&mut self, x: u32, y: u32) {
        self.set(x, y, None);
    }

    pub fn valid_count(&self) -> usize {
        self.depth.iter().filter(|d| d.is_some()).count()
    }

    /// Fraction of pixels holding a depth.
    pub fn fill_ratio(&self) -> f64 {
        self.valid_count() as f64 / self.depth.len() as f64
    }

    /// Smallest and largest valid depth.
    pub fn range(&self) -> Option<(f32, f32)> {
        self.depth.iter().flatten().fold(None, |acc, &d| match acc {
            None => Some((d, d)),
            Some((lo, hi)) => Some((lo.min(d), hi.max(d))),
        })
    }

    /// True when every valid pixel here is also valid in `other`.
    pub fn mask_subset_of(&self, other: &DepthPanorama) -> bool {
        self.depth
            .iter()
            .zip(&other.depth)
            .all(|(a, b)| a.is_none() || b.is_some())
    }

    /// Camera-frame 3D point of a valid pixel.
    pub fn point_camera(&self, x: u32, y: u32) -> Option<Vector3<f64>> {
        self.get(x, y)
            .map(|d| self.camera.pixel_center_ray(x, y) * d as f64)
    }

    /// World-frame 3D point of a valid pixel seen from `pose`.
    pub fn point_world(&self, pose: &RigidPose, x: u32, y: u32) -> Option<Vector3<f64>> {
        self.point_camera(x, y).map(|p| pose.to_world(&p))
    }

    /// Rolls every row right by `shift` columns.
    pub fn roll_columns(&self, shift: i64) -> DepthPanorama {
        let w = self.width() as i64;
        let mut out = DepthPanorama::empty(self.camera);
        for y in 0..self.height() {
            for x in 0..self.width() {
                let nx = (x as i64 + shift).rem_euclid(w) as u32;
                out.set(nx, y, self.get(x, y));
            }
        }
        out
    }

    fn index(&self, x: u32, y: u32) -> usize {
        y as usize * self.camera.width() as usize + x as usize
    }
}
