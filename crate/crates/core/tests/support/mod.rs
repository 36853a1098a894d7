//! Scenes and oracles shared by the integration tests and the acceptance
//! harness.
#![allow(dead_code)]

use densify_core::patchmatch::{DepthRange, GroupMatcher, PatchSpec, StereoGroup, StereoView};
use densify_core::synth::{render_scene, SyntheticScene, Texture};
use densify_core::{DepthPanorama, EquirectCamera, GrayImage, PlaneHypothesis, RigidPose};
use nalgebra::Vector3;

/// Two depth levels: the half-space `x < 0` is closed by a sphere of radius
/// `near`, the half-space `x >= 0` by a sphere of radius `far`, joined by an
/// annular wall in the plane `x = 0`.
#[derive(Debug, Clone, Copy)]
pub struct TwoLevelScene {
    pub near: f64,
    pub far: f64,
    pub texture: Texture,
}

impl TwoLevelScene {
    pub fn new(seed: u64) -> Self {
        TwoLevelScene {
            near: 2.0,
            far: 4.0,
            texture: Texture::ValueNoise {
                scale: 1.5,
                octaves: 3,
                seed,
            },
        }
    }

    /// Exit distance of a ray starting inside the near sphere.
    pub fn hit(&self, o: &Vector3<f64>, d: &Vector3<f64>) -> f64 {
        let sphere = |r: f64| {
            let b = o.dot(d);
            let c = o.norm_squared() - r * r;
            -b + (b * b - c).sqrt()
        };
        let mut best = f64::INFINITY;
        let t = sphere(self.near);
        if (o + d * t).x < 0.0 {
            best = best.min(t);
        }
        let t = sphere(self.far);
        if (o + d * t).x >= 0.0 {
            best = best.min(t);
        }
        if d.x != 0.0 {
            let t = -o.x / d.x;
            let r = (o + d * t).norm();
            if t > 0.0 && r >= self.near && r <= self.far {
                best = best.min(t);
            }
        }
        best
    }

    /// Intensity image (0..255) with `ss x ss` supersampling and the exact
    /// depth at pixel centers.
    pub fn render(&self, camera: &EquirectCamera, pose: &RigidPose, ss: u32) -> (GrayImage, DepthPanorama) {
        let (w, h) = (camera.width(), camera.height());
        let mut img = GrayImage::new(w, h);
        let mut depth = DepthPanorama::empty(*camera);
        let o = pose.center();
        let dir = |x: f64, y: f64| {
            let (sl, cl) = camera.longitude(x).sin_cos();
            let (sp, cp) = camera.latitude(y).sin_cos();
            pose.rotation() * Vector3::new(cp * sl, -sp, cp * cl)
        };
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for sy in 0..ss {
                    for sx in 0..ss {
                        let ox = (sx as f64 + 0.5) / ss as f64 - 0.5;
                        let oy = (sy as f64 + 0.5) / ss as f64 - 0.5;
                        let d = dir(x as f64 + ox, y as f64 + oy);
                        acc += self.texture.intensity(&(o + d * self.hit(&o, &d)));
                    }
                }
                img.set(x, y, (acc / (ss * ss) as f64 * 255.0) as f32);
                let d = dir(x as f64, y as f64);
                depth.set(x, y, Some(self.hit(&o, &d) as f32));
            }
        }
        (img, depth)
    }
}

/// Reference at the origin, neighbors `baseline` meters behind and ahead.
pub fn two_level_group(camera: EquirectCamera, baseline: f64, seed: u64) -> (StereoGroup, DepthPanorama) {
    let scene = TwoLevelScene::new(seed);
    let poses = [-baseline, 0.0, baseline].map(|z| RigidPose::from_translation(Vector3::new(0.0, 0.0, z)));
    let views: Vec<(GrayImage, DepthPanorama)> = poses.iter().map(|p| scene.render(&camera, p, 8)).collect();
    let view = |i: usize| StereoView {
        image: views[i].0.clone(),
        pose: poses[i],
    };
    let group = StereoGroup::new(camera, view(1), [view(0), view(2)]).unwrap();
    (group, views[1].1.clone())
}

/// Stereo group of three renders of a synthetic scene; the middle pose is
/// the reference. Returns the reference ground truth too.
pub fn scene_group(scene: &SyntheticScene, camera: EquirectCamera, poses: [RigidPose; 3]) -> (StereoGroup, DepthPanorama) {
    let views: Vec<_> = poses.iter().map(|p| render_scene(scene, &camera, p).unwrap()).collect();
    let view = |i: usize| StereoView {
        image: views[i].image.to_gray(),
        pose: poses[i],
    };
    let group = StereoGroup::new(camera, view(1), [view(0), view(2)]).unwrap();
    (group, views[1].depth.clone())
}

/// Exhaustive search over `levels` inverse-uniform depths with
/// fronto-parallel normals: the minimal cost per pixel.
pub fn brute_force_costs(group: &StereoGroup, spec: &PatchSpec, range: &DepthRange, levels: usize) -> Vec<f32> {
    let matcher = GroupMatcher::new(group, spec);
    let camera = group.camera();
    let (inv_lo, inv_hi) = (1.0 / range.max() as f64, 1.0 / range.min() as f64);
    let mut out = Vec::with_capacity(camera.pixel_count());
    for y in 0..camera.height() {
        for x in 0..camera.width() {
            let ray = camera.pixel_center_ray(x, y).map(|v| v as f32);
            let best = (0..levels)
                .map(|k| {
                    let inv = inv_lo + (inv_hi - inv_lo) * k as f64 / (levels - 1) as f64;
                    let plane = PlaneHypothesis::fronto_parallel((1.0 / inv) as f32, &ray);
                    matcher.cost(x, y, &plane)
                })
                .fold(f32::INFINITY, f32::min);
            out.push(best);
        }
    }
    out
}

/// Share of pixels whose cost is at most 5% above the oracle minimum.
pub fn within_five_percent(costs: &[f32], oracle: &[f32]) -> f64 {
    let ok = costs
        .iter()
        .zip(oracle)
        .filter(|(c, o)| **c <= **o * 1.05 + 1e-6)
        .count();
    ok as f64 / costs.len() as f64
}
