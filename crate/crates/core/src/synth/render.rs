use alloc::vec::Vec;

use nalgebra::Vector3;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SyntheticScene;
use crate::depth::DepthPanorama;
use crate::error::GeometryError;
use crate::geometry::{EquirectCamera, RigidPose};
use crate::par::map_range;
use crate::raster::RgbImage;

/// Subsamples per pixel axis for the intensity image.
pub const SUPERSAMPLE: u32 = 3;

const TINTS: [[f64; 3]; 5] = [
    [1.0, 0.93, 0.82],
    [0.86, 0.94, 1.0],
    [0.95, 1.0, 0.9],
    [1.0, 0.88, 0.92],
    [0.92, 0.96, 1.0],
];

/// Color image and exact depth of a scene seen from one pose.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedView {
    pub image: RgbImage,
    pub depth: DepthPanorama,
}

fn direction(camera: &EquirectCamera, x: f64, y: f64) -> Vector3<f64> {
    let (sl, cl) = Float::sin_cos(camera.longitude(x));
    let (sp, cp) = Float::sin_cos(camera.latitude(y));
    Vector3::new(cp * sl, -sp, cp * cl)
}

/// Ray casts every pixel. Depth is the exact hit distance along the pixel
/// center ray; intensity averages a `SUPERSAMPLE^2` grid inside the pixel.
pub fn render_scene(
    scene: &SyntheticScene,
    camera: &EquirectCamera,
    pose: &RigidPose,
) -> Result<RenderedView, GeometryError> {
    let origin = pose.center();
    if !scene.contains(&origin) {
        return Err(GeometryError::OutsideScene);
    }
    let (w, h) = (camera.width(), camera.height());
    let rot = *pose.rotation();
    let cast = |x: f64, y: f64| scene.intersect(&origin, &(rot * direction(camera, x, y)));
    let rows: Vec<Vec<([u8; 3], Option<f32>)>> = map_range(h as usize, |y| {
        (0..w)
            .map(|x| {
                let depth = cast(x as f64, y as f64).map(|hit| hit.t as f32);
                let mut rgb = [0.0f64; 3];
                let n = SUPERSAMPLE as f64;
                for sy in 0..SUPERSAMPLE {
                    for sx in 0..SUPERSAMPLE {
                        let ox = (sx as f64 + 0.5) / n - 0.5;
                        let oy = (sy as f64 + 0.5) / n - 0.5;
                        if let Some(hit) = cast(x as f64 + ox, y as f64 + oy) {
                            let v = scene.texture().intensity(&hit.point);
                            let tint = TINTS[hit.surface as usize % TINTS.len()];
                            for c in 0..3 {
                                rgb[c] += v * tint[c];
                            }
                        }
                    }
                }
                let px = rgb.map(|c| Float::round((c / (n * n) * 255.0).clamp(0.0, 255.0)) as u8);
                (px, depth)
            })
            .collect()
    });
    let (pixels, depths): (Vec<[u8; 3]>, Vec<Option<f32>>) = rows.into_iter().flatten().unzip();
    Ok(RenderedView {
        image: RgbImage::from_pixels(w, h, pixels).expect("sizes match"),
        depth: DepthPanorama::from_values(*camera, depths).expect("sizes match"),
    })
}

/// Adds uniform noise in `[-amplitude, amplitude]` grey levels to each
/// channel. Deterministic for a seed.
pub fn add_noise(image: &RgbImage, amplitude: f64, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pixels = image
        .pixels()
        .iter()
        .map(|p| {
            p.map(|c| {
                let v = c as f64 + amplitude * (2.0 * rng.random::<f64>() - 1.0);
                Float::round(v.clamp(0.0, 255.0)) as u8
            })
        })
        .collect();
    RgbImage::from_pixels(image.width(), image.height(), pixels).expect("sizes match")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_center_constant_depth() {
        let s = SyntheticScene::sphere_shell(2.0, 0).unwrap();
        let cam = EquirectCamera::new(32, 16).unwrap();
        let v = render_scene(&s, &cam, &RigidPose::identity()).unwrap();
        assert!(v.depth.values().iter().all(|d| (d.unwrap() - 2.0).abs() < 1e-6));
    }

    #[test]
    fn outside_pose_rejected() {
        let s = SyntheticScene::box_room(0);
        let cam = EquirectCamera::new(32, 16).unwrap();
        let pose = RigidPose::from_translation(Vector3::new(0.0, 0.0, 9.0));
        assert_eq!(render_scene(&s, &cam, &pose), Err(GeometryError::OutsideScene));
    }
}
