use alloc::collections::VecDeque;
use alloc::vec::Vec;

use nalgebra::Vector3;
#[allow(unused_imports)]
use num_traits::Float;

use super::DepthFrame;
use crate::error::ConfigError;
use crate::par::map_range;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct FusionConfig {
    /// consistent depth maps held before the oldest is fused
    pub buffer: usize,
    /// pixels; a candidate landing this close to a matching newer pixel is a
    /// duplicate
    pub duplicate_radius_px: f64,
    pub rel_depth_tol: f64,
    /// when off every surviving pixel becomes a point
    pub erase_duplicates: bool,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            buffer: 4,
            duplicate_radius_px: 1.0,
            rel_depth_tol: 0.01,
            erase_duplicates: true,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.buffer < 1 {
            return Err(ConfigError::new("fusion.buffer", "must be >= 1"));
        }
        if !(self.duplicate_radius_px >= 0.0 && self.duplicate_radius_px.is_finite()) {
            return Err(ConfigError::new("fusion.duplicate_radius_px", "must be >= 0"));
        }
        if !(self.rel_depth_tol > 0.0 && self.rel_depth_tol.is_finite()) {
            return Err(ConfigError::new("fusion.rel_depth_tol", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudPoint {
    /// world frame, meters
    pub position: Vector3<f64>,
    pub color: [u8; 3],
    /// id of the keyframe whose depth map produced the point
    pub source: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FusedCloud {
    pub points: Vec<CloudPoint>,
}

impl FusedCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn positions(&self) -> Vec<Vector3<f64>> {
        self.points.iter().map(|p| p.position).collect()
    }
}

/// True when `world` projects into `frame` within `radius` pixels of a
/// pixel whose depth agrees with the point's distance.
fn seen_by(frame: &DepthFrame, world: &Vector3<f64>, radius: f64, tol: f64) -> bool {
    let local = frame.pose.to_camera(world);
    let distance = local.norm();
    let camera = frame.depth.camera();
    let Ok(p) = camera.ray_to_pixel(&local) else {
        return false;
    };
    let (w, h) = (camera.width() as i64, camera.height() as i64);
    let r2 = radius * radius;
    let y_lo = Float::ceil(p.y - radius).max(0.0) as i64;
    let y_hi = (Float::floor(p.y + radius) as i64).min(h - 1);
    let x_lo = Float::ceil(p.x - radius) as i64;
    let x_hi = Float::floor(p.x + radius) as i64;
    for y in y_lo..=y_hi {
        for x in x_lo..=x_hi {
            let (dx, dy) = (x as f64 - p.x, y as f64 - p.y);
            if dx * dx + dy * dy > r2 {
                continue;
            }
            let Some(stored) = frame.depth.get(x.rem_euclid(w) as u32, y as u32) else {
                continue;
            };
            let stored = stored as f64;
            if (distance - stored).abs() <= tol * stored {
                return true;
            }
        }
    }
    false
}

/// Turns the valid pixels of `frame` into points, skipping those that a
/// newer frame also reconstructs (that frame will contribute them).
pub fn fuse_frame(frame: &DepthFrame, newer: &[&DepthFrame], config: &FusionConfig) -> Vec<CloudPoint> {
    let camera = *frame.depth.camera();
    let (w, h) = (camera.width(), camera.height());
    let rows: Vec<Vec<CloudPoint>> = map_range(h as usize, |y| {
        let y = y as u32;
        (0..w)
            .filter_map(|x| {
                let d = frame.depth.get(x, y)? as f64;
                let world = frame.pose.to_world(&(camera.pixel_center_ray(x, y) * d));
                if config.erase_duplicates
                    && newer
                        .iter()
                        .any(|f| seen_by(f, &world, config.duplicate_radius_px, config.rel_depth_tol))
                {
                    return None;
                }
                Some(CloudPoint {
                    position: world,
                    color: frame.colors.get(x, y),
                    source: frame.id,
                })
            })
            .collect()
    });
    rows.into_iter().flatten().collect()
}

/// Buffered fusion into the growing dense map. When the buffer is full the
/// oldest frame is fused against the newer ones and leaves; `finish`
/// drains the rest oldest first.
#[derive(Debug, Clone)]
pub struct Fusion {
    config: FusionConfig,
    buffer: VecDeque<DepthFrame>,
    cloud: FusedCloud,
}

impl Fusion {
    pub fn new(config: FusionConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        Ok(Fusion {
            config,
            buffer: VecDeque::with_capacity(config.buffer),
            cloud: FusedCloud::default(),
        })
    }

    pub fn cloud(&self) -> &FusedCloud {
        &self.cloud
    }

    pub fn buffered(&self) -> usize {
        self.buffer.len()
    }

    /// Buffers `frame`; returns the number of points added to the cloud.
    pub fn push(&mut self, frame: DepthFrame) -> usize {
        self.buffer.push_back(frame);
        if self.buffer.len() >= self.config.buffer {
            self.fuse_oldest()
        } else {
            0
        }
    }

    fn fuse_oldest(&mut self) -> usize {
        let Some(oldest) = self.buffer.pop_front() else {
            return 0;
        };
        let newer: Vec<&DepthFrame> = self.buffer.iter().collect();
        let points = fuse_frame(&oldest, &newer, &self.config);
        let n = points.len();
        self.cloud.points.extend(points);
        n
    }

    pub fn finish(mut self) -> FusedCloud {
        while !self.buffer.is_empty() {
            self.fuse_oldest();
        }
        self.cloud
    }
}
