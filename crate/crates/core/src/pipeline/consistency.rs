use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec::Vec;

use nalgebra::{Point2, Vector3};
#[allow(unused_imports)]
use num_traits::Float;

use super::DepthFrame;
use crate::depth::DepthPanorama;
use crate::error::ConfigError;
use crate::geometry::RigidPose;
use crate::par::map_range;

/// Multi-view geometric agreement test over a sliding window of depth maps.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ConsistencyConfig {
    /// depth maps per window, the filtered one included
    pub window: usize,
    /// agreeing other maps needed to keep a depth
    pub min_support: usize,
    pub rel_depth_tol: f64,
}

impl Default for ConsistencyConfig {
    fn default() -> Self {
        ConsistencyConfig {
            window: 5,
            min_support: 2,
            rel_depth_tol: 0.01,
        }
    }
}

impl ConsistencyConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.window < 2 {
            return Err(ConfigError::new("consistency.window", "must be >= 2"));
        }
        if self.min_support < 1 {
            return Err(ConfigError::new("consistency.min_support", "must be >= 1"));
        }
        if self.min_support >= self.window {
            return Err(ConfigError::new(
                "consistency.min_support",
                format!("must be < consistency.window ({})", self.window),
            ));
        }
        if !(self.rel_depth_tol > 0.0 && self.rel_depth_tol.is_finite()) {
            return Err(ConfigError::new("consistency.rel_depth_tol", "must be > 0"));
        }
        Ok(())
    }
}

/// Depth stored at continuous pixel `p`: bilinear over the four surrounding
/// pixels when all are valid, otherwise the nearest pixel's depth.
pub(crate) fn lookup_depth(depth: &DepthPanorama, p: &Point2<f64>) -> Option<f64> {
    let (w, h) = (depth.width() as i64, depth.height() as i64);
    let (x0, y0) = (Float::floor(p.x), Float::floor(p.y));
    let (fx, fy) = (p.x - x0, p.y - y0);
    let (x0, y0) = (x0 as i64, y0 as i64);
    if y0 >= 0 && y0 + 1 < h {
        let at = |x: i64, y: i64| depth.get(x.rem_euclid(w) as u32, y as u32);
        if let (Some(a), Some(b), Some(c), Some(d)) =
            (at(x0, y0), at(x0 + 1, y0), at(x0, y0 + 1), at(x0 + 1, y0 + 1))
        {
            let top = a as f64 * (1.0 - fx) + b as f64 * fx;
            let bottom = c as f64 * (1.0 - fx) + d as f64 * fx;
            return Some(top * (1.0 - fy) + bottom * fy);
        }
    }
    let (x, y) = depth.camera().nearest_pixel(p)?;
    depth.get(x, y).map(f64::from)
}

/// Keeps a valid target depth when at least `min_support` of the `others`
/// see its 3D point at a depth within `rel_depth_tol` of their own stored
/// depth. Surviving depths are unchanged; nothing is ever added.
pub fn consistency_filter(
    target: &DepthPanorama,
    target_pose: &RigidPose,
    others: &[(&DepthPanorama, &RigidPose)],
    config: &ConsistencyConfig,
) -> DepthPanorama {
    let camera = *target.camera();
    let (w, h) = (camera.width(), camera.height());
    let tol = config.rel_depth_tol;
    let rows: Vec<Vec<Option<f32>>> = map_range(h as usize, |y| {
        let y = y as u32;
        (0..w)
            .map(|x| {
                let d = target.get(x, y)?;
                let world = target_pose.to_world(&(camera.pixel_center_ray(x, y) * d as f64));
                let support = others
                    .iter()
                    .filter(|(depth, pose)| supports(depth, pose, &world, tol))
                    .count();
                (support >= config.min_support).then_some(d)
            })
            .collect()
    });
    DepthPanorama::from_values(camera, rows.into_iter().flatten().collect()).expect("sizes match")
}

fn supports(depth: &DepthPanorama, pose: &RigidPose, world: &Vector3<f64>, tol: f64) -> bool {
    let local = pose.to_camera(world);
    let projected = local.norm();
    let Ok(pixel) = depth.camera().ray_to_pixel(&local) else {
        return false;
    };
    lookup_depth(depth, &pixel).is_some_and(|stored| (projected - stored).abs() <= tol * stored)
}

/// Streaming consistency filter. Every depth map is filtered against the
/// other maps of a `window`-long run of consecutive maps centered on it;
/// near the ends of the sequence the run is shifted to stay full.
#[derive(Debug, Clone)]
pub struct ConsistencyStage {
    config: ConsistencyConfig,
    frames: VecDeque<DepthFrame>,
    /// sequence index of `frames[0]`
    first: usize,
    /// sequence index of the next map to emit
    next: usize,
    received: usize,
}

impl ConsistencyStage {
    pub fn new(config: ConsistencyConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        Ok(ConsistencyStage {
            config,
            frames: VecDeque::new(),
            first: 0,
            next: 0,
            received: 0,
        })
    }

    /// Depth maps received but not yet emitted.
    pub fn pending(&self) -> usize {
        self.received - self.next
    }

    /// Adds a depth map and returns every map whose window is now complete,
    /// filtered, in sequence order.
    pub fn push(&mut self, frame: DepthFrame) -> Vec<DepthFrame> {
        self.frames.push_back(frame);
        self.received += 1;
        let (window, half) = (self.config.window, self.config.window / 2);
        let mut out = Vec::new();
        while self.next < self.received && self.next.saturating_sub(half) + window <= self.received
        {
            let start = self.next.saturating_sub(half);
            out.push(self.emit(start, start + window));
        }
        out
    }

    /// Filters and returns the remaining maps.
    pub fn finish(mut self) -> Vec<DepthFrame> {
        let (window, half, n) = (self.config.window, self.config.window / 2, self.received);
        let mut out = Vec::new();
        while self.next < n {
            let start = self.next.saturating_sub(half).min(n.saturating_sub(window));
            out.push(self.emit(start, (start + window).min(n)));
        }
        out
    }

    fn emit(&mut self, start: usize, end: usize) -> DepthFrame {
        let k = self.next;
        let at = |i: usize| &self.frames[i - self.first];
        let target = at(k);
        let others: Vec<(&DepthPanorama, &RigidPose)> = (start..end)
            .filter(|&i| i != k)
            .map(|i| (&at(i).depth, &at(i).pose))
            .collect();
        let depth = consistency_filter(&target.depth, &target.pose, &others, &self.config);
        let mut frame = target.clone();
        frame.depth = depth;
        self.next += 1;
        // later windows never start before next - (window - 1)
        let keep_from = self.next.saturating_sub(self.config.window - 1);
        while self.first < keep_from {
            self.frames.pop_front();
            self.first += 1;
        }
        frame
    }
}
