use alloc::collections::BTreeSet;
use alloc::format;

use nalgebra::Vector3;
#[allow(unused_imports)]
use num_traits::Float;

use super::Keyframe;
use crate::error::ConfigError;

/// Triangulation-angle test between a candidate keyframe and the newest
/// buffered one.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ViewFilterConfig {
    /// degrees, inclusive
    pub theta_min: f64,
    /// degrees, inclusive
    pub theta_max: f64,
    /// share of common landmarks that must lie in `[theta_min, theta_max]`
    pub accept_fraction: f64,
}

impl Default for ViewFilterConfig {
    fn default() -> Self {
        ViewFilterConfig {
            theta_min: 6.0,
            theta_max: 60.0,
            accept_fraction: 0.20,
        }
    }
}

impl ViewFilterConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.theta_min > 0.0) {
            return Err(ConfigError::new("view_filter.theta_min", "must be > 0"));
        }
        if !(self.theta_min < self.theta_max) {
            return Err(ConfigError::new(
                "view_filter.theta_min",
                format!(
                    "view_filter.theta_min ({}) must be < view_filter.theta_max ({})",
                    self.theta_min, self.theta_max
                ),
            ));
        }
        if !(self.theta_max < 180.0) {
            return Err(ConfigError::new("view_filter.theta_max", "must be < 180"));
        }
        if !(self.accept_fraction > 0.0 && self.accept_fraction <= 1.0) {
            return Err(ConfigError::new(
                "view_filter.accept_fraction",
                "must be in (0, 1]",
            ));
        }
        Ok(())
    }
}

/// Why a candidate was turned down.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Rejection {
    /// the two keyframes share no landmark
    NoOverlap,
    /// too few shared landmarks have a usable triangulation angle
    BelowFraction,
}

impl core::fmt::Display for Rejection {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Rejection::NoOverlap => "no-overlap",
            Rejection::BelowFraction => "below-fraction",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ViewFilterReport {
    pub accepted: bool,
    /// landmarks observed by both keyframes
    pub common: usize,
    /// common landmarks whose angle is inside the interval
    pub passing: usize,
    /// `passing / common`, 0 without overlap
    pub fraction: f64,
    pub rejection: Option<Rejection>,
}

/// Angle in degrees at `point` between the directions to the two camera
/// centers. Zero when either center coincides with the point.
pub fn triangulation_angle_deg(
    point: &Vector3<f64>,
    center_a: &Vector3<f64>,
    center_b: &Vector3<f64>,
) -> f64 {
    let a = center_a - point;
    let b = center_b - point;
    let norms = a.norm() * b.norm();
    if !(norms > 0.0) {
        return 0.0;
    }
    Float::acos((a.dot(&b) / norms).clamp(-1.0, 1.0)).to_degrees()
}

fn key(p: &Vector3<f64>) -> [u64; 3] {
    [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()]
}

/// Accepts `candidate` when at least `accept_fraction` of the landmarks it
/// shares with `latest` are seen under a triangulation angle inside
/// `[theta_min, theta_max]`. Landmarks are matched by exact coordinates;
/// repeated coordinates count once.
pub fn view_filter_accept(
    candidate: &Keyframe,
    latest: &Keyframe,
    config: &ViewFilterConfig,
) -> ViewFilterReport {
    let known: BTreeSet<[u64; 3]> = latest.sparse_points.iter().map(key).collect();
    let mut seen = BTreeSet::new();
    let (ca, cb) = (candidate.pose.center(), latest.pose.center());
    let (mut common, mut passing) = (0usize, 0usize);
    for p in &candidate.sparse_points {
        let k = key(p);
        if !known.contains(&k) || !seen.insert(k) {
            continue;
        }
        common += 1;
        let theta = triangulation_angle_deg(p, &ca, &cb);
        if theta >= config.theta_min && theta <= config.theta_max {
            passing += 1;
        }
    }
    if common == 0 {
        return ViewFilterReport {
            accepted: false,
            common,
            passing,
            fraction: 0.0,
            rejection: Some(Rejection::NoOverlap),
        };
    }
    let fraction = passing as f64 / common as f64;
    let accepted = fraction >= config.accept_fraction;
    ViewFilterReport {
        accepted,
        common,
        passing,
        fraction,
        rejection: (!accepted).then_some(Rejection::BelowFraction),
    }
}
