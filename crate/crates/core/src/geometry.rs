//! Equirectangular camera model, rigid poses and plane/ray intersection.
//!
//! Camera frame: x right, y down, z forward. Longitude runs across the image
//! width from -pi at x = -0.5 to +pi at x = width - 0.5; latitude is +pi/2 at
//! the top edge. Integer pixel coordinates are pixel centers, so pixel `(i, j)`
//! looks along longitude `2*pi*(i + 0.5)/width - pi`.

use core::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix3, Point2, RealField, Vector3};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::GeometryError;

/// Rows closer than this to a pole (in degrees of latitude) are processed
/// normally but reported as low confidence.
pub const POLAR_LATITUDE_DEG: f64 = 85.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EquirectCamera {
    width: u32,
    height: u32,
}

impl EquirectCamera {
    pub fn new(width: u32, height: u32) -> Result<Self, GeometryError> {
        if height == 0 || width != 2 * height {
            return Err(GeometryError::BadCameraSize { width, height });
        }
        Ok(EquirectCamera { width, height })
    }

    /// Full-sphere camera with the given height (width is twice that).
    pub fn with_height(height: u32) -> Result<Self, GeometryError> {
        Self::new(height.saturating_mul(2), height)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn longitude(&self, x: f64) -> f64 {
        2.0 * PI * (x + 0.5) / self.width as f64 - PI
    }

    pub fn latitude(&self, y: f64) -> f64 {
        FRAC_PI_2 - PI * (y + 0.5) / self.height as f64
    }

    /// True for rows whose center latitude is beyond +-85 degrees.
    pub fn is_polar_row(&self, y: u32) -> bool {
        self.latitude(y as f64).abs() > POLAR_LATITUDE_DEG.to_radians()
    }

    /// Unit viewing direction of a continuous pixel coordinate.
    pub fn pixel_to_ray(&self, pixel: Point2<f64>) -> Result<Vector3<f64>, GeometryError> {
        let (x, y) = (pixel.x, pixel.y);
        if !(x >= 0.0 && x < self.width as f64 && y >= 0.0 && y < self.height as f64) {
            return Err(GeometryError::PixelOutOfBounds {
                x,
                y,
                width: self.width,
                height: self.height,
            });
        }
        Ok(direction_from_angles(self.longitude(x), self.latitude(y)))
    }

    /// Direction of the center of integer pixel `(x, y)`. No bounds check.
    pub fn pixel_center_ray(&self, x: u32, y: u32) -> Vector3<f64> {
        direction_from_angles(self.longitude(x as f64), self.latitude(y as f64))
    }

    /// Continuous pixel coordinate hit by `direction` (any non-zero length).
    ///
    /// Longitude wraps into `[-pi, pi)`, so `x` is in `[-0.5, width - 0.5)`.
    /// At the poles the longitude is undefined and `x` is arbitrary.
    pub fn ray_to_pixel(&self, direction: &Vector3<f64>) -> Result<Point2<f64>, GeometryError> {
        let norm = direction.norm();
        if !norm.is_finite() {
            return Err(GeometryError::NonFinite("direction"));
        }
        if norm == 0.0 {
            return Err(GeometryError::ZeroDirection);
        }
        let mut lon = Float::atan2(direction.x, direction.z);
        if lon >= PI {
            lon -= 2.0 * PI;
        }
        let lat = Float::asin((-direction.y / norm).clamp(-1.0, 1.0));
        let x = (lon + PI) * self.width as f64 / (2.0 * PI) - 0.5;
        let y = (FRAC_PI_2 - lat) * self.height as f64 / PI - 0.5;
        Ok(Point2::new(x, y))
    }

    /// Integer pixel containing a continuous coordinate, wrapping longitude.
    /// Returns `None` only for non-finite input.
    pub fn nearest_pixel(&self, p: &Point2<f64>) -> Option<(u32, u32)> {
        if !p.x.is_finite() || !p.y.is_finite() {
            return None;
        }
        let w = self.width as i64;
        let x = (Float::round(p.x) as i64).rem_euclid(w);
        let y = (Float::round(p.y) as i64).clamp(0, self.height as i64 - 1);
        Some((x as u32, y as u32))
    }
}

fn direction_from_angles(lon: f64, lat: f64) -> Vector3<f64> {
    let (slon, clon) = Float::sin_cos(lon);
    let (slat, clat) = Float::sin_cos(lat);
    Vector3::new(clat * slon, -slat, clat * clon)
}

/// World-from-camera rigid transform. `translation` is the camera center in
/// world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidPose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl RigidPose {
    /// Orthonormality and `det = +1` are checked to 1e-9.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        if rotation.iter().chain(translation.iter()).any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite("pose"));
        }
        let ortho = (rotation.transpose() * rotation - Matrix3::identity()).amax();
        let det = (rotation.determinant() - 1.0).abs();
        let deviation = ortho.max(det);
        if deviation > 1e-9 {
            return Err(GeometryError::NotARotation { deviation });
        }
        Ok(RigidPose {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        RigidPose {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        RigidPose {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    /// Rotation about the camera-down (y) axis by `angle` radians, placed at
    /// `center`. Positive angles turn the forward axis towards +x.
    pub fn yaw(angle: f64, center: Vector3<f64>) -> Self {
        let (s, c) = Float::sin_cos(angle);
        RigidPose {
            rotation: Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c),
            translation: center,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn center(&self) -> Vector3<f64> {
        self.translation
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        RigidPose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `self * other`: apply `other` first.
    pub fn compose(&self, other: &RigidPose) -> Self {
        RigidPose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    /// Camera-frame point to world.
    pub fn to_world(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// World point to this camera's frame.
    pub fn to_camera(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.tr_mul(&(p - self.translation))
    }

    /// Pose mapping points of `src` camera frame into `dst` camera frame.
    pub fn relative(src: &RigidPose, dst: &RigidPose) -> RigidPose {
        RigidPose {
            rotation: dst.rotation.tr_mul(&src.rotation),
            translation: dst.rotation.tr_mul(&(src.translation - dst.translation)),
        }
    }

    /// Largest entry-wise difference to another pose.
    pub fn max_abs_diff(&self, other: &RigidPose) -> f64 {
        (self.rotation - other.rotation)
            .amax()
            .max((self.translation - other.translation).amax())
    }
}

/// Maps `point` from the `pose_src` camera frame to the `pose_dst` camera
/// frame through world coordinates.
pub fn transform_point(
    pose_src: &RigidPose,
    pose_dst: &RigidPose,
    point: &Vector3<f64>,
) -> Vector3<f64> {
    pose_dst.to_camera(&pose_src.to_world(point))
}

/// Per-pixel plane: `depth` meters along the pixel's own viewing ray and a
/// unit `normal` in the camera frame facing the camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneHypothesis {
    pub depth: f32,
    pub normal: Vector3<f32>,
}

impl PlaneHypothesis {
    pub fn new(depth: f32, normal: Vector3<f32>) -> Self {
        PlaneHypothesis { depth, normal }
    }

    /// Plane perpendicular to the viewing ray.
    pub fn fronto_parallel(depth: f32, ray: &Vector3<f32>) -> Self {
        PlaneHypothesis {
            depth,
            normal: -ray,
        }
    }

    pub fn is_valid_for(&self, ray: &Vector3<f32>, depth_min: f32, depth_max: f32) -> bool {
        self.depth >= depth_min
            && self.depth <= depth_max
            && (self.normal.norm() - 1.0).abs() <= 1e-5
            && self.normal.dot(ray) < 0.0
    }

    pub fn bit_eq(&self, other: &PlaneHypothesis) -> bool {
        self.depth.to_bits() == other.depth.to_bits()
            && self.normal.x.to_bits() == other.normal.x.to_bits()
            && self.normal.y.to_bits() == other.normal.y.to_bits()
            && self.normal.z.to_bits() == other.normal.z.to_bits()
    }
}

/// Distance `t` along `query_ray` at which it meets the plane through
/// `depth * anchor_ray` with normal `normal`.
///
/// Returns `None` when the ray is (nearly) parallel to the plane, i.e.
/// `|normal . query_ray| <= 1e-9`. A negative `t` means the plane lies behind.
pub fn plane_depth_along_ray<T: RealField + Copy>(
    depth: T,
    normal: &Vector3<T>,
    anchor_ray: &Vector3<T>,
    query_ray: &Vector3<T>,
) -> Option<T> {
    let denom = normal.dot(query_ray);
    if denom.abs() <= nalgebra::convert(1e-9) {
        return None;
    }
    Some(depth * normal.dot(anchor_ray) / denom)
}
