use alloc::vec::Vec;

use nalgebra::Vector3;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{ConfigError, GeometryError};
use crate::geometry::RigidPose;

/// Poses must keep at least this distance (meters) from every surface.
const POSE_CLEARANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SceneKind {
    /// Closed box centered on the origin; `size` is (x, y, z) extent.
    BoxRoom { size: [f64; 3] },
    /// Long box along z with square pillars flush against both side walls
    /// every `pillar_spacing` meters.
    Corridor {
        width: f64,
        height: f64,
        length: f64,
        pillar_spacing: f64,
    },
    /// Inside of a sphere centered on the origin.
    SphereShell { radius: f64 },
}

/// Solid surface texture, intensity in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Texture {
    /// Sum of `octaves` layers of 3D value noise; the coarsest has cells of
    /// `scale` meters and every further layer halves the cell size.
    ValueNoise { scale: f64, octaves: u32, seed: u64 },
    /// 3D checkerboard of `size` meter cubes.
    Checker { size: f64 },
}

impl Texture {
    pub fn noise(seed: u64) -> Self {
        Texture::ValueNoise {
            scale: 0.4,
            octaves: 4,
            seed,
        }
    }

    pub fn intensity(&self, p: &Vector3<f64>) -> f64 {
        match *self {
            Texture::ValueNoise {
                scale,
                octaves,
                seed,
            } => {
                let (mut sum, mut norm, mut amp, mut freq) = (0.0, 0.0, 1.0, 1.0 / scale);
                for o in 0..octaves {
                    sum += amp * value_noise(&(p * freq), seed.wrapping_add(o as u64));
                    norm += amp;
                    amp *= 0.6;
                    freq *= 2.0;
                }
                // layered noise bunches up around 0.5; spread it back out
                (0.5 + 2.2 * (sum / norm - 0.5)).clamp(0.0, 1.0)
            }
            Texture::Checker { size } => {
                let c = |v: f64| Float::floor(v / size) as i64;
                if (c(p.x) + c(p.y) + c(p.z)).rem_euclid(2) == 0 {
                    0.85
                } else {
                    0.15
                }
            }
        }
    }
}

fn lattice(seed: u64, x: i64, y: i64, z: i64) -> f64 {
    let mut h = seed
        ^ (x as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (y as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
        ^ (z as u64).wrapping_mul(0x1656_67B1_9E37_79F9);
    // splitmix64 finalizer
    h = (h ^ (h >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    h ^= h >> 31;
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn value_noise(p: &Vector3<f64>, seed: u64) -> f64 {
    let base = p.map(Float::floor);
    let f = p - base;
    let s = f.map(|t| t * t * (3.0 - 2.0 * t));
    let (x, y, z) = (base.x as i64, base.y as i64, base.z as i64);
    let mut acc = 0.0;
    for corner in 0..8 {
        let (dx, dy, dz) = (corner & 1, (corner >> 1) & 1, (corner >> 2) & 1);
        let wx = if dx == 1 { s.x } else { 1.0 - s.x };
        let wy = if dy == 1 { s.y } else { 1.0 - s.y };
        let wz = if dz == 1 { s.z } else { 1.0 - s.z };
        acc += wx * wy * wz * lattice(seed, x + dx, y + dy, z + dz);
    }
    acc
}

/// Closest surface hit along a ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    /// ray parameter; meters for unit directions
    pub t: f64,
    pub point: Vector3<f64>,
    /// 0 floor/ceiling, 1 side walls, 2 end walls, 3 pillars, 4 sphere
    pub surface: u8,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Aabb {
    lo: Vector3<f64>,
    hi: Vector3<f64>,
}

impl Aabb {
    fn contains(&self, p: &Vector3<f64>, margin: f64) -> bool {
        (0..3).all(|i| p[i] > self.lo[i] + margin && p[i] < self.hi[i] - margin)
    }

    fn overlaps(&self, p: &Vector3<f64>, margin: f64) -> bool {
        (0..3).all(|i| p[i] > self.lo[i] - margin && p[i] < self.hi[i] + margin)
    }

    /// Exit distance and axis for a ray starting inside.
    fn exit(&self, o: &Vector3<f64>, d: &Vector3<f64>) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for i in 0..3 {
            let t = if d[i] > 0.0 {
                (self.hi[i] - o[i]) / d[i]
            } else if d[i] < 0.0 {
                (self.lo[i] - o[i]) / d[i]
            } else {
                continue;
            };
            if best.is_none_or(|(b, _)| t < b) {
                best = Some((t, i));
            }
        }
        best
    }

    /// Entry distance for a ray starting outside (slab test).
    fn entry(&self, o: &Vector3<f64>, d: &Vector3<f64>) -> Option<f64> {
        let (mut near, mut far) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..3 {
            if d[i] == 0.0 {
                if o[i] < self.lo[i] || o[i] > self.hi[i] {
                    return None;
                }
                continue;
            }
            let a = (self.lo[i] - o[i]) / d[i];
            let b = (self.hi[i] - o[i]) / d[i];
            near = near.max(a.min(b));
            far = far.min(a.max(b));
        }
        (near <= far && near > 0.0).then_some(near)
    }
}

/// An analytic closed scene with a procedural texture.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    kind: SceneKind,
    texture: Texture,
    bounds: Option<Aabb>,
    pillars: Vec<Aabb>,
}

impl SyntheticScene {
    pub fn new(kind: SceneKind, texture: Texture) -> Result<Self, ConfigError> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        let (bounds, pillars) = match kind {
            SceneKind::BoxRoom { size } => {
                if !size.iter().all(|v| positive(*v)) {
                    return Err(ConfigError::new("scene.size", "all extents must be > 0"));
                }
                let half = Vector3::from(size) * 0.5;
                (Some(Aabb { lo: -half, hi: half }), Vec::new())
            }
            SceneKind::Corridor {
                width,
                height,
                length,
                pillar_spacing,
            } => {
                if !(positive(width) && positive(height) && positive(length)) {
                    return Err(ConfigError::new("scene.size", "all extents must be > 0"));
                }
                if !(pillar_spacing >= 0.0) {
                    return Err(ConfigError::new("scene.pillar_spacing", "must be >= 0"));
                }
                let half = Vector3::new(width, height, length) * 0.5;
                let side = (width * 0.12).min(0.4);
                let mut pillars = Vec::new();
                if pillar_spacing > 0.0 {
                    let mut z = -half.z + pillar_spacing * 0.5;
                    let mut left = true;
                    while z + side < half.z {
                        let x0 = if left { -half.x } else { half.x - side };
                        pillars.push(Aabb {
                            lo: Vector3::new(x0, -half.y, z - side * 0.5),
                            hi: Vector3::new(x0 + side, half.y, z + side * 0.5),
                        });
                        left = !left;
                        z += pillar_spacing;
                    }
                }
                (Some(Aabb { lo: -half, hi: half }), pillars)
            }
            SceneKind::SphereShell { radius } => {
                if !positive(radius) {
                    return Err(ConfigError::new("scene.radius", "must be > 0"));
                }
                (None, Vec::new())
            }
        };
        Ok(SyntheticScene {
            kind,
            texture,
            bounds,
            pillars,
        })
    }

    /// 4 x 3 x 5 m room with value-noise walls.
    pub fn box_room(seed: u64) -> Self {
        Self::new(
            SceneKind::BoxRoom {
                size: [4.0, 3.0, 5.0],
            },
            Texture::noise(seed),
        )
        .expect("valid room")
    }

    /// 3 x 3 x 20 m corridor with pillars every 4 m.
    pub fn corridor(seed: u64) -> Self {
        Self::new(
            SceneKind::Corridor {
                width: 3.0,
                height: 3.0,
                length: 20.0,
                pillar_spacing: 4.0,
            },
            Texture::noise(seed),
        )
        .expect("valid corridor")
    }

    pub fn sphere_shell(radius: f64, seed: u64) -> Result<Self, ConfigError> {
        Self::new(SceneKind::SphereShell { radius }, Texture::noise(seed))
    }

    /// `room`, `corridor` or `sphere` with default dimensions.
    pub fn by_name(name: &str, seed: u64) -> Option<Self> {
        match name {
            "room" | "box_room" => Some(Self::box_room(seed)),
            "corridor" => Some(Self::corridor(seed)),
            "sphere" | "sphere_shell" => Self::sphere_shell(2.0, seed).ok(),
            _ => None,
        }
    }

    pub fn kind(&self) -> &SceneKind {
        &self.kind
    }

    pub fn texture(&self) -> &Texture {
        &self.texture
    }

    pub fn with_texture(mut self, texture: Texture) -> Self {
        self.texture = texture;
        self
    }

    /// True when `p` is inside the free space with some clearance.
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        let free = match (&self.kind, &self.bounds) {
            (SceneKind::SphereShell { radius }, _) => p.norm() < radius - POSE_CLEARANCE,
            (_, Some(b)) => b.contains(p, POSE_CLEARANCE),
            _ => false,
        };
        free && !self.pillars.iter().any(|pl| pl.overlaps(p, POSE_CLEARANCE))
    }

    /// Closest hit of the ray `origin + t * dir` (`dir` need not be unit; `t`
    /// is then in units of `|dir|`). `origin` must be inside the scene.
    pub fn intersect(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<Hit> {
        let (mut t, mut surface) = match (&self.kind, &self.bounds) {
            (SceneKind::SphereShell { radius }, _) => {
                let a = dir.norm_squared();
                let b = origin.dot(dir);
                let c = origin.norm_squared() - radius * radius;
                let disc = b * b - a * c;
                if !(disc >= 0.0) || a == 0.0 {
                    return None;
                }
                // far root; c < 0 inside, so it is positive
                ((-b + Float::sqrt(disc)) / a, 4u8)
            }
            (_, Some(bounds)) => {
                let (t, axis) = bounds.exit(origin, dir)?;
                let surface = match axis {
                    0 => 1,
                    1 => 0,
                    _ => 2,
                };
                (t, surface)
            }
            _ => return None,
        };
        for pillar in &self.pillars {
            if let Some(tp) = pillar.entry(origin, dir) {
                if tp < t {
                    t = tp;
                    surface = 3;
                }
            }
        }
        (t > 0.0 && t.is_finite()).then(|| Hit {
            t,
            point: origin + dir * t,
            surface,
        })
    }

    /// Straight line along the scene's long (z) axis and straight back, one
    /// pose every `step` meters. The return leg is shifted sideways so no two
    /// poses coincide. Rotations are identity.
    pub fn in_and_out(&self, keyframes: usize, step: f64) -> Result<Vec<RigidPose>, GeometryError> {
        let (reach, lateral) = match self.kind {
            SceneKind::BoxRoom { size } => (size[2] * 0.5 - 0.8, size[0] * 0.06),
            SceneKind::Corridor { width, length, .. } => (length * 0.5 - 1.0, width * 0.08),
            SceneKind::SphereShell { radius } => (radius * 0.5, radius * 0.06),
        };
        let leg = 2.0 * reach.max(0.0);
        let mut poses = Vec::with_capacity(keyframes);
        for k in 0..keyframes {
            let s = k as f64 * step;
            let p = if leg > 0.0 { s % (2.0 * leg) } else { 0.0 };
            let (x, z) = if p <= leg {
                (lateral, -reach + p)
            } else {
                (-lateral, -reach + 2.0 * leg - p)
            };
            let center = Vector3::new(x, 0.0, z);
            if !self.contains(&center) {
                return Err(GeometryError::OutsideScene);
            }
            poses.push(RigidPose::from_translation(center));
        }
        Ok(poses)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_hit_is_radius_from_center() {
        let s = SyntheticScene::sphere_shell(2.0, 1).unwrap();
        let d = Vector3::new(0.3, -0.5, 0.8).normalize();
        let h = s.intersect(&Vector3::zeros(), &d).unwrap();
        assert!((h.t - 2.0).abs() < 1e-12);
    }

    #[test]
    fn room_center_forward_hits_end_wall() {
        let s = SyntheticScene::box_room(1);
        let h = s.intersect(&Vector3::zeros(), &Vector3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(h.t, 2.5);
        assert_eq!(h.surface, 2);
    }

    #[test]
    fn corridor_pillars_occlude() {
        let s = SyntheticScene::corridor(1);
        // looking straight at the left wall from the first pillar's z
        let z = -10.0 + 2.0;
        let h = s
            .intersect(&Vector3::new(0.0, 0.0, z), &Vector3::new(-1.0, 0.0, 0.0))
            .unwrap();
        assert_eq!(h.surface, 3);
        assert!((h.t - (1.5 - 0.36)).abs() < 1e-12);
        assert!(!s.contains(&Vector3::new(-1.4, 0.0, z)));
    }

    #[test]
    fn trajectory_stays_inside() {
        for s in [
            SyntheticScene::box_room(0),
            SyntheticScene::corridor(0),
            SyntheticScene::sphere_shell(2.0, 0).unwrap(),
        ] {
            let poses = s.in_and_out(40, 0.3).unwrap();
            for w in poses.windows(2) {
                assert!((w[0].center() - w[1].center()).norm() > 1e-3);
            }
        }
    }

    #[test]
    fn textures_in_unit_range() {
        let t = Texture::noise(3);
        let c = Texture::Checker { size: 0.5 };
        for i in 0..500 {
            let p = Vector3::new(i as f64 * 0.037, -(i as f64) * 0.011, i as f64 * 0.023);
            let v = t.intensity(&p);
            assert!((0.0..=1.0).contains(&v));
            assert!([0.15, 0.85].contains(&c.intensity(&p)));
        }
    }
}
