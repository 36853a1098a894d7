//! Single-precision sphere tables and projection for the matching hot path.
//!
//! Everything here is exactly equivariant under a quarter-turn roll of the
//! panorama when the width is a multiple of 4: the column tables are built
//! from the first quarter by exact sign swaps, projection reduces longitude
//! to one quadrant before any rounding, and three-term sums are evaluated as
//! `(x + z) + y` so that swapping the x and z axes cannot change a result.

use alloc::vec::Vec;
use core::f32::consts::FRAC_PI_2;

use nalgebra::Vector3;
#[allow(unused_imports)]
use num_traits::Float;
use wide::{f32x4, i32x4};

use crate::geometry::EquirectCamera;
use crate::raster::GrayImage;

/// `(a.x*b.x + a.z*b.z) + a.y*b.y`
#[inline(always)]
pub(crate) fn dot3(a: &Vector3<f32>, b: &Vector3<f32>) -> f32 {
    (a.x * b.x + a.z * b.z) + a.y * b.y
}

#[inline(always)]
pub(crate) fn normalize3(v: &Vector3<f32>) -> Vector3<f32> {
    let n = Float::sqrt(dot3(v, v));
    Vector3::new(v.x / n, v.y / n, v.z / n)
}

// Odd minimax-style fit of atan on [0, 1], max error about 2e-6 rad.
const ATAN_C: [f32; 6] = [
    0.999_979_83,
    -0.332_655_42,
    0.193_669_89,
    -0.116_649_98,
    0.052_822_19,
    -0.011_769_97,
];

#[inline(always)]
fn atan_unit(t: f32) -> f32 {
    let t2 = t * t;
    let p = ATAN_C[4] + t2 * ATAN_C[5];
    let p = ATAN_C[3] + t2 * p;
    let p = ATAN_C[2] + t2 * p;
    let p = ATAN_C[1] + t2 * p;
    let p = ATAN_C[0] + t2 * p;
    t * p
}

/// `atan2(a, b)` for `a, b >= 0`, in `[0, pi/2]`.
#[inline(always)]
pub(crate) fn atan_quadrant(a: f32, b: f32) -> f32 {
    if a <= b {
        if b == 0.0 {
            0.0
        } else {
            atan_unit(a / b)
        }
    } else {
        FRAC_PI_2 - atan_unit(b / a)
    }
}

#[inline(always)]
fn atan_unit4(t: f32x4) -> f32x4 {
    let c = |i: usize| f32x4::splat(ATAN_C[i]);
    let t2 = t * t;
    let p = c(4) + t2 * c(5);
    let p = c(3) + t2 * p;
    let p = c(2) + t2 * p;
    let p = c(1) + t2 * p;
    let p = c(0) + t2 * p;
    t * p
}

/// Lane-wise [`atan_quadrant`], bit-identical to it.
#[inline(always)]
fn atan_quadrant4(a: f32x4, b: f32x4) -> f32x4 {
    let le = a.simd_le(b);
    let num = le.select(a, b);
    let den = le.select(b, a);
    let r = den.simd_eq(f32x4::ZERO).select(f32x4::ZERO, num / den);
    let t = atan_unit4(r);
    le.select(t, f32x4::splat(FRAC_PI_2) - t)
}

/// Lane-wise [`floor_frac`] for finite inputs.
#[inline(always)]
fn floor_frac4(x: f32x4) -> (i32x4, f32x4) {
    let t = f32x4::from_i32x4(x.fast_trunc_int());
    let t = t.simd_gt(x).select(t - f32x4::ONE, t);
    (t.fast_trunc_int(), x - t)
}

/// `(floor(x), x - floor(x))` without a libm call.
#[inline(always)]
pub(crate) fn floor_frac(x: f32) -> (i32, f32) {
    let mut i = x as i32;
    if (i as f32) > x {
        i -= 1;
    }
    (i, x - i as f32)
}

/// Bilinear footprint of a projected direction. `col` is in `[-1, W-1]` and
/// `row` in `[-1, H-1]`, so `col + 1` / `row + 1` stay within a one-pixel
/// padded border.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Footprint {
    pub col: i32,
    pub fx: f32,
    pub row: i32,
    pub fy: f32,
}

#[cfg(test)]
impl Footprint {
    pub fn x(&self) -> f32 {
        self.col as f32 + self.fx
    }

    pub fn y(&self) -> f32 {
        self.row as f32 + self.fy
    }
}

/// Four [`Footprint`]s, one per lane.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Footprint4 {
    pub col: i32x4,
    pub fx: f32x4,
    pub row: i32x4,
    pub fy: f32x4,
}

#[derive(Debug, Clone)]
pub(crate) struct SphereGrid {
    width: u32,
    height: u32,
    /// (sin, cos) of each column's longitude
    lon: Vec<(f32, f32)>,
    /// (sin, cos) of each row's latitude
    lat: Vec<(f32, f32)>,
    rays: Vec<Vector3<f32>>,
    quarter: Option<i32>,
    cols_per_rad: f32,
    rows_per_rad: f32,
}

impl SphereGrid {
    pub fn new(camera: &EquirectCamera) -> Self {
        let (w, h) = (camera.width(), camera.height());
        let quarter = (w % 4 == 0).then_some((w / 4) as i32);
        let lon: Vec<(f32, f32)> = match quarter {
            Some(q) => {
                let first: Vec<(f32, f32)> = (0..q)
                    .map(|x| {
                        let (s, c) = Float::sin_cos(camera.longitude(x as f64));
                        (s as f32, c as f32)
                    })
                    .collect();
                // lon + pi/2: (sin, cos) -> (cos, -sin)
                (0..w as i32)
                    .map(|x| {
                        let (mut s, mut c) = first[(x % q) as usize];
                        for _ in 0..x / q {
                            (s, c) = (c, -s);
                        }
                        (s, c)
                    })
                    .collect()
            }
            None => (0..w)
                .map(|x| {
                    let (s, c) = Float::sin_cos(camera.longitude(x as f64));
                    (s as f32, c as f32)
                })
                .collect(),
        };
        let lat: Vec<(f32, f32)> = (0..h)
            .map(|y| {
                let (s, c) = Float::sin_cos(camera.latitude(y as f64));
                (s as f32, c as f32)
            })
            .collect();
        let mut rays = Vec::with_capacity(camera.pixel_count());
        for &(sp, cp) in &lat {
            for &(sl, cl) in &lon {
                rays.push(Vector3::new(cp * sl, -sp, cp * cl));
            }
        }
        SphereGrid {
            width: w,
            height: h,
            lon,
            lat,
            rays,
            quarter,
            cols_per_rad: (w as f64 / (2.0 * core::f64::consts::PI)) as f32,
            rows_per_rad: (h as f64 / core::f64::consts::PI) as f32,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Columns per quarter turn when the width is divisible by four.
    pub fn quarter(&self) -> Option<u32> {
        self.quarter.map(|q| q as u32)
    }

    #[inline(always)]
    pub fn ray(&self, x: u32, y: u32) -> &Vector3<f32> {
        &self.rays[y as usize * self.width as usize + x as usize]
    }

    #[inline(always)]
    pub fn ray_at(&self, index: usize) -> &Vector3<f32> {
        &self.rays[index]
    }

    /// Ray of an integer pixel continued over the sphere.
    #[inline(always)]
    /// East and north unit tangents at a pixel center.
    pub fn tangents(&self, x: u32, y: u32) -> (Vector3<f32>, Vector3<f32>) {
        let (sl, cl) = self.lon[x as usize];
        let (sp, cp) = self.lat[y as usize];
        (
            Vector3::new(cl, 0.0, -sl),
            Vector3::new(-sp * sl, -cp, -sp * cl),
        )
    }

    #[inline(always)]
    pub fn project(&self, d: &Vector3<f32>) -> Footprint {
        let (dx, dy, dz) = (d.x, d.y, d.z);
        let (q, a, b) = if dz > 0.0 && dx >= 0.0 {
            (0, dx, dz)
        } else if dx > 0.0 && dz <= 0.0 {
            (1, -dz, dx)
        } else if dz < 0.0 && dx <= 0.0 {
            (2, -dx, -dz)
        } else if dx < 0.0 && dz >= 0.0 {
            (3, dz, -dx)
        } else {
            (0, 0.0, 0.0)
        };
        let u = atan_quadrant(a, b) * self.cols_per_rad - 0.5;
        // quadrant q starts at longitude q*pi/2, i.e. (q + 2) quarters from x = -0.5
        let offset = (q + 2) % 4;
        let (col, fx) = match self.quarter {
            Some(quarter) => {
                let (f, frac) = floor_frac(u);
                (offset * quarter + f, frac)
            }
            None => floor_frac(offset as f32 * (FRAC_PI_2 * self.cols_per_rad) + u),
        };
        let horizontal = Float::sqrt(dx * dx + dz * dz);
        let polar = atan_quadrant(Float::abs(dy), horizontal);
        let lat = if dy > 0.0 { -polar } else { polar };
        let v = (FRAC_PI_2 - lat) * self.rows_per_rad - 0.5;
        let (row, fy) = floor_frac(v);
        Footprint {
            col: col.clamp(-1, self.width as i32 - 1),
            fx,
            row: row.clamp(-1, self.height as i32 - 1),
            fy,
        }
    }

    /// Lane-wise [`project`](Self::project), bit-identical to it for
    /// finite directions.
    #[inline(always)]
    pub fn project4(&self, dx: f32x4, dy: f32x4, dz: f32x4) -> Footprint4 {
        let zero = f32x4::ZERO;
        let m0 = dz.simd_gt(zero) & dx.simd_ge(zero);
        let m1 = dx.simd_gt(zero) & dz.simd_le(zero);
        let m2 = dz.simd_lt(zero) & dx.simd_le(zero);
        let m3 = dx.simd_lt(zero) & dz.simd_ge(zero);
        let a = m0.select(dx, m1.select(-dz, m2.select(-dx, m3.select(dz, zero))));
        let b = m0.select(dz, m1.select(dx, m2.select(-dz, m3.select(-dx, zero))));
        let quarters = |v: f32| f32x4::splat(v);
        let offset = m0.select(
            quarters(2.0),
            m1.select(quarters(3.0), m2.select(zero, m3.select(quarters(1.0), quarters(2.0)))),
        );
        let u = atan_quadrant4(a, b) * f32x4::splat(self.cols_per_rad) - f32x4::splat(0.5);
        let (col, fx) = match self.quarter {
            Some(quarter) => {
                let (f, frac) = floor_frac4(u);
                ((offset * f32x4::splat(quarter as f32)).fast_trunc_int() + f, frac)
            }
            None => floor_frac4(offset * f32x4::splat(FRAC_PI_2 * self.cols_per_rad) + u),
        };
        let horizontal = (dx * dx + dz * dz).sqrt();
        let polar = atan_quadrant4(dy.abs(), horizontal);
        let lat = dy.simd_gt(zero).select(-polar, polar);
        let v = (f32x4::splat(FRAC_PI_2) - lat) * f32x4::splat(self.rows_per_rad)
            - f32x4::splat(0.5);
        let (row, fy) = floor_frac4(v);
        let one = i32x4::splat(-1);
        Footprint4 {
            col: col.max(one).min(i32x4::splat(self.width as i32 - 1)),
            fx,
            row: row.max(one).min(i32x4::splat(self.height as i32 - 1)),
            fy,
        }
    }
}

/// Border width of [`PaddedImage`], in pixels.
pub(crate) const PAD: i32 = 64;

/// Gray raster with a spherical border of [`PAD`] pixels, so that bilinear
/// lookups near a footprint need no wrapping or clamping.
#[derive(Debug, Clone)]
pub(crate) struct PaddedImage {
    stride: usize,
    data: Vec<f32>,
}

impl PaddedImage {
    pub fn new(img: &GrayImage) -> Self {
        let (w, h) = (img.width() as i64, img.height() as i64);
        let p = PAD as i64;
        let mut data = Vec::with_capacity(((w + 2 * p) * (h + 2 * p)) as usize);
        for y in -p..h + p {
            for x in -p..w + p {
                data.push(img.get_spherical(x, y));
            }
        }
        PaddedImage {
            stride: (w + 2 * p) as usize,
            data,
        }
    }

    #[cfg(test)]
    pub fn sample(&self, fp: &Footprint) -> f32 {
        let i = (fp.row + PAD) as usize * self.stride + (fp.col + PAD) as usize;
        let (t, b) = (&self.data[i..i + 2], &self.data[i + self.stride..i + self.stride + 2]);
        let top = t[0] + fp.fx * (t[1] - t[0]);
        let bottom = b[0] + fp.fx * (b[1] - b[0]);
        top + fp.fy * (bottom - top)
    }

    /// Anchor for [`sample4`](Self::sample4) at an integer pixel.
    #[inline(always)]
    pub fn anchor(&self, col: i32, row: i32) -> i32 {
        row * self.stride as i32 + col
    }

    /// Bilinear samples `(x, y)` pixels away from an anchor, per lane.
    /// Offsets are clamped to `PAD - 2`, which also maps NaN to a finite
    /// offset.
    #[inline(always)]
    pub fn sample4(&self, anchor: i32, x: f32x4, y: f32x4) -> f32x4 {
        let lim = f32x4::splat((PAD - 2) as f32);
        let pad = f32x4::splat(PAD as f32);
        // both positive after the shift, so truncation is floor
        let xs = x.fast_max(-lim).fast_min(lim) + pad;
        let ys = y.fast_max(-lim).fast_min(lim) + pad;
        let (ix, iy) = (xs.fast_trunc_int(), ys.fast_trunc_int());
        let fx = xs - f32x4::from_i32x4(ix);
        let fy = ys - f32x4::from_i32x4(iy);
        let idx = (iy * i32x4::splat(self.stride as i32) + ix + i32x4::splat(anchor)).to_array();
        let mut corners = [[0.0f32; 4]; 4];
        for (l, &i) in idx.iter().enumerate() {
            let i = i as usize;
            let top = &self.data[i..i + 2];
            let bottom = &self.data[i + self.stride..i + self.stride + 2];
            corners[0][l] = top[0];
            corners[1][l] = top[1];
            corners[2][l] = bottom[0];
            corners[3][l] = bottom[1];
        }
        let [a, b, c, d] = corners.map(f32x4::new);
        let top = a + fx * (b - a);
        let bottom = c + fx * (d - c);
        top + fy * (bottom - top)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Point2;

    #[test]
    fn atan_quadrant_is_accurate() {
        let mut worst = 0.0f64;
        for i in 0..=2000 {
            let ang = i as f64 / 2000.0 * core::f64::consts::FRAC_PI_2;
            let (s, c) = ang.sin_cos();
            let got = atan_quadrant(s as f32, c as f32) as f64;
            worst = worst.max((got - ang).abs());
        }
        assert!(worst < 5e-6, "{worst}");
        assert_eq!(atan_quadrant(0.0, 0.0), 0.0);
    }

    #[test]
    fn projection_matches_exact_camera() {
        let cam = EquirectCamera::new(512, 256).unwrap();
        let grid = SphereGrid::new(&cam);
        let mut worst = 0.0f64;
        for k in 0..5000u32 {
            // deterministic scatter over the sphere
            let x = (k as f64 * 0.618_034 * 512.0) % 512.0;
            let y = 2.0 + (k as f64 * 0.414_213 * 252.0) % 252.0;
            let r = cam.pixel_to_ray(Point2::new(x, y)).unwrap() * 3.7;
            let fp = grid.project(&Vector3::new(r.x as f32, r.y as f32, r.z as f32));
            let exact = cam.ray_to_pixel(&r).unwrap();
            let mut dx = (fp.x() as f64 - exact.x).abs();
            dx = dx.min(512.0 - dx);
            worst = worst.max(dx).max((fp.y() as f64 - exact.y).abs());
        }
        assert!(worst < 2e-3, "worst {worst}");
    }

    #[test]
    fn grid_rays_match_camera() {
        let cam = EquirectCamera::new(64, 32).unwrap();
        let grid = SphereGrid::new(&cam);
        for y in 0..32 {
            for x in 0..64 {
                let a = cam.pixel_center_ray(x, y);
                let b = grid.ray(x, y);
                assert!((a.x - b.x as f64).abs() < 1e-6);
                assert!((a.y - b.y as f64).abs() < 1e-6);
                assert!((a.z - b.z as f64).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn quarter_roll_is_exact() {
        let cam = EquirectCamera::new(64, 32).unwrap();
        let grid = SphereGrid::new(&cam);
        let roll = |v: &Vector3<f32>| Vector3::new(v.z, v.y, -v.x);
        for y in 0..32 {
            for x in 0..48 {
                assert_eq!(roll(grid.ray(x, y)), *grid.ray(x + 16, y));
                let (e, n) = grid.tangents(x, y);
                let (e2, n2) = grid.tangents(x + 16, y);
                assert_eq!(roll(&e), e2);
                assert_eq!(roll(&n), n2);
            }
        }
        for k in 0..2000 {
            let d = Vector3::new(
                ((k * 37 % 101) as f32 - 50.0) / 7.0,
                ((k * 53 % 97) as f32 - 48.0) / 9.0,
                ((k * 71 % 89) as f32 - 44.0) / 5.0,
            );
            let a = grid.project(&d);
            let b = grid.project(&roll(&d));
            assert_eq!(a.fx, b.fx);
            assert_eq!(a.fy, b.fy);
            assert_eq!(a.row, b.row);
            assert_eq!((a.col + 16).rem_euclid(64), b.col.rem_euclid(64));
        }
    }

    #[test]
    fn lanes_match_scalar_projection() {
        for w in [64u32, 60] {
            let cam = EquirectCamera::new(w, w / 2).unwrap();
            let grid = SphereGrid::new(&cam);
            let dirs: Vec<Vector3<f32>> = (0..4003)
                .map(|k| {
                    Vector3::new(
                        ((k * 37 % 101) as f32 - 50.0) / 7.0,
                        ((k * 53 % 97) as f32 - 48.0) / 9.0,
                        ((k * 71 % 89) as f32 - 44.0) / 5.0,
                    )
                })
                .collect();
            for chunk in dirs.chunks_exact(4) {
                let lane = |f: fn(&Vector3<f32>) -> f32| f32x4::new(core::array::from_fn(|l| f(&chunk[l])));
                let v = grid.project4(lane(|d| d.x), lane(|d| d.y), lane(|d| d.z));
                for (l, d) in chunk.iter().enumerate() {
                    let s = grid.project(d);
                    assert_eq!(v.col.to_array()[l], s.col, "{d:?}");
                    assert_eq!(v.row.to_array()[l], s.row);
                    assert_eq!(v.fx.to_array()[l].to_bits(), s.fx.to_bits());
                    assert_eq!(v.fy.to_array()[l].to_bits(), s.fy.to_bits());
                }
            }
        }
    }

    #[test]
    fn padded_sampling_wraps_the_seam() {
        let img = GrayImage::from_values(8, 4, (0..32).map(|v| v as f32).collect()).unwrap();
        let pad = PaddedImage::new(&img);
        // halfway between column 7 and column 0 of row 1
        let fp = Footprint {
            col: 7,
            fx: 0.5,
            row: 1,
            fy: 0.0,
        };
        assert_eq!(pad.sample(&fp), 0.5 * (img.get(7, 1) + img.get(0, 1)));
        let fp = Footprint {
            col: -1,
            fx: 1.0,
            row: 0,
            fy: 0.0,
        };
        assert_eq!(pad.sample(&fp), img.get(0, 0));
        let a = pad.anchor(6, 0);
        let v = pad
            .sample4(a, f32x4::new([1.5, f32::NAN, 0.0, -2.0]), f32x4::new([1.0, 0.0, 0.0, 0.0]))
            .to_array();
        assert_eq!(v[0], 0.5 * (img.get(7, 1) + img.get(0, 1)));
        assert_eq!(v[1], img.get_spherical(-8, 0));
        assert_eq!(v[2], img.get(6, 0));
        assert_eq!(v[3], img.get(4, 0));
    }
}
