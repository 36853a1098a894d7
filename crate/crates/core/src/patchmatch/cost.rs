use alloc::vec::Vec;

use nalgebra::{Matrix3, Vector3};
#[allow(unused_imports)]
use num_traits::Float;
use wide::f32x4;

use super::{PatchSpec, StereoGroup};
use crate::fastmath::{dot3, PaddedImage, SphereGrid};
use crate::geometry::{PlaneHypothesis, RigidPose};

/// Reference patches whose intensity standard deviation is below this (on a
/// 0..255 scale) carry no texture to match and always cost the truncation.
const MIN_PATCH_STDDEV: f32 = 0.5;

struct NeighborView {
    image: PaddedImage,
    /// reference camera frame -> neighbor camera frame
    rotation: Matrix3<f32>,
    translation: Vector3<f32>,
}

/// Precomputed matching state for one stereo group: reference patch
/// statistics, sample rays and the neighbors' padded images and relative
/// poses.
pub struct GroupMatcher {
    grid: SphereGrid,
    samples: usize,
    /// lane blocks per patch, `samples` rounded up
    blocks: usize,
    /// linear pixel indices of the 3x3 control samples (corners, edge
    /// midpoints, center, row-major), 9 per reference pixel
    control_index: Vec<u32>,
    /// zero-mean, unit-norm reference intensities, `blocks` per pixel with
    /// zero padding
    reference: Vec<f32x4>,
    textured: Vec<bool>,
    neighbors: [NeighborView; 2],
    truncation: f32,
    /// biquadratic interpolation weights of control `k` for the samples of
    /// block `b`, at `k * blocks + b`
    weights: Vec<f32x4>,
    /// 1 for real samples, 0 for padding
    mask: Vec<f32x4>,
}

const LANES: usize = 4;

impl GroupMatcher {
    pub fn new(group: &StereoGroup, spec: &PatchSpec) -> Self {
        let camera = group.camera();
        let grid = SphereGrid::new(camera);
        let offsets = spec.offsets();
        let samples = offsets.len();
        let (w, h) = (camera.width(), camera.height());
        let img = &group.reference().image;
        let n = camera.pixel_count();
        let blocks = samples.div_ceil(LANES);
        let slots = blocks * LANES;
        let side = (samples as f64).sqrt() as usize;
        let mid = side / 2;
        let last = side - 1;
        let mut control = [0; 9];
        for (k, c) in control.iter_mut().enumerate() {
            *c = [0, mid, last][k / 3] * side + [0, mid, last][k % 3];
        }
        let mut control_index = Vec::with_capacity(n * 9);
        let mut reference = Vec::with_capacity(n * blocks);
        let mut padded = alloc::vec![0.0f32; slots];
        let mut textured = Vec::with_capacity(n);
        let min_norm2 = MIN_PATCH_STDDEV * MIN_PATCH_STDDEV * samples as f32;
        let mut values = Vec::with_capacity(samples);
        let mut index = Vec::with_capacity(samples);
        for y in 0..h as i64 {
            for x in 0..w as i64 {
                values.clear();
                index.clear();
                for &(dx, dy) in &offsets {
                    let (sx, sy) =
                        crate::raster::spherical_index(w, h, x + dx as i64, y + dy as i64);
                    index.push((sy * w as usize + sx) as u32);
                    values.push(img.get(sx as u32, sy as u32));
                }
                control_index.extend(control.iter().map(|&k| index[k]));
                let mean = values.iter().sum::<f32>() / samples as f32;
                let norm2: f32 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
                padded.fill(0.0);
                if norm2 < min_norm2 {
                    textured.push(false);
                } else {
                    textured.push(true);
                    let inv = 1.0 / Float::sqrt(norm2);
                    for (p, v) in padded.iter_mut().zip(&values) {
                        *p = (v - mean) * inv;
                    }
                }
                reference.extend(
                    padded
                        .chunks_exact(LANES)
                        .map(|c| f32x4::new(c.try_into().expect("lane sized"))),
                );
            }
        }
        let ref_pose = &group.reference().pose;
        let neighbors = group.neighbors().clone().map(|nb| {
            let rel = RigidPose::relative(ref_pose, &nb.pose);
            NeighborView {
                image: PaddedImage::new(&nb.image),
                rotation: rel.rotation().map(|v| v as f32),
                translation: rel.translation().map(|v| v as f32),
            }
        });
        // Lagrange weights on nodes -1, 0, 1
        let axis: Vec<[f32; 3]> = (0..side)
            .map(|i| {
                let t = if side > 1 { (i as f32 - mid as f32) / mid as f32 } else { 0.0 };
                [0.5 * t * (t - 1.0), 1.0 - t * t, 0.5 * t * (t + 1.0)]
            })
            .collect();
        let slot_weight = |k: usize, s: usize| {
            if s < samples {
                axis[s / side][k / 3] * axis[s % side][k % 3]
            } else {
                0.0
            }
        };
        let weights = (0..9 * blocks)
            .map(|i| {
                f32x4::new(core::array::from_fn(|l| {
                    slot_weight(i / blocks, (i % blocks) * LANES + l)
                }))
            })
            .collect();
        let mask = (0..blocks)
            .map(|b| {
                f32x4::new(core::array::from_fn(|l| {
                    if b * LANES + l < samples {
                        1.0
                    } else {
                        0.0
                    }
                }))
            })
            .collect();
        GroupMatcher {
            grid,
            samples,
            blocks,
            control_index,
            reference,
            textured,
            neighbors,
            truncation: spec.cost_truncation,
            weights,
            mask,
        }
    }

    pub fn truncation(&self) -> f32 {
        self.truncation
    }

    pub(crate) fn grid(&self) -> &SphereGrid {
        &self.grid
    }

    pub fn is_textured(&self, x: u32, y: u32) -> bool {
        self.textured[y as usize * self.grid.width() as usize + x as usize]
    }

    /// Matching cost of `plane` at reference pixel `(x, y)`, in
    /// `[0, truncation]`.
    pub fn cost(&self, x: u32, y: u32, plane: &PlaneHypothesis) -> f32 {
        self.cost_below(x, y, plane, f32::INFINITY)
    }

    /// Like [`cost`](Self::cost), but may stop early and return
    /// `f32::INFINITY` once the cost is known to be `>= bound`.
    pub fn cost_below(&self, x: u32, y: u32, plane: &PlaneHypothesis, bound: f32) -> f32 {
        let pixel = y as usize * self.grid.width() as usize + x as usize;
        if !self.textured[pixel] {
            return self.truncation;
        }
        let n = &plane.normal;
        let facing = dot3(n, self.grid.ray_at(pixel));
        // n . X0 for the plane point on the center ray
        let offset = plane.depth * facing;
        if !(facing < 0.0 && offset < 0.0) {
            return self.truncation;
        }
        let first = self.neighbor_cost(pixel, n, offset, &self.neighbors[0]);
        if first * 0.5 >= bound {
            return f32::INFINITY;
        }
        let second = self.neighbor_cost(pixel, n, offset, &self.neighbors[1]);
        (first + second) * 0.5
    }

    fn neighbor_cost(
        &self,
        pixel: usize,
        n: &Vector3<f32>,
        offset: f32,
        view: &NeighborView,
    ) -> f32 {
        // Plane-induced map from reference rays to neighbor directions:
        // H = R + t n^T / (n . X0). For a reference ray q hitting the plane at
        // lambda * q with lambda > 0, H q is parallel to the neighbor-frame
        // point R (lambda q) + t.
        let r = &view.rotation;
        let t = view.translation;
        let tn = Vector3::new(t.x / offset, t.y / offset, t.z / offset);
        let hm = Matrix3::new(
            r[(0, 0)] + tn.x * n.x,
            r[(0, 1)] + tn.x * n.y,
            r[(0, 2)] + tn.x * n.z,
            r[(1, 0)] + tn.y * n.x,
            r[(1, 1)] + tn.y * n.y,
            r[(1, 2)] + tn.y * n.z,
            r[(2, 0)] + tn.z * n.x,
            r[(2, 1)] + tn.z * n.y,
            r[(2, 2)] + tn.z * n.z,
        );
        let controls = &self.control_index[pixel * 9..pixel * 9 + 9];
        let reference = &self.reference[pixel * self.blocks..(pixel + 1) * self.blocks];
        // facing is linear in the ray, so the control rays bound the patch
        for &idx in controls {
            if dot3(n, self.grid.ray_at(idx as usize)) >= 0.0 {
                return self.truncation;
            }
        }
        // Exact footprints of the control samples, four per batch (the last
        // batch repeats the center); the others are placed by quadratic
        // interpolation.
        let mut col = [0i32; 12];
        let mut fx = [0.0f32; 12];
        let mut row = [0i32; 12];
        let mut fy = [0.0f32; 12];
        for batch in 0..3 {
            let q: [&Vector3<f32>; 4] = core::array::from_fn(|l| {
                let k = batch * 4 + l;
                self.grid.ray_at(controls[if k < 9 { k } else { 4 }] as usize)
            });
            let lane = |f: &dyn Fn(&Vector3<f32>) -> f32| f32x4::new(core::array::from_fn(|l| f(q[l])));
            let (qx, qy, qz) = (lane(&|v| v.x), lane(&|v| v.y), lane(&|v| v.z));
            let h = |i: usize, j: usize| f32x4::splat(hm[(i, j)]);
            let fp = self.grid.project4(
                (h(0, 0) * qx + h(0, 2) * qz) + h(0, 1) * qy,
                (h(1, 0) * qx + h(1, 2) * qz) + h(1, 1) * qy,
                (h(2, 0) * qx + h(2, 2) * qz) + h(2, 1) * qy,
            );
            let at = batch * 4..batch * 4 + 4;
            col[at.clone()].copy_from_slice(&fp.col.to_array());
            fx[at.clone()].copy_from_slice(&fp.fx.to_array());
            row[at.clone()].copy_from_slice(&fp.row.to_array());
            fy[at].copy_from_slice(&fp.fy.to_array());
        }
        // Coordinates relative to the center control's pixel never straddle
        // the seam.
        let w = self.grid.width() as i32;
        let mut cx = [0.0f32; 9];
        let mut cy = [0.0f32; 9];
        for k in 0..9 {
            let mut dc = col[k] - col[4];
            if dc > w / 2 {
                dc -= w;
            } else if dc < -w / 2 {
                dc += w;
            }
            cx[k] = dc as f32 + fx[k];
            cy[k] = (row[k] - row[4]) as f32 + fy[k];
        }
        let anchor = view.image.anchor(col[4], row[4]);
        let (mut sb, mut sbb, mut sab) = (f32x4::ZERO, f32x4::ZERO, f32x4::ZERO);
        for (b, (mask, reference)) in self.mask.iter().zip(reference).enumerate() {
            let (mut xs, mut ys) = (f32x4::ZERO, f32x4::ZERO);
            for k in 0..9 {
                let wk = self.weights[k * self.blocks + b];
                xs += wk * f32x4::splat(cx[k]);
                ys += wk * f32x4::splat(cy[k]);
            }
            let v = view.image.sample4(anchor, xs, ys) * *mask;
            sb += v;
            sbb += v * v;
            sab += *reference * v;
        }
        let (sb, sbb, sab) = (sb.reduce_add(), sbb.reduce_add(), sab.reduce_add());
        let count = self.samples as f32;
        let var = sbb - sb * sb / count;
        if !(var > MIN_PATCH_STDDEV * MIN_PATCH_STDDEV * count) {
            return self.truncation;
        }
        let ncc = sab / Float::sqrt(var);
        (1.0 - ncc).clamp(0.0, self.truncation)
    }
}

/// One-off cost evaluation; builds a [`GroupMatcher`] for the group.
pub fn patch_cost(
    group: &StereoGroup,
    x: u32,
    y: u32,
    plane: &PlaneHypothesis,
    spec: &PatchSpec,
) -> f32 {
    GroupMatcher::new(group, spec).cost(x, y, plane)
}
