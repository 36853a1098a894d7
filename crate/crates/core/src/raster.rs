//! Row-major equirectangular rasters.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: u32,
    height: u32,
    data: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: u32, height: u32) -> Self {
        RgbImage {
            width,
            height,
            data: vec![[0; 3]; width as usize * height as usize],
        }
    }

    /// `None` if `data.len() != width * height`.
    pub fn from_pixels(width: u32, height: u32, data: Vec<[u8; 3]>) -> Option<Self> {
        (data.len() == width as usize * height as usize).then_some(RgbImage {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.data
    }

    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let w = self.width as usize;
        self.data[y as usize * w + x as usize] = rgb;
    }

    /// Rec. 601 luma on a 0..255 scale.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .map(|&[r, g, b]| 0.299 * r as f32 + 0.587 * g as f32 + 0.114 * b as f32)
                .collect(),
        }
    }

    /// Box-filtered resize; exact integer factors average whole blocks.
    pub fn resize(&self, width: u32, height: u32) -> RgbImage {
        if width == self.width && height == self.height {
            return self.clone();
        }
        let channels: Vec<GrayImage> = (0..3)
            .map(|c| GrayImage {
                width: self.width,
                height: self.height,
                data: self.data.iter().map(|p| p[c] as f32).collect(),
            })
            .map(|g| g.resize(width, height))
            .collect();
        let data = (0..width as usize * height as usize)
            .map(|i| {
                let px = |c: usize| channels[c].data[i].round().clamp(0.0, 255.0) as u8;
                [px(0), px(1), px(2)]
            })
            .collect();
        RgbImage {
            width,
            height,
            data,
        }
    }

    /// Rolls every row right by `shift` columns (a longitude rotation).
    pub fn roll_columns(&self, shift: i64) -> RgbImage {
        RgbImage {
            width: self.width,
            height: self.height,
            data: roll(&self.data, self.width, self.height, shift),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<f32>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32) -> Self {
        GrayImage {
            width,
            height,
            data: vec![0.0; width as usize * height as usize],
        }
    }

    pub fn from_values(width: u32, height: u32, data: Vec<f32>) -> Option<Self> {
        (data.len() == width as usize * height as usize).then_some(GrayImage {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn values(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, x: u32, y: u32) -> f32 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, v: f32) {
        let w = self.width as usize;
        self.data[y as usize * w + x as usize] = v;
    }

    /// Value at integer coordinates continued over the sphere: columns wrap,
    /// rows past a pole reflect onto the opposite meridian.
    pub fn get_spherical(&self, x: i64, y: i64) -> f32 {
        let (x, y) = spherical_index(self.width, self.height, x, y);
        self.data[y * self.width as usize + x]
    }

    /// Area-weighted resampling.
    pub fn resize(&self, width: u32, height: u32) -> GrayImage {
        let horizontal = resample_axis(&self.data, self.width, self.height, width, true);
        let vertical = resample_axis(&horizontal, self.height, width, height, false);
        GrayImage {
            width,
            height,
            data: vertical,
        }
    }

    pub fn roll_columns(&self, shift: i64) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: roll(&self.data, self.width, self.height, shift),
        }
    }
}

/// Maps an integer pixel outside the raster back onto it, treating the
/// raster as a full sphere.
pub(crate) fn spherical_index(width: u32, height: u32, x: i64, y: i64) -> (usize, usize) {
    let (w, h) = (width as i64, height as i64);
    let (mut x, mut y) = (x, y);
    if y < 0 || y >= h {
        let period = 2 * h;
        y = y.rem_euclid(period);
        if y >= h {
            y = period - 1 - y;
            x += w / 2;
        }
    }
    (x.rem_euclid(w) as usize, y as usize)
}

fn roll<T: Copy>(data: &[T], width: u32, height: u32, shift: i64) -> Vec<T> {
    let w = width as usize;
    let s = shift.rem_euclid(width as i64) as usize;
    let mut out = Vec::with_capacity(data.len());
    for y in 0..height as usize {
        let row = &data[y * w..(y + 1) * w];
        out.extend_from_slice(&row[w - s..]);
        out.extend_from_slice(&row[..w - s]);
    }
    out
}

/// Area resampling along one axis of length `src_len`, repeated over `lines`
/// rows (horizontal) or columns (vertical).
fn resample_axis(data: &[f32], src_len: u32, lines: u32, dst: u32, horizontal: bool) -> Vec<f32> {
    let (src_len, lines) = (src_len as usize, lines as usize);
    let dst_len = dst as usize;
    let scale = src_len as f64 / dst_len as f64;
    let weights: Vec<Vec<(usize, f32)>> = (0..dst_len)
        .map(|i| {
            let lo = i as f64 * scale;
            let hi = (i + 1) as f64 * scale;
            let mut w = Vec::new();
            let mut s = lo.floor() as usize;
            while (s as f64) < hi && s < src_len {
                let overlap = (hi.min(s as f64 + 1.0) - lo.max(s as f64)).max(0.0);
                if overlap > 0.0 {
                    w.push((s, (overlap / scale) as f32));
                }
                s += 1;
            }
            w
        })
        .collect();
    let mut out = vec![0.0f32; dst_len * lines];
    for line in 0..lines {
        for (i, ws) in weights.iter().enumerate() {
            let mut acc = 0.0f32;
            for &(s, wt) in ws {
                let v = if horizontal {
                    data[line * src_len + s]
                } else {
                    data[s * lines + line]
                };
                acc += v * wt;
            }
            if horizontal {
                out[line * dst_len + i] = acc;
            } else {
                out[i * lines + line] = acc;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roll_moves_columns_right() {
        let img = GrayImage::from_values(4, 1, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(img.roll_columns(1).values(), &[3.0, 0.0, 1.0, 2.0]);
        assert_eq!(img.roll_columns(-1).values(), &[1.0, 2.0, 3.0, 0.0]);
        assert_eq!(img.roll_columns(4), img);
    }

    #[test]
    fn spherical_index_crosses_poles() {
        // one row above the top lands on row 0, half a turn away
        assert_eq!(spherical_index(8, 4, 1, -1), (5, 0));
        assert_eq!(spherical_index(8, 4, 1, 4), (5, 3));
        assert_eq!(spherical_index(8, 4, -1, 2), (7, 2));
        assert_eq!(spherical_index(8, 4, 9, 0), (1, 0));
    }

    #[test]
    fn resize_halves_by_averaging() {
        let img = GrayImage::from_values(4, 2, vec![0.0, 2.0, 4.0, 6.0, 2.0, 4.0, 6.0, 8.0])
            .unwrap();
        let half = img.resize(2, 1);
        assert_eq!(half.values(), &[2.0, 6.0]);
    }

    #[test]
    fn resize_identity_keeps_values() {
        let img = GrayImage::from_values(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let same = img.resize(3, 2);
        for (a, b) in same.values().iter().zip(img.values()) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}
