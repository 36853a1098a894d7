use alloc::vec::Vec;

use crate::depth::DepthPanorama;
use crate::error::ConfigError;

/// Invalidates depths that deviate from their neighborhood median by more
/// than `rel_threshold` (relative to the median). Surviving depths are
/// passed through untouched.
///
/// The median runs over the valid pixels of a `window x window` square;
/// columns wrap around the seam and rows stop at the poles.
pub fn median_outlier_filter(
    depth: &DepthPanorama,
    window: u32,
    rel_threshold: f32,
) -> Result<DepthPanorama, ConfigError> {
    if window < 3 || window.is_multiple_of(2) {
        return Err(ConfigError::new("patchmatch.median_window", "must be odd and >= 3"));
    }
    if !(rel_threshold > 0.0) {
        return Err(ConfigError::new("patchmatch.median_threshold", "must be > 0"));
    }
    let (w, h) = (depth.width() as i64, depth.height() as i64);
    let r = (window / 2) as i64;
    let mut out = depth.clone();
    let mut values = Vec::with_capacity((window * window) as usize);
    for y in 0..h {
        for x in 0..w {
            let Some(d) = depth.get(x as u32, y as u32) else {
                continue;
            };
            values.clear();
            for yy in (y - r).max(0)..=(y + r).min(h - 1) {
                for dx in -r..=r {
                    let xx = (x + dx).rem_euclid(w);
                    if let Some(v) = depth.get(xx as u32, yy as u32) {
                        values.push(v);
                    }
                }
            }
            values.sort_unstable_by(f32::total_cmp);
            let n = values.len();
            let median = if n % 2 == 1 {
                values[n / 2]
            } else {
                (values[n / 2 - 1] + values[n / 2]) * 0.5
            };
            if (d - median).abs() > rel_threshold * median {
                out.invalidate(x as u32, y as u32);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::EquirectCamera;

    #[test]
    fn constant_map_unchanged() {
        let cam = EquirectCamera::new(32, 16).unwrap();
        let d = DepthPanorama::constant(cam, 3.0);
        assert_eq!(median_outlier_filter(&d, 5, 0.1).unwrap(), d);
    }

    #[test]
    fn spike_removed() {
        let cam = EquirectCamera::new(32, 16).unwrap();
        let mut d = DepthPanorama::constant(cam, 2.0);
        d.set(0, 7, Some(20.0));
        let f = median_outlier_filter(&d, 3, 0.1).unwrap();
        assert_eq!(f.get(0, 7), None);
        assert_eq!(f.valid_count(), d.valid_count() - 1);
    }

    #[test]
    fn bad_window_rejected() {
        let cam = EquirectCamera::new(32, 16).unwrap();
        let d = DepthPanorama::constant(cam, 2.0);
        assert!(median_outlier_filter(&d, 4, 0.1).is_err());
        assert!(median_outlier_filter(&d, 1, 0.1).is_err());
    }
}
