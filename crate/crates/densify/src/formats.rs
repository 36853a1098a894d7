//! File formats: RGB PNG keyframes, binary PLY clouds and 16-bit PNG depth
//! maps with a JSON sidecar.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use densify_core::pipeline::{CloudPoint, FusedCloud};
use densify_core::{DepthPanorama, EquirectCamera, RgbImage};
use image::{ImageBuffer, Luma, Rgb};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn bad(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_owned(),
        message: message.into(),
    }
}

fn image_error(path: &Path, e: image::ImageError) -> Error {
    match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => bad(path, other.to_string()),
    }
}

pub fn read_rgb_png(path: &Path) -> Result<RgbImage> {
    let img = image::open(path).map_err(|e| image_error(path, e))?.to_rgb8();
    let (w, h) = img.dimensions();
    let pixels = img.pixels().map(|p| p.0).collect();
    Ok(RgbImage::from_pixels(w, h, pixels).expect("sizes match"))
}

pub fn write_rgb_png(path: &Path, image: &RgbImage) -> Result<()> {
    let raw: Vec<u8> = image.pixels().iter().flatten().copied().collect();
    let buf: ImageBuffer<Rgb<u8>, Vec<u8>> =
        ImageBuffer::from_raw(image.width(), image.height(), raw).expect("sizes match");
    buf.save(path).map_err(|e| image_error(path, e))
}

/// Vertex layout: x, y, z as float32 then red, green, blue as uint8.
const PLY_VERTEX_BYTES: usize = 15;

/// Writes `cloud` as binary little-endian PLY.
pub fn write_ply(path: &Path, cloud: &FusedCloud) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_ply_to(&mut out, cloud)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn write_ply_to(out: &mut impl Write, cloud: &FusedCloud) -> std::io::Result<()> {
    write!(
        out,
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\n\
         property float x\nproperty float y\nproperty float z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n",
        cloud.len()
    )?;
    let mut record = [0u8; PLY_VERTEX_BYTES];
    for p in &cloud.points {
        for (i, v) in p.position.iter().enumerate() {
            record[i * 4..i * 4 + 4].copy_from_slice(&(*v as f32).to_le_bytes());
        }
        record[12..].copy_from_slice(&p.color);
        out.write_all(&record)?;
    }
    Ok(())
}

/// Positions and colors of a PLY written by [`write_ply`]. Source ids are
/// not stored in the file and come back as 0.
pub fn read_ply(path: &Path) -> Result<Vec<CloudPoint>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let expected = [
        "format binary_little_endian 1.0",
        "property float x",
        "property float y",
        "property float z",
        "property uchar red",
        "property uchar green",
        "property uchar blue",
    ];
    let mut count = None;
    let mut seen = Vec::new();
    let mut line = String::new();
    loop {
        line.clear();
        let n = reader.read_line(&mut line).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            return Err(bad(path, "PLY header has no end_header"));
        }
        let l = line.trim_end();
        if l == "end_header" {
            break;
        }
        if let Some(c) = l.strip_prefix("element vertex ") {
            count = Some(c.parse::<usize>().map_err(|_| bad(path, "bad vertex count"))?);
        } else if l != "ply" && !l.starts_with("comment") {
            seen.push(l.to_owned());
        }
    }
    if seen != expected {
        return Err(bad(path, format!("unsupported PLY layout: {seen:?}")));
    }
    let count = count.ok_or_else(|| bad(path, "PLY header has no vertex element"))?;
    let mut record = [0u8; PLY_VERTEX_BYTES];
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        reader
            .read_exact(&mut record)
            .map_err(|e| Error::io(path, e))?;
        let f = |i: usize| f32::from_le_bytes(record[i * 4..i * 4 + 4].try_into().expect("4 bytes"));
        points.push(CloudPoint {
            position: Vector3::new(f(0) as f64, f(1) as f64, f(2) as f64),
            color: [record[12], record[13], record[14]],
            source: 0,
        });
    }
    Ok(points)
}

/// Meters per stored depth unit.
pub const DEPTH_SCALE: f64 = 0.001;

/// Describes a depth PNG: value `v > 0` means `v * scale` meters, 0 means
/// no depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthSidecar {
    pub id: u64,
    pub width: u32,
    pub height: u32,
    /// meters per unit
    pub scale: f64,
    pub invalid_value: u16,
    pub valid_count: usize,
    /// meters, over valid pixels; absent when nothing is valid
    pub min: Option<f64>,
    pub max: Option<f64>,
}

fn quantize(d: f32) -> u16 {
    (d as f64 / DEPTH_SCALE).round().clamp(1.0, u16::MAX as f64) as u16
}

/// Writes `<stem>.png` (16-bit millimeters) and `<stem>.json`.
pub fn write_depth(dir: &Path, stem: &str, id: u64, depth: &DepthPanorama) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let raw: Vec<u16> = depth.values().iter().map(|d| d.map_or(0, quantize)).collect();
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(depth.width(), depth.height(), raw.clone()).expect("sizes match");
    let png = dir.join(format!("{stem}.png"));
    buf.save(&png).map_err(|e| image_error(&png, e))?;
    let stored = raw.iter().filter(|v| **v != 0).map(|v| *v as f64 * DEPTH_SCALE);
    let sidecar = DepthSidecar {
        id,
        width: depth.width(),
        height: depth.height(),
        scale: DEPTH_SCALE,
        invalid_value: 0,
        valid_count: depth.valid_count(),
        min: stored.clone().reduce(f64::min),
        max: stored.reduce(f64::max),
    };
    let json = dir.join(format!("{stem}.json"));
    fs::write(&json, serde_json::to_string_pretty(&sidecar).expect("serializes"))
        .map_err(|e| Error::io(&json, e))
}

/// Reads a depth PNG written by [`write_depth`] (the sidecar is not
/// needed).
pub fn read_depth(path: &Path) -> Result<DepthPanorama> {
    let img = image::open(path).map_err(|e| image_error(path, e))?;
    let luma = match img {
        image::DynamicImage::ImageLuma16(b) => b,
        other => return Err(bad(path, format!("expected 16-bit grey, got {:?}", other.color()))),
    };
    let (w, h) = luma.dimensions();
    let camera = EquirectCamera::new(w, h).map_err(|e| bad(path, e.to_string()))?;
    let values = luma
        .pixels()
        .map(|p| (p.0[0] != 0).then(|| (p.0[0] as f64 * DEPTH_SCALE) as f32))
        .collect();
    Ok(DepthPanorama::from_values(camera, values).expect("sizes match"))
}
