//! Synthetic datasets with exact poses, landmarks and ground-truth depth.

use std::fs;
use std::path::Path;

use densify_core::synth::{render_scene, sparse_landmarks, SyntheticScene};
use densify_core::{EquirectCamera, RigidPose};

use crate::dataset::{write_manifest, CameraEntry, KeyframeEntry, Manifest};
use crate::error::{Error, Result};
use crate::formats::{write_depth, write_rgb_png};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthOptions {
    pub keyframes: usize,
    /// landmarks per keyframe
    pub sparse_density: usize,
    /// meters between consecutive poses
    pub step: f64,
    pub camera: EquirectCamera,
    pub seed: u64,
    /// also write 16-bit ground-truth depth maps
    pub ground_truth: bool,
}

impl SynthOptions {
    pub fn new(keyframes: usize, camera: EquirectCamera) -> Self {
        SynthOptions {
            keyframes,
            sparse_density: 300,
            step: 0.5,
            camera,
            seed: 1,
            ground_truth: true,
        }
    }
}

/// Renders `scene` along its in-and-out trajectory and writes a dataset
/// directory. Returns the poses.
pub fn make_dataset(scene: &SyntheticScene, options: &SynthOptions, out: &Path) -> Result<Vec<RigidPose>> {
    if options.keyframes < 3 {
        return Err(densify_core::ConfigError::new("synth.keyframes", "must be >= 3").into());
    }
    let format_error = |message: String| Error::Format {
        path: out.to_owned(),
        message,
    };
    let poses = scene
        .in_and_out(options.keyframes, options.step)
        .map_err(|e| format_error(format!("trajectory: {e}")))?;
    let landmarks = sparse_landmarks(scene, &poses, options.sparse_density, options.seed);
    let images = out.join("images");
    fs::create_dir_all(&images).map_err(|e| Error::io(&images, e))?;
    let mut entries = Vec::with_capacity(poses.len());
    for (i, (pose, points)) in poses.iter().zip(&landmarks).enumerate() {
        let view = render_scene(scene, &options.camera, pose)
            .map_err(|e| format_error(format!("render {i}: {e}")))?;
        let name = format!("{i:06}");
        let image = format!("images/{name}.png");
        write_rgb_png(&out.join(&image), &view.image)?;
        let mut entry = KeyframeEntry::from_pose(i as u64, image, pose, points);
        if options.ground_truth {
            write_depth(&out.join("ground_truth"), &name, i as u64, &view.depth)?;
            entry.ground_truth_depth = Some(format!("ground_truth/{name}.png"));
        }
        entries.push(entry);
        log::debug!("rendered keyframe {i}");
    }
    write_manifest(
        out,
        &Manifest {
            camera: CameraEntry {
                width: options.camera.width(),
                height: options.camera.height(),
            },
            keyframes: entries,
        },
    )?;
    Ok(poses)
}
