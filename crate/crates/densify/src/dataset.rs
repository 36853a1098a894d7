//! The on-disk dataset: a directory with a `dataset.json` manifest and the
//! keyframe images it names.
//!
//! ```json
//! {
//!   "camera": { "width": 512, "height": 256 },
//!   "keyframes": [
//!     {
//!       "id": 0,
//!       "image": "images/000000.png",
//!       "rotation": [1, 0, 0, 0, 1, 0, 0, 0, 1],
//!       "translation": [0.0, 0.0, -1.5],
//!       "sparse_points": [[0.2, -1.5, 0.7]],
//!       "ground_truth_depth": "depth/000000.png"
//!     }
//!   ]
//! }
//! ```
//!
//! `rotation` (row-major) and `translation` map camera to world
//! coordinates, in meters. Images are 8-bit RGB PNGs of exactly the camera
//! size; paths are relative to the dataset directory. Ids must strictly
//! increase. `ground_truth_depth` is optional and only used by evaluation.

use std::fs;
use std::path::{Path, PathBuf};

use densify_core::pipeline::Keyframe;
use densify_core::{EquirectCamera, RigidPose};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::formats::read_rgb_png;

pub const MANIFEST: &str = "dataset.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraEntry {
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyframeEntry {
    pub id: u64,
    pub image: String,
    pub rotation: [f64; 9],
    pub translation: [f64; 3],
    pub sparse_points: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth_depth: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub camera: CameraEntry,
    pub keyframes: Vec<KeyframeEntry>,
}

impl KeyframeEntry {
    pub fn pose(&self) -> std::result::Result<RigidPose, densify_core::GeometryError> {
        RigidPose::new(
            Matrix3::from_row_slice(&self.rotation),
            Vector3::from(self.translation),
        )
    }

    pub fn from_pose(id: u64, image: String, pose: &RigidPose, points: &[Vector3<f64>]) -> Self {
        let r = pose.rotation();
        KeyframeEntry {
            id,
            image,
            rotation: core::array::from_fn(|i| r[(i / 3, i % 3)]),
            translation: (*pose.translation()).into(),
            sparse_points: points.iter().map(|p| (*p).into()).collect(),
            ground_truth_depth: None,
        }
    }
}

/// A validated manifest together with its directory. Images are read on
/// demand.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub camera: EquirectCamera,
    pub manifest: Manifest,
    pub poses: Vec<RigidPose>,
    /// hex SHA-256 of the manifest bytes
    pub manifest_sha256: String,
}

fn invalid(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_owned(),
        message: message.into(),
    }
}

impl Dataset {
    pub fn load(root: &Path) -> Result<Dataset> {
        let path = root.join(MANIFEST);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: Manifest =
            serde_json::from_slice(&bytes).map_err(|e| invalid(&path, e.to_string()))?;
        let camera = EquirectCamera::new(manifest.camera.width, manifest.camera.height)
            .map_err(|e| invalid(&path, format!("camera: {e}")))?;
        let mut poses = Vec::with_capacity(manifest.keyframes.len());
        let mut previous: Option<u64> = None;
        for (i, kf) in manifest.keyframes.iter().enumerate() {
            let at = |what: String| invalid(&path, format!("keyframes[{i}] (id {}): {what}", kf.id));
            if previous.is_some_and(|p| kf.id <= p) {
                return Err(at(format!("id must be greater than {}", previous.unwrap())));
            }
            previous = Some(kf.id);
            if kf.image.is_empty() {
                return Err(at("image path is empty".into()));
            }
            if kf.sparse_points.iter().flatten().any(|v| !v.is_finite()) {
                return Err(at("sparse_points contain a non-finite value".into()));
            }
            poses.push(kf.pose().map_err(|e| at(format!("pose: {e}")))?);
        }
        Ok(Dataset {
            root: root.to_owned(),
            camera,
            manifest,
            poses,
            manifest_sha256: hex(&Sha256::digest(&bytes)),
        })
    }

    pub fn len(&self) -> usize {
        self.manifest.keyframes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.manifest.keyframes.is_empty()
    }

    /// Reads keyframe `index` and checks its image size.
    pub fn keyframe(&self, index: usize) -> Result<Keyframe> {
        let entry = &self.manifest.keyframes[index];
        let path = self.root.join(&entry.image);
        let image = read_rgb_png(&path)?;
        if (image.width(), image.height()) != (self.camera.width(), self.camera.height()) {
            return Err(invalid(
                &path,
                format!(
                    "image is {}x{}, the camera is {}x{}",
                    image.width(),
                    image.height(),
                    self.camera.width(),
                    self.camera.height()
                ),
            ));
        }
        Ok(Keyframe {
            id: entry.id,
            image,
            pose: self.poses[index],
            sparse_points: entry.sparse_points.iter().map(|p| Vector3::from(*p)).collect(),
        })
    }
}

pub fn write_manifest(root: &Path, manifest: &Manifest) -> Result<()> {
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let path = root.join(MANIFEST);
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
