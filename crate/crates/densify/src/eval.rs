//! Evaluation of a finished run against its dataset.

use std::fs;
use std::path::Path;

use densify_core::synth::{accuracy, completeness, AccuracyReport, CompletenessReport};
use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::formats::{read_depth, read_ply};
use crate::run::{depth_stem, CLOUD_FILE, DEPTH_DIR};

pub const EVAL_FILE: &str = "eval.json";
pub const COMPLETENESS_CSV: &str = "completeness.csv";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthAccuracy {
    pub id: u64,
    /// `None` when the saved map and the ground truth differ in size
    pub report: Option<AccuracyReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub points: usize,
    pub completeness: CompletenessReport,
    pub mean_completeness: f64,
    /// saved depth maps that have ground truth
    pub depth_accuracy: Vec<DepthAccuracy>,
}

/// Completeness of `out/cloud.ply` at every keyframe pose and, for
/// synthetic datasets run with saved depth maps, per-map depth accuracy.
/// Writes `eval.json` and `completeness.csv` into `out`.
pub fn evaluate(dataset: &Dataset, out: &Path) -> Result<EvalReport> {
    let cloud = read_ply(&out.join(CLOUD_FILE))?;
    let positions: Vec<_> = cloud.iter().map(|p| p.position).collect();
    let completeness = completeness(&positions, &dataset.poses);
    let mut depth_accuracy = Vec::new();
    for kf in &dataset.manifest.keyframes {
        let Some(gt) = &kf.ground_truth_depth else {
            continue;
        };
        let saved = out.join(DEPTH_DIR).join(format!("{}.png", depth_stem(kf.id)));
        if !saved.exists() {
            continue;
        }
        let prediction = read_depth(&saved)?;
        let truth = read_depth(&dataset.root.join(gt))?;
        depth_accuracy.push(DepthAccuracy {
            id: kf.id,
            report: accuracy(&prediction, &truth).ok(),
        });
    }
    let report = EvalReport {
        points: cloud.len(),
        mean_completeness: completeness.mean(),
        completeness,
        depth_accuracy,
    };
    let json = out.join(EVAL_FILE);
    fs::write(&json, serde_json::to_string_pretty(&report).expect("serializes"))
        .map_err(|e| Error::io(&json, e))?;
    let mut csv = String::from("id,completeness\n");
    for (kf, c) in dataset.manifest.keyframes.iter().zip(&report.completeness.per_keyframe) {
        csv.push_str(&format!("{},{c}\n", kf.id));
    }
    let csv_path = out.join(COMPLETENESS_CSV);
    fs::write(&csv_path, csv).map_err(|e| Error::io(&csv_path, e))?;
    Ok(report)
}
