//! Engine configuration: defaults, file loading (TOML or JSON), command-line
//! overrides and validation.
//!
//! Every section and key is optional; missing values take the defaults
//! below and unknown keys are rejected. The file format is chosen by
//! extension: `.json` is JSON, anything else TOML.

use std::fs;
use std::path::{Path, PathBuf};

use densify_core::patchmatch::{DepthRange, PatchMatchParams, PatchSpec, RefineSchedule};
use densify_core::pipeline::{
    ConsistencyConfig, DepthStageConfig, FusionConfig, MedianConfig, PipelineConfig,
    ViewFilterConfig,
};
use densify_core::{ConfigError, EquirectCamera};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub view_filter: ViewFilterConfig,
    pub patchmatch: PatchMatchConfig,
    pub consistency: ConsistencyConfig,
    pub fusion: FusionConfig,
    pub processing: ProcessingConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PatchMatchConfig {
    pub half_window: u32,
    pub sample_stride: u32,
    pub cost_truncation: f64,
    pub iterations: u32,
    /// meters
    pub depth_min: f64,
    /// meters
    pub depth_max: f64,
    /// meters; a quarter of the depth range when absent
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth_perturbation: Option<f64>,
    pub normal_perturbation_deg: f64,
    /// pixels with a higher final cost get no depth
    pub max_cost: f64,
    pub median_filter: bool,
    pub median_window: u32,
    pub median_threshold: f64,
    pub warp: bool,
    /// at most 2^63 - 1
    pub seed: u64,
}

impl Default for PatchMatchConfig {
    fn default() -> Self {
        let spec = PatchSpec::default();
        let median = MedianConfig::default();
        // decimal literals rather than widened f32 defaults, so the echoed
        // config reads cleanly
        PatchMatchConfig {
            half_window: spec.half_window,
            sample_stride: spec.sample_stride,
            cost_truncation: 1.2,
            iterations: 6,
            depth_min: 0.3,
            depth_max: 30.0,
            depth_perturbation: None,
            normal_perturbation_deg: 60.0,
            max_cost: 0.5,
            median_filter: true,
            median_window: median.window,
            median_threshold: 0.05,
            warp: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProcessingConfig {
    /// `WxH` depth map resolution; the dataset resolution when absent
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// write every consistency-filtered depth map as a 16-bit PNG
    pub save_depth: bool,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub no_warp: bool,
    pub save_depth: bool,
    pub resolution: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigLoadError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Invalid(#[from] ConfigError),
}

/// Parses `WxH`, for example `512x256`.
pub fn parse_resolution(s: &str) -> Result<EquirectCamera, ConfigError> {
    let bad = |why: &str| ConfigError::new("processing.resolution", format!("`{s}`: {why}"));
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| bad("expected WIDTHxHEIGHT"))?;
    let w: u32 = w.trim().parse().map_err(|_| bad("width is not a number"))?;
    let h: u32 = h.trim().parse().map_err(|_| bad("height is not a number"))?;
    EquirectCamera::new(w, h).map_err(|e| bad(&e.to_string()))
}

impl EngineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn from_json_str(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(seed) = overrides.seed {
            self.patchmatch.seed = seed;
        }
        if overrides.no_warp {
            self.patchmatch.warp = false;
        }
        if overrides.save_depth {
            self.output.save_depth = true;
        }
        if let Some(r) = &overrides.resolution {
            self.processing.resolution = Some(r.clone());
        }
    }

    /// Processing camera, or `None` to use the dataset resolution.
    pub fn processing_camera(&self) -> Result<Option<EquirectCamera>, ConfigError> {
        self.processing.resolution.as_deref().map(parse_resolution).transpose()
    }

    /// Checks every invariant and converts to the engine's types.
    pub fn pipeline_config(&self) -> Result<PipelineConfig, ConfigError> {
        self.view_filter.validate()?;
        self.consistency.validate()?;
        self.fusion.validate()?;
        self.processing_camera()?;
        let pm = &self.patchmatch;
        if pm.seed > i64::MAX as u64 {
            return Err(ConfigError::new("patchmatch.seed", "must be < 2^63"));
        }
        let patch = PatchSpec {
            half_window: pm.half_window,
            sample_stride: pm.sample_stride,
            cost_truncation: pm.cost_truncation as f32,
        };
        let depth = DepthRange::new(pm.depth_min as f32, pm.depth_max as f32)?;
        let mut params = PatchMatchParams::new(patch, pm.iterations, depth, pm.seed);
        params.refine = RefineSchedule {
            depth_step: pm
                .depth_perturbation
                .map_or(params.refine.depth_step, |v| v as f32),
            normal_radius_deg: pm.normal_perturbation_deg as f32,
        };
        params.max_cost = pm.max_cost as f32;
        let depth = DepthStageConfig {
            params,
            warp: pm.warp,
            median: pm.median_filter.then_some(MedianConfig {
                window: pm.median_window,
                rel_threshold: pm.median_threshold as f32,
            }),
        };
        depth.validate()?;
        Ok(PipelineConfig {
            view_filter: self.view_filter,
            depth,
            consistency: self.consistency,
            fusion: self.fusion,
        })
    }
}

fn read(path: &Path) -> Result<EngineConfig, ConfigLoadError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigLoadError::Read {
        path: path.to_owned(),
        source,
    })?;
    let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        EngineConfig::from_json_str(&text)
    } else {
        EngineConfig::from_toml_str(&text)
    };
    parsed.map_err(|message| ConfigLoadError::Parse {
        path: path.to_owned(),
        message,
    })
}

/// Defaults, then the file (if any), then `overrides`; the result is
/// validated.
pub fn load_config(
    path: Option<&Path>,
    overrides: &Overrides,
) -> Result<EngineConfig, ConfigLoadError> {
    let mut config = match path {
        Some(p) => read(p)?,
        None => EngineConfig::default(),
    };
    config.apply(overrides);
    config.pipeline_config()?;
    Ok(config)
}
