use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("camera must be 2:1 with non-zero size, got {width}x{height}")]
    BadCameraSize { width: u32, height: u32 },
    #[error("pixel ({x}, {y}) is outside the {width}x{height} panorama")]
    PixelOutOfBounds {
        x: f64,
        y: f64,
        width: u32,
        height: u32,
    },
    #[error("direction vector has zero length")]
    ZeroDirection,
    #[error("rotation is not orthonormal with determinant +1 (deviation {deviation:e})")]
    NotARotation { deviation: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("pose lies outside the scene geometry")]
    OutsideScene,
}

/// A configuration value that violates its invariant. `key` is the dotted
/// config path (for example `view_filter.theta_min`).
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid configuration `{key}`: {constraint}")]
pub struct ConfigError {
    pub key: String,
    pub constraint: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, constraint: impl Into<String>) -> Self {
        ConfigError {
            key: key.into(),
            constraint: constraint.into(),
        }
    }
}
