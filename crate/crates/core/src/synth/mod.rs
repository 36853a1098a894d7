//! Analytic test scenes with exact ground-truth depth, plus the
//! completeness and accuracy metrics used to evaluate reconstructions.

mod landmarks;
mod metrics;
mod render;
mod scene;

pub use landmarks::{is_visible, sparse_landmarks};
pub use metrics::{
    accuracy, completeness, completeness_at, completeness_camera, point_depth_raster,
    AccuracyReport, CompletenessReport, ResolutionMismatch, COMPLETENESS_HEIGHT,
    COMPLETENESS_WIDTH, INLIER_REL_ERROR,
};
pub use render::{add_noise, render_scene, RenderedView, SUPERSAMPLE};
pub use scene::{Hit, SceneKind, SyntheticScene, Texture};
