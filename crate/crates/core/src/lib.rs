//! Dense depth panoramas and fused point clouds from posed equirectangular
//! keyframes.
//!
//! The crate is `no_std` (with `alloc`) when built without the `std` feature.
//! All file formats, threading and the command line live in the `densify`
//! companion crate; everything here is pure computation over in-memory
//! rasters:
//!
//! * [`geometry`]: the equirectangular camera, rigid poses and plane/ray math.
//! * [`patchmatch`]: plane maps, the photoconsistency cost, red-black
//!   propagation, random refinement, plane-map warping and the median
//!   outlier filter.
//! * [`pipeline`]: view filter, sliding stereo buffer, multi-view consistency
//!   filter and buffered fusion.
//! * [`synth`]: analytic test scenes and the completeness / accuracy metrics.
//!
//! With the `parallel` feature the per-pixel work of one red-black pass is
//! spread over the current rayon pool. Results never depend on the number of
//! workers.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(a < b)` is used on purpose wherever a NaN must fail the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod depth;
pub mod error;
pub mod geometry;
pub mod patchmatch;
pub mod pipeline;
pub mod raster;
pub mod synth;

mod fastmath;
mod par;

pub use depth::DepthPanorama;
pub use error::{ConfigError, GeometryError};
pub use geometry::{EquirectCamera, PlaneHypothesis, RigidPose};
pub use raster::{GrayImage, RgbImage};
