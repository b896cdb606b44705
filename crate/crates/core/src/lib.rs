//! Pseudo-label generation for 2D point tracking from posed 3D meshes.
//!
//! The crate turns per-frame mesh vertex buffers into projected 2D tracks,
//! labels each sample visible or occluded by casting rays against every
//! mesh in the frame, and filters the tracks against dense forward/backward
//! optical flow. Trajectory complexity and diversity statistics and a
//! synthetic scene generator with analytic ground truth are included.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled. File formats, parallel execution and the command line live in
//! the companion `tracklabel` crate.

#![cfg_attr(not(feature = "std"), no_std)]
// Negated float comparisons are used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod flow_filter;
pub mod geom;
pub mod metrics;
pub mod scene;
pub mod sum;
pub mod synth;
pub mod visibility;

pub use flow_filter::{FilterParams, FilterReport, FlowSet};
pub use metrics::{MetricsConfig, MetricsReport};
pub use scene::{
    Camera, CameraSet, FaceTopology, FlowPair, FlowRaster, MeshFrame, MeshFrameSet, Person,
    SceneSequence, Track, TrackSample,
};
pub use visibility::{Accel, Bvh, Occluders, Ray};
