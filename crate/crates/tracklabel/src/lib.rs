//! File formats, parallel annotation, overlays and the command line for
//! `tracklabel-core`.
//!
//! The [`pipeline::annotate`] entry point reads a scene directory and a flow
//! directory, labels every projected vertex track and writes a track
//! dataset. [`cli::run`] is the `tracklabel` binary.

pub mod cli;
pub mod config;
pub mod container;
pub mod dataset;
pub mod formats;
pub mod metrics_io;
pub mod pipeline;
pub mod synth_io;
pub mod viz;
