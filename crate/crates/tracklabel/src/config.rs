//! Command options, read from flags and from an optional TOML or JSON
//! config file with one table per command. Flags win over the file.
//!
//! ```toml
//! [annotate]
//! scene = "data/scene"
//! flow = "data/flow"
//! out = "tracks.attr"
//! tau_ratio = 0.3
//! jobs = 4
//! ```
//!
//! Relative paths in a config file are taken relative to the file's
//! directory.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use tracklabel_core::{FilterParams, MetricsConfig};

use crate::pipeline::AnnotateConfig;
use crate::viz::{VizFormat, VizOptions};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{}: {source}", path.display())]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("missing required option --{0}")]
    Missing(&'static str),
}

#[derive(Clone, Debug, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotateOptions {
    /// Scene container directory.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// Flow container directory.
    #[arg(long)]
    pub flow: Option<PathBuf>,
    /// Output track dataset file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Forward-backward residual threshold in pixels [default: 1.0].
    #[arg(long)]
    pub delta_cons: Option<f64>,
    /// Normalized displacement difference threshold [default: 1.0].
    #[arg(long)]
    pub tau_dist: Option<f64>,
    /// Normalization offset in pixels [default: 2.0].
    #[arg(long)]
    pub eps_norm: Option<f64>,
    /// Maximum erroneous ratio of a kept track [default: 0.25].
    #[arg(long)]
    pub tau_ratio: Option<f64>,
    /// Worker threads [default: available cores].
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Frame interval for the metrics in the run report [default: 1.0].
    #[arg(long)]
    pub dt: Option<f64>,
    /// Minimum visible segment length in steps [default: 3].
    #[arg(long)]
    pub min_steps: Option<usize>,
    /// Also render overlays into this directory.
    #[arg(long)]
    pub overlay: Option<PathBuf>,
    /// Overlay frame stride [default: 1].
    #[arg(long)]
    pub stride: Option<u32>,
}

#[derive(Clone, Debug, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsOptions {
    /// Track dataset file; repeat for several videos.
    #[arg(long)]
    pub tracks: Vec<PathBuf>,
    /// Output JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Frame interval [default: 1.0].
    #[arg(long)]
    pub dt: Option<f64>,
    /// Minimum visible segment length in steps [default: 3].
    #[arg(long)]
    pub min_steps: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthOptions {
    /// Scene spec (TOML or JSON).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the seed in the spec.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VizOptionsArgs {
    /// Track dataset file.
    #[arg(long)]
    pub tracks: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory of frame images to draw under the tracks.
    #[arg(long)]
    pub frames: Option<PathBuf>,
    /// Render every K-th frame [default: 1].
    #[arg(long)]
    pub stride: Option<u32>,
    /// History length in frames [default: 10].
    #[arg(long)]
    pub history: Option<u32>,
    /// Output format [default: svg].
    #[arg(long, value_enum)]
    pub format: Option<VizFormat>,
}

/// Contents of a config file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub annotate: AnnotateOptions,
    pub metrics: MetricsOptions,
    pub synth: SynthOptions,
    pub viz: VizOptionsArgs,
}

fn rebase(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl ConfigFile {
    /// Reads TOML when the name ends in `.toml`, JSON otherwise.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        let parsed: Result<Self, String> = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| e.to_string())
        } else {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        };
        let mut cfg = parsed.map_err(|message| ConfigError::Parse {
            path: path.to_owned(),
            message,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        let a = &mut cfg.annotate;
        for p in [&mut a.scene, &mut a.flow, &mut a.out, &mut a.overlay] {
            rebase(base, p);
        }
        for t in &mut cfg.metrics.tracks {
            if t.is_relative() {
                *t = base.join(&*t);
            }
        }
        rebase(base, &mut cfg.metrics.out);
        rebase(base, &mut cfg.synth.spec);
        rebase(base, &mut cfg.synth.out);
        let v = &mut cfg.viz;
        for p in [&mut v.tracks, &mut v.out, &mut v.frames] {
            rebase(base, p);
        }
        Ok(cfg)
    }
}

fn need<T>(v: Option<T>, name: &'static str) -> Result<T, ConfigError> {
    v.ok_or(ConfigError::Missing(name))
}

impl AnnotateOptions {
    /// Fills unset fields from `file`.
    pub fn merge(self, file: Self) -> Self {
        Self {
            scene: self.scene.or(file.scene),
            flow: self.flow.or(file.flow),
            out: self.out.or(file.out),
            delta_cons: self.delta_cons.or(file.delta_cons),
            tau_dist: self.tau_dist.or(file.tau_dist),
            eps_norm: self.eps_norm.or(file.eps_norm),
            tau_ratio: self.tau_ratio.or(file.tau_ratio),
            jobs: self.jobs.or(file.jobs),
            dt: self.dt.or(file.dt),
            min_steps: self.min_steps.or(file.min_steps),
            overlay: self.overlay.or(file.overlay),
            stride: self.stride.or(file.stride),
        }
    }

    pub fn resolve(self) -> Result<AnnotateConfig, ConfigError> {
        let d = FilterParams::default();
        let m = MetricsConfig::default();
        Ok(AnnotateConfig {
            scene: need(self.scene, "scene")?,
            flow: need(self.flow, "flow")?,
            out: need(self.out, "out")?,
            params: FilterParams {
                delta_cons: self.delta_cons.unwrap_or(d.delta_cons),
                tau_dist: self.tau_dist.unwrap_or(d.tau_dist),
                eps_norm: self.eps_norm.unwrap_or(d.eps_norm),
                eps_ratio: d.eps_ratio,
                tau_ratio: self.tau_ratio.unwrap_or(d.tau_ratio),
            },
            metrics: MetricsConfig {
                dt: self.dt.unwrap_or(m.dt),
                min_steps: self.min_steps.unwrap_or(m.min_steps),
            },
            jobs: self.jobs.unwrap_or_else(default_jobs),
            overlay: self.overlay.map(|dir| (dir, self.stride.unwrap_or(1))),
        })
    }
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Resolved `metrics` command options.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRun {
    pub tracks: Vec<PathBuf>,
    pub out: PathBuf,
    pub config: MetricsConfig,
}

impl MetricsOptions {
    pub fn merge(self, file: Self) -> Self {
        Self {
            tracks: if self.tracks.is_empty() { file.tracks } else { self.tracks },
            out: self.out.or(file.out),
            dt: self.dt.or(file.dt),
            min_steps: self.min_steps.or(file.min_steps),
        }
    }

    pub fn resolve(self) -> Result<MetricsRun, ConfigError> {
        if self.tracks.is_empty() {
            return Err(ConfigError::Missing("tracks"));
        }
        let m = MetricsConfig::default();
        Ok(MetricsRun {
            tracks: self.tracks,
            out: need(self.out, "out")?,
            config: MetricsConfig {
                dt: self.dt.unwrap_or(m.dt),
                min_steps: self.min_steps.unwrap_or(m.min_steps),
            },
        })
    }
}

impl SynthOptions {
    pub fn merge(self, file: Self) -> Self {
        Self {
            spec: self.spec.or(file.spec),
            out: self.out.or(file.out),
            seed: self.seed.or(file.seed),
        }
    }

    /// Spec path, output directory and seed override.
    pub fn resolve(self) -> Result<(PathBuf, PathBuf, Option<u64>), ConfigError> {
        Ok((need(self.spec, "spec")?, need(self.out, "out")?, self.seed))
    }
}

impl VizOptionsArgs {
    pub fn merge(self, file: Self) -> Self {
        Self {
            tracks: self.tracks.or(file.tracks),
            out: self.out.or(file.out),
            frames: self.frames.or(file.frames),
            stride: self.stride.or(file.stride),
            history: self.history.or(file.history),
            format: self.format.or(file.format),
        }
    }

    /// Dataset path, output directory and render options.
    pub fn resolve(self) -> Result<(PathBuf, PathBuf, VizOptions), ConfigError> {
        let d = VizOptions::default();
        Ok((
            need(self.tracks, "tracks")?,
            need(self.out, "out")?,
            VizOptions {
                frames: self.frames,
                stride: self.stride.unwrap_or(d.stride),
                history: self.history.unwrap_or(d.history),
                format: self.format.unwrap_or(d.format),
            },
        ))
    }
}
