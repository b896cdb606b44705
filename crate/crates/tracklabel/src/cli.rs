//! The `tracklabel` command line.
//!
//! Exit status is 0 on success, 1 for usage errors (bad flags, missing
//! options, out-of-range parameters), 2 when input content fails
//! validation and 3 when a file cannot be read or written.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{
    AnnotateOptions, ConfigError, ConfigFile, MetricsOptions, SynthOptions, VizOptionsArgs,
};
use crate::dataset::TrackDataset;
use crate::metrics_io::{self, MetricsError};
use crate::pipeline::{self, PipelineError};
use crate::synth_io::{self, SynthError};
use crate::viz::{render_overlay, VizError};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "tracklabel", version, about = "Pseudo-label point tracks from posed meshes and optical flow")]
pub struct Cli {
    /// TOML or JSON file with per-command defaults; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Project, label and filter vertex tracks into a dataset file.
    Annotate(AnnotateOptions),
    /// Complexity and diversity of one or more dataset files.
    Metrics(MetricsOptions),
    /// Generate a synthetic scene with flow and ground truth.
    Synth(SynthOptions),
    /// Render track overlays.
    Viz(VizOptionsArgs),
}

/// A failed command: exit status and diagnostic.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, e: impl std::fmt::Display) -> Self {
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        let code = match e {
            ConfigError::Read { .. } => EXIT_IO,
            _ => EXIT_USAGE,
        };
        Failure::new(code, e)
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let code = match &e {
            e if e.is_io() => EXIT_IO,
            PipelineError::Params(_) | PipelineError::Metrics(_) | PipelineError::Jobs => EXIT_USAGE,
            PipelineError::Viz(VizError::Stride) => EXIT_USAGE,
            _ => EXIT_INVALID,
        };
        Failure::new(code, e)
    }
}

impl From<MetricsError> for Failure {
    fn from(e: MetricsError) -> Self {
        let code = match &e {
            e if e.is_io() => EXIT_IO,
            MetricsError::Config(_) => EXIT_USAGE,
            _ => EXIT_INVALID,
        };
        Failure::new(code, e)
    }
}

impl From<SynthError> for Failure {
    fn from(e: SynthError) -> Self {
        let code = if e.is_io() { EXIT_IO } else { EXIT_INVALID };
        Failure::new(code, e)
    }
}

impl From<VizError> for Failure {
    fn from(e: VizError) -> Self {
        let code = match &e {
            VizError::Stride => EXIT_USAGE,
            _ => EXIT_IO,
        };
        Failure::new(code, e)
    }
}

/// Runs a parsed command, returning a one-line summary.
pub fn execute(cli: Cli) -> Result<String, Failure> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Annotate(opts) => {
            let config = opts.merge(file.annotate).resolve()?;
            let ds = pipeline::annotate(&config)?;
            let s = &ds.meta.summary;
            Ok(format!(
                "{}: kept {} of {} tracks, rejected {}",
                config.out.display(),
                s.retained,
                s.total,
                s.rejected
            ))
        }
        Command::Metrics(opts) => {
            let run = opts.merge(file.metrics).resolve()?;
            let report = metrics_io::run(&run.tracks, &run.out, &run.config)?;
            let show = |v: Option<f64>| v.map_or_else(|| "n/a".to_owned(), |x| format!("{x:.6}"));
            Ok(format!(
                "{}: {} videos, {} tracks, complexity {}, diversity {}",
                run.out.display(),
                report.video_count,
                report.track_count,
                show(report.dataset_complexity),
                show(report.dataset_diversity)
            ))
        }
        Command::Synth(opts) => {
            let (spec_path, out, seed) = opts.merge(file.synth).resolve()?;
            let spec = synth_io::read_spec(&spec_path)?;
            let (output, manifest) = synth_io::run(&spec, seed, &out)?;
            Ok(format!(
                "{}: {} frames, {} persons, {} corrupted tracks",
                out.display(),
                output.scene.frame_count,
                output.scene.persons.len(),
                manifest.tracks.len()
            ))
        }
        Command::Viz(opts) => {
            let (tracks, out, viz) = opts.merge(file.viz).resolve()?;
            if viz.stride == 0 {
                return Err(VizError::Stride.into());
            }
            let ds = TrackDataset::read(&tracks).map_err(|e| Failure::new(if e.is_io() { EXIT_IO } else { EXIT_INVALID }, e))?;
            let written = render_overlay(&ds, &out, &viz)?;
            Ok(format!("{}: {} images", out.display(), written.len()))
        }
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit status. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match execute(cli) {
        Ok(line) => {
            println!("{line}");
            0
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
