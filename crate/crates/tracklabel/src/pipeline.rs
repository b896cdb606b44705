//! Annotation: projection, visibility, flow filtering and export.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use tracklabel_core::flow_filter::{annotate_track, finish_filter, FilterError, FilterReport, FlowSet, ParamError};
use tracklabel_core::scene::{generate_pseudo_tracks, validate_scene, FlowPair, SceneSequence, Track, Violation};
use tracklabel_core::visibility::{apply_visibility, frame_visibility, FrameVisibility};
use tracklabel_core::metrics::{video_metrics, MetricsConfigError, VideoTracks};
use tracklabel_core::{Accel, FilterParams, MetricsConfig};

use crate::container::{self, ContainerError};
use crate::dataset::{report_path, DatasetError, Header, RunReport, TrackDataset};
use crate::viz::{render_overlay, VizError, VizOptions};

#[derive(Clone, Debug, PartialEq)]
pub struct AnnotateConfig {
    pub scene: PathBuf,
    pub flow: PathBuf,
    pub out: PathBuf,
    pub params: FilterParams,
    pub metrics: MetricsConfig,
    pub jobs: usize,
    /// Overlay directory and frame stride, when overlays are wanted.
    pub overlay: Option<(PathBuf, u32)>,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{0}")]
    Container(#[from] ContainerError),
    #[error("{0}")]
    Dataset(#[from] DatasetError),
    #[error("invalid scene:\n{}", list(.0))]
    InvalidScene(Vec<Violation>),
    #[error("invalid flow:\n{}", .0.join("\n"))]
    InvalidFlow(Vec<String>),
    #[error("{0}")]
    Filter(#[from] FilterError),
    #[error("{0}")]
    Params(#[from] ParamError),
    #[error("{0}")]
    Metrics(#[from] MetricsConfigError),
    #[error("{0}")]
    Viz(#[from] VizError),
    #[error("{} does not exist", .0.display())]
    MissingInput(PathBuf),
    #[error("jobs must be at least 1")]
    Jobs,
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

fn list(v: &[Violation]) -> String {
    v.iter().map(|x| format!("  {x}")).collect::<Vec<_>>().join("\n")
}

impl PipelineError {
    /// Whether the failure came from file access rather than content.
    pub fn is_io(&self) -> bool {
        match self {
            PipelineError::Container(c) => c.is_io(),
            PipelineError::Dataset(d) => d.is_io(),
            PipelineError::Viz(v) => v.is_io(),
            PipelineError::MissingInput(_) => true,
            _ => false,
        }
    }
}

/// Checks every flow pair against the camera of its frame. Problems are
/// returned as messages; an empty list means the flows fit the scene.
pub fn validate_flows(scene: &SceneSequence, flows: &[FlowPair]) -> Vec<String> {
    let mut out = Vec::new();
    for p in flows {
        let t = p.frame_index;
        if t + 1 >= scene.frame_count.max(1) {
            out.push(format!("pair {t}: no frame {} in a {}-frame scene", t + 1, scene.frame_count));
            continue;
        }
        if let Some(cam) = scene.camera(t) {
            for (name, r) in [("forward", &p.forward), ("backward", &p.backward)] {
                if r.width != cam.image_width || r.height != cam.image_height {
                    out.push(format!(
                        "pair {t}: {name} raster is {}x{}, camera image is {}x{}",
                        r.width, r.height, cam.image_width, cam.image_height
                    ));
                }
                if r.data.iter().any(|v| !(v[0].is_finite() && v[1].is_finite())) {
                    out.push(format!("pair {t}: {name} raster has non-finite values"));
                }
            }
        }
    }
    out
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, PipelineError> {
    if jobs == 0 {
        return Err(PipelineError::Jobs);
    }
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?)
}

fn visibility_frames(scene: &SceneSequence, accel: Accel, workers: &rayon::ThreadPool) -> Vec<FrameVisibility> {
    workers.install(|| {
        (0..scene.frame_count)
            .into_par_iter()
            .map(|t| frame_visibility(scene, t, accel))
            .collect()
    })
}

/// Per-frame visibility with `jobs` workers. Frames are merged in index
/// order whatever order they finish in.
pub fn classify_parallel(scene: &SceneSequence, tracks: &mut [Track], accel: Accel, jobs: usize) -> Result<(), PipelineError> {
    let frames = visibility_frames(scene, accel, &pool(jobs)?);
    apply_visibility(tracks, &frames);
    Ok(())
}

/// Runs the in-memory pipeline on a validated scene. Output is independent
/// of `jobs`.
pub fn annotate_scene(
    scene: &SceneSequence,
    flows: Vec<FlowPair>,
    params: &FilterParams,
    jobs: usize,
) -> Result<(Vec<Track>, FilterReport), PipelineError> {
    params.validate()?;
    let workers = pool(jobs)?;
    let mut tracks = generate_pseudo_tracks(scene);
    let frames = visibility_frames(scene, Accel::Bvh, &workers);
    apply_visibility(&mut tracks, &frames);

    let flows = FlowSet::new(flows);
    // Collected in track order so the reported error does not depend on
    // scheduling.
    let results: Vec<Result<(), FilterError>> =
        workers.install(|| tracks.par_iter_mut().map(|t| annotate_track(t, &flows, params)).collect());
    results.into_iter().collect::<Result<(), _>>()?;
    Ok(finish_filter(tracks, params))
}

/// Image size of the first camera, or zero for a scene without cameras.
fn image_size(scene: &SceneSequence) -> (u32, u32) {
    scene
        .camera(0)
        .map_or((0, 0), |c| (c.image_width, c.image_height))
}

/// Reads, validates, annotates and writes the dataset, its sidecar and the
/// run report.
pub fn annotate(config: &AnnotateConfig) -> Result<TrackDataset, PipelineError> {
    config.params.validate()?;
    config.metrics.validate()?;
    if config.jobs == 0 {
        return Err(PipelineError::Jobs);
    }
    if matches!(config.overlay, Some((_, 0))) {
        return Err(VizError::Stride.into());
    }
    for p in [&config.scene, &config.flow] {
        if !p.exists() {
            return Err(PipelineError::MissingInput(p.clone()));
        }
    }
    let scene = container::read_scene(&config.scene)?;
    let violations = validate_scene(&scene);
    if !violations.is_empty() {
        return Err(PipelineError::InvalidScene(violations));
    }
    let flows = container::read_flows(&config.flow)?;
    let problems = validate_flows(&scene, &flows);
    if !problems.is_empty() {
        return Err(PipelineError::InvalidFlow(problems));
    }

    let (tracks, report) = annotate_scene(&scene, flows, &config.params, config.jobs)?;
    let (w, h) = image_size(&scene);
    let header = Header {
        version: 1,
        frame_count: scene.frame_count,
        image_width: w,
        image_height: h,
        params: config.params,
    };
    let dataset = TrackDataset::new(header, tracks, &report);
    dataset.write(&config.out)?;
    let video = VideoTracks {
        name: config
            .out
            .file_stem()
            .map_or_else(String::new, |s| s.to_string_lossy().into_owned()),
        frame_size: (w, h),
        tracks: dataset.tracks.clone(),
    };
    let run = RunReport {
        scene: display(&config.scene),
        flow: display(&config.flow),
        total: report.total,
        retained: report.retained,
        rejected: report.rejected,
        metrics: video_metrics(&video, &config.metrics).0,
    };
    container::write_json(&report_path(&config.out), &run)?;
    if let Some((dir, stride)) = &config.overlay {
        let opts = VizOptions {
            stride: *stride,
            ..VizOptions::default()
        };
        render_overlay(&dataset, dir, &opts)?;
    }
    Ok(dataset)
}

fn display(p: &Path) -> String {
    p.display().to_string()
}
