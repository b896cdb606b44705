//! Complexity and diversity over track dataset files.

use std::path::Path;

use tracklabel_core::metrics::{dataset_metrics, MetricsConfigError, VideoTracks};
use tracklabel_core::{MetricsConfig, MetricsReport};

use crate::container::write_json;
use crate::dataset::{DatasetError, TrackDataset};

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Config(#[from] MetricsConfigError),
    #[error("{0}: dataset header has a zero image size")]
    NoFrameSize(String),
}

impl MetricsError {
    pub fn is_io(&self) -> bool {
        matches!(self, MetricsError::Dataset(d) if d.is_io())
    }
}

/// Loads one dataset file as a video named after the file stem.
pub fn load_video(path: &Path) -> Result<VideoTracks, MetricsError> {
    let ds = TrackDataset::read(path)?;
    let name = path
        .file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
    let h = &ds.meta.header;
    if h.image_width == 0 || h.image_height == 0 {
        return Err(MetricsError::NoFrameSize(name));
    }
    Ok(VideoTracks {
        name,
        frame_size: (h.image_width, h.image_height),
        tracks: ds.tracks,
    })
}

/// Treats each dataset file as one video and writes the report as JSON.
pub fn run(tracks: &[impl AsRef<Path>], out: &Path, config: &MetricsConfig) -> Result<MetricsReport, MetricsError> {
    config.validate()?;
    let videos = tracks
        .iter()
        .map(|p| load_video(p.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    let report = dataset_metrics(&videos, config);
    write_json(out, &report).map_err(DatasetError::from)?;
    Ok(report)
}
