//! Track dataset files: the binary `ATTR` track list plus a JSON sidecar
//! `<out>.meta.json` with the header and summary.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tracklabel_core::flow_filter::{FilterReport, RatioHistogram, RejectedTrack};
use tracklabel_core::metrics::VideoMetrics;
use tracklabel_core::scene::Track;
use tracklabel_core::FilterParams;

use crate::container::{write_json, ContainerError};
use crate::formats;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub version: u32,
    pub frame_count: u32,
    pub image_width: u32,
    pub image_height: u32,
    pub params: FilterParams,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagCounts {
    pub samples: u64,
    pub visible: u64,
    pub flow_confident: u64,
    pub erroneous: u64,
    pub excluded: u64,
}

impl FlagCounts {
    pub fn of(tracks: &[Track]) -> Self {
        let mut c = FlagCounts::default();
        for s in tracks.iter().flat_map(|t| &t.samples) {
            c.samples += 1;
            c.visible += u64::from(s.visible);
            c.flow_confident += u64::from(s.flow_confident);
            c.erroneous += u64::from(s.erroneous);
            c.excluded += u64::from(s.excluded);
        }
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Tracks before rejection.
    pub total: usize,
    pub retained: usize,
    pub rejected: usize,
    /// Ratio histogram over all tracks, retained and rejected.
    pub histogram: RatioHistogram,
    /// Flag tallies over the samples of retained tracks.
    pub flags: FlagCounts,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub header: Header,
    pub summary: Summary,
}

/// Run report written next to the dataset as `<out>.report.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scene: String,
    pub flow: String,
    pub total: usize,
    pub retained: usize,
    /// Dropped tracks with their ratios, sorted by key.
    pub rejected: Vec<RejectedTrack>,
    /// Complexity and diversity of the retained tracks.
    pub metrics: VideoMetrics,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrackDataset {
    pub meta: Meta,
    pub tracks: Vec<Track>,
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error(transparent)]
    Container(#[from] ContainerError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Format {
        path: PathBuf,
        #[source]
        source: formats::FormatError,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl DatasetError {
    pub fn is_io(&self) -> bool {
        match self {
            DatasetError::Io { .. } => true,
            DatasetError::Container(c) => c.is_io(),
            _ => false,
        }
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn meta_path(out: &Path) -> PathBuf {
    with_suffix(out, ".meta.json")
}

pub fn report_path(out: &Path) -> PathBuf {
    with_suffix(out, ".report.json")
}

impl TrackDataset {
    pub fn new(header: Header, tracks: Vec<Track>, report: &FilterReport) -> Self {
        let summary = Summary {
            total: report.total,
            retained: report.retained,
            rejected: report.rejected.len(),
            histogram: report.histogram.clone(),
            flags: FlagCounts::of(&tracks),
        };
        Self {
            meta: Meta { header, summary },
            tracks,
        }
    }

    /// Writes `out` and its sidecar.
    pub fn write(&self, out: &Path) -> Result<(), DatasetError> {
        let bytes = formats::encode_tracks(&self.tracks).map_err(|source| DatasetError::Format {
            path: out.to_owned(),
            source,
        })?;
        formats::write_file(out, &bytes).map_err(|source| DatasetError::Io {
            path: out.to_owned(),
            source,
        })?;
        write_json(&meta_path(out), &self.meta)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, DatasetError> {
        let bytes = std::fs::read(path).map_err(|source| DatasetError::Io {
            path: path.to_owned(),
            source,
        })?;
        let tracks = formats::decode_tracks(&bytes).map_err(|source| DatasetError::Format {
            path: path.to_owned(),
            source,
        })?;
        let mp = meta_path(path);
        let meta_bytes = std::fs::read(&mp).map_err(|source| DatasetError::Io {
            path: mp.clone(),
            source,
        })?;
        let meta = serde_json::from_slice(&meta_bytes).map_err(|source| DatasetError::Json { path: mp, source })?;
        Ok(Self { meta, tracks })
    }
}
