//! Reading synth specs and writing generated scenes.
//!
//! Output layout under `DIR`: `scene/` (scene container), `flow/` (flow
//! container) and `ground_truth.json`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tracklabel_core::synth::{generate, CorruptionManifest, SpecInvalid, SynthOutput, SynthSpec};
use tracklabel_core::Track;

use crate::container::{self, ContainerError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthSample {
    pub frame: u32,
    pub x: f64,
    pub y: f64,
    pub visible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthTrack {
    pub person_id: u32,
    pub vertex_index: u32,
    pub samples: Vec<TruthSample>,
}

impl From<&Track> for TruthTrack {
    fn from(t: &Track) -> Self {
        Self {
            person_id: t.person_id,
            vertex_index: t.vertex_index,
            samples: t
                .samples
                .iter()
                .map(|s| TruthSample {
                    frame: s.frame_index,
                    x: s.position.x,
                    y: s.position.y,
                    visible: s.visible,
                })
                .collect(),
        }
    }
}

/// Contents of `ground_truth.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub tracks: Vec<TruthTrack>,
    pub corruption: CorruptionManifest,
}

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("{}: {source}", path.display())]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("invalid spec: {0}")]
    Invalid(#[from] SpecInvalid),
    #[error(transparent)]
    Container(#[from] ContainerError),
}

impl SynthError {
    pub fn is_io(&self) -> bool {
        match self {
            SynthError::Read { .. } => true,
            SynthError::Container(c) => c.is_io(),
            _ => false,
        }
    }
}

/// Parses a spec as TOML when the file ends in `.toml`, JSON otherwise.
pub fn read_spec(path: &Path) -> Result<SynthSpec, SynthError> {
    let text = std::fs::read_to_string(path).map_err(|source| SynthError::Read {
        path: path.to_owned(),
        source,
    })?;
    let parsed = if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).map_err(|e| e.to_string())
    } else {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|message| SynthError::Parse {
        path: path.to_owned(),
        message,
    })
}

pub fn scene_dir(out: &Path) -> PathBuf {
    out.join("scene")
}

pub fn flow_dir(out: &Path) -> PathBuf {
    out.join("flow")
}

pub fn ground_truth_path(out: &Path) -> PathBuf {
    out.join("ground_truth.json")
}

pub fn write_output(out: &Path, output: &SynthOutput, manifest: &CorruptionManifest) -> Result<(), SynthError> {
    container::write_scene(&scene_dir(out), &output.scene)?;
    container::write_flows(&flow_dir(out), &output.flows)?;
    let truth = GroundTruth {
        seed: output.seed,
        tracks: output.ground_truth.iter().map(TruthTrack::from).collect(),
        corruption: manifest.clone(),
    };
    container::write_json(&ground_truth_path(out), &truth)?;
    Ok(())
}

/// Generates `spec` (with `seed` overriding the spec's own) into `out`.
pub fn run(spec: &SynthSpec, seed: Option<u64>, out: &Path) -> Result<(SynthOutput, CorruptionManifest), SynthError> {
    let mut spec = spec.clone();
    if let Some(s) = seed {
        spec.seed = s;
    }
    let (output, manifest) = generate(&spec)?;
    write_output(out, &output, &manifest)?;
    Ok((output, manifest))
}

pub fn read_ground_truth(path: &Path) -> Result<GroundTruth, SynthError> {
    let bytes = std::fs::read(path).map_err(|source| SynthError::Read {
        path: path.to_owned(),
        source,
    })?;
    serde_json::from_slice(&bytes).map_err(|e| SynthError::Parse {
        path: path.to_owned(),
        message: e.to_string(),
    })
}
