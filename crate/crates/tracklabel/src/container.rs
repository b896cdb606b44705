//! Scene and flow directories.
//!
//! A scene directory holds `manifest.json`, a camera file and per-person
//! `.verts`/`.faces` containers. A flow directory holds
//! `flow_fwd_<t>.atfl` and `flow_bwd_<t>.atfl` for each adjacent pair.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use tracklabel_core::scene::{Camera, CameraSet, FaceTopology, FlowPair, Person, SceneSequence};

use crate::formats::{self, FormatError};

pub const MANIFEST: &str = "manifest.json";
pub const CAMERA: &str = "camera.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CameraMode {
    Static,
    PerFrame,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonEntry {
    pub id: u32,
    pub verts: String,
    pub faces: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub frame_count: u32,
    pub camera_mode: CameraMode,
    pub persons: Vec<PersonEntry>,
    pub camera: String,
}

#[derive(Debug, thiserror::Error)]
pub enum ContainerError {
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
        source: FormatError,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{}: unsupported manifest version {version}", path.display())]
    ManifestVersion { path: PathBuf, version: u32 },
    #[error("{}: per_frame camera list has {found} entries, expected {expected}", path.display())]
    CameraCount { path: PathBuf, found: usize, expected: u32 },
    #[error("{}: path escapes the container directory", path.display())]
    PathOutside { path: PathBuf },
    #[error("flow pair {frame}: {direction} raster missing")]
    MissingFlowFile { frame: u32, direction: &'static str },
    #[error("flow pair {frame}: forward and backward rasters differ in size")]
    FlowShape { frame: u32 },
}

impl ContainerError {
    /// True for errors caused by unreadable or unwritable files rather than
    /// by their content.
    pub fn is_io(&self) -> bool {
        matches!(self, ContainerError::Io { .. })
    }
}

fn read(path: &Path) -> Result<Vec<u8>, ContainerError> {
    fs::read(path).map_err(|source| ContainerError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), ContainerError> {
    formats::write_file(path, bytes).map_err(|source| ContainerError::Io {
        path: path.to_owned(),
        source,
    })
}

fn format_err(path: &Path) -> impl FnOnce(FormatError) -> ContainerError + '_ {
    move |source| ContainerError::Format {
        path: path.to_owned(),
        source,
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, ContainerError> {
    let bytes = read(path)?;
    serde_json::from_slice(&bytes).map_err(|source| ContainerError::Json {
        path: path.to_owned(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ContainerError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|source| ContainerError::Json {
        path: path.to_owned(),
        source,
    })?;
    bytes.push(b'\n');
    write(path, &bytes)
}

fn create_dir(dir: &Path) -> Result<(), ContainerError> {
    fs::create_dir_all(dir).map_err(|source| ContainerError::Io {
        path: dir.to_owned(),
        source,
    })
}

/// Resolves a manifest-relative file name, refusing absolute paths and
/// parent components.
fn member(dir: &Path, name: &str) -> Result<PathBuf, ContainerError> {
    let rel = Path::new(name);
    let plain = rel
        .components()
        .all(|c| matches!(c, std::path::Component::Normal(_)));
    if !plain || name.is_empty() {
        return Err(ContainerError::PathOutside { path: rel.to_owned() });
    }
    Ok(dir.join(rel))
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, ContainerError> {
    let path = dir.join(MANIFEST);
    let manifest: Manifest = read_json(&path)?;
    if manifest.version != 1 {
        return Err(ContainerError::ManifestVersion {
            path,
            version: manifest.version,
        });
    }
    Ok(manifest)
}

/// Reads a scene directory. Persons naming the same faces file share one
/// topology. The result is not validated; see
/// [`tracklabel_core::scene::validate_scene`].
pub fn read_scene(dir: &Path) -> Result<SceneSequence, ContainerError> {
    let manifest = read_manifest(dir)?;
    let camera_path = member(dir, &manifest.camera)?;
    let cameras = match manifest.camera_mode {
        CameraMode::Static => CameraSet::Static(read_json::<Camera>(&camera_path)?),
        CameraMode::PerFrame => {
            let cams: Vec<Camera> = read_json(&camera_path)?;
            if cams.len() != manifest.frame_count as usize {
                return Err(ContainerError::CameraCount {
                    path: camera_path,
                    found: cams.len(),
                    expected: manifest.frame_count,
                });
            }
            CameraSet::PerFrame(cams)
        }
    };

    let mut topologies: HashMap<String, Arc<FaceTopology>> = HashMap::new();
    let mut persons = Vec::with_capacity(manifest.persons.len());
    for entry in &manifest.persons {
        let faces = match topologies.get(&entry.faces) {
            Some(f) => Arc::clone(f),
            None => {
                let path = member(dir, &entry.faces)?;
                let f = Arc::new(formats::decode_faces(&read(&path)?).map_err(format_err(&path))?);
                topologies.insert(entry.faces.clone(), Arc::clone(&f));
                f
            }
        };
        let path = member(dir, &entry.verts)?;
        let mesh = formats::decode_verts(&read(&path)?, entry.id).map_err(format_err(&path))?;
        persons.push(Person { mesh, faces });
    }
    Ok(SceneSequence {
        frame_count: manifest.frame_count,
        cameras,
        persons,
    })
}

/// Writes a scene directory. Persons sharing an `Arc` topology share one
/// faces file.
pub fn write_scene(dir: &Path, scene: &SceneSequence) -> Result<(), ContainerError> {
    create_dir(dir)?;
    let (mode, camera_json) = match &scene.cameras {
        CameraSet::Static(c) => (CameraMode::Static, serde_json::to_value(c)),
        CameraSet::PerFrame(cs) => (CameraMode::PerFrame, serde_json::to_value(cs)),
    };
    let camera_path = dir.join(CAMERA);
    let camera_json = camera_json.map_err(|source| ContainerError::Json {
        path: camera_path.clone(),
        source,
    })?;
    write_json(&camera_path, &camera_json)?;

    let mut written: Vec<(*const FaceTopology, String)> = Vec::new();
    let mut entries = Vec::with_capacity(scene.persons.len());
    for person in &scene.persons {
        let id = person.id();
        let key = Arc::as_ptr(&person.faces);
        let faces = match written.iter().find(|(k, _)| *k == key) {
            Some((_, name)) => name.clone(),
            None => {
                let name = format!("person_{id}.faces");
                let path = dir.join(&name);
                write(&path, &formats::encode_faces(&person.faces).map_err(format_err(&path))?)?;
                written.push((key, name.clone()));
                name
            }
        };
        let verts = format!("person_{id}.verts");
        let path = dir.join(&verts);
        write(&path, &formats::encode_verts(&person.mesh).map_err(format_err(&path))?)?;
        entries.push(PersonEntry { id, verts, faces });
    }

    write_json(
        &dir.join(MANIFEST),
        &Manifest {
            version: 1,
            frame_count: scene.frame_count,
            camera_mode: mode,
            persons: entries,
            camera: CAMERA.to_owned(),
        },
    )
}

pub fn flow_file_name(frame: u32, forward: bool) -> String {
    format!("flow_{}_{frame}.atfl", if forward { "fwd" } else { "bwd" })
}

fn parse_flow_name(name: &str) -> Option<(u32, bool)> {
    let rest = name.strip_prefix("flow_")?.strip_suffix(".atfl")?;
    let (dir, frame) = rest.split_once('_')?;
    let forward = match dir {
        "fwd" => true,
        "bwd" => false,
        _ => return None,
    };
    // Reject forms like "+3" or "03" so names map one-to-one to frames.
    if frame.is_empty() || !frame.bytes().all(|b| b.is_ascii_digit()) || (frame.len() > 1 && frame.starts_with('0')) {
        return None;
    }
    Some((frame.parse().ok()?, forward))
}

/// Reads every flow pair in `dir`, sorted by frame. Other files are
/// ignored; a forward raster without its backward partner (or the reverse)
/// is an error.
pub fn read_flows(dir: &Path) -> Result<Vec<FlowPair>, ContainerError> {
    let io = |source| ContainerError::Io {
        path: dir.to_owned(),
        source,
    };
    let mut found: BTreeMap<u32, (Option<PathBuf>, Option<PathBuf>)> = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(io)? {
        let entry = entry.map_err(io)?;
        let name = entry.file_name();
        let Some((frame, forward)) = name.to_str().and_then(parse_flow_name) else {
            continue;
        };
        let slot = found.entry(frame).or_default();
        if forward {
            slot.0 = Some(entry.path());
        } else {
            slot.1 = Some(entry.path());
        }
    }

    let mut pairs = Vec::with_capacity(found.len());
    for (frame, paths) in found {
        let (fwd, bwd) = match paths {
            (Some(f), Some(b)) => (f, b),
            (None, _) => return Err(ContainerError::MissingFlowFile { frame, direction: "forward" }),
            (_, None) => return Err(ContainerError::MissingFlowFile { frame, direction: "backward" }),
        };
        let forward = formats::decode_flow(&read(&fwd)?).map_err(format_err(&fwd))?;
        let backward = formats::decode_flow(&read(&bwd)?).map_err(format_err(&bwd))?;
        if forward.width != backward.width || forward.height != backward.height {
            return Err(ContainerError::FlowShape { frame });
        }
        pairs.push(FlowPair {
            frame_index: frame,
            forward,
            backward,
        });
    }
    Ok(pairs)
}

pub fn write_flows(dir: &Path, pairs: &[FlowPair]) -> Result<(), ContainerError> {
    create_dir(dir)?;
    for p in pairs {
        write(&dir.join(flow_file_name(p.frame_index, true)), &formats::encode_flow(&p.forward))?;
        write(&dir.join(flow_file_name(p.frame_index, false)), &formats::encode_flow(&p.backward))?;
    }
    Ok(())
}
