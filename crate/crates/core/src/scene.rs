//! Scene, camera, flow and track data, plus vertex-to-pixel projection.

use alloc::sync::Arc;
use alloc::vec::Vec;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::geom::{orthonormality_error, Mat3, Point2d, Point3d, Vec3};

/// Rotation matrices further than this from orthonormal are rejected.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-6;

/// Pinhole camera. `rotation` and `translation` map world points into the
/// camera frame: `p_cam = R * p_world + t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub focal_x: f64,
    pub focal_y: f64,
    pub principal_x: f64,
    pub principal_y: f64,
    /// Row-major world→camera rotation.
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
    pub image_width: u32,
    pub image_height: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
#[error("point is behind the camera (depth {depth})")]
pub struct BehindCamera {
    pub depth: f64,
}

impl Camera {
    /// Camera looking down +z from the world origin.
    pub fn identity(focal: f64, principal: (f64, f64), width: u32, height: u32) -> Self {
        Self {
            focal_x: focal,
            focal_y: focal,
            principal_x: principal.0,
            principal_y: principal.1,
            rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            translation: [0.0; 3],
            image_width: width,
            image_height: height,
        }
    }

    pub fn rotation_matrix(&self) -> Mat3 {
        let r = &self.rotation;
        Mat3::new(
            r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2],
        )
    }

    pub fn translation_vector(&self) -> Vec3 {
        Vec3::from(self.translation)
    }

    pub fn to_camera(&self, world: &Point3d) -> Point3d {
        Point3d::from(self.rotation_matrix() * world.coords + self.translation_vector())
    }

    pub fn to_world(&self, cam: &Point3d) -> Point3d {
        Point3d::from(self.rotation_matrix().transpose() * (cam.coords - self.translation_vector()))
    }

    /// Optical center in world coordinates, `-Rᵀ t`.
    pub fn center(&self) -> Point3d {
        Point3d::from(-(self.rotation_matrix().transpose() * self.translation_vector()))
    }

    /// Projects a camera-frame point.
    pub fn project_camera_point(&self, cam: &Point3d) -> Result<Point2d, BehindCamera> {
        if !(cam.z > 0.0) {
            return Err(BehindCamera { depth: cam.z });
        }
        Ok(Point2d::new(
            self.focal_x * cam.x / cam.z + self.principal_x,
            self.focal_y * cam.y / cam.z + self.principal_y,
        ))
    }

    /// Pixel coordinates of a world point. Points outside the image
    /// rectangle are returned unclipped.
    pub fn project(&self, world: &Point3d) -> Result<Point2d, BehindCamera> {
        self.project_camera_point(&self.to_camera(world))
    }

    /// Camera-frame direction through a pixel, with unit depth.
    pub fn unproject_direction(&self, pixel: &Point2d) -> Vec3 {
        Vec3::new(
            (pixel.x - self.principal_x) / self.focal_x,
            (pixel.y - self.principal_y) / self.focal_y,
            1.0,
        )
    }

    pub fn intrinsics_valid(&self) -> bool {
        let finite = [self.focal_x, self.focal_y, self.principal_x, self.principal_y]
            .iter()
            .chain(self.translation.iter())
            .chain(self.rotation.iter().flatten())
            .all(|v| v.is_finite());
        finite
            && self.focal_x > 0.0
            && self.focal_y > 0.0
            && self.image_width >= 1
            && self.image_height >= 1
    }

    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&self.rotation_matrix())
    }
}

/// One person's vertex buffer at one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshFrame {
    pub frame_index: u32,
    pub vertices: Vec<Point3d>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeshFrameSet {
    pub person_id: u32,
    pub vertex_count: usize,
    /// Sorted by strictly increasing `frame_index`.
    pub frames: Vec<MeshFrame>,
}

impl MeshFrameSet {
    pub fn frame(&self, frame_index: u32) -> Option<&MeshFrame> {
        self.frames
            .binary_search_by_key(&frame_index, |f| f.frame_index)
            .ok()
            .map(|i| &self.frames[i])
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FaceTopology {
    pub faces: Vec<[u32; 3]>,
}

impl FaceTopology {
    pub fn new(faces: Vec<[u32; 3]>) -> Self {
        Self { faces }
    }

    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }
}

/// A person's mesh sequence with its face topology. Topology may be shared
/// between persons.
#[derive(Clone, Debug, PartialEq)]
pub struct Person {
    pub mesh: MeshFrameSet,
    pub faces: Arc<FaceTopology>,
}

impl Person {
    pub fn id(&self) -> u32 {
        self.mesh.person_id
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CameraSet {
    Static(Camera),
    PerFrame(Vec<Camera>),
}

impl CameraSet {
    pub fn at(&self, frame_index: u32) -> Option<&Camera> {
        match self {
            CameraSet::Static(c) => Some(c),
            CameraSet::PerFrame(cams) => cams.get(frame_index as usize),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Option<u32>, &Camera)> {
        let (single, many) = match self {
            CameraSet::Static(c) => (Some(c), &[][..]),
            CameraSet::PerFrame(cams) => (None, cams.as_slice()),
        };
        single
            .into_iter()
            .map(|c| (None, c))
            .chain(many.iter().enumerate().map(|(i, c)| (Some(i as u32), c)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneSequence {
    pub frame_count: u32,
    pub cameras: CameraSet,
    pub persons: Vec<Person>,
}

impl SceneSequence {
    pub fn camera(&self, frame_index: u32) -> Option<&Camera> {
        self.cameras.at(frame_index)
    }

    /// Persons that have a vertex buffer at `frame_index`, with that buffer.
    pub fn persons_at(&self, frame_index: u32) -> impl Iterator<Item = (&Person, &MeshFrame)> {
        self.persons
            .iter()
            .filter_map(move |p| p.mesh.frame(frame_index).map(|f| (p, f)))
    }

    pub fn person_count_at(&self, frame_index: u32) -> usize {
        self.persons_at(frame_index).count()
    }
}

/// Dense 2D displacement raster, row-major, `(dx, dy)` per pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowRaster {
    pub width: u32,
    pub height: u32,
    pub data: Vec<[f32; 2]>,
}

impl FlowRaster {
    pub fn filled(width: u32, height: u32, value: [f32; 2]) -> Self {
        Self {
            width,
            height,
            data: alloc::vec![value; width as usize * height as usize],
        }
    }

    pub fn zeros(width: u32, height: u32) -> Self {
        Self::filled(width, height, [0.0, 0.0])
    }

    /// Value of the cell at `(row, col)`.
    pub fn at(&self, row: usize, col: usize) -> Vector2<f64> {
        let v = self.data[row * self.width as usize + col];
        Vector2::new(v[0] as f64, v[1] as f64)
    }

    pub fn set(&mut self, row: usize, col: usize, value: [f32; 2]) {
        let w = self.width as usize;
        self.data[row * w + col] = value;
    }

    pub fn is_empty(&self) -> bool {
        self.width == 0 || self.height == 0
    }
}

/// Forward (`t → t+1`) and backward (`t+1 → t`) flow for one frame pair.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowPair {
    pub frame_index: u32,
    pub forward: FlowRaster,
    pub backward: FlowRaster,
}

pub mod flag {
    pub const VISIBLE: u8 = 1 << 0;
    pub const FLOW_CONFIDENT: u8 = 1 << 1;
    pub const ERRONEOUS: u8 = 1 << 2;
    pub const EXCLUDED: u8 = 1 << 3;
}

/// One frame of a track. `erroneous` and `excluded` describe the transition
/// that starts at this sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackSample {
    pub frame_index: u32,
    pub position: Point2d,
    pub visible: bool,
    pub flow_confident: bool,
    pub erroneous: bool,
    pub excluded: bool,
}

impl TrackSample {
    pub fn new(frame_index: u32, position: Point2d) -> Self {
        Self {
            frame_index,
            position,
            visible: true,
            flow_confident: false,
            erroneous: false,
            excluded: false,
        }
    }

    pub fn flags(&self) -> u8 {
        let mut f = 0;
        if self.visible {
            f |= flag::VISIBLE;
        }
        if self.flow_confident {
            f |= flag::FLOW_CONFIDENT;
        }
        if self.erroneous {
            f |= flag::ERRONEOUS;
        }
        if self.excluded {
            f |= flag::EXCLUDED;
        }
        f
    }

    pub fn set_flags(&mut self, f: u8) {
        self.visible = f & flag::VISIBLE != 0;
        self.flow_confident = f & flag::FLOW_CONFIDENT != 0;
        self.erroneous = f & flag::ERRONEOUS != 0;
        self.excluded = f & flag::EXCLUDED != 0;
    }
}

/// The 2D trajectory of one mesh vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct Track {
    pub person_id: u32,
    pub vertex_index: u32,
    pub samples: Vec<TrackSample>,
    /// Erroneous-transition ratio; zero until the flow filter has run.
    pub ratio: f64,
}

impl Track {
    pub fn new(person_id: u32, vertex_index: u32) -> Self {
        Self {
            person_id,
            vertex_index,
            samples: Vec::new(),
            ratio: 0.0,
        }
    }

    pub fn key(&self) -> (u32, u32) {
        (self.person_id, self.vertex_index)
    }

    pub fn sample_at(&self, frame_index: u32) -> Option<&TrackSample> {
        self.samples
            .binary_search_by_key(&frame_index, |s| s.frame_index)
            .ok()
            .map(|i| &self.samples[i])
    }
}

/// Projects every vertex of every person at every frame. Samples whose
/// vertex is behind the camera are omitted; the other flags start as
/// `visible = true` and everything else false. Output is sorted by
/// `(person_id, vertex_index)`.
pub fn generate_pseudo_tracks(scene: &SceneSequence) -> Vec<Track> {
    let mut persons: Vec<&Person> = scene.persons.iter().collect();
    persons.sort_by_key(|p| p.id());

    let mut out = Vec::new();
    for person in persons {
        let mesh = &person.mesh;
        let mut tracks: Vec<Track> = (0..mesh.vertex_count as u32)
            .map(|j| Track::new(mesh.person_id, j))
            .collect();
        for frame in &mesh.frames {
            let Some(camera) = scene.camera(frame.frame_index) else {
                continue;
            };
            for (track, v) in tracks.iter_mut().zip(&frame.vertices) {
                if let Ok(x) = camera.project(v) {
                    track.samples.push(TrackSample::new(frame.frame_index, x));
                }
            }
        }
        out.extend(tracks);
    }
    out
}

/// A broken scene invariant.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum Violation {
    #[error("camera {frame:?}: invalid intrinsics or non-finite parameters")]
    CameraIntrinsics { frame: Option<u32> },
    #[error("camera {frame:?}: rotation not orthonormal (error {error:e})")]
    CameraNotOrthonormal { frame: Option<u32>, error: f64 },
    #[error("expected {expected} per-frame cameras, found {found}")]
    CameraCount { expected: u32, found: usize },
    #[error("person {person}: duplicate person id")]
    DuplicatePerson { person: u32 },
    #[error("person {person}: face {face} index {index} out of bounds")]
    FaceIndexOutOfBounds { person: u32, face: usize, index: u32 },
    #[error("person {person}: face {face} is degenerate")]
    DegenerateFace { person: u32, face: usize },
    #[error("person {person} frame {frame}: {found} vertices, expected {expected}")]
    VertexCount {
        person: u32,
        frame: u32,
        expected: usize,
        found: usize,
    },
    #[error("person {person} frame {frame}: vertex {vertex} is not finite")]
    NonFiniteVertex { person: u32, frame: u32, vertex: usize },
    #[error("person {person}: frame index {frame} not strictly increasing")]
    FrameOrder { person: u32, frame: u32 },
    #[error("person {person}: frame index {frame} outside [0, {frame_count})")]
    FrameOutOfRange {
        person: u32,
        frame: u32,
        frame_count: u32,
    },
}

/// Lists every invariant violation in the scene; empty means valid.
pub fn validate_scene(scene: &SceneSequence) -> Vec<Violation> {
    let mut report = Vec::new();

    if let CameraSet::PerFrame(cams) = &scene.cameras {
        if cams.len() != scene.frame_count as usize {
            report.push(Violation::CameraCount {
                expected: scene.frame_count,
                found: cams.len(),
            });
        }
    }
    for (frame, cam) in scene.cameras.iter() {
        if !cam.intrinsics_valid() {
            report.push(Violation::CameraIntrinsics { frame });
            continue;
        }
        let error = cam.orthonormality_error();
        if !(error < ORTHONORMAL_TOLERANCE) {
            report.push(Violation::CameraNotOrthonormal { frame, error });
        }
    }

    let mut ids: Vec<u32> = scene.persons.iter().map(Person::id).collect();
    ids.sort_unstable();
    for w in ids.windows(2) {
        if w[0] == w[1] {
            report.push(Violation::DuplicatePerson { person: w[0] });
        }
    }

    for person in &scene.persons {
        let mesh = &person.mesh;
        let pid = mesh.person_id;
        for (fi, face) in person.faces.faces.iter().enumerate() {
            let mut in_bounds = true;
            for &index in face {
                if index as usize >= mesh.vertex_count {
                    in_bounds = false;
                    report.push(Violation::FaceIndexOutOfBounds {
                        person: pid,
                        face: fi,
                        index,
                    });
                }
            }
            if in_bounds && (face[0] == face[1] || face[1] == face[2] || face[0] == face[2]) {
                report.push(Violation::DegenerateFace { person: pid, face: fi });
            }
        }

        let mut previous: Option<u32> = None;
        for frame in &mesh.frames {
            let t = frame.frame_index;
            if previous.is_some_and(|p| t <= p) {
                report.push(Violation::FrameOrder { person: pid, frame: t });
            }
            previous = Some(t);
            if t >= scene.frame_count {
                report.push(Violation::FrameOutOfRange {
                    person: pid,
                    frame: t,
                    frame_count: scene.frame_count,
                });
            }
            if frame.vertices.len() != mesh.vertex_count {
                report.push(Violation::VertexCount {
                    person: pid,
                    frame: t,
                    expected: mesh.vertex_count,
                    found: frame.vertices.len(),
                });
            }
            for (vertex, v) in frame.vertices.iter().enumerate() {
                if !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite()) {
                    report.push(Violation::NonFiniteVertex {
                        person: pid,
                        frame: t,
                        vertex,
                    });
                }
            }
        }
    }
    report
}
