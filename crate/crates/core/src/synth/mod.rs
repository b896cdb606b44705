//! Synthetic scenes with analytic ground truth.
//!
//! Bodies are icospheres or two-link chains of icospheres moving rigidly.
//! Because every vertex lies on an exact sphere, visibility can be decided
//! analytically, and flow is rendered by z-buffering the meshes.

mod corrupt;
mod icosphere;
mod random;
mod raster;

use alloc::sync::Arc;
use alloc::vec::Vec;

use nalgebra::{Rotation3, Unit};
use serde::{Deserialize, Serialize};

pub use corrupt::{corrupt, CorruptedFlow, CorruptedTrack, CorruptionKind, CorruptionManifest};
pub use icosphere::icosphere;
pub use random::random_scene;
pub use raster::{render_flow, FlowMesh};

use crate::geom::{Point3d, Vec3};
use crate::scene::{
    generate_pseudo_tracks, Camera, CameraSet, FaceTopology, FlowPair, MeshFrame, MeshFrameSet,
    Person, SceneSequence, Track,
};

pub const MAX_SUBDIVISION: u32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Icosphere { level: u32 },
    /// Two spheres; the second sits `link_length` from the first along the
    /// body's x axis and swings about the body's z axis.
    Chain {
        level: u32,
        link_length: f64,
        #[serde(default)]
        swing_rate: f64,
    },
}

impl Shape {
    pub fn level(&self) -> u32 {
        match *self {
            Shape::Icosphere { level } | Shape::Chain { level, .. } => level,
        }
    }
}

/// Rigid motion of one body, per frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodySpec {
    #[serde(default)]
    pub id: Option<u32>,
    pub shape: Shape,
    pub radius: f64,
    pub position: [f64; 3],
    #[serde(default)]
    pub velocity: [f64; 3],
    #[serde(default = "default_axis")]
    pub spin_axis: [f64; 3],
    #[serde(default)]
    pub spin_rate: f64,
}

fn default_axis() -> [f64; 3] {
    [0.0, 1.0, 0.0]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffsetPattern {
    Constant,
    /// Sign flips every frame, starting positive at `from_frame`.
    Alternating,
}

/// Pixel offset applied to one vertex's geometry over a frame range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackOffset {
    pub person: u32,
    pub vertex: u32,
    pub from_frame: u32,
    #[serde(default)]
    pub to_frame: Option<u32>,
    pub offset_px: [f64; 2],
    #[serde(default = "default_pattern")]
    pub pattern: OffsetPattern,
}

fn default_pattern() -> OffsetPattern {
    OffsetPattern::Constant
}

/// Gaussian world-space jitter on designated vertices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositionJitter {
    pub sigma: f64,
    /// `(person, vertex)` pairs.
    pub tracks: Vec<(u32, u32)>,
    #[serde(default)]
    pub from_frame: u32,
    #[serde(default)]
    pub to_frame: Option<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowDirection {
    Forward,
    Backward,
}

/// Constant displacement added to flow rasters of a frame range, optionally
/// restricted to the pixel rectangle `[x0, y0, x1, y1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowCorruption {
    pub direction: FlowDirection,
    pub from_frame: u32,
    #[serde(default)]
    pub to_frame: Option<u32>,
    pub offset_px: [f64; 2],
    #[serde(default)]
    pub region: Option<[u32; 4]>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    pub position_jitter: Option<PositionJitter>,
    pub track_offsets: Vec<TrackOffset>,
    pub flow: Vec<FlowCorruption>,
}

impl NoiseSpec {
    pub fn is_empty(&self) -> bool {
        self.position_jitter.as_ref().is_none_or(|j| j.tracks.is_empty() || j.sigma == 0.0)
            && self.track_offsets.is_empty()
            && self.flow.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub frame_count: u32,
    pub camera: Camera,
    /// Camera center motion per frame; non-zero selects per-frame cameras.
    #[serde(default)]
    pub camera_velocity: Option<[f64; 3]>,
    pub bodies: Vec<BodySpec>,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SpecInvalid {
    #[error("frame_count must be at least 2")]
    FrameCount,
    #[error("body {0}: subdivision level must be in [0, {MAX_SUBDIVISION}]")]
    Level(usize),
    #[error("body {0}: radius must be finite and positive")]
    Radius(usize),
    #[error("body {0}: non-finite motion parameters")]
    Motion(usize),
    #[error("duplicate body id {0}")]
    DuplicateId(u32),
    #[error("camera intrinsics or rotation invalid")]
    Camera,
    #[error("jitter sigma must be finite and non-negative")]
    Sigma,
    #[error("noise refers to unknown person {0} or vertex {1}")]
    UnknownTrack(u32, u32),
}

/// An exact sphere that a group of mesh vertices lies on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sphere {
    pub center: Point3d,
    pub radius: f64,
}

/// Everything a synthetic run produces.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthOutput {
    pub scene: SceneSequence,
    pub flows: Vec<FlowPair>,
    /// Clean projected tracks with analytic visibility.
    pub ground_truth: Vec<Track>,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SpecInvalid> {
        if self.frame_count < 2 {
            return Err(SpecInvalid::FrameCount);
        }
        if !self.camera.intrinsics_valid() || !(self.camera.orthonormality_error() < crate::scene::ORTHONORMAL_TOLERANCE) {
            return Err(SpecInvalid::Camera);
        }
        let mut ids = Vec::new();
        for (i, b) in self.bodies.iter().enumerate() {
            if b.shape.level() > MAX_SUBDIVISION {
                return Err(SpecInvalid::Level(i));
            }
            if !(b.radius.is_finite() && b.radius > 0.0) {
                return Err(SpecInvalid::Radius(i));
            }
            let mut finite: Vec<f64> = b.position.iter().chain(&b.velocity).chain(&b.spin_axis).copied().collect();
            finite.push(b.spin_rate);
            if let Shape::Chain { link_length, swing_rate, .. } = b.shape {
                finite.extend([link_length, swing_rate]);
            }
            if !finite.iter().all(|v| v.is_finite()) {
                return Err(SpecInvalid::Motion(i));
            }
            let id = self.body_id(i);
            if ids.contains(&id) {
                return Err(SpecInvalid::DuplicateId(id));
            }
            ids.push(id);
        }
        if let Some(j) = &self.noise.position_jitter {
            if !(j.sigma.is_finite() && j.sigma >= 0.0) {
                return Err(SpecInvalid::Sigma);
            }
        }
        let tracks = self
            .noise
            .track_offsets
            .iter()
            .map(|o| (o.person, o.vertex))
            .chain(self.noise.position_jitter.iter().flat_map(|j| j.tracks.iter().copied()));
        for (p, v) in tracks {
            let known = (0..self.bodies.len())
                .find(|&i| self.body_id(i) == p)
                .is_some_and(|i| (v as usize) < body_template(&self.bodies[i].shape).0.len());
            if !known {
                return Err(SpecInvalid::UnknownTrack(p, v));
            }
        }
        Ok(())
    }

    pub fn body_id(&self, index: usize) -> u32 {
        self.bodies[index].id.unwrap_or(index as u32)
    }

    pub fn camera_at(&self, frame: u32) -> Camera {
        let mut cam = self.camera.clone();
        if let Some(v) = self.camera_velocity {
            let center = cam.center().coords + Vec3::from(v) * frame as f64;
            let t = -(cam.rotation_matrix() * center);
            cam.translation = [t.x, t.y, t.z];
        }
        cam
    }

    fn camera_set(&self) -> CameraSet {
        match self.camera_velocity {
            Some(_) => CameraSet::PerFrame((0..self.frame_count).map(|t| self.camera_at(t)).collect()),
            None => CameraSet::Static(self.camera.clone()),
        }
    }
}

/// Unit-sphere template of a shape: vertex directions, faces, and which
/// link each vertex belongs to.
fn body_template(shape: &Shape) -> (Vec<Vec3>, Vec<[u32; 3]>, Vec<u8>) {
    let (v, f) = icosphere(shape.level());
    match shape {
        Shape::Icosphere { .. } => {
            let n = v.len();
            (v, f, alloc::vec![0; n])
        }
        Shape::Chain { .. } => {
            let n = v.len() as u32;
            let mut verts = v.clone();
            verts.extend_from_slice(&v);
            let mut faces = f.clone();
            faces.extend(f.iter().map(|t| t.map(|i| i + n)));
            let mut links = alloc::vec![0u8; n as usize];
            links.extend(core::iter::repeat_n(1u8, n as usize));
            (verts, faces, links)
        }
    }
}

fn rotation(axis: &[f64; 3], angle: f64) -> Rotation3<f64> {
    let a = Vec3::from(*axis);
    if a.norm() == 0.0 || angle == 0.0 {
        Rotation3::identity()
    } else {
        Rotation3::from_axis_angle(&Unit::new_normalize(a), angle)
    }
}

/// Link spheres of a body at a frame.
pub fn body_spheres(body: &BodySpec, frame: u32) -> Vec<Sphere> {
    let t = frame as f64;
    let center = Point3d::from(body.position) + Vec3::from(body.velocity) * t;
    let rot = rotation(&body.spin_axis, body.spin_rate * t);
    let mut out = alloc::vec![Sphere { center, radius: body.radius }];
    if let Shape::Chain { link_length, swing_rate, .. } = body.shape {
        let swing = rotation(&[0.0, 0.0, 1.0], swing_rate * t);
        let offset = rot * (swing * Vec3::new(link_length, 0.0, 0.0));
        out.push(Sphere {
            center: center + offset,
            radius: body.radius,
        });
    }
    out
}

fn quantize(p: Point3d) -> Point3d {
    p.map(|c| c as f32 as f64)
}

/// Vertex positions of a body at a frame, rounded to `f32` precision so the
/// in-memory scene matches what the container format stores.
pub fn body_vertices(body: &BodySpec, frame: u32, template: &[Vec3], links: &[u8]) -> Vec<Point3d> {
    let t = frame as f64;
    let rot = rotation(&body.spin_axis, body.spin_rate * t);
    let swing = match body.shape {
        Shape::Chain { swing_rate, .. } => rotation(&[0.0, 0.0, 1.0], swing_rate * t),
        Shape::Icosphere { .. } => Rotation3::identity(),
    };
    let spheres = body_spheres(body, frame);
    template
        .iter()
        .zip(links)
        .map(|(dir, &link)| {
            let local = if link == 0 { rot * dir } else { rot * (swing * dir) };
            quantize(spheres[link as usize].center + local * body.radius)
        })
        .collect()
}

/// Segment-sphere test: does `origin + s * (target - origin)` enter the
/// sphere for some `s` in `[0, 1)`?
fn segment_enters(origin: &Point3d, target: &Point3d, sphere: &Sphere) -> bool {
    let d = target - origin;
    let m = origin - sphere.center;
    let a = d.norm_squared();
    let b = m.dot(&d);
    let c = m.norm_squared() - sphere.radius * sphere.radius;
    let disc = b * b - a * c;
    if disc <= 0.0 {
        return false;
    }
    let root = libm::sqrt(disc);
    let s0 = (-b - root) / a;
    let s1 = (-b + root) / a;
    s0 < 1.0 && s1 > 0.0
}

/// True when some face incident to `vertex` has its outward normal facing
/// `center`. For a convex mesh this is exactly the condition that the
/// segment from `center` to the vertex stays outside the mesh.
pub fn faces_camera(center: &Point3d, vertices: &[Point3d], incident: &[[u32; 3]], vertex: usize) -> bool {
    let v = vertices[vertex];
    incident.iter().any(|f| {
        let [a, b, c] = f.map(|i| vertices[i as usize]);
        (b - a).cross(&(c - a)).dot(&(center - v)) > 0.0
    })
}

/// Analytic visibility of a vertex lying on sphere `own`: the vertex must
/// face the camera center (see [`faces_camera`]) and no other sphere may
/// cut the segment from the center to it.
pub fn analytic_visible(center: &Point3d, point: &Point3d, facing: bool, own: usize, spheres: &[Sphere]) -> bool {
    if !facing {
        return false;
    }
    spheres
        .iter()
        .enumerate()
        .all(|(i, s)| i == own || !segment_enters(center, point, s))
}

/// Pixel distance from the projection of `point` to the projected outline
/// of `sphere`, measured along the direction toward the sphere center.
/// `f64::INFINITY` when the outline cannot be projected.
pub fn silhouette_distance_px(camera: &Camera, sphere: &Sphere, point: &Point3d) -> f64 {
    let c = camera.center();
    let to_center = sphere.center - c;
    let dist = to_center.norm();
    if dist <= sphere.radius {
        return f64::INFINITY;
    }
    let Ok(px) = camera.project(point) else {
        return f64::INFINITY;
    };
    let u = to_center / dist;
    let d = (point - c).normalize();
    let half_angle = libm::asin(sphere.radius / dist);
    // Unit vector perpendicular to u in the plane of u and d.
    let mut perp = d - u * d.dot(&u);
    if perp.norm() < 1e-12 {
        perp = u.cross(&Vec3::x());
        if perp.norm() < 1e-12 {
            perp = u.cross(&Vec3::y());
        }
    }
    let perp = perp.normalize();
    let edge_dir = u * libm::cos(half_angle) + perp * libm::sin(half_angle);
    match camera.project(&(c + edge_dir)) {
        Ok(e) => (e - px).norm(),
        Err(_) => f64::INFINITY,
    }
}

/// Spheres of every body at a frame, with the owning person id.
pub fn scene_spheres(spec: &SynthSpec, frame: u32) -> Vec<(u32, Sphere)> {
    spec.bodies
        .iter()
        .enumerate()
        .flat_map(|(i, b)| {
            let id = spec.body_id(i);
            body_spheres(b, frame).into_iter().map(move |s| (id, s))
        })
        .collect()
}

/// Comparison of computed visibility flags against analytic ground truth.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Agreement {
    pub samples: usize,
    pub disagreements: usize,
    /// Largest pixel distance from a disagreeing sample to the nearest
    /// sphere outline; 0 when there are none.
    pub max_outline_distance_px: f64,
}

impl Agreement {
    pub fn fraction(&self) -> f64 {
        if self.samples == 0 {
            1.0
        } else {
            1.0 - self.disagreements as f64 / self.samples as f64
        }
    }
}

/// Compares `tracks` (same scene, visibility classified) with the analytic
/// visibility in `out.ground_truth`. Tracks and ground truth are matched
/// by key and frame.
pub fn visibility_agreement(spec: &SynthSpec, out: &SynthOutput, tracks: &[Track]) -> Agreement {
    let mut agreement = Agreement::default();
    let spheres: Vec<Vec<(u32, Sphere)>> = (0..spec.frame_count).map(|t| scene_spheres(spec, t)).collect();
    for truth in &out.ground_truth {
        let Ok(i) = tracks.binary_search_by_key(&truth.key(), |t| t.key()) else {
            continue;
        };
        let (pid, j) = truth.key();
        let Some(person) = out.scene.persons.iter().find(|p| p.id() == pid) else {
            continue;
        };
        for expected in &truth.samples {
            let Some(got) = tracks[i].sample_at(expected.frame_index) else {
                continue;
            };
            agreement.samples += 1;
            if got.visible == expected.visible {
                continue;
            }
            agreement.disagreements += 1;
            let t = expected.frame_index;
            let (Some(camera), Some(frame)) = (out.scene.camera(t), person.mesh.frame(t)) else {
                continue;
            };
            let v = frame.vertices[j as usize];
            let d = spheres[t as usize]
                .iter()
                .map(|(_, s)| silhouette_distance_px(camera, s, &v))
                .fold(f64::INFINITY, f64::min);
            agreement.max_outline_distance_px = agreement.max_outline_distance_px.max(d);
        }
    }
    agreement
}

/// Generates a clean scene, its flows and ground truth, then applies the
/// spec's noise controls.
pub fn generate(spec: &SynthSpec) -> Result<(SynthOutput, CorruptionManifest), SpecInvalid> {
    let clean = generate_scene(spec)?;
    Ok(corrupt(&clean, &spec.noise, spec.seed))
}

/// Generates the clean scene, flows and ground truth.
pub fn generate_scene(spec: &SynthSpec) -> Result<SynthOutput, SpecInvalid> {
    spec.validate()?;

    let mut persons = Vec::with_capacity(spec.bodies.len());
    let mut links_per_body = Vec::with_capacity(spec.bodies.len());
    for (i, body) in spec.bodies.iter().enumerate() {
        let (template, faces, links) = body_template(&body.shape);
        let frames = (0..spec.frame_count)
            .map(|t| MeshFrame {
                frame_index: t,
                vertices: body_vertices(body, t, &template, &links),
            })
            .collect();
        persons.push(Person {
            mesh: MeshFrameSet {
                person_id: spec.body_id(i),
                vertex_count: template.len(),
                frames,
            },
            faces: Arc::new(FaceTopology::new(faces)),
        });
        links_per_body.push(links);
    }
    let scene = SceneSequence {
        frame_count: spec.frame_count,
        cameras: spec.camera_set(),
        persons,
    };

    let flows = (0..spec.frame_count - 1).map(|t| render_flow_pair(&scene, t)).collect();

    let mut ground_truth = generate_pseudo_tracks(&scene);
    // Sphere list layout: bodies in spec order, links in order.
    let mut sphere_base = Vec::with_capacity(spec.bodies.len());
    let mut acc = 0usize;
    for b in &spec.bodies {
        sphere_base.push(acc);
        acc += match b.shape {
            Shape::Icosphere { .. } => 1,
            Shape::Chain { .. } => 2,
        };
    }
    let spheres_by_frame: Vec<Vec<Sphere>> = (0..spec.frame_count)
        .map(|t| scene_spheres(spec, t).into_iter().map(|(_, s)| s).collect())
        .collect();
    let incident: Vec<Vec<Vec<[u32; 3]>>> = scene
        .persons
        .iter()
        .map(|p| {
            let mut adj = alloc::vec![Vec::new(); p.mesh.vertex_count];
            for f in &p.faces.faces {
                for &i in f {
                    adj[i as usize].push(*f);
                }
            }
            adj
        })
        .collect();
    for track in &mut ground_truth {
        let body = (0..spec.bodies.len())
            .find(|&i| spec.body_id(i) == track.person_id)
            .expect("track person comes from a body");
        let person = &scene.persons[body];
        let j = track.vertex_index as usize;
        let own = sphere_base[body] + links_per_body[body][j] as usize;
        for sample in &mut track.samples {
            let t = sample.frame_index;
            let center = scene.camera(t).expect("camera for every frame").center();
            let vertices = &person.mesh.frames[t as usize].vertices;
            let facing = faces_camera(&center, vertices, &incident[body][j], j);
            sample.visible = analytic_visible(&center, &vertices[j], facing, own, &spheres_by_frame[t as usize]);
        }
    }

    Ok(SynthOutput {
        scene,
        flows,
        ground_truth,
        seed: spec.seed,
    })
}

/// Renders forward and backward flow between frames `t` and `t + 1` of a
/// scene. Both frames must exist for every person drawn.
pub fn render_flow_pair(scene: &SceneSequence, t: u32) -> FlowPair {
    let cam0 = scene.camera(t).expect("camera at t");
    let cam1 = scene.camera(t + 1).expect("camera at t + 1");
    let mut fwd_meshes = Vec::new();
    let mut bwd_meshes = Vec::new();
    for person in &scene.persons {
        let (Some(a), Some(b)) = (person.mesh.frame(t), person.mesh.frame(t + 1)) else {
            continue;
        };
        fwd_meshes.push(FlowMesh {
            source: &a.vertices,
            destination: &b.vertices,
            faces: &person.faces.faces,
        });
        bwd_meshes.push(FlowMesh {
            source: &b.vertices,
            destination: &a.vertices,
            faces: &person.faces.faces,
        });
    }
    FlowPair {
        frame_index: t,
        forward: render_flow(&fwd_meshes, cam0, cam1),
        backward: render_flow(&bwd_meshes, cam1, cam0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::validate_scene;
    use alloc::vec;

    fn sphere_spec(velocity: [f64; 3]) -> SynthSpec {
        SynthSpec {
            frame_count: 3,
            camera: Camera::identity(100.0, (32.0, 32.0), 64, 64),
            camera_velocity: None,
            bodies: vec![BodySpec {
                id: None,
                shape: Shape::Icosphere { level: 2 },
                radius: 0.5,
                position: [0.0, 0.0, 4.0],
                velocity,
                spin_axis: default_axis(),
                spin_rate: 0.0,
            }],
            noise: NoiseSpec::default(),
            seed: 1,
        }
    }

    #[test]
    fn static_sphere_has_zero_flow_and_hemisphere_visibility() {
        let out = generate_scene(&sphere_spec([0.0; 3])).unwrap();
        assert!(validate_scene(&out.scene).is_empty());
        for pair in &out.flows {
            assert!(pair.forward.data.iter().chain(&pair.backward.data).all(|v| *v == [0.0, 0.0]));
        }
        let center = Point3d::origin();
        let sphere_center = Point3d::new(0.0, 0.0, 4.0);
        for track in &out.ground_truth {
            let s = &track.samples[0];
            let v = out.scene.persons[0].mesh.frames[0].vertices[track.vertex_index as usize];
            let cos = (v - sphere_center).normalize().dot(&(center - v).normalize());
            // Away from the rim the mesh agrees with the exact sphere.
            if cos > 0.2 {
                assert!(s.visible);
            } else if cos < -0.2 {
                assert!(!s.visible);
            }
            assert!(track.samples.iter().all(|x| x.visible == s.visible));
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut s = sphere_spec([0.0; 3]);
        s.frame_count = 1;
        assert_eq!(s.validate(), Err(SpecInvalid::FrameCount));
        let mut s = sphere_spec([0.0; 3]);
        s.bodies[0].shape = Shape::Icosphere { level: 5 };
        assert_eq!(s.validate(), Err(SpecInvalid::Level(0)));
        let mut s = sphere_spec([0.0; 3]);
        s.noise.position_jitter = Some(PositionJitter {
            sigma: -1.0,
            tracks: vec![],
            from_frame: 0,
            to_frame: None,
        });
        assert_eq!(s.validate(), Err(SpecInvalid::Sigma));
        let mut s = sphere_spec([0.0; 3]);
        s.noise.track_offsets.push(TrackOffset {
            person: 9,
            vertex: 0,
            from_frame: 0,
            to_frame: None,
            offset_px: [1.0, 0.0],
            pattern: OffsetPattern::Constant,
        });
        assert_eq!(s.validate(), Err(SpecInvalid::UnknownTrack(9, 0)));
    }

    #[test]
    fn chain_has_two_links() {
        let mut s = sphere_spec([0.0; 3]);
        s.bodies[0].shape = Shape::Chain {
            level: 1,
            link_length: 1.2,
            swing_rate: 0.1,
        };
        let out = generate_scene(&s).unwrap();
        assert_eq!(out.scene.persons[0].mesh.vertex_count, 2 * 42);
        assert_eq!(out.scene.persons[0].faces.len(), 2 * 80);
        assert!(validate_scene(&out.scene).is_empty());
        let spheres = body_spheres(&s.bodies[0], 2);
        for (j, v) in out.scene.persons[0].mesh.frames[2].vertices.iter().enumerate() {
            let link = usize::from(j >= 42);
            assert!(((v - spheres[link].center).norm() - 0.5).abs() < 1e-6);
        }
    }

    #[test]
    fn moving_camera_uses_per_frame_cameras() {
        let mut s = sphere_spec([0.0; 3]);
        s.camera_velocity = Some([0.1, 0.0, 0.0]);
        let out = generate_scene(&s).unwrap();
        let CameraSet::PerFrame(cams) = &out.scene.cameras else {
            panic!("expected per-frame cameras");
        };
        assert_eq!(cams.len(), 3);
        assert!((cams[2].center() - Point3d::new(0.2, 0.0, 0.0)).norm() < 1e-12);
        // A static sphere seen from a camera moving +x drifts left.
        let f = out.flows[0].forward.at(32, 32);
        assert!(f.x < 0.0);
    }

    #[test]
    fn silhouette_distance_on_axis_sphere() {
        let cam = Camera::identity(100.0, (0.0, 0.0), 64, 64);
        let sphere = Sphere {
            center: Point3d::new(0.0, 0.0, 5.0),
            radius: 1.0,
        };
        let half = libm::asin(0.2);
        let edge_px = 100.0 * libm::tan(half);
        let p = Point3d::new(0.0, 0.0, 4.0);
        assert!((silhouette_distance_px(&cam, &sphere, &p) - edge_px).abs() < 1e-9);
        let q = Point3d::new(1.0, 0.0, 5.0);
        let expected = edge_px - 100.0 * 0.2;
        assert!((silhouette_distance_px(&cam, &sphere, &q) - expected).abs() < 1e-9);
    }
}
