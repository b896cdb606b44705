//! Ray-cast visibility of track samples against every mesh in the frame.
//!
//! A sample is occluded when the segment from the camera center to its
//! vertex meets any mesh triangle at `s < 1 - SELF_EPSILON`, ignoring the
//! triangles incident to the queried vertex itself. Hits on other persons
//! and on the vertex's own mesh both count.

mod bvh;
mod intersect;

use alloc::vec::Vec;

pub use bvh::{BruteForce, Bvh, BvhNode, EmptyScene, Hit, NodeKind, RayQuery, SceneTriangle, LEAF_SIZE};
pub use intersect::{ray_triangle_intersect, Ray};

use crate::geom::Point3d;
use crate::scene::{SceneSequence, Track};

/// Hits within this margin of the target (in units of the camera-to-vertex
/// segment) do not occlude.
pub const SELF_EPSILON: f64 = 1e-4;

/// Which intersector backs a visibility query.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Accel {
    #[default]
    Bvh,
    BruteForce,
}

/// All triangles of all persons present at `frame_index`.
pub fn frame_triangles(scene: &SceneSequence, frame_index: u32) -> Vec<SceneTriangle> {
    let mut out = Vec::new();
    for (person, frame) in scene.persons_at(frame_index) {
        for (fi, face) in person.faces.faces.iter().enumerate() {
            let v = |k: usize| frame.vertices[face[k] as usize];
            out.push(SceneTriangle {
                person_id: person.id(),
                face_index: fi as u32,
                indices: *face,
                vertices: [v(0), v(1), v(2)],
            });
        }
    }
    out
}

/// Per-vertex visibility of every person present at one frame. Vertices
/// behind the camera are marked not visible; they carry no track sample.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameVisibility {
    pub frame_index: u32,
    /// `(person_id, flag per vertex)`.
    pub persons: Vec<(u32, Vec<bool>)>,
}

impl FrameVisibility {
    pub fn get(&self, person_id: u32, vertex: u32) -> Option<bool> {
        self.persons
            .iter()
            .find(|(p, _)| *p == person_id)
            .and_then(|(_, flags)| flags.get(vertex as usize).copied())
    }
}

/// Occluding geometry of one frame, indexed for visibility queries.
#[derive(Clone, Debug)]
pub enum Occluders {
    Bvh(Bvh),
    BruteForce(BruteForce),
    /// No triangles: nothing can occlude.
    Empty,
}

impl Occluders {
    pub fn build(triangles: Vec<SceneTriangle>, accel: Accel) -> Self {
        if triangles.is_empty() {
            return Occluders::Empty;
        }
        match accel {
            Accel::Bvh => Bvh::build(triangles).map_or(Occluders::Empty, Occluders::Bvh),
            Accel::BruteForce => Occluders::BruteForce(BruteForce::new(triangles)),
        }
    }

    pub fn for_frame(scene: &SceneSequence, frame_index: u32, accel: Accel) -> Self {
        Self::build(frame_triangles(scene, frame_index), accel)
    }

    /// Whether `vertex` of `person_id`, located at `point`, is seen from
    /// `center`. Triangles incident to the vertex are ignored.
    pub fn is_visible(&self, center: &Point3d, person_id: u32, vertex: u32, point: &Point3d) -> bool {
        let Some(ray) = Ray::new(*center, *point) else {
            return true;
        };
        let skip = |t: &SceneTriangle| t.is_incident_to(person_id, vertex);
        let s_max = 1.0 - SELF_EPSILON;
        match self {
            Occluders::Bvh(b) => !b.any_hit(&ray, s_max, skip),
            Occluders::BruteForce(b) => !b.any_hit(&ray, s_max, skip),
            Occluders::Empty => true,
        }
    }
}

/// Visibility of every vertex at one frame. The frame's triangles are
/// indexed fresh on each call.
pub fn frame_visibility(scene: &SceneSequence, frame_index: u32, accel: Accel) -> FrameVisibility {
    let camera = scene.camera(frame_index);
    let occluders = camera.map(|_| Occluders::for_frame(scene, frame_index, accel));
    let mut persons = Vec::new();
    for (person, frame) in scene.persons_at(frame_index) {
        let pid = person.id();
        let flags = match (camera, &occluders) {
            (Some(camera), Some(occluders)) => {
                let center = camera.center();
                frame
                    .vertices
                    .iter()
                    .enumerate()
                    .map(|(j, v)| camera.to_camera(v).z > 0.0 && occluders.is_visible(&center, pid, j as u32, v))
                    .collect()
            }
            _ => alloc::vec![false; frame.vertices.len()],
        };
        persons.push((pid, flags));
    }
    persons.sort_by_key(|(p, _)| *p);
    FrameVisibility {
        frame_index,
        persons,
    }
}

/// Copies per-frame results onto track samples. Frames missing from
/// `frames` leave samples untouched.
pub fn apply_visibility(tracks: &mut [Track], frames: &[FrameVisibility]) {
    let mut by_frame: Vec<&FrameVisibility> = frames.iter().collect();
    by_frame.sort_by_key(|f| f.frame_index);
    for track in tracks.iter_mut() {
        let (pid, j) = track.key();
        for sample in &mut track.samples {
            let Ok(i) = by_frame.binary_search_by_key(&sample.frame_index, |f| f.frame_index) else {
                continue;
            };
            if let Some(v) = by_frame[i].get(pid, j) {
                sample.visible = v;
            }
        }
    }
}

/// Sets the `visible` flag of every sample, one frame at a time.
pub fn classify_visibility(scene: &SceneSequence, tracks: &mut [Track], accel: Accel) {
    let frames: Vec<FrameVisibility> = (0..scene.frame_count)
        .map(|t| frame_visibility(scene, t, accel))
        .collect();
    apply_visibility(tracks, &frames);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point3d;
    use crate::scene::{
        generate_pseudo_tracks, Camera, CameraSet, FaceTopology, MeshFrame, MeshFrameSet, Person,
    };
    use alloc::sync::Arc;
    use alloc::vec;

    fn person(id: u32, verts: Vec<[f64; 3]>, faces: Vec<[u32; 3]>) -> Person {
        Person {
            mesh: MeshFrameSet {
                person_id: id,
                vertex_count: verts.len(),
                frames: vec![MeshFrame {
                    frame_index: 0,
                    vertices: verts.into_iter().map(Point3d::from).collect(),
                }],
            },
            faces: Arc::new(FaceTopology::new(faces)),
        }
    }

    fn scene(persons: Vec<Person>) -> SceneSequence {
        SceneSequence {
            frame_count: 1,
            cameras: CameraSet::Static(Camera::identity(100.0, (50.0, 50.0), 100, 100)),
            persons,
        }
    }

    fn run(s: &SceneSequence, accel: Accel) -> Vec<Track> {
        let mut tracks = generate_pseudo_tracks(s);
        classify_visibility(s, &mut tracks, accel);
        tracks
    }

    #[test]
    fn isolated_triangle_vertices_are_visible() {
        let s = scene(vec![person(
            0,
            vec![[0.0, 0.0, 2.0], [0.5, 0.0, 2.5], [0.0, 0.5, 3.0]],
            vec![[0, 1, 2]],
        )]);
        for accel in [Accel::Bvh, Accel::BruteForce] {
            assert!(run(&s, accel).iter().all(|t| t.samples[0].visible));
        }
    }

    #[test]
    fn blocker_halfway_occludes() {
        let target = person(
            0,
            vec![[0.0, 0.0, 2.0], [0.1, 0.0, 2.0], [0.0, 0.1, 2.0]],
            vec![[0, 1, 2]],
        );
        // Covers the ray to vertex 0 at s = 0.5.
        let blocker = person(
            1,
            vec![[-1.0, -1.0, 1.0], [1.0, -1.0, 1.0], [0.0, 1.0, 1.0]],
            vec![[0, 1, 2]],
        );
        let s = scene(vec![target, blocker]);
        for accel in [Accel::Bvh, Accel::BruteForce] {
            let tracks = run(&s, accel);
            assert!(!tracks[0].samples[0].visible);
            assert!(tracks[3].samples[0].visible);
        }
    }

    #[test]
    fn contact_within_epsilon_does_not_occlude() {
        let target = person(
            0,
            vec![[0.0, 0.0, 2.0], [0.1, 0.0, 2.0], [0.0, 0.1, 2.0]],
            vec![[0, 1, 2]],
        );
        let z = 2.0 * (1.0 - 0.5 * SELF_EPSILON);
        let touching = person(
            1,
            vec![[-1.0, -1.0, z], [1.0, -1.0, z], [0.0, 1.0, z]],
            vec![[0, 1, 2]],
        );
        let s = scene(vec![target, touching]);
        assert!(run(&s, Accel::Bvh)[0].samples[0].visible);
    }

    #[test]
    fn self_occlusion_by_far_side_of_own_mesh() {
        // A tetrahedron seen from the origin: the apex at the back is hidden
        // by the front face of the same person.
        let s = scene(vec![person(
            0,
            vec![
                [-1.0, -1.0, 3.0],
                [1.0, -1.0, 3.0],
                [0.0, 1.0, 3.0],
                [0.0, 0.0, 5.0],
            ],
            vec![[0, 1, 2], [0, 1, 3], [1, 2, 3], [2, 0, 3]],
        )]);
        for accel in [Accel::Bvh, Accel::BruteForce] {
            let tracks = run(&s, accel);
            assert!(!tracks[3].samples[0].visible);
            assert!(tracks[0].samples[0].visible);
        }
    }

    #[test]
    fn empty_frame_leaves_everything_visible() {
        let s = scene(vec![person(0, vec![[0.0, 0.0, 1.0]], vec![])]);
        assert!(run(&s, Accel::Bvh)[0].samples[0].visible);
    }
}
