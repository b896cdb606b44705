//! Random single-frame scenes for cross-checking visibility backends.

use alloc::sync::Arc;
use alloc::vec::Vec;

use nalgebra::{Rotation3, Unit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::icosphere;
use crate::geom::{Point3d, Vec3};
use crate::scene::{Camera, CameraSet, FaceTopology, MeshFrame, MeshFrameSet, Person, SceneSequence};

/// Wavy grid patch with `cols × rows` vertices, randomly placed and
/// oriented in front of the camera.
fn patch(rng: &mut ChaCha8Rng, cols: usize, rows: usize) -> (Vec<Point3d>, Vec<[u32; 3]>) {
    let size = rng.random_range(0.4..2.0);
    let center = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(3.0..7.0));
    let axis = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let rot = match Unit::try_new(axis, 1e-6) {
        Some(a) => Rotation3::from_axis_angle(&a, rng.random_range(0.0..core::f64::consts::PI)),
        None => Rotation3::identity(),
    };
    let bump = 0.25 * size;
    let mut verts = Vec::with_capacity(cols * rows);
    for r in 0..rows {
        for c in 0..cols {
            let u = (c as f64 / (cols - 1) as f64 - 0.5) * size;
            let v = (r as f64 / (rows - 1) as f64 - 0.5) * size;
            let w = rng.random_range(-bump..bump);
            let p = rot * Vec3::new(u, v, w) + center;
            verts.push(Point3d::from(p.map(|x| x as f32 as f64)));
        }
    }
    let mut faces = Vec::new();
    for r in 0..rows - 1 {
        for c in 0..cols - 1 {
            let i = (r * cols + c) as u32;
            let right = i + 1;
            let down = i + cols as u32;
            faces.push([i, right, down + 1]);
            faces.push([i, down + 1, down]);
        }
    }
    (verts, faces)
}

fn sphere(rng: &mut ChaCha8Rng, level: u32) -> (Vec<Point3d>, Vec<[u32; 3]>) {
    let (dirs, faces) = icosphere(level);
    let radius = rng.random_range(0.2..0.8);
    let center = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(3.0..7.0));
    let verts = dirs
        .iter()
        .map(|d| Point3d::from((center + d * radius).map(|x| x as f32 as f64)))
        .collect();
    (verts, faces)
}

/// A single-frame scene of up to four persons (wavy patches and
/// icospheres) with roughly `triangles` triangles in total, viewed by a
/// 256×256 identity camera.
pub fn random_scene(seed: u64, triangles: usize) -> SceneSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let person_count = rng.random_range(1..=4usize);
    let per_person = (triangles / person_count).max(2);
    let mut persons = Vec::with_capacity(person_count);
    for id in 0..person_count as u32 {
        let (verts, faces) = if rng.random_bool(0.25) {
            // Largest level whose face count fits the budget.
            let level = (0..=4).rev().find(|&l| 20 * 4usize.pow(l) <= per_person).unwrap_or(0);
            sphere(&mut rng, level)
        } else {
            let cols = rng.random_range(2..=libm::sqrt((per_person / 2) as f64).max(2.0) as usize);
            let rows = (per_person / (2 * (cols - 1).max(1)) + 1).max(2);
            patch(&mut rng, cols, rows)
        };
        persons.push(Person {
            mesh: MeshFrameSet {
                person_id: id,
                vertex_count: verts.len(),
                frames: alloc::vec![MeshFrame {
                    frame_index: 0,
                    vertices: verts,
                }],
            },
            faces: Arc::new(FaceTopology::new(faces)),
        });
    }
    SceneSequence {
        frame_count: 1,
        cameras: CameraSet::Static(Camera::identity(200.0, (128.0, 128.0), 256, 256)),
        persons,
    }
}
