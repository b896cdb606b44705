#![allow(dead_code)]

use tracklabel_core::synth::{BodySpec, NoiseSpec, OffsetPattern, Shape, SynthSpec, TrackOffset};
use tracklabel_core::{Camera, Track};

pub fn camera() -> Camera {
    Camera::identity(200.0, (128.0, 128.0), 256, 256)
}

/// Sphere A passes in front of sphere B.
pub fn crossing_spec() -> SynthSpec {
    SynthSpec {
        frame_count: 30,
        camera: camera(),
        camera_velocity: None,
        bodies: vec![
            BodySpec {
                id: Some(0),
                shape: Shape::Icosphere { level: 3 },
                radius: 0.45,
                position: [-0.7, 0.05, 4.0],
                velocity: [0.03, 0.0, 0.0],
                spin_axis: [0.0, 1.0, 0.0],
                spin_rate: 0.0,
            },
            BodySpec {
                id: Some(1),
                shape: Shape::Icosphere { level: 3 },
                radius: 0.6,
                position: [0.3, 0.0, 6.0],
                velocity: [-0.01, 0.0, 0.0],
                spin_axis: [0.0, 1.0, 0.0],
                spin_rate: 0.02,
            },
        ],
        noise: NoiseSpec::default(),
        seed: 7,
    }
}

/// Ground-truth tracks of `person` visible at frame 0, sorted by pixel
/// distance at frame 0 from `target`.
pub fn visible_near(truth: &[Track], person: u32, target: (f64, f64)) -> Vec<u32> {
    let mut found: Vec<(f64, u32)> = truth
        .iter()
        .filter(|t| t.person_id == person && t.samples[0].visible)
        .map(|t| {
            let p = t.samples[0].position;
            ((p.x - target.0).hypot(p.y - target.1), t.vertex_index)
        })
        .collect();
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    found.into_iter().map(|(_, j)| j).collect()
}

/// Projected center of a body at frame 0.
pub fn projected_center(spec: &SynthSpec, body: usize) -> (f64, f64) {
    let p = spec.camera.project(&spec.bodies[body].position.into()).unwrap();
    (p.x, p.y)
}

/// Alternating ±20 px offsets over the whole sequence on two vertices near
/// the front of each sphere.
pub fn alternating_offsets(spec: &SynthSpec, truth: &[Track]) -> Vec<TrackOffset> {
    let mut out = Vec::new();
    for body in 0..spec.bodies.len() {
        let (cx, cy) = projected_center(spec, body);
        let id = spec.body_id(body);
        for target in [(cx, cy), (cx, cy + 10.0)] {
            let vertex = visible_near(truth, id, target)[0];
            out.push(TrackOffset {
                person: id,
                vertex,
                from_frame: 0,
                to_frame: None,
                offset_px: [20.0, 0.0],
                pattern: OffsetPattern::Alternating,
            });
        }
    }
    out
}
