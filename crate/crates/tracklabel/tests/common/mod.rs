#![allow(dead_code)]

use std::path::{Path, PathBuf};

use tracklabel::pipeline::{annotate, AnnotateConfig};
use tracklabel::synth_io;
use tracklabel::dataset::TrackDataset;
use tracklabel_core::synth::{generate_scene, BodySpec, NoiseSpec, OffsetPattern, Shape, SynthSpec, TrackOffset};
use tracklabel_core::{Camera, FilterParams, MetricsConfig, Track};

pub fn camera() -> Camera {
    Camera::identity(200.0, (128.0, 128.0), 256, 256)
}

fn sphere(id: u32, radius: f64, position: [f64; 3], velocity: [f64; 3], spin_rate: f64) -> BodySpec {
    BodySpec {
        id: Some(id),
        shape: Shape::Icosphere { level: 3 },
        radius,
        position,
        velocity,
        spin_axis: [0.0, 1.0, 0.0],
        spin_rate,
    }
}

/// Sphere A passes in front of sphere B.
pub fn crossing_spec() -> SynthSpec {
    SynthSpec {
        frame_count: 30,
        camera: camera(),
        camera_velocity: None,
        bodies: vec![
            sphere(0, 0.45, [-0.7, 0.05, 4.0], [0.03, 0.0, 0.0], 0.0),
            sphere(1, 0.6, [0.3, 0.0, 6.0], [-0.01, 0.0, 0.0], 0.02),
        ],
        noise: NoiseSpec::default(),
        seed: 7,
    }
}

/// Vertices of `person` visible at frame 0, nearest to `target` first.
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

/// Alternating ±20 px offsets on two front vertices of each body.
pub fn alternating_offsets(spec: &SynthSpec) -> Vec<TrackOffset> {
    let truth = generate_scene(spec).unwrap().ground_truth;
    let mut out = Vec::new();
    for (body, b) in spec.bodies.iter().enumerate() {
        let c = spec.camera.project(&b.position.into()).unwrap();
        let id = spec.body_id(body);
        for target in [(c.x, c.y), (c.x, c.y + 10.0)] {
            out.push(TrackOffset {
                person: id,
                vertex: visible_near(&truth, id, target)[0],
                from_frame: 0,
                to_frame: None,
                offset_px: [20.0, 0.0],
                pattern: OffsetPattern::Alternating,
            });
        }
    }
    out
}

pub fn corrupted_spec() -> SynthSpec {
    let mut spec = crossing_spec();
    spec.noise.track_offsets = alternating_offsets(&spec);
    spec
}

/// Generates `spec` into `dir` and returns the directory.
pub fn synth_dir(spec: &SynthSpec, dir: &Path) -> PathBuf {
    synth_io::run(spec, None, dir).unwrap();
    dir.to_owned()
}

pub fn config(data: &Path, out: &Path, jobs: usize) -> AnnotateConfig {
    AnnotateConfig {
        scene: synth_io::scene_dir(data),
        flow: synth_io::flow_dir(data),
        out: out.to_owned(),
        params: FilterParams::default(),
        metrics: MetricsConfig::default(),
        jobs,
        overlay: None,
    }
}

pub fn annotate_dir(data: &Path, out: &Path, jobs: usize) -> TrackDataset {
    annotate(&config(data, out, jobs)).unwrap()
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_tracklabel")
}
