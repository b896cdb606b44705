mod common;

use tracklabel_core::flow_filter::sample_flow;
use tracklabel_core::scene::{generate_pseudo_tracks, validate_scene};
use tracklabel_core::synth::{generate, generate_scene, scene_spheres, silhouette_distance_px, BodySpec, Shape, SynthSpec};

fn chain_spec() -> SynthSpec {
    let mut spec = common::crossing_spec();
    spec.frame_count = 12;
    spec.camera_velocity = Some([0.004, -0.002, 0.0]);
    spec.bodies.push(BodySpec {
        id: Some(5),
        shape: Shape::Chain { level: 2, link_length: 0.5, swing_rate: 0.03 },
        radius: 0.2,
        position: [0.2, 0.6, 5.0],
        velocity: [0.0, -0.005, 0.0],
        spin_axis: [0.0, 0.0, 1.0],
        spin_rate: 0.01,
    });
    spec
}

#[test]
fn generated_scenes_validate() {
    for spec in [common::crossing_spec(), chain_spec()] {
        let out = generate_scene(&spec).unwrap();
        assert_eq!(validate_scene(&out.scene), vec![]);
        assert_eq!(out.flows.len() as u32, spec.frame_count - 1);
    }
}

#[test]
fn ground_truth_positions_match_projection() {
    for spec in [common::crossing_spec(), chain_spec()] {
        let out = generate_scene(&spec).unwrap();
        let tracks = generate_pseudo_tracks(&out.scene);
        assert_eq!(tracks.len(), out.ground_truth.len());
        for (t, g) in tracks.iter().zip(&out.ground_truth) {
            assert_eq!(t.key(), g.key());
            assert_eq!(t.samples.len(), g.samples.len());
            for (a, b) in t.samples.iter().zip(&g.samples) {
                assert_eq!(a.frame_index, b.frame_index);
                assert!((a.position - b.position).norm() <= 1e-6);
            }
        }
    }
}

#[test]
fn flow_at_visible_vertices_matches_displacement() {
    for spec in [common::crossing_spec(), chain_spec()] {
        let out = generate_scene(&spec).unwrap();
        let mut checked = 0;
        for truth in &out.ground_truth {
            let person = out.scene.persons.iter().find(|p| p.id() == truth.person_id).unwrap();
            for w in truth.samples.windows(2) {
                let t = w[0].frame_index;
                if !w[0].visible || w[1].frame_index != t + 1 {
                    continue;
                }
                // The pixel holding the vertex must be covered by its own
                // surface, so stay a pixel clear of every outline.
                let cam = out.scene.camera(t).unwrap();
                let v = person.mesh.frames[t as usize].vertices[truth.vertex_index as usize];
                let clear = scene_spheres(&spec, t).iter().all(|(_, s)| silhouette_distance_px(cam, s, &v) > 1.5);
                if !clear {
                    continue;
                }
                let pixel = w[0].position.map(f64::round);
                let flow = out.flows[t as usize].forward.at(pixel.y as usize, pixel.x as usize);
                let moved = w[1].position - w[0].position;
                assert!((flow - moved).norm() <= 0.5, "{:?} t{t}: {flow:?} vs {moved:?}", truth.key());
                checked += 1;
            }
        }
        assert!(checked > 2000, "{checked}");
    }
}

#[test]
fn translating_sphere_flows_two_pixels() {
    let spec = SynthSpec {
        frame_count: 3,
        camera: common::camera(),
        camera_velocity: None,
        bodies: vec![BodySpec {
            id: None,
            shape: Shape::Icosphere { level: 3 },
            radius: 0.45,
            position: [0.0, 0.0, 4.0],
            // 200 px focal length at depth 4: 0.04 world units = 2 px.
            velocity: [0.04, 0.0, 0.0],
            spin_axis: [0.0, 1.0, 0.0],
            spin_rate: 0.0,
        }],
        noise: Default::default(),
        seed: 0,
    };
    let out = generate_scene(&spec).unwrap();
    for pair in &out.flows {
        let moving: Vec<_> = pair.forward.data.iter().filter(|v| v[0] != 0.0 || v[1] != 0.0).collect();
        // Disk of radius about 22.7 px.
        assert!(moving.len() > 1400 && moving.len() < 1700, "{}", moving.len());
        for v in moving {
            assert!((v[0] - 2.0).hypot(v[1]) <= 0.5, "{v:?}");
        }
        let center = sample_flow(&pair.backward, &tracklabel_core::geom::Point2d::new(130.0, 128.0)).displacement;
        // The nearest surface point sits at depth 3.55.
        assert!((center.x + 8.0 / 3.55).abs() <= 0.05 && center.y.abs() <= 0.05, "{center:?}");
    }
}

#[test]
fn generation_is_seeded() {
    let mut spec = chain_spec();
    spec.noise.position_jitter = Some(tracklabel_core::synth::PositionJitter {
        sigma: 0.01,
        tracks: vec![(0, 3), (1, 7)],
        from_frame: 2,
        to_frame: None,
    });
    let a = generate(&spec).unwrap();
    let b = generate(&spec).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.0.seed, spec.seed);
    spec.seed += 1;
    assert_ne!(generate(&spec).unwrap().0.scene, a.0.scene);
}
