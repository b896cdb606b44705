mod common;

use nalgebra::Rotation3;
use proptest::prelude::*;
use tracklabel_core::geom::Point3d;
use tracklabel_core::scene::generate_pseudo_tracks;
use tracklabel_core::synth::generate_scene;
use tracklabel_core::Camera;

fn camera(rx: f64, ry: f64, rz: f64, t: [f64; 3]) -> Camera {
    let r = Rotation3::from_euler_angles(rx, ry, rz);
    let m = r.matrix();
    let mut c = Camera::identity(180.0, (120.0, 90.0), 240, 180);
    c.focal_y = 175.0;
    c.rotation = [
        [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
        [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
        [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
    ];
    c.translation = t;
    c
}

proptest! {
    #[test]
    fn projection_is_constant_along_rays(
        rx in -3.0f64..3.0, ry in -1.5f64..1.5, rz in -3.0f64..3.0,
        t in prop::array::uniform3(-2.0f64..2.0),
        dir in prop::array::uniform3(-1.0f64..1.0),
        depth in 0.5f64..20.0,
    ) {
        let c = camera(rx, ry, rz, t);
        // A point in front of the camera, written in world coordinates.
        let cam = Point3d::new(dir[0], dir[1], 0.2 + dir[2].abs()) * depth;
        let base = c.project(&c.to_world(&cam)).unwrap();
        let center = c.center();
        for k in [0.5, 1.0, 2.0] {
            let world = c.to_world(&cam);
            let p = center + (world - center) * k;
            let x = c.project(&p).unwrap();
            let scale = base.coords.norm().max(1.0);
            prop_assert!((x - base).norm() <= 1e-9 * scale, "k {}: {:?} vs {:?}", k, x, base);
        }
    }
}

#[test]
fn pseudo_tracks_are_deterministic_and_sorted() {
    let out = generate_scene(&common::crossing_spec()).unwrap();
    let a = generate_pseudo_tracks(&out.scene);
    let b = generate_pseudo_tracks(&out.scene);
    assert_eq!(a, b);
    assert!(a.windows(2).all(|w| w[0].key() < w[1].key()));

    let mut reversed = out.scene.clone();
    reversed.persons.reverse();
    assert_eq!(generate_pseudo_tracks(&reversed), a);
}

#[test]
fn samples_have_positive_depth() {
    let out = generate_scene(&common::crossing_spec()).unwrap();
    let cam = out.scene.camera(0).unwrap();
    for t in generate_pseudo_tracks(&out.scene) {
        let person = out.scene.persons.iter().find(|p| p.id() == t.person_id).unwrap();
        for s in &t.samples {
            let v = person.mesh.frame(s.frame_index).unwrap().vertices[t.vertex_index as usize];
            assert!(cam.to_camera(&v).z > 0.0);
        }
    }
}
