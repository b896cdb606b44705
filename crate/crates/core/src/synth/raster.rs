//! Z-buffered flow rendering.

use alloc::vec::Vec;

use crate::geom::{Point2d, Point3d};
use crate::scene::{Camera, FlowRaster};

/// One mesh to rasterize: its vertices at the source frame, the same
/// vertices at the destination frame, and its faces.
pub struct FlowMesh<'a> {
    pub source: &'a [Point3d],
    pub destination: &'a [Point3d],
    pub faces: &'a [[u32; 3]],
}

/// Renders the displacement of the nearest visible surface point at every
/// pixel center from the source camera to the destination camera.
/// Background pixels get zero flow.
pub fn render_flow(meshes: &[FlowMesh<'_>], source_cam: &Camera, dest_cam: &Camera) -> FlowRaster {
    let w = source_cam.image_width as usize;
    let h = source_cam.image_height as usize;
    let mut depth = alloc::vec![f64::INFINITY; w * h];
    let mut flow = FlowRaster::zeros(w as u32, h as u32);

    for mesh in meshes {
        let cam_pts: Vec<Point3d> = mesh.source.iter().map(|p| source_cam.to_camera(p)).collect();
        for face in mesh.faces {
            let idx = face.map(|i| i as usize);
            let c = idx.map(|i| cam_pts[i]);
            if c.iter().any(|p| !(p.z > 0.0)) {
                continue;
            }
            let s = c.map(|p| {
                Point2d::new(
                    source_cam.focal_x * p.x / p.z + source_cam.principal_x,
                    source_cam.focal_y * p.y / p.z + source_cam.principal_y,
                )
            });
            let area = edge(&s[0], &s[1], &s[2]);
            if area == 0.0 || !area.is_finite() {
                continue;
            }
            let min_x = s.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
            let max_x = s.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
            let min_y = s.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
            let max_y = s.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
            if max_x < 0.0 || max_y < 0.0 || min_x > (w - 1) as f64 || min_y > (h - 1) as f64 {
                continue;
            }
            let col0 = libm::ceil(min_x.max(0.0)) as usize;
            let col1 = (libm::floor(max_x) as usize).min(w - 1);
            let row0 = libm::ceil(min_y.max(0.0)) as usize;
            let row1 = (libm::floor(max_y) as usize).min(h - 1);

            for row in row0..=row1 {
                for col in col0..=col1 {
                    let p = Point2d::new(col as f64, row as f64);
                    let l0 = edge(&s[1], &s[2], &p) / area;
                    let l1 = edge(&s[2], &s[0], &p) / area;
                    let l2 = edge(&s[0], &s[1], &p) / area;
                    if l0 < 0.0 || l1 < 0.0 || l2 < 0.0 {
                        continue;
                    }
                    // Perspective-correct weights.
                    let q = [l0 / c[0].z, l1 / c[1].z, l2 / c[2].z];
                    let inv_z = q[0] + q[1] + q[2];
                    let z = 1.0 / inv_z;
                    let k = row * w + col;
                    if !(z < depth[k]) {
                        continue;
                    }
                    let b = q.map(|x| x / inv_z);
                    let blend = |v: &[Point3d]| {
                        Point3d::from(v[idx[0]].coords * b[0] + v[idx[1]].coords * b[1] + v[idx[2]].coords * b[2])
                    };
                    // Displacement of the surface point seen at this pixel.
                    let (Ok(x0), Ok(x1)) = (
                        source_cam.project(&blend(mesh.source)),
                        dest_cam.project(&blend(mesh.destination)),
                    ) else {
                        continue;
                    };
                    depth[k] = z;
                    flow.set(row, col, [(x1.x - x0.x) as f32, (x1.y - x0.y) as f32]);
                }
            }
        }
    }
    flow
}

fn edge(a: &Point2d, b: &Point2d, p: &Point2d) -> f64 {
    (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
}
