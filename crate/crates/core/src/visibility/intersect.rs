use crate::geom::{Point3d, Vec3};

/// Segment-parameterized ray `r(s) = origin + s * (target - origin)`, so the
/// target sits at `s = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    origin: Point3d,
    target: Point3d,
}

impl Ray {
    /// `None` when `target == origin`.
    pub fn new(origin: Point3d, target: Point3d) -> Option<Self> {
        ((target - origin).norm_squared() > 0.0).then_some(Self { origin, target })
    }

    pub fn origin(&self) -> &Point3d {
        &self.origin
    }

    pub fn target(&self) -> &Point3d {
        &self.target
    }

    pub fn direction(&self) -> Vec3 {
        self.target - self.origin
    }

    pub fn at(&self, s: f64) -> Point3d {
        self.origin + self.direction() * s
    }
}

/// Möller-Trumbore intersection. Returns the ray parameter `s >= 0` of the
/// hit, counting back faces; `None` for misses, rays parallel to the
/// triangle plane, and zero-area triangles.
pub fn ray_triangle_intersect(ray: &Ray, tri: &[Point3d; 3]) -> Option<f64> {
    let dir = ray.direction();
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];

    let normal = e1.cross(&e2);
    let normal_len = normal.norm();
    if normal_len == 0.0 {
        return None;
    }

    let pvec = dir.cross(&e2);
    let det = e1.dot(&pvec);
    if !(libm::fabs(det) > 1e-12 * dir.norm() * normal_len) {
        return None;
    }
    let inv_det = 1.0 / det;

    let tvec = ray.origin - tri[0];
    let u = tvec.dot(&pvec) * inv_det;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let qvec = tvec.cross(&e1);
    let v = dir.dot(&qvec) * inv_det;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let s = e2.dot(&qvec) * inv_det;
    (s >= 0.0).then_some(s)
}
