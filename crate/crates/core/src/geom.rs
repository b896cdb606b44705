//! Small geometric helpers on top of `nalgebra`.

use nalgebra::{Matrix3, Point2, Point3, Vector3};

pub type Point2d = Point2<f64>;
pub type Point3d = Point3<f64>;
pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Point3d,
    pub max: Point3d,
}

impl Aabb {
    pub const EMPTY: Aabb = Aabb {
        min: Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
        max: Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
    };

    pub fn from_points<'a, I: IntoIterator<Item = &'a Point3d>>(points: I) -> Self {
        let mut b = Self::EMPTY;
        for p in points {
            b.grow(p);
        }
        b
    }

    pub fn grow(&mut self, p: &Point3d) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x || self.min.y > self.max.y || self.min.z > self.max.z
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn centroid(&self) -> Point3d {
        nalgebra::center(&self.min, &self.max)
    }

    /// Index of the axis with the largest extent (ties resolve to the lower axis).
    pub fn longest_axis(&self) -> usize {
        let e = self.extent();
        if e.x >= e.y && e.x >= e.z {
            0
        } else if e.y >= e.z {
            1
        } else {
            2
        }
    }

    pub fn contains(&self, other: &Aabb) -> bool {
        (0..3).all(|k| self.min[k] <= other.min[k] && self.max[k] >= other.max[k])
    }

    /// Grows the box by a relative and absolute margin so that slab tests
    /// stay conservative under rounding.
    pub fn padded(&self) -> Aabb {
        let e = self.extent();
        let mut out = *self;
        for k in 0..3 {
            let scale = libm::fmax(libm::fabs(self.min[k]), libm::fabs(self.max[k]));
            let pad = 1e-9 * (e[k] + scale) + 1e-12;
            out.min[k] -= pad;
            out.max[k] += pad;
        }
        out
    }

    /// Slab test against the parametric segment `origin + s * dir`, `s` in
    /// `[0, s_max]`. `inv_dir` holds the component-wise reciprocals of `dir`.
    /// Returns the entry parameter on a hit.
    pub fn hit_by(&self, origin: &Point3d, inv_dir: &Vec3, s_max: f64) -> Option<f64> {
        let mut lo = 0.0f64;
        let mut hi = s_max;
        for k in 0..3 {
            let mut t0 = (self.min[k] - origin[k]) * inv_dir[k];
            let mut t1 = (self.max[k] - origin[k]) * inv_dir[k];
            if t0.is_nan() || t1.is_nan() {
                // Ray parallel to the slab and origin on its boundary.
                if origin[k] < self.min[k] || origin[k] > self.max[k] {
                    return None;
                }
                continue;
            }
            if t0 > t1 {
                core::mem::swap(&mut t0, &mut t1);
            }
            // Widen by a few ulps so boundary grazes are never rejected.
            t1 *= 1.0 + 4.0 * f64::EPSILON;
            lo = libm::fmax(lo, t0);
            hi = libm::fmin(hi, t1);
            if lo > hi {
                return None;
            }
        }
        Some(lo)
    }
}

/// Maximum absolute entry of `RᵀR − I`.
pub fn orthonormality_error(r: &Mat3) -> f64 {
    (r.transpose() * r - Mat3::identity()).amax()
}
