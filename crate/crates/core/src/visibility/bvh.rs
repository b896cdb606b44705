//! Median-split bounding volume hierarchy over scene triangles.

use alloc::vec::Vec;

use super::intersect::{ray_triangle_intersect, Ray};
use crate::geom::{Aabb, Point3d, Vec3};

/// Maximum number of triangles stored in a leaf.
pub const LEAF_SIZE: usize = 4;

/// A scene triangle together with where it came from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SceneTriangle {
    pub person_id: u32,
    pub face_index: u32,
    pub indices: [u32; 3],
    pub vertices: [Point3d; 3],
}

impl SceneTriangle {
    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(&self.vertices)
    }

    fn centroid(&self) -> Point3d {
        Point3d::from((self.vertices[0].coords + self.vertices[1].coords + self.vertices[2].coords) / 3.0)
    }

    /// True when this triangle is one of `vertex`'s incident faces on `person`.
    pub fn is_incident_to(&self, person_id: u32, vertex: u32) -> bool {
        self.person_id == person_id && self.indices.contains(&vertex)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NodeKind {
    Inner { left: u32, right: u32 },
    Leaf { start: u32, count: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BvhNode {
    pub bounds: Aabb,
    pub kind: NodeKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("cannot build a hierarchy over zero triangles")]
pub struct EmptyScene;

/// Nearest intersection along a ray.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub s: f64,
    /// Index in the triangle list the intersector was built from.
    pub triangle: usize,
}

/// Ray queries shared by the hierarchy and the exhaustive intersector.
pub trait RayQuery {
    fn triangles(&self) -> &[SceneTriangle];

    /// True if some triangle not rejected by `skip` is hit with `s < s_max`.
    fn any_hit<F: Fn(&SceneTriangle) -> bool>(&self, ray: &Ray, s_max: f64, skip: F) -> bool;

    /// Closest hit among triangles not rejected by `skip`. Ties on `s`
    /// resolve to the lowest triangle index.
    fn nearest_hit<F: Fn(&SceneTriangle) -> bool>(&self, ray: &Ray, skip: F) -> Option<Hit>;
}

/// Tests every triangle.
#[derive(Clone, Debug, Default)]
pub struct BruteForce {
    triangles: Vec<SceneTriangle>,
}

impl BruteForce {
    pub fn new(triangles: Vec<SceneTriangle>) -> Self {
        Self { triangles }
    }
}

impl RayQuery for BruteForce {
    fn triangles(&self) -> &[SceneTriangle] {
        &self.triangles
    }

    fn any_hit<F: Fn(&SceneTriangle) -> bool>(&self, ray: &Ray, s_max: f64, skip: F) -> bool {
        self.triangles.iter().any(|t| {
            !skip(t) && ray_triangle_intersect(ray, &t.vertices).is_some_and(|s| s < s_max)
        })
    }

    fn nearest_hit<F: Fn(&SceneTriangle) -> bool>(&self, ray: &Ray, skip: F) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        for (i, t) in self.triangles.iter().enumerate() {
            if skip(t) {
                continue;
            }
            if let Some(s) = ray_triangle_intersect(ray, &t.vertices) {
                if best.is_none_or(|b| s < b.s) {
                    best = Some(Hit { s, triangle: i });
                }
            }
        }
        best
    }
}

/// Bounding volume hierarchy. Node bounds are padded slightly so traversal
/// never rejects a triangle the exhaustive intersector would hit.
#[derive(Clone, Debug)]
pub struct Bvh {
    nodes: Vec<BvhNode>,
    triangles: Vec<SceneTriangle>,
    /// Position of each reordered triangle in the caller's original list.
    original_index: Vec<u32>,
}

impl Bvh {
    /// Builds by splitting at the centroid median along the longest axis of
    /// the centroid bounds until at most [`LEAF_SIZE`] triangles remain.
    pub fn build(triangles: Vec<SceneTriangle>) -> Result<Self, EmptyScene> {
        if triangles.is_empty() {
            return Err(EmptyScene);
        }
        let n = triangles.len();
        let mut items: Vec<(u32, Point3d, Aabb)> = triangles
            .iter()
            .enumerate()
            .map(|(i, t)| (i as u32, t.centroid(), t.bounds()))
            .collect();

        let mut nodes = Vec::with_capacity(2 * n / LEAF_SIZE + 1);
        Self::build_node(&mut nodes, &mut items, 0);

        let original_index: Vec<u32> = items.iter().map(|it| it.0).collect();
        let triangles = original_index.iter().map(|&i| triangles[i as usize]).collect();
        Ok(Self {
            nodes,
            triangles,
            original_index,
        })
    }

    fn build_node(nodes: &mut Vec<BvhNode>, items: &mut [(u32, Point3d, Aabb)], start: usize) -> u32 {
        let bounds = items
            .iter()
            .fold(Aabb::EMPTY, |acc, it| acc.union(&it.2))
            .padded();
        let id = nodes.len() as u32;
        if items.len() <= LEAF_SIZE {
            nodes.push(BvhNode {
                bounds,
                kind: NodeKind::Leaf {
                    start: start as u32,
                    count: items.len() as u32,
                },
            });
            return id;
        }

        let centroid_bounds = Aabb::from_points(items.iter().map(|it| &it.1));
        let axis = centroid_bounds.longest_axis();
        let mid = items.len() / 2;
        items.select_nth_unstable_by(mid, |a, b| {
            a.1[axis].total_cmp(&b.1[axis]).then(a.0.cmp(&b.0))
        });

        // Placeholder until both children exist.
        nodes.push(BvhNode {
            bounds,
            kind: NodeKind::Leaf { start: 0, count: 0 },
        });
        let (lo, hi) = items.split_at_mut(mid);
        let left = Self::build_node(nodes, lo, start);
        let right = Self::build_node(nodes, hi, start + mid);
        nodes[id as usize].kind = NodeKind::Inner { left, right };
        id
    }

    pub fn nodes(&self) -> &[BvhNode] {
        &self.nodes
    }

    pub fn root(&self) -> &BvhNode {
        &self.nodes[0]
    }

    /// Index in the list passed to [`Bvh::build`] of the triangle stored at
    /// `i` in [`RayQuery::triangles`].
    pub fn original_index(&self, i: usize) -> usize {
        self.original_index[i] as usize
    }

    pub fn depth(&self) -> usize {
        fn rec(nodes: &[BvhNode], i: u32) -> usize {
            match nodes[i as usize].kind {
                NodeKind::Leaf { .. } => 1,
                NodeKind::Inner { left, right } => 1 + rec(nodes, left).max(rec(nodes, right)),
            }
        }
        rec(&self.nodes, 0)
    }

    fn traverse<F>(&self, ray: &Ray, mut s_max: f64, mut visit: F)
    where
        F: FnMut(usize, f64) -> Option<f64>,
    {
        let origin = *ray.origin();
        let dir = ray.direction();
        let inv_dir: Vec3 = dir.map(|c| 1.0 / c);
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i as usize];
            if node.bounds.hit_by(&origin, &inv_dir, s_max).is_none() {
                continue;
            }
            match node.kind {
                NodeKind::Leaf { start, count } => {
                    for k in start as usize..(start + count) as usize {
                        if let Some(s) = ray_triangle_intersect(ray, &self.triangles[k].vertices) {
                            match visit(k, s) {
                                Some(limit) if limit < 0.0 => return,
                                Some(limit) => s_max = limit,
                                None => {}
                            }
                        }
                    }
                }
                NodeKind::Inner { left, right } => {
                    let l = self.nodes[left as usize].bounds.hit_by(&origin, &inv_dir, s_max);
                    let r = self.nodes[right as usize].bounds.hit_by(&origin, &inv_dir, s_max);
                    match (l, r) {
                        (Some(a), Some(b)) => {
                            // Nearer child on top of the stack.
                            if a <= b {
                                stack.push(right);
                                stack.push(left);
                            } else {
                                stack.push(left);
                                stack.push(right);
                            }
                        }
                        (Some(_), None) => stack.push(left),
                        (None, Some(_)) => stack.push(right),
                        (None, None) => {}
                    }
                }
            }
        }
    }
}

impl RayQuery for Bvh {
    fn triangles(&self) -> &[SceneTriangle] {
        &self.triangles
    }

    fn any_hit<F: Fn(&SceneTriangle) -> bool>(&self, ray: &Ray, s_max: f64, skip: F) -> bool {
        let mut found = false;
        self.traverse(ray, s_max, |k, s| {
            if s < s_max && !skip(&self.triangles[k]) {
                found = true;
                Some(-1.0)
            } else {
                None
            }
        });
        found
    }

    fn nearest_hit<F: Fn(&SceneTriangle) -> bool>(&self, ray: &Ray, skip: F) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        self.traverse(ray, f64::INFINITY, |k, s| {
            if skip(&self.triangles[k]) {
                return None;
            }
            let original = self.original_index[k] as usize;
            let better = match best {
                None => true,
                Some(b) => s < b.s || (s == b.s && original < b.triangle),
            };
            if better {
                best = Some(Hit { s, triangle: original });
                Some(s)
            } else {
                None
            }
        });
        best
    }
}
