//! Noise injection for stress-testing the flow filter.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{FlowDirection, NoiseSpec, OffsetPattern, SynthOutput};
use crate::geom::{Point3d, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionKind {
    Offset,
    Jitter,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorruptedTrack {
    pub person_id: u32,
    pub vertex_index: u32,
    pub kind: CorruptionKind,
    /// Frames whose position was altered.
    pub frames: Vec<u32>,
    /// Start frames of transitions with an altered endpoint.
    pub transitions: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorruptedFlow {
    pub frame_index: u32,
    pub direction: FlowDirection,
    pub pixels: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CorruptionManifest {
    pub tracks: Vec<CorruptedTrack>,
    pub flows: Vec<CorruptedFlow>,
}

impl CorruptionManifest {
    /// Distinct `(person, vertex)` keys of corrupted tracks, sorted.
    pub fn track_keys(&self) -> Vec<(u32, u32)> {
        let mut keys: Vec<_> = self.tracks.iter().map(|t| (t.person_id, t.vertex_index)).collect();
        keys.sort_unstable();
        keys.dedup();
        keys
    }
}

fn frame_range(from: u32, to: Option<u32>, frame_count: u32) -> core::ops::Range<u32> {
    from.min(frame_count)..to.unwrap_or(frame_count).min(frame_count)
}

fn transitions_touching(frames: &[u32], frame_count: u32) -> Vec<u32> {
    let mut out: Vec<u32> = frames
        .iter()
        .flat_map(|&t| [t.checked_sub(1), Some(t)])
        .flatten()
        .filter(|&t| t + 1 < frame_count)
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Applies the noise controls to a copy of `clean`. Geometry noise moves
/// mesh vertices (and so the projected tracks); ground truth and clean
/// flows are left as they were. Vertices behind the camera are skipped.
pub fn corrupt(clean: &SynthOutput, noise: &NoiseSpec, seed: u64) -> (SynthOutput, CorruptionManifest) {
    let mut out = clean.clone();
    out.seed = seed;
    let mut manifest = CorruptionManifest::default();
    let frame_count = out.scene.frame_count;

    for offset in &noise.track_offsets {
        let Some(pi) = out.scene.persons.iter().position(|p| p.id() == offset.person) else {
            continue;
        };
        let mut frames = Vec::new();
        for t in frame_range(offset.from_frame, offset.to_frame, frame_count) {
            let Some(camera) = out.scene.camera(t).cloned() else { continue };
            let person = &mut out.scene.persons[pi];
            let Ok(fi) = person.mesh.frames.binary_search_by_key(&t, |f| f.frame_index) else {
                continue;
            };
            let v = &mut person.mesh.frames[fi].vertices[offset.vertex as usize];
            let mut cam = camera.to_camera(v);
            if !(cam.z > 0.0) {
                continue;
            }
            let sign = match offset.pattern {
                OffsetPattern::Constant => 1.0,
                OffsetPattern::Alternating if (t - offset.from_frame) % 2 == 1 => -1.0,
                OffsetPattern::Alternating => 1.0,
            };
            cam.x += sign * offset.offset_px[0] * cam.z / camera.focal_x;
            cam.y += sign * offset.offset_px[1] * cam.z / camera.focal_y;
            *v = camera.to_world(&cam).map(|c| c as f32 as f64);
            frames.push(t);
        }
        manifest.tracks.push(CorruptedTrack {
            person_id: offset.person,
            vertex_index: offset.vertex,
            kind: CorruptionKind::Offset,
            transitions: transitions_touching(&frames, frame_count),
            frames,
        });
    }

    if let Some(jitter) = noise.position_jitter.as_ref().filter(|j| j.sigma > 0.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, jitter.sigma).expect("sigma validated");
        for &(pid, vertex) in &jitter.tracks {
            let Some(pi) = out.scene.persons.iter().position(|p| p.id() == pid) else {
                continue;
            };
            let mut frames = Vec::new();
            for t in frame_range(jitter.from_frame, jitter.to_frame, frame_count) {
                let noise = Vec3::new(normal.sample(&mut rng), normal.sample(&mut rng), normal.sample(&mut rng));
                let person = &mut out.scene.persons[pi];
                let Ok(fi) = person.mesh.frames.binary_search_by_key(&t, |f| f.frame_index) else {
                    continue;
                };
                let v: &mut Point3d = &mut person.mesh.frames[fi].vertices[vertex as usize];
                *v = (*v + noise).map(|c| c as f32 as f64);
                frames.push(t);
            }
            manifest.tracks.push(CorruptedTrack {
                person_id: pid,
                vertex_index: vertex,
                kind: CorruptionKind::Jitter,
                transitions: transitions_touching(&frames, frame_count),
                frames,
            });
        }
    }

    for fc in &noise.flow {
        for pair in out.flows.iter_mut() {
            let t = pair.frame_index;
            if !frame_range(fc.from_frame, fc.to_frame, frame_count).contains(&t) {
                continue;
            }
            let raster = match fc.direction {
                FlowDirection::Forward => &mut pair.forward,
                FlowDirection::Backward => &mut pair.backward,
            };
            let (w, h) = (raster.width, raster.height);
            let [x0, y0, x1, y1] = fc.region.unwrap_or([0, 0, w, h]);
            let mut pixels = 0u64;
            for row in y0.min(h)..y1.min(h) {
                for col in x0.min(w)..x1.min(w) {
                    let k = (row * w + col) as usize;
                    let v = &mut raster.data[k];
                    v[0] = (v[0] as f64 + fc.offset_px[0]) as f32;
                    v[1] = (v[1] as f64 + fc.offset_px[1]) as f32;
                    pixels += 1;
                }
            }
            manifest.flows.push(CorruptedFlow {
                frame_index: t,
                direction: fc.direction,
                pixels,
            });
        }
    }

    (out, manifest)
}
