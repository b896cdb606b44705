//! Little-endian binary containers.
//!
//! - `ATVX` vertex buffers: version, frame count, vertex count, then per
//!   frame a `u32` frame index and `N_v × 3` `f32` coordinates.
//! - `ATFC` faces: version, face count, then `N_f × 3` `u32` indices.
//! - `ATFL` flow rasters: version, height, width, then `H·W × 2` `f32`
//!   displacements, row-major.
//! - `ATTR` tracks: version, track count, then per track person id, vertex
//!   index, sample count and `f32` ratio, followed by its samples as `u32`
//!   frame, `f32` x, `f32` y and a `u8` flag byte.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use tracklabel_core::geom::{Point2d, Point3d};
use tracklabel_core::scene::{FaceTopology, FlowRaster, MeshFrame, MeshFrameSet, Track, TrackSample};

pub const VERSION: u32 = 1;

pub const VERTS_MAGIC: [u8; 4] = *b"ATVX";
pub const FACES_MAGIC: [u8; 4] = *b"ATFC";
pub const FLOW_MAGIC: [u8; 4] = *b"ATFL";
pub const TRACKS_MAGIC: [u8; 4] = *b"ATTR";

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("expected magic {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },
    #[error("unsupported version {0}")]
    Version(u32),
    #[error("file ends early while reading {0}")]
    Truncated(&'static str),
    #[error("{0} unexpected trailing bytes")]
    Trailing(usize),
    #[error("flags byte {0:#04x} has undefined bits set")]
    Flags(u8),
    #[error("value does not fit the format: {0}")]
    Overflow(&'static str),
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], FormatError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or(FormatError::Truncated(what))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn u8(&mut self, what: &'static str) -> Result<u8, FormatError> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, FormatError> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f32(&mut self, what: &'static str) -> Result<f32, FormatError> {
        let b = self.take(4, what)?;
        Ok(f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    /// Fails early when `count` records of `size` bytes cannot fit.
    fn expect(&self, count: usize, size: usize, what: &'static str) -> Result<(), FormatError> {
        match count.checked_mul(size) {
            Some(n) if n <= self.remaining() => Ok(()),
            _ => Err(FormatError::Truncated(what)),
        }
    }

    fn header(&mut self, magic: [u8; 4]) -> Result<(), FormatError> {
        let found = self.take(4, "magic")?;
        if found != magic {
            return Err(FormatError::BadMagic {
                expected: String::from_utf8_lossy(&magic).into_owned(),
                found: String::from_utf8_lossy(found).into_owned(),
            });
        }
        match self.u32("version")? {
            VERSION => Ok(()),
            v => Err(FormatError::Version(v)),
        }
    }

    fn finish(self) -> Result<(), FormatError> {
        match self.remaining() {
            0 => Ok(()),
            n => Err(FormatError::Trailing(n)),
        }
    }
}

fn count(n: usize, what: &'static str) -> Result<u32, FormatError> {
    u32::try_from(n).map_err(|_| FormatError::Overflow(what))
}

fn header(out: &mut Vec<u8>, magic: [u8; 4]) {
    out.extend_from_slice(&magic);
    out.extend_from_slice(&VERSION.to_le_bytes());
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f32(out: &mut Vec<u8>, v: f32) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub fn encode_verts(mesh: &MeshFrameSet) -> Result<Vec<u8>, FormatError> {
    let mut out = Vec::with_capacity(16 + mesh.frames.len() * (4 + 12 * mesh.vertex_count));
    header(&mut out, VERTS_MAGIC);
    put_u32(&mut out, count(mesh.frames.len(), "frame count")?);
    put_u32(&mut out, count(mesh.vertex_count, "vertex count")?);
    for frame in &mesh.frames {
        if frame.vertices.len() != mesh.vertex_count {
            return Err(FormatError::Overflow("frame vertex count differs from header"));
        }
        put_u32(&mut out, frame.frame_index);
        for v in &frame.vertices {
            for c in [v.x, v.y, v.z] {
                put_f32(&mut out, c as f32);
            }
        }
    }
    Ok(out)
}

/// Decodes a vertex container for `person_id`.
pub fn decode_verts(buf: &[u8], person_id: u32) -> Result<MeshFrameSet, FormatError> {
    let mut r = Cursor::new(buf);
    r.header(VERTS_MAGIC)?;
    let frame_count = r.u32("frame count")? as usize;
    let vertex_count = r.u32("vertex count")? as usize;
    let frame_size = vertex_count.checked_mul(12).and_then(|n| n.checked_add(4));
    r.expect(frame_count, frame_size.ok_or(FormatError::Truncated("frames"))?, "frames")?;
    let mut frames = Vec::with_capacity(frame_count);
    for _ in 0..frame_count {
        let frame_index = r.u32("frame index")?;
        let mut vertices = Vec::with_capacity(vertex_count);
        for _ in 0..vertex_count {
            let x = r.f32("vertex")?;
            let y = r.f32("vertex")?;
            let z = r.f32("vertex")?;
            vertices.push(Point3d::new(x as f64, y as f64, z as f64));
        }
        frames.push(MeshFrame { frame_index, vertices });
    }
    r.finish()?;
    Ok(MeshFrameSet {
        person_id,
        vertex_count,
        frames,
    })
}

pub fn encode_faces(faces: &FaceTopology) -> Result<Vec<u8>, FormatError> {
    let mut out = Vec::with_capacity(12 + 12 * faces.len());
    header(&mut out, FACES_MAGIC);
    put_u32(&mut out, count(faces.len(), "face count")?);
    for f in &faces.faces {
        for i in f {
            put_u32(&mut out, *i);
        }
    }
    Ok(out)
}

pub fn decode_faces(buf: &[u8]) -> Result<FaceTopology, FormatError> {
    let mut r = Cursor::new(buf);
    r.header(FACES_MAGIC)?;
    let n = r.u32("face count")? as usize;
    r.expect(n, 12, "faces")?;
    let mut faces = Vec::with_capacity(n);
    for _ in 0..n {
        faces.push([r.u32("face")?, r.u32("face")?, r.u32("face")?]);
    }
    r.finish()?;
    Ok(FaceTopology::new(faces))
}

pub fn encode_flow(raster: &FlowRaster) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 8 * raster.data.len());
    header(&mut out, FLOW_MAGIC);
    put_u32(&mut out, raster.height);
    put_u32(&mut out, raster.width);
    for v in &raster.data {
        put_f32(&mut out, v[0]);
        put_f32(&mut out, v[1]);
    }
    out
}

pub fn decode_flow(buf: &[u8]) -> Result<FlowRaster, FormatError> {
    let mut r = Cursor::new(buf);
    r.header(FLOW_MAGIC)?;
    let height = r.u32("height")?;
    let width = r.u32("width")?;
    let n = (height as usize)
        .checked_mul(width as usize)
        .ok_or(FormatError::Truncated("flow values"))?;
    r.expect(n, 8, "flow values")?;
    let mut data = Vec::with_capacity(n);
    for _ in 0..n {
        data.push([r.f32("flow")?, r.f32("flow")?]);
    }
    r.finish()?;
    Ok(FlowRaster { width, height, data })
}

pub fn encode_tracks(tracks: &[Track]) -> Result<Vec<u8>, FormatError> {
    let samples: usize = tracks.iter().map(|t| t.samples.len()).sum();
    let mut out = Vec::with_capacity(12 + 16 * tracks.len() + 13 * samples);
    header(&mut out, TRACKS_MAGIC);
    put_u32(&mut out, count(tracks.len(), "track count")?);
    for t in tracks {
        put_u32(&mut out, t.person_id);
        put_u32(&mut out, t.vertex_index);
        put_u32(&mut out, count(t.samples.len(), "sample count")?);
        put_f32(&mut out, t.ratio as f32);
        for s in &t.samples {
            put_u32(&mut out, s.frame_index);
            put_f32(&mut out, s.position.x as f32);
            put_f32(&mut out, s.position.y as f32);
            out.push(s.flags());
        }
    }
    Ok(out)
}

pub fn decode_tracks(buf: &[u8]) -> Result<Vec<Track>, FormatError> {
    let mut r = Cursor::new(buf);
    r.header(TRACKS_MAGIC)?;
    let n = r.u32("track count")? as usize;
    r.expect(n, 16, "tracks")?;
    let mut tracks = Vec::with_capacity(n);
    for _ in 0..n {
        let mut t = Track::new(r.u32("person id")?, r.u32("vertex index")?);
        let samples = r.u32("sample count")? as usize;
        t.ratio = r.f32("ratio")? as f64;
        r.expect(samples, 13, "samples")?;
        t.samples.reserve_exact(samples);
        for _ in 0..samples {
            let frame = r.u32("frame index")?;
            let x = r.f32("position")?;
            let y = r.f32("position")?;
            let flags = r.u8("flags")?;
            if flags & !0x0f != 0 {
                return Err(FormatError::Flags(flags));
            }
            let mut s = TrackSample::new(frame, Point2d::new(x as f64, y as f64));
            s.set_flags(flags);
            t.samples.push(s);
        }
        tracks.push(t);
    }
    r.finish()?;
    Ok(tracks)
}

/// Writes `bytes` to `path` through a buffered writer.
pub fn write_file(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(bytes)?;
    w.flush()
}
