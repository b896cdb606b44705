//! Per-frame track overlays as SVG or binary PPM.
//!
//! Each selected frame shows, for every track with a sample there, a short
//! history polyline and a marker at the current position. Markers of
//! occluded samples are hollow; transitions marked excluded are dashed.
//! Colors are derived from the track key.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use image::{ImageFormat, Rgb, RgbImage};
use tracklabel_core::geom::Point2d;
use tracklabel_core::scene::{Track, TrackSample};

use crate::dataset::TrackDataset;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VizFormat {
    #[default]
    Svg,
    Ppm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VizOptions {
    /// Optional directory of frame images named `frame_<t>.png` (or
    /// `.ppm`), with `t` plain or zero-padded to five digits.
    pub frames: Option<PathBuf>,
    /// Render every `stride`-th frame.
    pub stride: u32,
    /// Number of past frames drawn as history.
    pub history: u32,
    pub format: VizFormat,
}

impl Default for VizOptions {
    fn default() -> Self {
        Self {
            frames: None,
            stride: 1,
            history: 10,
            format: VizFormat::Svg,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum VizError {
    #[error("no frame image for frames {0:?}")]
    MissingFrames(Vec<u32>),
    #[error("stride must be at least 1")]
    Stride,
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

impl VizError {
    pub fn is_io(&self) -> bool {
        matches!(self, VizError::Io { .. } | VizError::Image { .. })
    }
}

/// Stable color for a track key.
pub fn track_color(person_id: u32, vertex_index: u32) -> [u8; 3] {
    let mut h = (u64::from(person_id) << 32 | u64::from(vertex_index)).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    h ^= h >> 29;
    let hue = (h % 360) as f64;
    // HSV with full saturation and value.
    let x = 1.0 - ((hue / 60.0) % 2.0 - 1.0).abs();
    let (r, g, b) = match (hue / 60.0) as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    [(r * 255.0) as u8, (g * 255.0) as u8, (b * 255.0) as u8]
}

/// One straight piece of a history polyline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub from: Point2d,
    pub to: Point2d,
    pub dashed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Marker {
    pub at: Point2d,
    pub hollow: bool,
}

/// Drawing primitives of one track at `frame`: history segments between
/// adjacent-frame samples within `history` frames, and the current marker.
pub fn track_glyph(track: &Track, frame: u32, history: u32) -> Option<(Vec<Segment>, Marker)> {
    let now = track.sample_at(frame)?;
    let first = frame.saturating_sub(history);
    let recent: Vec<&TrackSample> = track
        .samples
        .iter()
        .filter(|s| s.frame_index >= first && s.frame_index <= frame)
        .collect();
    let segments = recent
        .windows(2)
        .filter(|w| w[1].frame_index == w[0].frame_index + 1)
        .map(|w| Segment {
            from: w[0].position,
            to: w[1].position,
            dashed: w[0].excluded,
        })
        .collect();
    Some((
        segments,
        Marker {
            at: now.position,
            hollow: !now.visible,
        },
    ))
}

fn frame_image_path(dir: &Path, t: u32) -> Option<PathBuf> {
    [format!("frame_{t:05}"), format!("frame_{t}")]
        .iter()
        .flat_map(|stem| ["png", "ppm"].map(|ext| dir.join(format!("{stem}.{ext}"))))
        .find(|p| p.is_file())
}

fn hex(c: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// SVG document for one frame.
pub fn frame_svg(tracks: &[Track], frame: u32, size: (u32, u32), history: u32, underlay: Option<&Path>) -> String {
    let (w, h) = size;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" xmlns:xlink="http://www.w3.org/1999/xlink" width="{w}" height="{h}" viewBox="0 0 {w} {h}" data-frame="{frame}">"#
    );
    match underlay {
        Some(p) => {
            let _ = writeln!(s, r#"<image x="0" y="0" width="{w}" height="{h}" xlink:href="{}"/>"#, xml_escape(&p.display().to_string()));
        }
        None => {
            let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="black"/>"#);
        }
    }
    for t in tracks {
        let Some((segments, marker)) = track_glyph(t, frame, history) else {
            continue;
        };
        let color = hex(track_color(t.person_id, t.vertex_index));
        let _ = writeln!(s, r#"<g data-track="{}:{}">"#, t.person_id, t.vertex_index);
        for seg in segments {
            let dash = if seg.dashed { r#" stroke-dasharray="3 2" class="excluded""# } else { "" };
            let _ = writeln!(
                s,
                r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="{color}" stroke-width="1"{dash}/>"#,
                seg.from.x, seg.from.y, seg.to.x, seg.to.y
            );
        }
        let (fill, class) = if marker.hollow { ("none", "occluded") } else { (color.as_str(), "visible") };
        let _ = writeln!(
            s,
            r#"<circle class="{class}" cx="{:.3}" cy="{:.3}" r="2.5" fill="{fill}" stroke="{color}" stroke-width="1"/>"#,
            marker.at.x, marker.at.y
        );
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('"', "&quot;").replace('<', "&lt;").replace('>', "&gt;")
}

fn put(img: &mut RgbImage, x: i64, y: i64, c: Rgb<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, c);
    }
}

/// Bresenham line; dashed lines draw 3 pixels on, 2 off.
fn draw_line(img: &mut RgbImage, a: Point2d, b: Point2d, c: Rgb<u8>, dashed: bool) {
    let limit = 4.0 * f64::from(img.width().max(img.height())) + 16.0;
    if !(a.x.abs() < limit && a.y.abs() < limit && b.x.abs() < limit && b.y.abs() < limit) {
        return;
    }
    let (mut x0, mut y0) = (a.x.round() as i64, a.y.round() as i64);
    let (x1, y1) = (b.x.round() as i64, b.y.round() as i64);
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut step = 0u32;
    loop {
        if !dashed || step % 5 < 3 {
            put(img, x0, y0, c);
        }
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
        step += 1;
    }
}

fn draw_marker(img: &mut RgbImage, at: Point2d, c: Rgb<u8>, hollow: bool) {
    const R: i64 = 2;
    if !(at.x.is_finite() && at.y.is_finite()) {
        return;
    }
    let (cx, cy) = (at.x.round() as i64, at.y.round() as i64);
    for dy in -R..=R {
        for dx in -R..=R {
            let d2 = dx * dx + dy * dy;
            let inside = d2 <= R * R;
            let ring = inside && d2 > (R - 1) * (R - 1);
            if (hollow && ring) || (!hollow && inside) {
                put(img, cx + dx, cy + dy, c);
            }
        }
    }
}

/// Raster overlay for one frame, drawn over `base`.
pub fn frame_raster(tracks: &[Track], frame: u32, history: u32, mut base: RgbImage) -> RgbImage {
    for t in tracks {
        let Some((segments, marker)) = track_glyph(t, frame, history) else {
            continue;
        };
        let c = Rgb(track_color(t.person_id, t.vertex_index));
        for seg in segments {
            draw_line(&mut base, seg.from, seg.to, c, seg.dashed);
        }
        draw_marker(&mut base, marker.at, c, marker.hollow);
    }
    base
}

/// Writes one overlay per selected frame into `out`, returning the paths.
pub fn render_overlay(dataset: &TrackDataset, out: &Path, opts: &VizOptions) -> Result<Vec<PathBuf>, VizError> {
    if opts.stride == 0 {
        return Err(VizError::Stride);
    }
    let header = &dataset.meta.header;
    let frames: Vec<u32> = (0..header.frame_count).step_by(opts.stride as usize).collect();

    let underlays: Vec<Option<PathBuf>> = match &opts.frames {
        Some(dir) => {
            let found: Vec<_> = frames.iter().map(|&t| frame_image_path(dir, t)).collect();
            let missing: Vec<u32> = frames
                .iter()
                .zip(&found)
                .filter(|(_, p)| p.is_none())
                .map(|(t, _)| *t)
                .collect();
            if !missing.is_empty() {
                return Err(VizError::MissingFrames(missing));
            }
            found
        }
        None => vec![None; frames.len()],
    };

    std::fs::create_dir_all(out).map_err(|source| VizError::Io {
        path: out.to_owned(),
        source,
    })?;
    let size = (header.image_width.max(1), header.image_height.max(1));
    let mut written = Vec::with_capacity(frames.len());
    for (&t, underlay) in frames.iter().zip(&underlays) {
        let path = match opts.format {
            VizFormat::Svg => {
                let path = out.join(format!("overlay_{t:05}.svg"));
                let underlay = underlay.as_ref().map(|p| std::path::absolute(p).unwrap_or_else(|_| p.clone()));
                let svg = frame_svg(&dataset.tracks, t, size, opts.history, underlay.as_deref());
                std::fs::write(&path, svg).map_err(|source| VizError::Io {
                    path: path.clone(),
                    source,
                })?;
                path
            }
            VizFormat::Ppm => {
                let path = out.join(format!("overlay_{t:05}.ppm"));
                let base = match underlay {
                    Some(p) => image::open(p)
                        .map_err(|source| VizError::Image {
                            path: p.clone(),
                            source,
                        })?
                        .to_rgb8(),
                    None => RgbImage::new(size.0, size.1),
                };
                let img = frame_raster(&dataset.tracks, t, opts.history, base);
                img.save_with_format(&path, ImageFormat::Pnm).map_err(|source| VizError::Image {
                    path: path.clone(),
                    source,
                })?;
                path
            }
        };
        written.push(path);
    }
    Ok(written)
}
