//! Trajectory complexity (mean angular acceleration magnitude) and video
//! diversity (mean deviation of start-centered tracks from their mean).
//!
//! Positions are divided by the frame width and height before any metric is
//! computed, so pixel-space track files stay canonical.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geom::Point2d;
use crate::scene::Track;
use crate::sum::{mean, CompensatedSum};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// Time step between frames.
    pub dt: f64,
    /// Minimum number of steps (points minus one) a visible segment needs.
    pub min_steps: usize,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self { dt: 1.0, min_steps: 3 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum MetricsConfigError {
    #[error("dt must be finite and positive")]
    Dt,
    #[error("min_steps must be at least 3")]
    MinSteps,
}

impl MetricsConfig {
    pub fn validate(&self) -> Result<(), MetricsConfigError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(MetricsConfigError::Dt);
        }
        if self.min_steps < 3 {
            return Err(MetricsConfigError::MinSteps);
        }
        Ok(())
    }
}

/// Wraps an angle difference into `[-π, π]`.
fn wrap(d: f64) -> f64 {
    let m = libm::fmod(d + PI, 2.0 * PI);
    let m = if m < 0.0 { m + 2.0 * PI } else { m } - PI;
    // Keep the sign of a positive half-turn jump.
    if m == -PI && d > 0.0 {
        PI
    } else {
        m
    }
}

/// Removes `2π` jumps so consecutive values differ by at most `π`.
pub fn unwrap_angles(raw: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(raw.len());
    let mut correction = 0.0;
    for (k, &theta) in raw.iter().enumerate() {
        if k > 0 {
            let d = theta - raw[k - 1];
            if libm::fabs(d) > PI {
                correction += wrap(d) - d;
            }
        }
        out.push(theta + correction);
    }
    out
}

/// Signed turning angle between consecutive velocities; zero when either
/// velocity has zero length.
pub fn turning_angle(u: (f64, f64), v: (f64, f64)) -> f64 {
    if (u.0 == 0.0 && u.1 == 0.0) || (v.0 == 0.0 && v.1 == 0.0) {
        return 0.0;
    }
    libm::atan2(u.0 * v.1 - u.1 * v.0, u.0 * v.0 + u.1 * v.1)
}

/// Mean angular acceleration magnitude of one contiguous segment of
/// normalized points. `None` when the segment has fewer than
/// `config.min_steps` steps or yields no acceleration value.
pub fn segment_complexity(points: &[Point2d], config: &MetricsConfig) -> Option<f64> {
    if points.len() < 2 || points.len() - 1 < config.min_steps {
        return None;
    }
    let velocities: Vec<(f64, f64)> = points
        .windows(2)
        .map(|w| (w[1].x - w[0].x, w[1].y - w[0].y))
        .collect();
    let raw: Vec<f64> = velocities.windows(2).map(|w| turning_angle(w[0], w[1])).collect();
    let phi = unwrap_angles(&raw);
    let omega: Vec<f64> = phi.iter().map(|p| p / config.dt).collect();
    if omega.len() < 2 {
        return None;
    }
    mean(omega.windows(2).map(|w| libm::fabs((w[1] - w[0]) / config.dt)))
}

fn normalize(p: &Point2d, size: (u32, u32)) -> Point2d {
    Point2d::new(p.x / size.0 as f64, p.y / size.1 as f64)
}

/// Maximal runs of visible samples on consecutive frames, normalized by
/// `frame_size`.
pub fn visible_segments(track: &Track, frame_size: (u32, u32)) -> Vec<Vec<Point2d>> {
    let mut segments = Vec::new();
    let mut current: Vec<Point2d> = Vec::new();
    let mut last_frame: Option<u32> = None;
    for s in &track.samples {
        let continues = s.visible && last_frame.is_some_and(|t| s.frame_index == t + 1) && !current.is_empty();
        if !continues && !current.is_empty() {
            segments.push(core::mem::take(&mut current));
        }
        if s.visible {
            current.push(normalize(&s.position, frame_size));
        }
        last_frame = Some(s.frame_index);
    }
    if !current.is_empty() {
        segments.push(current);
    }
    segments
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TrackComplexity {
    pub value: Option<f64>,
    pub segments_used: usize,
    pub segments_skipped: usize,
}

/// Mean of the defined segment complexities over the track's visible runs.
pub fn track_complexity(track: &Track, config: &MetricsConfig, frame_size: (u32, u32)) -> TrackComplexity {
    let mut out = TrackComplexity::default();
    let mut values = Vec::new();
    for seg in visible_segments(track, frame_size) {
        match segment_complexity(&seg, config) {
            Some(c) => {
                values.push(c);
                out.segments_used += 1;
            }
            None => out.segments_skipped += 1,
        }
    }
    out.value = mean(values);
    out
}

/// Diversity of one video's tracks. Tracks are centered on their first
/// visible sample; occluded samples are ignored. `None` when no track has a
/// visible sample.
pub fn video_diversity(tracks: &[Track], frame_size: (u32, u32)) -> Option<f64> {
    let centered: Vec<Vec<(u32, Point2d)>> = tracks
        .iter()
        .filter_map(|t| {
            let mut visible = t.samples.iter().filter(|s| s.visible);
            let first = normalize(&visible.next()?.position, frame_size);
            let points = t
                .samples
                .iter()
                .filter(|s| s.visible)
                .map(|s| {
                    let p = normalize(&s.position, frame_size);
                    (s.frame_index, Point2d::new(p.x - first.x, p.y - first.y))
                })
                .collect();
            Some(points)
        })
        .collect();
    if centered.is_empty() {
        return None;
    }

    // Per frame: first value seen plus the compensated sum of deviations
    // from it, so coinciding tracks give a mean equal to each of them.
    let mut sums: BTreeMap<u32, (Point2d, CompensatedSum, CompensatedSum, usize)> = BTreeMap::new();
    for track in &centered {
        for (t, p) in track {
            let e = sums
                .entry(*t)
                .or_insert_with(|| (*p, CompensatedSum::new(), CompensatedSum::new(), 0));
            e.1.add(p.x - e.0.x);
            e.2.add(p.y - e.0.y);
            e.3 += 1;
        }
    }
    let mean_track: BTreeMap<u32, (f64, f64)> = sums
        .into_iter()
        .map(|(t, (base, sx, sy, n))| (t, (base.x + sx.value() / n as f64, base.y + sy.value() / n as f64)))
        .collect();

    mean(centered.iter().map(|track| {
        let msd = mean(track.iter().map(|(t, p)| {
            let m = mean_track[t];
            let dx = p.x - m.0;
            let dy = p.y - m.1;
            dx * dx + dy * dy
        }))
        .unwrap_or(0.0);
        libm::sqrt(msd)
    }))
}

/// The tracks of one video and the frame size used for normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct VideoTracks {
    pub name: String,
    pub frame_size: (u32, u32),
    pub tracks: Vec<Track>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackMetric {
    pub person_id: u32,
    pub vertex_index: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub complexity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoMetrics {
    pub name: String,
    pub track_count: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub complexity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub diversity: Option<f64>,
    pub tracks: Vec<TrackMetric>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dataset_complexity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dataset_diversity: Option<f64>,
    pub video_count: usize,
    pub track_count: usize,
    pub tracks_without_complexity: usize,
    pub videos_without_diversity: usize,
    pub segments_used: usize,
    pub segments_skipped: usize,
    pub videos: Vec<VideoMetrics>,
}

/// Per-video metrics of one video.
pub fn video_metrics(video: &VideoTracks, config: &MetricsConfig) -> (VideoMetrics, usize, usize) {
    let mut used = 0;
    let mut skipped = 0;
    let tracks: Vec<TrackMetric> = video
        .tracks
        .iter()
        .map(|t| {
            let c = track_complexity(t, config, video.frame_size);
            used += c.segments_used;
            skipped += c.segments_skipped;
            TrackMetric {
                person_id: t.person_id,
                vertex_index: t.vertex_index,
                complexity: c.value,
            }
        })
        .collect();
    let metrics = VideoMetrics {
        name: video.name.clone(),
        track_count: video.tracks.len(),
        complexity: mean(tracks.iter().filter_map(|t| t.complexity)),
        diversity: video_diversity(&video.tracks, video.frame_size),
        tracks,
    };
    (metrics, used, skipped)
}

/// Combines per-video metrics: dataset complexity is the mean over all
/// tracks with a defined value, dataset diversity the mean over videos.
pub fn aggregate(videos: Vec<(VideoMetrics, usize, usize)>) -> MetricsReport {
    let mut report = MetricsReport::default();
    for (v, used, skipped) in videos {
        report.segments_used += used;
        report.segments_skipped += skipped;
        report.videos.push(v);
    }
    report.video_count = report.videos.len();
    report.track_count = report.videos.iter().map(|v| v.track_count).sum();
    let all_tracks = || report.videos.iter().flat_map(|v| v.tracks.iter());
    report.tracks_without_complexity = all_tracks().filter(|t| t.complexity.is_none()).count();
    report.dataset_complexity = mean(all_tracks().filter_map(|t| t.complexity));
    report.videos_without_diversity = report.videos.iter().filter(|v| v.diversity.is_none()).count();
    report.dataset_diversity = mean(report.videos.iter().filter_map(|v| v.diversity));
    report
}

pub fn dataset_metrics(videos: &[VideoTracks], config: &MetricsConfig) -> MetricsReport {
    aggregate(videos.iter().map(|v| video_metrics(v, config)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::TrackSample;
    use alloc::vec;
    use alloc::vec::Vec;

    fn pts(v: &[(f64, f64)]) -> Vec<Point2d> {
        v.iter().map(|&(x, y)| Point2d::new(x, y)).collect()
    }

    fn track_from(points: &[(f64, f64)], visible: &[bool]) -> Track {
        let mut t = Track::new(0, 0);
        for (i, (&(x, y), &v)) in points.iter().zip(visible).enumerate() {
            let mut s = TrackSample::new(i as u32, Point2d::new(x, y));
            s.visible = v;
            t.samples.push(s);
        }
        t
    }

    #[test]
    fn straight_line_has_zero_complexity() {
        let c = segment_complexity(&pts(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0), (4.0, 0.0)]), &MetricsConfig::default());
        assert_eq!(c, Some(0.0));
    }

    #[test]
    fn right_angle_fixture() {
        let c = segment_complexity(&pts(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0)]), &MetricsConfig::default())
            .unwrap();
        assert!((c - PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn short_segments_are_absent() {
        let cfg = MetricsConfig::default();
        assert_eq!(segment_complexity(&pts(&[(0.0, 0.0), (1.0, 0.0), (2.0, 1.0)]), &cfg), None);
        assert_eq!(segment_complexity(&pts(&[(0.0, 0.0)]), &cfg), None);
        assert_eq!(segment_complexity(&[], &cfg), None);
        assert!(segment_complexity(&pts(&[(0.0, 0.0), (1.0, 0.0), (2.0, 1.0), (2.0, 2.0)]), &cfg).is_some());
    }

    #[test]
    fn stationary_steps_count_as_zero_turn() {
        let c = segment_complexity(&pts(&[(0.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0)]), &MetricsConfig::default());
        assert_eq!(c, Some(0.0));
    }

    #[test]
    fn unwrap_removes_jumps() {
        let raw = [3.0, -3.0, 3.0, 0.5];
        let u = unwrap_angles(&raw);
        for w in u.windows(2) {
            assert!((w[1] - w[0]).abs() <= PI + 1e-12);
        }
        assert!((u[1] - (2.0 * PI - 3.0)).abs() < 1e-12);
        // Wrapping by whole turns only.
        for (a, b) in raw.iter().zip(&u) {
            let turns = (b - a) / (2.0 * PI);
            assert!((turns - turns.round()).abs() < 1e-12);
        }
    }

    #[test]
    fn track_complexity_averages_segments() {
        let straight = [(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0), (4.0, 0.0)];
        let bent = [(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0)];
        let mut points: Vec<(f64, f64)> = straight.to_vec();
        points.push((0.0, 0.0));
        points.extend_from_slice(&bent);
        let mut visible = vec![true; 11];
        visible[5] = false;
        let t = track_from(&points, &visible);
        let c = track_complexity(&t, &MetricsConfig::default(), (1, 1));
        assert_eq!(c.segments_used, 2);
        assert!((c.value.unwrap() - PI / 8.0).abs() < 1e-12);
    }

    #[test]
    fn all_short_segments_give_absent_complexity() {
        let t = track_from(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0)], &[true, true, false, true]);
        let c = track_complexity(&t, &MetricsConfig::default(), (1, 1));
        assert_eq!(c.value, None);
        assert_eq!(c.segments_skipped, 2);
    }

    #[test]
    fn gaps_in_frames_split_segments() {
        let mut t = track_from(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0)], &[true; 4]);
        t.samples[2].frame_index = 7;
        t.samples[3].frame_index = 8;
        assert_eq!(visible_segments(&t, (1, 1)).len(), 2);
    }

    #[test]
    fn diversity_fixtures() {
        let a = track_from(&[(0.3, 0.3), (0.4, 0.3), (0.5, 0.3)], &[true; 3]);
        let b = track_from(&[(0.3, 0.3), (0.2, 0.3), (0.1, 0.3)], &[true; 3]);
        let d = video_diversity(&[a.clone(), b], (1, 1)).unwrap();
        assert!((d - libm::sqrt(0.05 / 3.0)).abs() < 1e-12);
        assert_eq!(video_diversity(&[a.clone(), a.clone(), a.clone()], (1, 1)), Some(0.0));
        assert_eq!(video_diversity(&[a], (1, 1)), Some(0.0));
        assert_eq!(video_diversity(&[], (1, 1)), None);
    }

    #[test]
    fn diversity_ignores_occluded_and_pre_visible_samples() {
        let a = track_from(&[(9.0, 9.0), (0.3, 0.3), (0.4, 0.3)], &[false, true, true]);
        let b = track_from(&[(0.0, 0.0), (0.5, 0.5), (0.6, 0.5)], &[true, true, true]);
        // a centered: frame1 (0,0), frame2 (0.1,0); b: (0,0),(0.5,0.5),(0.6,0.5).
        let d = video_diversity(&[a, b], (1, 1)).unwrap();
        let m1 = (0.25, 0.25);
        let m2 = (0.35, 0.25);
        let sq = |p: (f64, f64), m: (f64, f64)| (p.0 - m.0).powi(2) + (p.1 - m.1).powi(2);
        let sd_a = libm::sqrt((sq((0.0, 0.0), m1) + sq((0.1, 0.0), m2)) / 2.0);
        let sd_b = libm::sqrt((0.0 + sq((0.5, 0.5), m1) + sq((0.6, 0.5), m2)) / 3.0);
        assert!((d - (sd_a + sd_b) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn dataset_diversity_is_mean_over_videos() {
        let report = aggregate(vec![
            (
                VideoMetrics {
                    name: "a".into(),
                    track_count: 0,
                    complexity: None,
                    diversity: Some(0.0),
                    tracks: vec![],
                },
                0,
                0,
            ),
            (
                VideoMetrics {
                    name: "b".into(),
                    track_count: 0,
                    complexity: None,
                    diversity: Some(0.2),
                    tracks: vec![],
                },
                0,
                0,
            ),
        ]);
        assert!((report.dataset_diversity.unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn empty_dataset_is_all_absent() {
        let r = dataset_metrics(&[], &MetricsConfig::default());
        assert_eq!(r.dataset_complexity, None);
        assert_eq!(r.dataset_diversity, None);
        assert_eq!((r.video_count, r.track_count, r.segments_used), (0, 0, 0));
    }

    #[test]
    fn normalization_by_frame_size() {
        let a = track_from(&[(0.0, 0.0), (10.0, 0.0), (20.0, 0.0)], &[true; 3]);
        let b = track_from(&[(0.0, 0.0), (-10.0, 0.0), (-20.0, 0.0)], &[true; 3]);
        let d = video_diversity(&[a, b], (100, 50)).unwrap();
        assert!((d - libm::sqrt(0.05 / 3.0)).abs() < 1e-12);
    }
}
