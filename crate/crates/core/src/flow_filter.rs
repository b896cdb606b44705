//! Optical-flow filtering of pseudo-tracks.
//!
//! Each sample gets a forward-backward consistency flag `c`. Each adjacent
//! transition whose start sample is visible and flow-confident is compared
//! with the forward flow after normalizing both displacements by the shorter
//! length plus `eps_norm`, giving the erroneous flag `e`. Tracks whose ratio
//! of erroneous to gated transitions exceeds `tau_ratio` are rejected, and
//! erroneous transitions of the remaining tracks are marked excluded.

use alloc::vec::Vec;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::geom::Point2d;
use crate::scene::{FlowPair, FlowRaster, Track};

pub type Vec2 = Vector2<f64>;

/// Number of uniform ratio histogram bins over `[0, 1]`.
pub const HISTOGRAM_BINS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterParams {
    /// Forward-backward residual threshold, pixels.
    pub delta_cons: f64,
    /// Threshold on the normalized displacement difference.
    pub tau_dist: f64,
    /// Added to the shorter displacement length before normalizing, pixels.
    pub eps_norm: f64,
    /// Keeps the ratio finite for tracks without gated transitions.
    pub eps_ratio: f64,
    /// Tracks with a larger erroneous ratio are rejected.
    pub tau_ratio: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            delta_cons: 1.0,
            tau_dist: 1.0,
            eps_norm: 2.0,
            eps_ratio: 1e-6,
            tau_ratio: 0.25,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ParamError {
    #[error("{0} must be finite and strictly positive")]
    NotPositive(&'static str),
    #[error("eps_ratio must be finite and non-negative")]
    NegativeEpsRatio,
    #[error("tau_ratio must lie in (0, 1]")]
    TauRatioRange,
}

impl FilterParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        for (name, v) in [
            ("delta_cons", self.delta_cons),
            ("tau_dist", self.tau_dist),
            ("eps_norm", self.eps_norm),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ParamError::NotPositive(name));
            }
        }
        if !(self.eps_ratio.is_finite() && self.eps_ratio >= 0.0) {
            return Err(ParamError::NegativeEpsRatio);
        }
        // 1.0 is accepted and disables rejection.
        if !(self.tau_ratio > 0.0 && self.tau_ratio <= 1.0) {
            return Err(ParamError::TauRatioRange);
        }
        Ok(())
    }
}

/// Bilinearly interpolated flow value plus whether the query point was
/// inside the sampling rectangle `[0, W-1] x [0, H-1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowSample {
    pub displacement: Vec2,
    pub in_image: bool,
}

/// True when `x` lies in `[0, W-1] x [0, H-1]`, where cell `(i, j)` is
/// centered at `(j, i)`.
pub fn in_image(raster: &FlowRaster, x: &Point2d) -> bool {
    x.x >= 0.0
        && x.y >= 0.0
        && x.x <= (raster.width - 1) as f64
        && x.y <= (raster.height - 1) as f64
}

/// Bilinear sample of `raster` at `x`. Points outside the rectangle are
/// clamped to the border and reported with `in_image = false`.
///
/// Panics if the raster is empty.
pub fn sample_flow(raster: &FlowRaster, x: &Point2d) -> FlowSample {
    assert!(!raster.is_empty(), "cannot sample an empty raster");
    let w = raster.width as usize;
    let h = raster.height as usize;
    let clamp = |v: f64, hi: usize| {
        if v.is_nan() {
            0.0
        } else {
            v.clamp(0.0, hi as f64)
        }
    };
    let xc = clamp(x.x, w - 1);
    let yc = clamp(x.y, h - 1);
    let c0 = libm::floor(xc) as usize;
    let r0 = libm::floor(yc) as usize;
    let c1 = (c0 + 1).min(w - 1);
    let r1 = (r0 + 1).min(h - 1);
    let fx = xc - c0 as f64;
    let fy = yc - r0 as f64;

    let top = raster.at(r0, c0) * (1.0 - fx) + raster.at(r0, c1) * fx;
    let bottom = raster.at(r1, c0) * (1.0 - fx) + raster.at(r1, c1) * fx;
    FlowSample {
        displacement: top * (1.0 - fy) + bottom * fy,
        in_image: in_image(raster, x),
    }
}

/// Length of the forward-then-backward round trip from `x`, or `None` when
/// `x` or its forward warp leaves the image.
pub fn consistency_residual(forward: &FlowRaster, backward: &FlowRaster, x: &Point2d) -> Option<f64> {
    let fwd = sample_flow(forward, x);
    let warped = x + fwd.displacement;
    let bwd = sample_flow(backward, &warped);
    (fwd.in_image && bwd.in_image).then(|| (fwd.displacement + bwd.displacement).norm())
}

/// Forward-backward consistency flag at `x`.
pub fn flow_confidence(forward: &FlowRaster, backward: &FlowRaster, x: &Point2d, params: &FilterParams) -> bool {
    consistency_residual(forward, backward, x).is_some_and(|r| r < params.delta_cons)
}

/// Distance between the two displacements after dividing both by
/// `min(|a|, |b|) + eps_norm`.
pub fn normalized_distance(hmr: &Vec2, flow: &Vec2, eps_norm: f64) -> f64 {
    let shorter = libm::fmin(hmr.norm(), flow.norm()) + eps_norm;
    (hmr / shorter - flow / shorter).norm()
}

/// One transition of a track between adjacent frames.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitionRecord {
    pub person_id: u32,
    pub vertex_index: u32,
    pub start_frame: u32,
    pub hmr_displacement: Vec2,
    pub flow_displacement: Vec2,
    pub normalized_distance: f64,
    /// Start sample is visible and flow-confident.
    pub gated: bool,
    /// Only meaningful when `gated`.
    pub erroneous: bool,
}

/// Compares the mesh-derived displacement `x_t1 - x_t` with the forward
/// flow sampled at `x_t`.
pub fn evaluate_transition(x_t: &Point2d, x_t1: &Point2d, forward: &FlowRaster, params: &FilterParams) -> (Vec2, Vec2, f64, bool) {
    let hmr = x_t1 - x_t;
    let flow = sample_flow(forward, x_t).displacement;
    let d = normalized_distance(&hmr, &flow, params.eps_norm);
    (hmr, flow, d, d > params.tau_dist)
}

/// Erroneous flag for one transition.
pub fn transition_error(x_t: &Point2d, x_t1: &Point2d, forward: &FlowRaster, params: &FilterParams) -> bool {
    evaluate_transition(x_t, x_t1, forward, params).3
}

/// Erroneous-transition ratio from the flags already on the track. Only
/// transitions between adjacent frames count; each is gated by the
/// visibility and confidence of its start sample.
pub fn trajectory_ratio(track: &Track, params: &FilterParams) -> f64 {
    let mut erroneous = 0u64;
    let mut gated = 0u64;
    for w in track.samples.windows(2) {
        if w[1].frame_index != w[0].frame_index + 1 {
            continue;
        }
        if w[0].visible && w[0].flow_confident {
            gated += 1;
            if w[0].erroneous {
                erroneous += 1;
            }
        }
    }
    erroneous as f64 / (gated as f64 + params.eps_ratio)
}

/// Flow pairs indexed by their start frame.
#[derive(Clone, Debug, Default)]
pub struct FlowSet {
    pairs: Vec<FlowPair>,
}

impl FlowSet {
    pub fn new(mut pairs: Vec<FlowPair>) -> Self {
        pairs.sort_by_key(|p| p.frame_index);
        pairs.dedup_by_key(|p| p.frame_index);
        Self { pairs }
    }

    pub fn get(&self, frame_index: u32) -> Option<&FlowPair> {
        self.pairs
            .binary_search_by_key(&frame_index, |p| p.frame_index)
            .ok()
            .map(|i| &self.pairs[i])
    }

    pub fn pairs(&self) -> &[FlowPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum FilterError {
    #[error("no flow pair for frames {frame} -> {}", frame + 1)]
    MissingFlow { frame: u32 },
    #[error("flow pair {frame}: forward and backward rasters differ in size")]
    DimensionMismatch { frame: u32 },
}

/// Sets `flow_confident`, `erroneous` and `ratio` on a track. Rejection and
/// exclusion are left to the caller.
pub fn annotate_track(track: &mut Track, flows: &FlowSet, params: &FilterParams) -> Result<(), FilterError> {
    let n = track.samples.len();
    for k in 0..n {
        let t = track.samples[k].frame_index;
        let adjacent_next = (k + 1 < n && track.samples[k + 1].frame_index == t + 1)
            .then(|| track.samples[k + 1].position);
        let pair = match (flows.get(t), adjacent_next) {
            (Some(p), _) => Some(p),
            (None, Some(_)) => return Err(FilterError::MissingFlow { frame: t }),
            (None, None) => None,
        };
        let sample = &mut track.samples[k];
        sample.flow_confident = false;
        sample.erroneous = false;
        sample.excluded = false;
        let Some(pair) = pair else { continue };
        if pair.forward.width != pair.backward.width || pair.forward.height != pair.backward.height {
            return Err(FilterError::DimensionMismatch { frame: t });
        }
        sample.flow_confident = flow_confidence(&pair.forward, &pair.backward, &sample.position, params);
        if let Some(next) = adjacent_next {
            if sample.visible && sample.flow_confident {
                sample.erroneous = transition_error(&sample.position, &next, &pair.forward, params);
            }
        }
    }
    track.ratio = trajectory_ratio(track, params);
    Ok(())
}

/// Every gated and ungated adjacent transition of an annotated track.
pub fn transitions(track: &Track, flows: &FlowSet, params: &FilterParams) -> Vec<TransitionRecord> {
    let mut out = Vec::new();
    for w in track.samples.windows(2) {
        let t = w[0].frame_index;
        if w[1].frame_index != t + 1 {
            continue;
        }
        let Some(pair) = flows.get(t) else { continue };
        let (hmr, flow, d, e) = evaluate_transition(&w[0].position, &w[1].position, &pair.forward, params);
        let gated = w[0].visible && w[0].flow_confident;
        out.push(TransitionRecord {
            person_id: track.person_id,
            vertex_index: track.vertex_index,
            start_frame: t,
            hmr_displacement: hmr,
            flow_displacement: flow,
            normalized_distance: d,
            gated,
            erroneous: gated && e,
        });
    }
    out
}

/// Whether an annotated track survives `tau_ratio`.
pub fn is_retained(track: &Track, params: &FilterParams) -> bool {
    !(track.ratio > params.tau_ratio)
}

/// Marks every erroneous transition of a retained track as excluded.
pub fn mark_excluded(track: &mut Track) {
    for s in &mut track.samples {
        s.excluded = s.erroneous;
    }
}

/// Ratio histogram with [`HISTOGRAM_BINS`] uniform bins over `[0, 1]`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatioHistogram {
    pub counts: Vec<u64>,
}

impl RatioHistogram {
    pub fn new() -> Self {
        Self {
            counts: alloc::vec![0; HISTOGRAM_BINS],
        }
    }

    pub fn bin(ratio: f64) -> usize {
        let b = libm::floor(ratio.clamp(0.0, 1.0) * HISTOGRAM_BINS as f64) as usize;
        b.min(HISTOGRAM_BINS - 1)
    }

    pub fn add(&mut self, ratio: f64) {
        if self.counts.len() != HISTOGRAM_BINS {
            self.counts.resize(HISTOGRAM_BINS, 0);
        }
        self.counts[Self::bin(ratio)] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RejectedTrack {
    pub person_id: u32,
    pub vertex_index: u32,
    pub ratio: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub total: usize,
    pub retained: usize,
    pub rejected: Vec<RejectedTrack>,
    pub histogram: RatioHistogram,
}

/// Splits annotated tracks into retained and rejected, marks exclusions on
/// the retained ones, and tallies the report. Output keeps input order
/// after sorting by `(person_id, vertex_index)`.
pub fn finish_filter(mut tracks: Vec<Track>, params: &FilterParams) -> (Vec<Track>, FilterReport) {
    tracks.sort_by_key(Track::key);
    let mut report = FilterReport {
        total: tracks.len(),
        histogram: RatioHistogram::new(),
        ..Default::default()
    };
    let mut retained = Vec::with_capacity(tracks.len());
    for mut track in tracks {
        report.histogram.add(track.ratio);
        if is_retained(&track, params) {
            mark_excluded(&mut track);
            retained.push(track);
        } else {
            report.rejected.push(RejectedTrack {
                person_id: track.person_id,
                vertex_index: track.vertex_index,
                ratio: track.ratio,
            });
        }
    }
    report.retained = retained.len();
    (retained, report)
}

/// Runs the full filter stage over tracks whose visibility is already set.
pub fn filter_tracks(mut tracks: Vec<Track>, flows: &FlowSet, params: &FilterParams) -> Result<(Vec<Track>, FilterReport), FilterError> {
    for track in &mut tracks {
        annotate_track(track, flows, params)?;
    }
    Ok(finish_filter(tracks, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::TrackSample;
    use alloc::vec;

    fn constant(w: u32, h: u32, v: [f32; 2]) -> FlowRaster {
        FlowRaster::filled(w, h, v)
    }

    #[test]
    fn default_params() {
        let p = FilterParams::default();
        assert_eq!(
            (p.delta_cons, p.tau_dist, p.eps_norm, p.eps_ratio, p.tau_ratio),
            (1.0, 1.0, 2.0, 1e-6, 0.25)
        );
        assert!(p.validate().is_ok());
    }

    #[test]
    fn param_validation() {
        let bad = FilterParams { tau_dist: 0.0, ..Default::default() };
        assert_eq!(bad.validate(), Err(ParamError::NotPositive("tau_dist")));
        let bad = FilterParams { tau_ratio: 1.5, ..Default::default() };
        assert_eq!(bad.validate(), Err(ParamError::TauRatioRange));
        let bad = FilterParams { eps_ratio: -1.0, ..Default::default() };
        assert_eq!(bad.validate(), Err(ParamError::NegativeEpsRatio));
        let off = FilterParams { tau_ratio: 1.0, ..Default::default() };
        assert!(off.validate().is_ok());
    }

    #[test]
    fn constant_raster_samples_constant() {
        let r = constant(7, 5, [3.0, -2.0]);
        for x in [(0.0, 0.0), (3.3, 2.7), (6.0, 4.0)] {
            let s = sample_flow(&r, &Point2d::new(x.0, x.1));
            assert_eq!(s.displacement, Vec2::new(3.0, -2.0));
            assert!(s.in_image);
        }
    }

    #[test]
    fn linear_interpolation_between_columns() {
        let r = FlowRaster {
            width: 2,
            height: 2,
            data: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 0.0], [1.0, 0.0]],
        };
        let s = sample_flow(&r, &Point2d::new(0.5, 0.5));
        assert_eq!(s.displacement, Vec2::new(0.5, 0.0));
    }

    #[test]
    fn outside_points_clamp_and_flag() {
        let r = FlowRaster {
            width: 2,
            height: 1,
            data: vec![[1.0, 0.0], [2.0, 0.0]],
        };
        let s = sample_flow(&r, &Point2d::new(-4.0, 0.0));
        assert_eq!(s.displacement, Vec2::new(1.0, 0.0));
        assert!(!s.in_image);
        let s = sample_flow(&r, &Point2d::new(9.0, 3.0));
        assert_eq!(s.displacement, Vec2::new(2.0, 0.0));
        assert!(!s.in_image);
    }

    #[test]
    fn confidence_fixtures() {
        let p = FilterParams::default();
        let x = Point2d::new(10.0, 10.0);
        let z = constant(32, 32, [0.0, 0.0]);
        assert!(flow_confidence(&z, &z, &x, &p));
        let f = constant(32, 32, [5.0, 0.0]);
        assert!(flow_confidence(&f, &constant(32, 32, [-5.0, 0.0]), &x, &p));
        let b = constant(32, 32, [-3.0, 0.0]);
        assert_eq!(consistency_residual(&f, &b, &x), Some(2.0));
        assert!(!flow_confidence(&f, &b, &x, &p));
    }

    #[test]
    fn confidence_is_zero_when_warp_leaves_image() {
        let p = FilterParams::default();
        let f = constant(32, 32, [5.0, 0.0]);
        let b = constant(32, 32, [-5.0, 0.0]);
        assert!(!flow_confidence(&f, &b, &Point2d::new(29.0, 3.0), &p));
        assert!(!flow_confidence(&f, &b, &Point2d::new(-1.0, 3.0), &p));
    }

    #[test]
    fn transition_fixtures() {
        let eps = 2.0;
        let d = normalized_distance(&Vec2::new(3.0, 4.0), &Vec2::new(3.0, 4.0), eps);
        assert_eq!(d, 0.0);
        let d = normalized_distance(&Vec2::new(10.0, 0.0), &Vec2::new(0.0, 10.0), eps);
        assert!((d - 10.0 / 12.0 * core::f64::consts::SQRT_2).abs() < 1e-12);
        assert!(d > 1.0);
        let d = normalized_distance(&Vec2::new(0.0, 0.0), &Vec2::new(1.9, 0.0), eps);
        assert!((d - 0.95).abs() < 1e-12);
    }

    #[test]
    fn transition_error_uses_forward_flow_at_start() {
        let p = FilterParams::default();
        let f = constant(32, 32, [0.0, 10.0]);
        assert!(transition_error(&Point2d::new(5.0, 5.0), &Point2d::new(15.0, 5.0), &f, &p));
        assert!(!transition_error(&Point2d::new(5.0, 5.0), &Point2d::new(5.0, 15.0), &f, &p));
    }

    fn flagged_track(flags: &[(bool, bool, bool)]) -> Track {
        let mut t = Track::new(0, 0);
        for (i, &(v, c, e)) in flags.iter().enumerate() {
            let mut s = TrackSample::new(i as u32, Point2d::origin());
            s.visible = v;
            s.flow_confident = c;
            s.erroneous = e;
            t.samples.push(s);
        }
        t
    }

    #[test]
    fn ratio_three_of_ten() {
        let mut flags = vec![(true, true, false); 11];
        for k in [1, 4, 7] {
            flags[k].2 = true;
        }
        let r = trajectory_ratio(&flagged_track(&flags), &FilterParams::default());
        assert!((r - 3.0 / (10.0 + 1e-6)).abs() < 1e-15);
    }

    #[test]
    fn ratio_of_fully_occluded_track_is_zero() {
        let flags = vec![(false, true, true); 6];
        assert_eq!(trajectory_ratio(&flagged_track(&flags), &FilterParams::default()), 0.0);
    }

    #[test]
    fn ratio_ignores_non_adjacent_transitions() {
        let mut t = flagged_track(&[(true, true, true), (true, true, false), (true, true, false)]);
        t.samples[1].frame_index = 5;
        t.samples[2].frame_index = 6;
        // Only 5 -> 6 counts.
        assert_eq!(trajectory_ratio(&t, &FilterParams::default()), 0.0);
    }

    #[test]
    fn missing_flow_is_reported() {
        let mut t = flagged_track(&[(true, false, false), (true, false, false)]);
        let flows = FlowSet::new(vec![]);
        assert_eq!(
            annotate_track(&mut t, &flows, &FilterParams::default()),
            Err(FilterError::MissingFlow { frame: 0 })
        );
    }

    #[test]
    fn histogram_bins() {
        assert_eq!(RatioHistogram::bin(0.0), 0);
        assert_eq!(RatioHistogram::bin(0.05), 1);
        assert_eq!(RatioHistogram::bin(1.0), HISTOGRAM_BINS - 1);
        assert_eq!(RatioHistogram::bin(0.2999998), 5);
    }
}
