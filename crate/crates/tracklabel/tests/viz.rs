mod common;

use std::collections::HashMap;

use tracklabel::dataset::{FlagCounts, Header, Meta, Summary, TrackDataset};
use tracklabel::synth_io::{ground_truth_path, read_ground_truth};
use tracklabel::viz::{render_overlay, VizError, VizFormat, VizOptions};
use tracklabel_core::flow_filter::RatioHistogram;
use tracklabel_core::geom::Point2d;
use tracklabel_core::{FilterParams, Track, TrackSample};

fn dataset(tracks: Vec<Track>, frames: u32) -> TrackDataset {
    TrackDataset {
        meta: Meta {
            header: Header {
                version: 1,
                frame_count: frames,
                image_width: 64,
                image_height: 48,
                params: FilterParams::default(),
            },
            summary: Summary {
                total: tracks.len(),
                retained: tracks.len(),
                rejected: 0,
                histogram: RatioHistogram { counts: vec![0; 20] },
                flags: FlagCounts::of(&tracks),
            },
        },
        tracks,
    }
}

/// Marker class per track key in one SVG frame.
fn markers(svg: &str) -> HashMap<(u32, u32), String> {
    let mut out = HashMap::new();
    for group in svg.split("<g data-track=\"").skip(1) {
        let (key, rest) = group.split_once('"').unwrap();
        let (p, j) = key.split_once(':').unwrap();
        let class = rest.split("<circle class=\"").nth(1).unwrap().split('"').next().unwrap();
        out.insert((p.parse().unwrap(), j.parse().unwrap()), class.to_owned());
    }
    out
}

fn numbers(line: &str, attrs: &[&str]) -> Vec<f64> {
    attrs
        .iter()
        .map(|a| {
            let v = line.split(&format!(" {a}=\"")).nth(1).unwrap();
            v.split('"').next().unwrap().parse().unwrap()
        })
        .collect()
}

#[test]
fn zero_tracks_give_blank_canvases() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dataset(Vec::new(), 4);
    let svg = render_overlay(&ds, &dir.path().join("s"), &VizOptions::default()).unwrap();
    assert_eq!(svg.len(), 4);
    for p in &svg {
        let text = std::fs::read_to_string(p).unwrap();
        assert!(!text.contains("<g") && !text.contains("<circle") && !text.contains("<line"));
    }
    let opts = VizOptions {
        format: VizFormat::Ppm,
        stride: 2,
        ..VizOptions::default()
    };
    let ppm = render_overlay(&ds, &dir.path().join("p"), &opts).unwrap();
    assert_eq!(ppm.len(), 2);
    for p in &ppm {
        let img = image::open(p).unwrap().to_rgb8();
        assert_eq!(img.dimensions(), (64, 48));
        assert!(img.pixels().all(|px| px.0 == [0, 0, 0]));
    }
}

#[test]
fn straight_track_is_a_collinear_polyline() {
    let dir = tempfile::tempdir().unwrap();
    let mut t = Track::new(3, 9);
    for f in 0..5 {
        t.samples.push(TrackSample::new(f, Point2d::new(5.0 + 8.0 * f64::from(f), 10.0 + 4.0 * f64::from(f))));
    }
    let paths = render_overlay(&dataset(vec![t], 5), dir.path(), &VizOptions::default()).unwrap();
    let svg = std::fs::read_to_string(&paths[4]).unwrap();
    let lines: Vec<Vec<f64>> = svg
        .lines()
        .filter(|l| l.starts_with("<line"))
        .map(|l| numbers(l, &["x1", "y1", "x2", "y2"]))
        .collect();
    assert_eq!(lines.len(), 4);
    let mut points = vec![(lines[0][0], lines[0][1])];
    for (i, l) in lines.iter().enumerate() {
        if i > 0 {
            assert_eq!((l[0], l[1]), points[i]);
        }
        points.push((l[2], l[3]));
    }
    assert_eq!(points.len(), 5);
    let (a, b) = (points[0], points[4]);
    for p in &points {
        let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
        assert!(cross.abs() < 1e-9);
    }
    assert_eq!(markers(&svg)[&(3, 9)], "visible");
}

#[test]
fn occlusion_is_hollow_where_ground_truth_is_occluded() {
    let dir = tempfile::tempdir().unwrap();
    let data = common::synth_dir(&common::crossing_spec(), &dir.path().join("data"));
    let ds = common::annotate_dir(&data, &dir.path().join("t.attr"), 2);
    let truth = read_ground_truth(&ground_truth_path(&data)).unwrap();
    let paths = render_overlay(&ds, &dir.path().join("v"), &VizOptions::default()).unwrap();
    let frames: Vec<_> = paths.iter().map(|p| markers(&std::fs::read_to_string(p).unwrap())).collect();

    // Every marker follows the dataset flags.
    for t in &ds.tracks {
        for s in &t.samples {
            let class = &frames[s.frame_index as usize][&t.key()];
            assert_eq!(class == "occluded", !s.visible);
        }
    }

    // Tracks whose labels agree with the analytic truth in every frame and
    // that change visibility: hollow exactly on the occluded interval.
    let mut checked = 0;
    for (t, g) in ds.tracks.iter().zip(&truth.tracks) {
        let agrees = t.samples.iter().zip(&g.samples).all(|(s, gs)| s.visible == gs.visible);
        let flips = g.samples.windows(2).any(|w| w[0].visible != w[1].visible);
        if !(agrees && flips) {
            continue;
        }
        checked += 1;
        for gs in &g.samples {
            let hollow = frames[gs.frame as usize][&t.key()] == "occluded";
            assert_eq!(hollow, !gs.visible, "track {:?} frame {}", t.key(), gs.frame);
        }
    }
    assert!(checked > 20, "{checked}");
}

#[test]
fn missing_underlay_frames_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let frames = dir.path().join("frames");
    std::fs::create_dir(&frames).unwrap();
    image::RgbImage::from_pixel(64, 48, image::Rgb([9, 9, 9])).save(frames.join("frame_1.png")).unwrap();
    image::RgbImage::from_pixel(64, 48, image::Rgb([9, 9, 9])).save(frames.join("frame_00003.png")).unwrap();
    let ds = dataset(Vec::new(), 4);
    let opts = VizOptions {
        frames: Some(frames.clone()),
        ..VizOptions::default()
    };
    match render_overlay(&ds, &dir.path().join("o"), &opts) {
        Err(VizError::MissingFrames(m)) => assert_eq!(m, vec![0, 2]),
        other => panic!("{other:?}"),
    }
    let opts = VizOptions {
        frames: Some(frames),
        stride: 2,
        format: VizFormat::Ppm,
        ..VizOptions::default()
    };
    // Frames 0 and 2 are selected; frame 0 is still missing.
    match render_overlay(&ds, &dir.path().join("o"), &opts) {
        Err(VizError::MissingFrames(m)) => assert_eq!(m, vec![0, 2]),
        other => panic!("{other:?}"),
    }
}

#[test]
fn underlay_is_drawn_beneath_the_tracks() {
    let dir = tempfile::tempdir().unwrap();
    let frames = dir.path().join("frames");
    std::fs::create_dir(&frames).unwrap();
    for f in 0..2 {
        image::RgbImage::from_pixel(64, 48, image::Rgb([9, 9, 9])).save(frames.join(format!("frame_{f}.png"))).unwrap();
    }
    let mut t = Track::new(0, 0);
    t.samples.push(TrackSample::new(0, Point2d::new(30.0, 20.0)));
    let opts = VizOptions {
        frames: Some(frames),
        format: VizFormat::Ppm,
        ..VizOptions::default()
    };
    let paths = render_overlay(&dataset(vec![t], 2), dir.path(), &opts).unwrap();
    let img = image::open(&paths[0]).unwrap().to_rgb8();
    assert_eq!(img.get_pixel(0, 0).0, [9, 9, 9]);
    assert_ne!(img.get_pixel(30, 20).0, [9, 9, 9]);
    let img = image::open(&paths[1]).unwrap().to_rgb8();
    assert!(img.pixels().all(|p| p.0 == [9, 9, 9]));
}
