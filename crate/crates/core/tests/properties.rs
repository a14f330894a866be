mod common;

use aerocorpus::archive::{extract_to, pack_leaf, read_members};
use aerocorpus::config::PipelineConfig;
use aerocorpus::geo::{buffer_polygon, convex_hull, GeoPoint};
use aerocorpus::registry::{partition_icao_ranges, Icao24};
use aerocorpus::stats::{FlightStats, StatsConfig};
use aerocorpus::registry::AircraftClass;
use aerocorpus::tracks::filters::{gaussian_smooth, mad_outliers};
use aerocorpus::tracks::{interpolate_1hz, segment, AirspaceClass, RatedPoint, TrackPoint};
use common::*;
use proptest::prelude::*;

fn series() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e4f64..1e4, 3..200)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn mad_matches_oracle(x in series(), k in 0.5f64..5.0) {
        prop_assert_eq!(mad_outliers(&x, k), mad_oracle(&x, k, 0.0));
    }

    // Shifts by powers of two and scaling by powers of two are exact in
    // binary floating point, so the mask must not change at all.
    #[test]
    fn mad_translation_and_scale_invariant(x in series(), shift in -64i32..64, e in -8i32..8) {
        let base = mad_outliers(&x, 1.5);
        let c = f64::from(shift) * 1024.0;
        let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
        let s = 2f64.powi(e);
        let scaled: Vec<f64> = x.iter().map(|v| v * s).collect();
        let negated: Vec<f64> = x.iter().map(|v| -v).collect();
        // Adding c may round; compare only when the shift is exact.
        if shifted.iter().zip(&x).all(|(a, b)| a - c == *b) {
            prop_assert_eq!(&mad_outliers(&shifted, 1.5), &base);
        }
        prop_assert_eq!(&mad_outliers(&scaled, 1.5), &base);
        prop_assert_eq!(&mad_outliers(&negated, 1.5), &base);
    }

    #[test]
    fn smoothing_stays_within_window_range(
        y in prop::collection::vec(-1e3f64..1e3, 2..80),
        steps in prop::collection::vec(0.1f64..15.0, 80),
        w in 1.0f64..60.0,
    ) {
        let mut t = vec![0.0];
        for s in &steps[..y.len() - 1] {
            t.push(t.last().unwrap() + s);
        }
        let out = gaussian_smooth(&y, &t, w);
        let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(out.iter().all(|v| *v >= lo && *v <= hi));
    }

    #[test]
    fn hull_is_convex_and_contains_inputs(
        pts in prop::collection::vec((41.0f64..43.0, -73.0f64..-71.0), 3..60),
        d in 0.0f64..20.0,
        weights in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 60), 8),
    ) {
        let pts: Vec<GeoPoint> = pts.into_iter().map(|(a, b)| GeoPoint::new(a, b)).collect();
        let Ok(hull) = convex_hull(&pts) else { return Ok(()) };
        prop_assert!(hull.is_convex());
        for p in &pts {
            prop_assert!(hull.contains(*p));
        }
        let buf = buffer_polygon(&hull, d).unwrap();
        for v in hull.vertices() {
            prop_assert!(buf.contains(*v));
            prop_assert!(ray_cast(buf.vertices(), *v) || d == 0.0);
        }
        // Convex combinations of hull vertices lie inside the hull, so they
        // must lie inside every buffer of it.
        let hv = hull.vertices();
        for w in &weights {
            let w = &w[..hv.len()];
            let sum: f64 = w.iter().sum::<f64>().max(1e-9);
            let lat = hv.iter().zip(w).map(|(p, k)| p.lat * k).sum::<f64>() / sum;
            let lon = hv.iter().zip(w).map(|(p, k)| p.lon * k).sum::<f64>() / sum;
            let q = GeoPoint::new(lat, lon);
            if hull.contains(q) {
                prop_assert!(buf.contains(q));
            }
        }
    }

    #[test]
    fn ranges_are_disjoint_covering_and_capped(
        addrs in prop::collection::btree_set(0u32..0xFFFFFF, 1..3000),
        cap in 1usize..1200,
    ) {
        let v: Vec<Icao24> = addrs.iter().map(|a| Icao24::new(*a).unwrap()).collect();
        let ranges = partition_icao_ranges(&v, cap);
        for w in ranges.windows(2) {
            prop_assert!(w[0].hi <= w[1].lo.value());
        }
        for a in &v {
            prop_assert_eq!(ranges.iter().filter(|r| r.contains(*a)).count(), 1);
        }
        for r in &ranges {
            let members = v.iter().filter(|a| r.contains(**a)).count();
            prop_assert!(members >= 1 && members <= cap);
        }
    }

    #[test]
    fn segments_and_resampling(
        steps in prop::collection::vec(prop_oneof![9 => 1u32..12, 1 => 61u32..500], 1..150),
        min_points in 2usize..15,
    ) {
        let mut t = 1000.0;
        let pts: Vec<RatedPoint> = steps
            .iter()
            .map(|s| {
                t += f64::from(*s) + 0.25;
                RatedPoint { time: t, lat: 42.0, lon: -71.0, alt: 3.0 * t, speed: 100.0, course: 0.0, vert_rate: 0.0, accel: 0.0 }
            })
            .collect();
        let (segs, dropped) = segment(&pts, |p| p.time, 60.0, min_points);
        // Oracle: run lengths from the gap positions.
        let mut runs = vec![1usize];
        for w in pts.windows(2) {
            if w[1].time - w[0].time > 60.0 { runs.push(1) } else { *runs.last_mut().unwrap() += 1 }
        }
        let long: Vec<usize> = runs.iter().copied().filter(|r| *r >= min_points).collect();
        prop_assert_eq!(segs.iter().map(Vec::len).collect::<Vec<_>>(), long);
        prop_assert_eq!(segs.len() + dropped, runs.len());
        for s in &segs {
            prop_assert!(s.len() >= min_points);
            prop_assert!(s.windows(2).all(|w| w[1].time - w[0].time <= 60.0));
            if let Some(out) = interpolate_1hz(s, min_points) {
                prop_assert!(out.len() >= min_points);
                for w in out.windows(2) {
                    prop_assert_eq!(w[1].time - w[0].time, 1.0);
                }
                for p in &out {
                    prop_assert!((p.alt - 3.0 * p.time).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn stats_merge_is_split_invariant(
        aglv in prop::collection::vec(prop_oneof![Just(None), (-100.0f64..6000.0).prop_map(Some)], 1..400),
        cut in 0usize..400,
    ) {
        let cfg = StatsConfig::default();
        let pts: Vec<TrackPoint> = aglv
            .iter()
            .enumerate()
            .map(|(i, a)| TrackPoint {
                time: i as i64, lat: 42.0, lon: -71.0, alt_msl: 0.0, alt_agl: *a, speed: (i % 700) as f64,
                course: 0.0, vert_rate: 0.0, accel: 0.0, airspace: AirspaceClass::Other,
            })
            .collect();
        let cut = cut.min(pts.len());
        let mut whole = FlightStats::default();
        let (mut a, mut b) = (FlightStats::default(), FlightStats::default());
        for (i, p) in pts.iter().enumerate() {
            whole.add_point(2020, AircraftClass::Rotorcraft, p, &cfg);
            if i < cut { &mut a } else { &mut b }.add_point(2020, AircraftClass::Rotorcraft, p, &cfg);
        }
        b.merge(&a);
        prop_assert_eq!(&b, &whole);
        let hours = whole.flight_hours().first().map_or(0.0, |r| r.total);
        for h in whole.histogram_list(&cfg) {
            prop_assert!((h.total_hours() - hours).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn archive_roundtrip(files in prop::collection::btree_map("[a-z0-9_]{1,12}\\.csv", prop::collection::vec(any::<u8>(), 0..2048), 1..40)) {
        let dir = tempfile::tempdir().unwrap();
        let leaf = dir.path().join("leaf");
        std::fs::create_dir(&leaf).unwrap();
        for (name, bytes) in &files {
            std::fs::write(leaf.join(name), bytes).unwrap();
        }
        let target = dir.path().join("leaf.zip");
        let a = pack_leaf(&leaf, &target).unwrap().unwrap();
        prop_assert_eq!(a.member_count(), files.len());
        prop_assert!(!leaf.exists());
        let members: Vec<(String, Vec<u8>)> = read_members(&target).unwrap();
        let want: Vec<(String, Vec<u8>)> = files.clone().into_iter().collect();
        prop_assert_eq!(&members, &want);
        let out = dir.path().join("out");
        extract_to(&target, &out).unwrap();
        prop_assert_eq!(tree_bytes(&out), want);
    }

    #[test]
    fn config_text_roundtrips(workers in 1usize..64, k in 0.5f64..4.0, window in 5.0f64..90.0, min_points in 2usize..40) {
        let dir = tempfile::tempdir().unwrap();
        let text = format!(
            "raw_root = raw\norganized_root = org\narchive_root = arc\nprocessed_root = proc\nstats_root = st\n\
             report_root = rep\nterrain_root = ter\nregistry_root = reg\npolygon = p.geojson\nyears = 2020,2019\n\
             workers = {workers}\nmad_threshold = {k}\nsmooth_window_s = {window}\nmin_points = {min_points}\n"
        );
        let cfg = PipelineConfig::parse(&text, dir.path()).unwrap();
        let once = cfg.to_text();
        let again = PipelineConfig::parse(&once, dir.path()).unwrap();
        prop_assert_eq!(&again, &cfg);
        prop_assert_eq!(again.to_text(), once);
    }
}
