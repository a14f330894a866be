//! Segmentation, rate computation, rate outliers and 1 Hz resampling.

use crate::ingest::StateVector;

use super::filters::{gaussian_smooth_sigma, numerical_gradient};
use super::{OutlierParams, SmoothChannels};
use crate::registry::AircraftClass;

/// One observation of a single aircraft, prior to resampling. Optional
/// channels are filled by [`compute_rates`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub time: f64,
    pub lat: f64,
    pub lon: f64,
    /// feet MSL
    pub alt: f64,
    /// knots
    pub speed: Option<f64>,
    /// degrees
    pub course: Option<f64>,
    /// feet per minute
    pub vert_rate: Option<f64>,
}

impl Observation {
    /// `None` when the vector carries no altitude.
    pub fn from_state(s: &StateVector) -> Option<Self> {
        Some(Observation {
            time: s.time as f64,
            lat: s.lat,
            lon: s.lon,
            alt: s.altitude()?,
            speed: s.ground_speed,
            course: s.track,
            vert_rate: s.vertical_rate,
        })
    }
}

/// An observation with every channel populated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatedPoint {
    pub time: f64,
    pub lat: f64,
    pub lon: f64,
    pub alt: f64,
    pub speed: f64,
    pub course: f64,
    pub vert_rate: f64,
    /// knots per second
    pub accel: f64,
}

/// Collapses runs of identical `(lat, lon, alt)` to their first observation.
/// Input must be time-sorted.
pub fn dedupe_positions(obs: &[Observation]) -> Vec<Observation> {
    let mut out: Vec<Observation> = Vec::with_capacity(obs.len());
    for o in obs {
        match out.last() {
            Some(p) if p.lat == o.lat && p.lon == o.lon && p.alt == o.alt => {}
            _ => out.push(*o),
        }
    }
    out
}

/// Splits wherever consecutive times differ by more than `max_gap` seconds
/// and discards runs shorter than `min_points`. Returns the kept runs and
/// the number discarded.
pub fn segment<T: Copy>(points: &[T], time: impl Fn(&T) -> f64, max_gap: f64, min_points: usize) -> (Vec<Vec<T>>, usize) {
    let mut kept = Vec::new();
    let mut dropped = 0;
    let mut cur: Vec<T> = Vec::new();
    for p in points {
        if let Some(last) = cur.last() {
            if time(p) - time(last) > max_gap {
                let run = std::mem::take(&mut cur);
                if run.len() >= min_points {
                    kept.push(run);
                } else {
                    dropped += 1;
                }
            }
        }
        cur.push(*p);
    }
    if !cur.is_empty() {
        if cur.len() >= min_points {
            kept.push(cur);
        } else {
            dropped += 1;
        }
    }
    (kept, dropped)
}

/// Position-derived ground speed (knots) and course (degrees), from the
/// numerical gradient of local east/north offsets in nautical miles.
fn kinematics_from_positions(obs: &[Observation]) -> (Vec<f64>, Vec<f64>) {
    let t: Vec<f64> = obs.iter().map(|o| o.time).collect();
    let (lat0, lon0) = (obs[0].lat, obs[0].lon);
    let k = lat0.to_radians().cos();
    let east: Vec<f64> = obs.iter().map(|o| (o.lon - lon0) * 60.0 * k).collect();
    let north: Vec<f64> = obs.iter().map(|o| (o.lat - lat0) * 60.0).collect();
    let ve = numerical_gradient(&east, &t);
    let vn = numerical_gradient(&north, &t);
    let speed = ve.iter().zip(&vn).map(|(e, n)| e.hypot(*n) * 3600.0).collect();
    let course = ve
        .iter()
        .zip(&vn)
        .map(|(e, n)| e.atan2(*n).to_degrees().rem_euclid(360.0))
        .collect();
    (speed, course)
}

/// Fills missing channels, smooths the enabled channels and derives
/// acceleration by numerical gradient. Missing speed and course come from the
/// positions; missing vertical rate from the altitude gradient.
pub fn compute_rates(obs: &[Observation], params: &OutlierParams) -> Vec<RatedPoint> {
    if obs.is_empty() {
        return Vec::new();
    }
    let t: Vec<f64> = obs.iter().map(|o| o.time).collect();
    let need_pos = obs.iter().any(|o| o.speed.is_none() || o.course.is_none());
    let (pos_speed, pos_course) = if need_pos && obs.len() >= 2 {
        kinematics_from_positions(obs)
    } else {
        (vec![0.0; obs.len()], vec![0.0; obs.len()])
    };
    let alt: Vec<f64> = obs.iter().map(|o| o.alt).collect();
    let alt_rate: Vec<f64> = numerical_gradient(&alt, &t).iter().map(|v| v * 60.0).collect();

    let mut speed: Vec<f64> = obs.iter().zip(&pos_speed).map(|(o, p)| o.speed.unwrap_or(*p)).collect();
    let course: Vec<f64> = obs.iter().zip(&pos_course).map(|(o, p)| o.course.unwrap_or(*p)).collect();
    let mut vert: Vec<f64> = obs.iter().zip(&alt_rate).map(|(o, r)| o.vert_rate.unwrap_or(*r)).collect();
    let mut alt = alt;

    let SmoothChannels { altitude, speed: sm_speed, vertical_rate } = params.smooth;
    let sigma = params.smooth_window * params.sigma_fraction;
    let smooth = |x: &[f64]| gaussian_smooth_sigma(x, &t, params.smooth_window, sigma);
    if altitude {
        alt = smooth(&alt);
    }
    if sm_speed {
        speed = smooth(&speed);
    }
    if vertical_rate {
        vert = smooth(&vert);
    }
    let accel = numerical_gradient(&speed, &t);

    (0..obs.len())
        .map(|i| RatedPoint {
            time: t[i],
            lat: obs[i].lat,
            lon: obs[i].lon,
            alt: alt[i],
            speed: speed[i],
            course: course[i],
            vert_rate: vert[i],
            accel: accel[i],
        })
        .collect()
}

/// Removes points faster than the class ceiling, then re-splits at gaps and
/// drops runs shorter than `min_points`. Returns the surviving runs, the
/// number of points removed as outliers and the number of runs discarded.
pub fn rate_outlier_filter(
    points: &[RatedPoint],
    class: AircraftClass,
    params: &OutlierParams,
) -> (Vec<Vec<RatedPoint>>, usize, usize) {
    let ceiling = params.speed_ceiling(class);
    let kept: Vec<RatedPoint> = points.iter().copied().filter(|p| p.speed <= ceiling).collect();
    let removed = points.len() - kept.len();
    let (runs, dropped) = segment(&kept, |p| p.time, params.max_gap, params.min_points);
    (runs, removed, dropped)
}

/// Resamples at every whole second in `[ceil(t_first), floor(t_last)]`.
/// Course follows the shorter arc. `None` when fewer than `min_points`
/// samples result.
pub fn interpolate_1hz(points: &[RatedPoint], min_points: usize) -> Option<Vec<RatedPoint>> {
    if points.len() < 2 {
        return None;
    }
    let start = points[0].time.ceil() as i64;
    let end = points[points.len() - 1].time.floor() as i64;
    if end < start || ((end - start + 1) as usize) < min_points {
        return None;
    }
    let mut out = Vec::with_capacity((end - start + 1) as usize);
    let mut k = 0;
    for s in start..=end {
        let t = s as f64;
        while k + 2 < points.len() && points[k + 1].time <= t {
            k += 1;
        }
        let (a, b) = (&points[k], &points[k + 1]);
        if t == a.time {
            out.push(RatedPoint { time: t, ..*a });
            continue;
        }
        if t == b.time {
            out.push(RatedPoint { time: t, ..*b });
            continue;
        }
        let f = (t - a.time) / (b.time - a.time);
        let lerp = |x: f64, y: f64| x + (y - x) * f;
        let mut dc = (b.course - a.course).rem_euclid(360.0);
        if dc > 180.0 {
            dc -= 360.0;
        }
        out.push(RatedPoint {
            time: t,
            lat: lerp(a.lat, b.lat),
            lon: lerp(a.lon, b.lon),
            alt: lerp(a.alt, b.alt),
            speed: lerp(a.speed, b.speed),
            course: (a.course + dc * f).rem_euclid(360.0),
            vert_rate: lerp(a.vert_rate, b.vert_rate),
            accel: lerp(a.accel, b.accel),
        });
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(t: f64, lat: f64, alt: f64) -> Observation {
        Observation { time: t, lat, lon: -71.0, alt, speed: Some(100.0), course: Some(0.0), vert_rate: Some(0.0) }
    }

    fn rp(t: f64, alt: f64, speed: f64, course: f64) -> RatedPoint {
        RatedPoint { time: t, lat: 42.0, lon: -71.0, alt, speed, course, vert_rate: 0.0, accel: 0.0 }
    }

    #[test]
    fn dedupe_holds() {
        let same: Vec<Observation> = (0..5).map(|i| obs(f64::from(i), 42.0, 1000.0)).collect();
        assert_eq!(dedupe_positions(&same).len(), 1);
        assert_eq!(dedupe_positions(&same)[0].time, 0.0);
        let moving: Vec<Observation> = (0..5).map(|i| obs(f64::from(i), 42.0 + f64::from(i) * 0.01, 1000.0)).collect();
        assert_eq!(dedupe_positions(&moving), moving);
        // move, hold, hold, move, hold, move: 3 distinct positions survive.
        let lats = [42.0, 42.0, 42.0, 42.1, 42.1, 42.2];
        let alternating: Vec<Observation> = lats.iter().enumerate().map(|(i, l)| obs(i as f64, *l, 1000.0)).collect();
        assert_eq!(dedupe_positions(&alternating).len(), 3);
    }

    #[test]
    fn segment_gap_example() {
        let mut t = Vec::new();
        for i in 0..9 {
            t.push(f64::from(i) * 10.0);
        }
        for i in 0..21 {
            t.push(80.0 + 300.0 + f64::from(i) * 10.0);
        }
        let (runs, dropped) = segment(&t, |x| *x, 60.0, 10);
        assert_eq!(runs.len(), 1);
        assert_eq!(runs[0].len(), 21);
        assert_eq!(dropped, 1);

        let cont: Vec<f64> = (0..100).map(f64::from).collect();
        assert_eq!(segment(&cont, |x| *x, 60.0, 10).0.len(), 1);
        let nine: Vec<f64> = (0..9).map(f64::from).collect();
        let (runs, dropped) = segment(&nine, |x| *x, 60.0, 10);
        assert!(runs.is_empty());
        assert_eq!(dropped, 1);
    }

    #[test]
    fn speed_ceilings() {
        let p = OutlierParams::default();
        let rotor: Vec<RatedPoint> =
            (0..12).map(|i| rp(f64::from(i), 500.0, if i == 5 { 260.0 } else { 100.0 }, 0.0)).collect();
        let (runs, removed, _) = rate_outlier_filter(&rotor, AircraftClass::Rotorcraft, &p);
        assert_eq!(removed, 1);
        assert_eq!(runs[0].len(), 11);

        let jet: Vec<RatedPoint> = (0..12).map(|i| rp(f64::from(i), 500.0, 599.0, 0.0)).collect();
        let (runs, removed, _) = rate_outlier_filter(&jet, AircraftClass::FixedWingMultiEngine, &p);
        assert_eq!((removed, runs[0].len()), (0, 12));

        let short: Vec<RatedPoint> =
            (0..10).map(|i| rp(f64::from(i), 500.0, if i < 2 { 300.0 } else { 100.0 }, 0.0)).collect();
        let (runs, removed, dropped) = rate_outlier_filter(&short, AircraftClass::Rotorcraft, &p);
        assert!(runs.is_empty());
        assert_eq!((removed, dropped), (2, 1));
    }

    #[test]
    fn interpolation_identity_and_linear() {
        let pts: Vec<RatedPoint> = (0..12).map(|i| rp(f64::from(i), 1000.0 + f64::from(i), 90.0, 10.0)).collect();
        assert_eq!(interpolate_1hz(&pts, 10).unwrap(), pts);

        let two = [rp(0.0, 1000.0, 100.0, 0.0), rp(10.0, 2000.0, 100.0, 0.0)];
        let out = interpolate_1hz(&two, 10).unwrap();
        assert_eq!(out.len(), 11);
        assert_eq!(out[4].alt, 1400.0);
    }

    #[test]
    fn course_takes_short_arc() {
        let two = [rp(0.0, 1000.0, 100.0, 350.0), rp(10.0, 1000.0, 100.0, 10.0)];
        let out = interpolate_1hz(&two, 10).unwrap();
        assert!((out[2].course - 354.0).abs() < 1e-9);
        assert!((out[3].course - 356.0).abs() < 1e-9);
        assert!(out[5].course.abs() < 1e-9);
        for p in &out {
            assert!(p.course >= 0.0 && p.course < 360.0);
            assert!(!(20.0..340.0).contains(&p.course), "{}", p.course);
        }
    }

    #[test]
    fn fractional_endpoints_and_short_spans() {
        let two = [rp(0.4, 0.0, 100.0, 0.0), rp(12.6, 122.0, 100.0, 0.0)];
        let out = interpolate_1hz(&two, 10).unwrap();
        assert_eq!(out.first().unwrap().time, 1.0);
        assert_eq!(out.last().unwrap().time, 12.0);
        assert!((out[0].alt - 6.0).abs() < 1e-9);
        let short = [rp(0.0, 0.0, 100.0, 0.0), rp(8.0, 0.0, 100.0, 0.0)];
        assert!(interpolate_1hz(&short, 10).is_none());
    }

    #[test]
    fn rates_from_positions_when_missing() {
        // Due north at 0.01 deg/10 s = 0.6 NM per 10 s = 216 kt.
        let obs: Vec<Observation> = (0..20)
            .map(|i| Observation {
                time: f64::from(i) * 10.0,
                lat: 42.0 + f64::from(i) * 0.01,
                lon: -71.0,
                alt: 1000.0 + f64::from(i) * 50.0,
                speed: None,
                course: None,
                vert_rate: None,
            })
            .collect();
        let rated = compute_rates(&obs, &OutlierParams::default());
        for r in &rated {
            assert!((r.speed - 216.0).abs() < 1e-6, "{}", r.speed);
            assert!(r.course.abs() < 1e-9 || (r.course - 360.0).abs() < 1e-9);
            assert!((r.vert_rate - 300.0).abs() < 1e-6);
            assert!(r.accel.abs() < 1e-9);
        }
    }
}
