//! WebAssembly bindings for the interactive demo page in `www/`.
//!
//! Arrays cross the boundary flattened: point lists are `[lon0, lat0, lon1,
//! lat1, ...]` and resampled tracks are `[t0, alt0, t1, alt1, ...]`.

use aerocorpus::geo::{buffer_polygon, convex_hull, GeoPoint, GeoPolygon};
use aerocorpus::tracks::filters::{gaussian_smooth, mad_outliers_with_floor};
use aerocorpus::tracks::{interpolate_1hz, RatedPoint};
use wasm_bindgen::prelude::*;

/// Outlier mask (1 = outlier) using the scaled-MAD rule with a floor for
/// zero-MAD series.
#[wasm_bindgen]
pub fn mad_flags(values: &[f64], threshold: f64, zero_mad_floor: f64) -> Vec<u8> {
    mad_outliers_with_floor(values, threshold, zero_mad_floor)
        .into_iter()
        .map(u8::from)
        .collect()
}

/// Gaussian-weighted smoothing over a time window in seconds.
#[wasm_bindgen]
pub fn smooth(times: &[f64], values: &[f64], window: f64) -> Vec<f64> {
    if times.len() != values.len() || values.is_empty() {
        return Vec::new();
    }
    gaussian_smooth(values, times, window)
}

/// Linear 1 Hz resampling of an altitude series. Empty when fewer than
/// `min_points` samples remain.
#[wasm_bindgen]
pub fn resample_1hz(times: &[f64], values: &[f64], min_points: usize) -> Vec<f64> {
    if times.len() != values.len() {
        return Vec::new();
    }
    let pts: Vec<RatedPoint> = times
        .iter()
        .zip(values)
        .map(|(&time, &alt)| RatedPoint {
            time,
            lat: 0.0,
            lon: 0.0,
            alt,
            speed: 0.0,
            course: 0.0,
            vert_rate: 0.0,
            accel: 0.0,
        })
        .collect();
    interpolate_1hz(&pts, min_points)
        .map(|out| out.iter().flat_map(|p| [p.time, p.alt]).collect())
        .unwrap_or_default()
}

fn points(flat: &[f64]) -> Vec<GeoPoint> {
    flat.chunks_exact(2).map(|c| GeoPoint::new(c[1], c[0])).collect()
}

fn flatten(poly: &GeoPolygon) -> Vec<f64> {
    poly.vertices().iter().flat_map(|p| [p.lon, p.lat]).collect()
}

/// Convex hull of the points, buffered outward by `buffer_nm`. Empty when
/// the points do not span an area.
#[wasm_bindgen]
pub fn hull_buffer(lonlat: &[f64], buffer_nm: f64) -> Vec<f64> {
    let Ok(hull) = convex_hull(&points(lonlat)) else {
        return Vec::new();
    };
    if buffer_nm <= 0.0 {
        return flatten(&hull);
    }
    buffer_polygon(&hull, buffer_nm).map(|p| flatten(&p)).unwrap_or_default()
}

/// Whether `(lon, lat)` lies inside the polygon ring.
#[wasm_bindgen]
pub fn contains(ring: &[f64], lon: f64, lat: f64) -> bool {
    GeoPolygon::new(points(ring)).is_ok_and(|poly| poly.contains(GeoPoint::new(lat, lon)))
}
