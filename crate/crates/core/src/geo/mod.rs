//! Geometry and terrain services.
//!
//! All polygon math runs in the plate-carrée plane (x = longitude,
//! y = latitude, degrees). Distances and buffers use a spherical earth.

mod dem;
pub mod geojson;
mod hull;
mod polygon;
mod terrain;

use std::path::PathBuf;

pub use dem::{
    elevation_at, globe_tile_layout, globe_tile_name, load_dem_tile, srtm_tile_name, DemLayout, DemSource, DemTile,
    TileProvider, TileSet, GLOBE_OCEAN, SRTM_VOID,
};
pub use hull::{buffer_polygon, convex_hull};
pub use polygon::{point_in_polygon, GeoPolygon, LandPolygons, Shape};
pub use terrain::{is_over_ocean, ElevationQueryResult, ElevationSource, Terrain, TerrainCache};

/// Mean earth radius in nautical miles.
pub const EARTH_RADIUS_NM: f64 = 3440.065;

pub const FEET_PER_METER: f64 = 1.0 / 0.3048;

#[derive(Debug, thiserror::Error)]
pub enum GeoError {
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("unsupported geometry: {0}")]
    Unsupported(String),
    #[error("corrupt terrain tile: {0}")]
    CorruptTile(String),
    #[error("no terrain covers ({lat:.6}, {lon:.6})")]
    MissingTerrain { lat: f64, lon: f64 },
    #[error("geo-interchange input: {0}")]
    Format(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub const fn new(lat: f64, lon: f64) -> Self {
        GeoPoint { lat, lon }
    }

    pub fn is_valid(&self) -> bool {
        (-90.0..=90.0).contains(&self.lat) && (-180.0..=180.0).contains(&self.lon)
    }
}

/// Great-circle distance in nautical miles (haversine).
pub fn distance_nm(a: GeoPoint, b: GeoPoint) -> f64 {
    let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
    let dp = p2 - p1;
    let dl = (b.lon - a.lon).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_NM * h.sqrt().min(1.0).asin()
}

/// Point reached by travelling `distance_nm` from `from` along the initial
/// great-circle `bearing_deg` (clockwise from north).
pub fn destination(from: GeoPoint, bearing_deg: f64, distance_nm: f64) -> GeoPoint {
    let d = distance_nm / EARTH_RADIUS_NM;
    let th = bearing_deg.to_radians();
    let p1 = from.lat.to_radians();
    let l1 = from.lon.to_radians();
    let p2 = (p1.sin() * d.cos() + p1.cos() * d.sin() * th.cos()).asin();
    let l2 = l1 + (th.sin() * d.sin() * p1.cos()).atan2(d.cos() - p1.sin() * p2.sin());
    GeoPoint { lat: p2.to_degrees(), lon: l2.to_degrees() }
}

/// Initial great-circle bearing from `a` to `b`, degrees in `[0, 360)`.
pub fn bearing_deg(a: GeoPoint, b: GeoPoint) -> f64 {
    let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
    let dl = (b.lon - a.lon).to_radians();
    let y = dl.sin() * p2.cos();
    let x = p1.cos() * p2.sin() - p1.sin() * p2.cos() * dl.cos();
    y.atan2(x).to_degrees().rem_euclid(360.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_degree_of_latitude_is_sixty_nm() {
        let d = distance_nm(GeoPoint::new(0.0, 0.0), GeoPoint::new(1.0, 0.0));
        assert!((d - 60.04).abs() < 0.01, "{d}");
    }

    #[test]
    fn destination_inverts_distance_and_bearing() {
        let a = GeoPoint::new(42.3, -71.0);
        let b = destination(a, 73.0, 120.0);
        assert!((distance_nm(a, b) - 120.0).abs() < 1e-6);
        assert!((bearing_deg(a, b) - 73.0).abs() < 1e-6);
    }
}
