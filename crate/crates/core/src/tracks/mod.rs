//! Refinement of organized observations into 1 Hz track segments.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::geo::{ElevationQueryResult, GeoError, GeoPoint, Terrain, TileProvider};
use crate::registry::{AircraftClass, Icao24};

pub mod airspace;
pub mod filters;
pub mod output;
pub mod pipeline;
pub mod segment;

pub use airspace::{classify_airspace, AirspaceVolume, AirspaceVolumes};
pub use filters::{gaussian_smooth, mad_outliers, mad_outliers_with_floor, median, numerical_gradient};
pub use pipeline::{process_archive, refine_track, OutputLayout, ProcessCounts, ProcessError, Refiner};
pub use segment::{dedupe_positions, interpolate_1hz, rate_outlier_filter, segment, Observation, RatedPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AirspaceClass {
    B,
    C,
    D,
    Other,
}

impl AirspaceClass {
    pub fn as_str(self) -> &'static str {
        match self {
            AirspaceClass::B => "B",
            AirspaceClass::C => "C",
            AirspaceClass::D => "D",
            AirspaceClass::Other => "Other",
        }
    }
}

impl fmt::Display for AirspaceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AirspaceClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "B" => Ok(AirspaceClass::B),
            "C" => Ok(AirspaceClass::C),
            "D" => Ok(AirspaceClass::D),
            "OTHER" => Ok(AirspaceClass::Other),
            _ => Err(format!("unknown airspace class {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    /// Whole unix seconds.
    pub time: i64,
    pub lat: f64,
    pub lon: f64,
    pub alt_msl: f64,
    /// `None` where terrain is unavailable.
    pub alt_agl: Option<f64>,
    pub speed: f64,
    pub course: f64,
    pub vert_rate: f64,
    pub accel: f64,
    pub airspace: AirspaceClass,
}

impl TrackPoint {
    pub fn point(&self) -> GeoPoint {
        GeoPoint::new(self.lat, self.lon)
    }

    /// Below the terrain surface; kept in the output but not trusted.
    pub fn low_confidence(&self) -> bool {
        self.alt_agl.is_some_and(|a| a < 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackSegment {
    pub icao24: Icao24,
    pub aircraft_class: AircraftClass,
    pub points: Vec<TrackPoint>,
}

/// Which channels the Gaussian filter is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmoothChannels {
    pub altitude: bool,
    pub speed: bool,
    pub vertical_rate: bool,
}

impl Default for SmoothChannels {
    fn default() -> Self {
        SmoothChannels { altitude: true, speed: true, vertical_rate: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutlierParams {
    /// Multiples of the scaled MAD.
    pub mad_threshold: f64,
    /// Feet; used when the MAD of a segment's altitudes is zero.
    pub zero_mad_floor: f64,
    /// Seconds.
    pub smooth_window: f64,
    /// Gaussian sigma as a fraction of the window.
    pub sigma_fraction: f64,
    pub smooth: SmoothChannels,
    /// Knots, for every class.
    pub speed_ceilings: BTreeMap<AircraftClass, f64>,
    /// Seconds.
    pub max_gap: f64,
    pub min_points: usize,
}

impl Default for OutlierParams {
    fn default() -> Self {
        let speed_ceilings = AircraftClass::ALL
            .iter()
            .map(|&c| {
                let kt = match c {
                    AircraftClass::FixedWingMultiEngine | AircraftClass::Unknown => 600.0,
                    AircraftClass::FixedWingSingleEngine => 400.0,
                    _ => 250.0,
                };
                (c, kt)
            })
            .collect();
        OutlierParams {
            mad_threshold: 1.5,
            zero_mad_floor: 25.0,
            smooth_window: 30.0,
            sigma_fraction: 0.2,
            smooth: SmoothChannels::default(),
            speed_ceilings,
            max_gap: 60.0,
            min_points: 10,
        }
    }
}

impl OutlierParams {
    pub fn speed_ceiling(&self, class: AircraftClass) -> f64 {
        self.speed_ceilings.get(&class).copied().unwrap_or(f64::INFINITY)
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("mad_threshold", self.mad_threshold),
            ("smooth_window", self.smooth_window),
            ("sigma_fraction", self.sigma_fraction),
            ("max_gap", self.max_gap),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.zero_mad_floor >= 0.0) {
            return Err("zero_mad_floor must be non-negative".into());
        }
        if self.min_points < 2 {
            return Err("min_points must be at least 2".into());
        }
        for c in AircraftClass::ALL {
            match self.speed_ceilings.get(&c) {
                Some(v) if *v > 0.0 => {}
                _ => return Err(format!("speed ceiling for {} missing or not positive", c.name())),
            }
        }
        Ok(())
    }
}

/// Terrain elevation in feet for AGL computation.
pub trait ElevationLookup {
    fn elevation(&self, p: GeoPoint) -> Result<ElevationQueryResult, GeoError>;
}

impl<P: TileProvider> ElevationLookup for Terrain<P> {
    fn elevation(&self, p: GeoPoint) -> Result<ElevationQueryResult, GeoError> {
        self.query(p)
    }
}

/// Sets `alt_agl` on every point. Points without terrain keep `None`.
/// Returns how many points had no terrain. Other errors propagate.
pub fn attach_agl<E: ElevationLookup + ?Sized>(points: &mut [TrackPoint], terrain: &E) -> Result<usize, GeoError> {
    let mut missing = 0;
    for p in points {
        match terrain.elevation(p.point()) {
            Ok(e) => p.alt_agl = Some(p.alt_msl - e.elevation),
            Err(GeoError::MissingTerrain { .. }) => {
                p.alt_agl = None;
                missing += 1;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(missing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{DemLayout, DemSource, DemTile, GeoPolygon, LandPolygons, TileSet, FEET_PER_METER};

    fn tp(lat: f64, lon: f64, alt: f64) -> TrackPoint {
        TrackPoint {
            time: 0,
            lat,
            lon,
            alt_msl: alt,
            alt_agl: None,
            speed: 0.0,
            course: 0.0,
            vert_rate: 0.0,
            accel: 0.0,
            airspace: AirspaceClass::Other,
        }
    }

    fn terrain(elev_m: i16) -> Terrain<TileSet> {
        let layout = DemLayout::srtm3(GeoPoint::new(42.0, -72.0));
        let tile = DemTile::from_samples(DemSource::Srtm3, layout, vec![elev_m; 1201 * 1201]).unwrap();
        let mut set = TileSet::new();
        set.insert(tile);
        let land = GeoPolygon::new(vec![
            GeoPoint::new(42.0, -72.0),
            GeoPoint::new(42.0, -71.0),
            GeoPoint::new(43.0, -71.0),
            GeoPoint::new(43.0, -72.0),
        ])
        .unwrap();
        Terrain::new(Some(LandPolygons::from_polygons(vec![land])), set)
    }

    #[test]
    fn defaults_are_valid() {
        let p = OutlierParams::default();
        p.validate().unwrap();
        assert_eq!(p.speed_ceiling(AircraftClass::Rotorcraft), 250.0);
        assert_eq!(p.speed_ceiling(AircraftClass::FixedWingMultiEngine), 600.0);
        assert_eq!(p.speed_ceiling(AircraftClass::FixedWingSingleEngine), 400.0);
        assert_eq!(p.speed_ceiling(AircraftClass::Balloon), 250.0);
        let mut bad = p.clone();
        bad.speed_ceilings.remove(&AircraftClass::Glider);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn agl_cases() {
        // 1000 ft of terrain = 304.8 m exactly.
        let t = terrain(305);
        let elev_ft = 305.0 * FEET_PER_METER;
        let mut pts = [tp(42.5, -71.5, 3500.0), tp(30.0, -60.0, 500.0), tp(42.5, -71.5, 900.0)];
        assert_eq!(attach_agl(&mut pts, &t).unwrap(), 0);
        assert!((pts[0].alt_agl.unwrap() - (3500.0 - elev_ft)).abs() < 1e-9);
        assert_eq!(pts[1].alt_agl, Some(500.0));
        assert!(pts[2].low_confidence());
        for p in &pts {
            let e = t.query(p.point()).unwrap().elevation;
            assert!((p.alt_msl - p.alt_agl.unwrap() - e).abs() < 1e-9);
        }
    }

    #[test]
    fn missing_terrain_is_counted() {
        let t = Terrain::new(None, TileSet::new());
        let mut pts = [tp(10.0, 10.0, 1000.0)];
        assert_eq!(attach_agl(&mut pts, &t).unwrap(), 1);
        assert_eq!(pts[0].alt_agl, None);
    }
}
