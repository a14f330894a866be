//! Airspace volumes: horizontal polygons with an altitude band in feet MSL.
//!
//! Volumes are read from GeoJSON polygon features whose properties carry
//! `class` (`B`, `C` or `D`), `floor_ft` and `ceiling_ft`.

use serde_json::Value;

use crate::geo::geojson::read_polygon_features;
use crate::geo::{GeoError, GeoPoint, GeoPolygon};

use super::AirspaceClass;

#[derive(Debug, Clone)]
pub struct AirspaceVolume {
    pub class: AirspaceClass,
    pub polygon: GeoPolygon,
    pub floor_ft: f64,
    pub ceiling_ft: f64,
}

impl AirspaceVolume {
    /// Band edges are inclusive.
    pub fn contains(&self, p: GeoPoint, alt_msl: f64) -> bool {
        alt_msl >= self.floor_ft && alt_msl <= self.ceiling_ft && self.polygon.contains(p)
    }
}

/// Volumes ordered from smallest to largest horizontal area, so the first
/// match is the innermost.
#[derive(Debug, Clone, Default)]
pub struct AirspaceVolumes {
    volumes: Vec<AirspaceVolume>,
}

impl AirspaceVolumes {
    pub fn new(mut volumes: Vec<AirspaceVolume>) -> Self {
        volumes.sort_by(|a, b| a.polygon.area().total_cmp(&b.polygon.area()));
        AirspaceVolumes { volumes }
    }

    pub fn from_geojson(text: &str) -> Result<Self, GeoError> {
        let mut volumes = Vec::new();
        for f in read_polygon_features(text)? {
            let prop = |k: &str| f.properties.get(k);
            let class = prop("class")
                .and_then(Value::as_str)
                .ok_or_else(|| GeoError::Format("airspace feature without class".into()))?
                .parse::<AirspaceClass>()
                .map_err(GeoError::Format)?;
            let num = |k: &str| {
                prop(k)
                    .and_then(Value::as_f64)
                    .ok_or_else(|| GeoError::Format(format!("airspace feature without numeric {k}")))
            };
            let (floor_ft, ceiling_ft) = (num("floor_ft")?, num("ceiling_ft")?);
            if ceiling_ft < floor_ft {
                return Err(GeoError::Format(format!("ceiling {ceiling_ft} below floor {floor_ft}")));
            }
            let outer = f.rings.into_iter().next().ok_or_else(|| GeoError::Format("empty polygon".into()))?;
            volumes.push(AirspaceVolume { class, polygon: GeoPolygon::new_unchecked(outer)?, floor_ft, ceiling_ft });
        }
        Ok(Self::new(volumes))
    }

    pub fn len(&self) -> usize {
        self.volumes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.volumes.is_empty()
    }

    pub fn volumes(&self) -> &[AirspaceVolume] {
        &self.volumes
    }
}

pub fn classify_airspace(p: GeoPoint, alt_msl: f64, volumes: &AirspaceVolumes) -> AirspaceClass {
    volumes
        .volumes
        .iter()
        .find(|v| v.contains(p, alt_msl))
        .map_or(AirspaceClass::Other, |v| v.class)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = r#"{"type":"FeatureCollection","features":[
      {"type":"Feature","properties":{"class":"B","floor_ft":0,"ceiling_ft":10000},
       "geometry":{"type":"Polygon","coordinates":[[[-71.2,42.2],[-70.8,42.2],[-70.8,42.6],[-71.2,42.6],[-71.2,42.2]]]}},
      {"type":"Feature","properties":{"class":"D","floor_ft":0,"ceiling_ft":2500},
       "geometry":{"type":"Polygon","coordinates":[[[-71.05,42.35],[-70.95,42.35],[-70.95,42.45],[-71.05,42.45],[-71.05,42.35]]]}}
    ]}"#;

    #[test]
    fn classification() {
        let v = AirspaceVolumes::from_geojson(FIXTURE).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(classify_airspace(GeoPoint::new(42.4, -71.0), 1000.0, &AirspaceVolumes::default()), AirspaceClass::Other);
        assert_eq!(classify_airspace(GeoPoint::new(42.25, -71.1), 5000.0, &v), AirspaceClass::B);
        assert_eq!(classify_airspace(GeoPoint::new(42.25, -71.1), 12000.0, &v), AirspaceClass::Other);
        assert_eq!(classify_airspace(GeoPoint::new(42.4, -71.0), 2000.0, &v), AirspaceClass::D);
        assert_eq!(classify_airspace(GeoPoint::new(42.4, -71.0), 3000.0, &v), AirspaceClass::B);
        assert_eq!(classify_airspace(GeoPoint::new(42.25, -71.1), 10000.0, &v), AirspaceClass::B);
    }

    #[test]
    fn rejects_bad_properties() {
        let bad = FIXTURE.replace("\"class\":\"D\"", "\"class\":\"Q\"");
        assert!(AirspaceVolumes::from_geojson(&bad).is_err());
        let inverted = FIXTURE.replace("\"ceiling_ft\":2500", "\"ceiling_ft\":-5");
        assert!(AirspaceVolumes::from_geojson(&inverted).is_err());
    }
}
