//! Minimal GeoJSON reading and writing for polygon inputs and exports.
//! Coordinates are `[lon, lat]`.

use serde_json::{json, Map, Value};

use super::{GeoError, GeoPoint, GeoPolygon, LandPolygons, Shape};

/// One polygon (outer ring plus holes) with the properties of its feature.
#[derive(Debug, Clone)]
pub struct PolygonFeature {
    pub rings: Vec<Vec<GeoPoint>>,
    pub properties: Map<String, Value>,
}

fn fmt_err(msg: impl Into<String>) -> GeoError {
    GeoError::Format(msg.into())
}

fn ring(v: &Value) -> Result<Vec<GeoPoint>, GeoError> {
    v.as_array()
        .ok_or_else(|| fmt_err("ring is not an array"))?
        .iter()
        .map(|c| {
            let c = c.as_array().ok_or_else(|| fmt_err("position is not an array"))?;
            match (c.first().and_then(Value::as_f64), c.get(1).and_then(Value::as_f64)) {
                (Some(lon), Some(lat)) => Ok(GeoPoint::new(lat, lon)),
                _ => Err(fmt_err("position needs numeric [lon, lat]")),
            }
        })
        .collect()
}

fn polygon_rings(coords: &Value) -> Result<Vec<Vec<GeoPoint>>, GeoError> {
    coords
        .as_array()
        .ok_or_else(|| fmt_err("polygon coordinates are not an array"))?
        .iter()
        .map(ring)
        .collect()
}

fn collect(v: &Value, props: &Map<String, Value>, out: &mut Vec<PolygonFeature>) -> Result<(), GeoError> {
    let kind = v.get("type").and_then(Value::as_str).ok_or_else(|| fmt_err("object without type"))?;
    match kind {
        "FeatureCollection" => {
            for f in v.get("features").and_then(Value::as_array).ok_or_else(|| fmt_err("features"))? {
                collect(f, props, out)?;
            }
        }
        "Feature" => {
            let p = v.get("properties").and_then(Value::as_object).cloned().unwrap_or_default();
            if let Some(g) = v.get("geometry").filter(|g| !g.is_null()) {
                collect(g, &p, out)?;
            }
        }
        "GeometryCollection" => {
            for g in v.get("geometries").and_then(Value::as_array).ok_or_else(|| fmt_err("geometries"))? {
                collect(g, props, out)?;
            }
        }
        "Polygon" => out.push(PolygonFeature {
            rings: polygon_rings(v.get("coordinates").ok_or_else(|| fmt_err("coordinates"))?)?,
            properties: props.clone(),
        }),
        "MultiPolygon" => {
            for poly in v
                .get("coordinates")
                .and_then(Value::as_array)
                .ok_or_else(|| fmt_err("coordinates"))?
            {
                out.push(PolygonFeature { rings: polygon_rings(poly)?, properties: props.clone() });
            }
        }
        // Points and lines carry no area.
        "Point" | "MultiPoint" | "LineString" | "MultiLineString" => {}
        other => return Err(fmt_err(format!("unsupported GeoJSON type {other:?}"))),
    }
    Ok(())
}

pub fn read_polygon_features(text: &str) -> Result<Vec<PolygonFeature>, GeoError> {
    let v: Value = serde_json::from_str(text).map_err(|e| fmt_err(e.to_string()))?;
    let mut out = Vec::new();
    collect(&v, &Map::new(), &mut out)?;
    Ok(out)
}

/// Every position in the document, whatever its geometry type.
pub fn read_points(text: &str) -> Result<Vec<GeoPoint>, GeoError> {
    fn walk(v: &Value, out: &mut Vec<GeoPoint>) {
        match v {
            Value::Array(a) if a.len() >= 2 && a.iter().all(Value::is_number) => {
                out.push(GeoPoint::new(a[1].as_f64().unwrap_or(f64::NAN), a[0].as_f64().unwrap_or(f64::NAN)));
            }
            Value::Array(a) => a.iter().for_each(|x| walk(x, out)),
            Value::Object(o) => {
                for (k, x) in o {
                    if k != "properties" && k != "bbox" {
                        walk(x, out);
                    }
                }
            }
            _ => {}
        }
    }
    let v: Value = serde_json::from_str(text).map_err(|e| fmt_err(e.to_string()))?;
    let mut out = Vec::new();
    walk(&v, &mut out);
    Ok(out)
}

/// Reads the first polygon's outer ring; the simplicity check is applied.
pub fn read_polygon(text: &str) -> Result<GeoPolygon, GeoError> {
    let f = read_polygon_features(text)?;
    let first = f.into_iter().next().ok_or_else(|| fmt_err("no polygon in document"))?;
    GeoPolygon::new(first.rings.into_iter().next().ok_or_else(|| fmt_err("polygon without rings"))?)
}

/// Reads all polygons as land shapes (outer ring plus holes).
pub fn read_land(text: &str) -> Result<LandPolygons, GeoError> {
    let mut shapes = Vec::new();
    for f in read_polygon_features(text)? {
        let mut rings = f.rings.into_iter();
        let Some(outer) = rings.next() else { continue };
        shapes.push(Shape {
            outer: GeoPolygon::new_unchecked(outer)?,
            holes: rings.map(GeoPolygon::new_unchecked).collect::<Result<_, _>>()?,
        });
    }
    Ok(LandPolygons::new(shapes))
}

/// Closed-ring GeoJSON Feature for plotting a polygon.
pub fn polygon_to_geojson(poly: &GeoPolygon, properties: Map<String, Value>) -> String {
    let mut ring: Vec<Value> = poly.vertices().iter().map(|p| json!([p.lon, p.lat])).collect();
    ring.push(ring[0].clone());
    let v = json!({
        "type": "Feature",
        "properties": Value::Object(properties),
        "geometry": { "type": "Polygon", "coordinates": [ring] },
    });
    serde_json::to_string_pretty(&v).expect("json serialization")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_feature_collection_with_holes() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"class":"B","floor_ft":0,"ceiling_ft":10000},
             "geometry":{"type":"Polygon","coordinates":[[[0,0],[4,0],[4,4],[0,4],[0,0]],[[1,1],[2,1],[2,2],[1,2],[1,1]]]}},
            {"type":"Feature","properties":{},"geometry":{"type":"MultiPolygon","coordinates":[[[[10,10],[11,10],[11,11],[10,10]]]]}}
        ]}"#;
        let f = read_polygon_features(text).unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f[0].rings.len(), 2);
        assert_eq!(f[0].properties["class"], "B");
        let land = read_land(text).unwrap();
        assert!(land.contains(GeoPoint::new(3.0, 3.0)));
        assert!(!land.contains(GeoPoint::new(1.5, 1.5)));
        assert!(land.contains(GeoPoint::new(10.2, 10.5)));
    }

    #[test]
    fn export_roundtrip() {
        let p = GeoPolygon::new(vec![GeoPoint::new(0.0, 0.0), GeoPoint::new(0.0, 2.0), GeoPoint::new(1.0, 1.0)]).unwrap();
        let text = polygon_to_geojson(&p, Map::new());
        assert_eq!(read_polygon(&text).unwrap(), p);
        assert_eq!(read_points(&text).unwrap().len(), 4);
    }

    #[test]
    fn bad_input() {
        assert!(read_polygon_features("not json").is_err());
        assert!(read_polygon_features(r#"{"type":"Blob"}"#).is_err());
        assert!(read_polygon(r#"{"type":"FeatureCollection","features":[]}"#).is_err());
    }
}
