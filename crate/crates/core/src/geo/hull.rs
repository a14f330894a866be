use super::{destination, GeoError, GeoPoint, GeoPolygon};

fn cross(o: GeoPoint, a: GeoPoint, b: GeoPoint) -> f64 {
    (a.lon - o.lon) * (b.lat - o.lat) - (a.lat - o.lat) * (b.lon - o.lon)
}

/// Convex hull in the lat/lon plane (monotone chain). Collinear boundary
/// points are not kept as vertices. The ring starts at the lowest-longitude
/// (then lowest-latitude) point and runs counterclockwise.
pub fn convex_hull(points: &[GeoPoint]) -> Result<GeoPolygon, GeoError> {
    let mut pts: Vec<GeoPoint> = points.to_vec();
    if pts.iter().any(|p| !p.lat.is_finite() || !p.lon.is_finite()) {
        return Err(GeoError::Degenerate("non-finite coordinate".into()));
    }
    pts.sort_by(|a, b| a.lon.total_cmp(&b.lon).then(a.lat.total_cmp(&b.lat)));
    pts.dedup();
    if pts.len() < 3 {
        return Err(GeoError::Degenerate(format!("hull needs 3 non-collinear points, got {}", pts.len())));
    }

    let mut lower: Vec<GeoPoint> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<GeoPoint> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() < 3 {
        return Err(GeoError::Degenerate("all points are collinear".into()));
    }
    GeoPolygon::new_unchecked(lower)
}

/// Ratio cap on the miter offset at sharp vertices.
const MITER_LIMIT: f64 = 4.0;

/// Grows a convex polygon by `distance_nm`. Each vertex moves outward along
/// the bisector of its two edge normals, by the miter length that keeps both
/// incident edges `distance_nm` away (capped at [`MITER_LIMIT`] times the
/// distance), travelling on the great circle of that bearing.
pub fn buffer_polygon(poly: &GeoPolygon, distance_nm: f64) -> Result<GeoPolygon, GeoError> {
    if !poly.is_convex() {
        return Err(GeoError::Unsupported("buffering requires a convex polygon".into()));
    }
    if !(distance_nm >= 0.0) || !distance_nm.is_finite() {
        return Err(GeoError::Unsupported(format!("buffer distance {distance_nm}")));
    }
    if distance_nm == 0.0 {
        return Ok(poly.clone());
    }
    let v = poly.vertices();
    let n = v.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let prev = v[(i + n - 1) % n];
        let cur = v[i];
        let next = v[(i + 1) % n];
        let n1 = outward_normal(prev, cur, cur.lat);
        let n2 = outward_normal(cur, next, cur.lat);
        let (bx, by) = (n1.0 + n2.0, n1.1 + n2.1);
        let blen = (bx * bx + by * by).sqrt();
        let (bx, by) = if blen < 1e-12 { n2 } else { (bx / blen, by / blen) };
        let cos_half = (bx * n1.0 + by * n1.1).max(1.0 / MITER_LIMIT);
        let bearing = bx.atan2(by).to_degrees();
        out.push(destination(cur, bearing, distance_nm / cos_half));
    }
    GeoPolygon::new_unchecked(out)
}

/// Unit outward normal (east, north) of the CCW edge `a -> b`, in a local
/// plane scaled by cos(latitude) at `ref_lat`.
fn outward_normal(a: GeoPoint, b: GeoPoint, ref_lat: f64) -> (f64, f64) {
    let k = ref_lat.to_radians().cos();
    let dx = (b.lon - a.lon) * k;
    let dy = b.lat - a.lat;
    let len = (dx * dx + dy * dy).sqrt();
    (dy / len, -dx / len)
}
