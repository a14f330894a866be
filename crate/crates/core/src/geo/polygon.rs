use super::{GeoError, GeoPoint};

/// Simple polygon stored as a counterclockwise ring without the repeated
/// closing vertex. Longitudes are unwrapped so consecutive vertices never
/// differ by more than 180 degrees, which lets rings cross the antimeridian.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoPolygon {
    vertices: Vec<GeoPoint>,
    min: GeoPoint,
    max: GeoPoint,
}

fn cross(o: GeoPoint, a: GeoPoint, b: GeoPoint) -> f64 {
    (a.lon - o.lon) * (b.lat - o.lat) - (a.lat - o.lat) * (b.lon - o.lon)
}

fn on_segment(p: GeoPoint, a: GeoPoint, b: GeoPoint) -> bool {
    let len = ((b.lon - a.lon).powi(2) + (b.lat - a.lat).powi(2)).sqrt();
    let eps = 1e-12 * (1.0 + len);
    cross(a, b, p).abs() <= eps * len.max(1e-300)
        && p.lon >= a.lon.min(b.lon) - eps
        && p.lon <= a.lon.max(b.lon) + eps
        && p.lat >= a.lat.min(b.lat) - eps
        && p.lat <= a.lat.max(b.lat) + eps
}

fn segments_intersect(a: GeoPoint, b: GeoPoint, c: GeoPoint, d: GeoPoint) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(a, c, d))
        || (d2 == 0.0 && on_segment(b, c, d))
        || (d3 == 0.0 && on_segment(c, a, b))
        || (d4 == 0.0 && on_segment(d, a, b))
}

impl GeoPolygon {
    /// Builds a polygon from a ring in either orientation; a repeated closing
    /// vertex is dropped. Fails on fewer than three distinct vertices, zero
    /// area, or self-intersection.
    pub fn new(ring: Vec<GeoPoint>) -> Result<Self, GeoError> {
        let poly = Self::new_unchecked(ring)?;
        if let Some((i, j)) = poly.first_self_intersection() {
            return Err(GeoError::Degenerate(format!("ring edges {i} and {j} intersect")));
        }
        Ok(poly)
    }

    /// Like [`GeoPolygon::new`] without the O(n²) simplicity check, for large
    /// trusted rings such as coastline data.
    pub fn new_unchecked(mut ring: Vec<GeoPoint>) -> Result<Self, GeoError> {
        ring.dedup_by(|a, b| a == b);
        if ring.len() > 1 && ring.first() == ring.last() {
            ring.pop();
        }
        if ring.len() < 3 {
            return Err(GeoError::Degenerate(format!("ring has {} distinct vertices", ring.len())));
        }
        if ring.iter().any(|p| !p.lat.is_finite() || !p.lon.is_finite()) {
            return Err(GeoError::Degenerate("non-finite coordinate".into()));
        }
        for i in 1..ring.len() {
            let prev = ring[i - 1].lon;
            let mut lon = ring[i].lon;
            while lon - prev > 180.0 {
                lon -= 360.0;
            }
            while lon - prev < -180.0 {
                lon += 360.0;
            }
            ring[i].lon = lon;
        }
        let area = signed_area(&ring);
        if area == 0.0 {
            return Err(GeoError::Degenerate("ring has zero area".into()));
        }
        if area < 0.0 {
            ring.reverse();
        }
        let mut min = GeoPoint::new(f64::INFINITY, f64::INFINITY);
        let mut max = GeoPoint::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &ring {
            min.lat = min.lat.min(p.lat);
            min.lon = min.lon.min(p.lon);
            max.lat = max.lat.max(p.lat);
            max.lon = max.lon.max(p.lon);
        }
        Ok(GeoPolygon { vertices: ring, min, max })
    }

    pub fn vertices(&self) -> &[GeoPoint] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Area in square degrees of the plate-carrée ring.
    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn bounds(&self) -> (GeoPoint, GeoPoint) {
        (self.min, self.max)
    }

    pub fn edges(&self) -> impl Iterator<Item = (GeoPoint, GeoPoint)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn is_convex(&self) -> bool {
        let v = &self.vertices;
        let n = v.len();
        (0..n).all(|i| cross(v[i], v[(i + 1) % n], v[(i + 2) % n]) >= 0.0)
    }

    fn first_self_intersection(&self) -> Option<(usize, usize)> {
        let v = &self.vertices;
        let n = v.len();
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                if segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// Winding-number containment; points on the boundary count as inside.
    pub fn contains(&self, p: GeoPoint) -> bool {
        [0.0, 360.0, -360.0].into_iter().any(|shift| {
            let q = GeoPoint::new(p.lat, p.lon + shift);
            q.lat >= self.min.lat
                && q.lat <= self.max.lat
                && q.lon >= self.min.lon
                && q.lon <= self.max.lon
                && self.contains_planar(q)
        })
    }

    fn contains_planar(&self, p: GeoPoint) -> bool {
        let mut winding = 0i32;
        for (a, b) in self.edges() {
            if on_segment(p, a, b) {
                return true;
            }
            if a.lat <= p.lat {
                if b.lat > p.lat && cross(a, b, p) > 0.0 {
                    winding += 1;
                }
            } else if b.lat <= p.lat && cross(a, b, p) < 0.0 {
                winding -= 1;
            }
        }
        winding != 0
    }
}

fn signed_area(ring: &[GeoPoint]) -> f64 {
    let n = ring.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let (a, b) = (ring[i], ring[(i + 1) % n]);
            a.lon * b.lat - b.lon * a.lat
        })
        .sum();
    twice / 2.0
}

pub fn point_in_polygon(p: GeoPoint, poly: &GeoPolygon) -> bool {
    poly.contains(p)
}

/// Outer ring with optional holes.
#[derive(Debug, Clone, PartialEq)]
pub struct Shape {
    pub outer: GeoPolygon,
    pub holes: Vec<GeoPolygon>,
}

impl Shape {
    pub fn contains(&self, p: GeoPoint) -> bool {
        self.outer.contains(p) && !self.holes.iter().any(|h| h.contains(p) && !on_ring(h, p))
    }
}

fn on_ring(poly: &GeoPolygon, p: GeoPoint) -> bool {
    poly.edges().any(|(a, b)| on_segment(p, a, b))
}

/// Land masses used for the ocean test.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LandPolygons {
    shapes: Vec<Shape>,
}

impl LandPolygons {
    pub fn new(shapes: Vec<Shape>) -> Self {
        LandPolygons { shapes }
    }

    pub fn from_polygons(polys: Vec<GeoPolygon>) -> Self {
        LandPolygons { shapes: polys.into_iter().map(|outer| Shape { outer, holes: vec![] }).collect() }
    }

    pub fn shapes(&self) -> &[Shape] {
        &self.shapes
    }

    pub fn is_empty(&self) -> bool {
        self.shapes.is_empty()
    }

    pub fn contains(&self, p: GeoPoint) -> bool {
        self.shapes.iter().any(|s| s.contains(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> GeoPolygon {
        GeoPolygon::new(vec![
            GeoPoint::new(0.0, 0.0),
            GeoPoint::new(0.0, 1.0),
            GeoPoint::new(1.0, 1.0),
            GeoPoint::new(1.0, 0.0),
        ])
        .unwrap()
    }

    #[test]
    fn square_containment() {
        let sq = unit_square();
        assert!(point_in_polygon(GeoPoint::new(0.5, 0.5), &sq));
        assert!(!point_in_polygon(GeoPoint::new(2.0, 2.0), &sq));
        assert!(point_in_polygon(GeoPoint::new(0.0, 0.5), &sq));
        assert!(point_in_polygon(GeoPoint::new(1.0, 1.0), &sq));
        assert!(!point_in_polygon(GeoPoint::new(-0.5, -179.0), &sq));
    }

    #[test]
    fn orientation_normalized_to_ccw() {
        let sq = unit_square();
        assert!(sq.area() > 0.0);
        assert!((sq.area() - 1.0).abs() < 1e-15);
        assert!(sq.is_convex());
    }

    #[test]
    fn rejects_degenerate_rings() {
        assert!(GeoPolygon::new(vec![GeoPoint::new(0.0, 0.0), GeoPoint::new(1.0, 1.0)]).is_err());
        let line = vec![GeoPoint::new(0.0, 0.0), GeoPoint::new(1.0, 1.0), GeoPoint::new(2.0, 2.0)];
        assert!(GeoPolygon::new(line).is_err());
        let bowtie = vec![
            GeoPoint::new(0.0, 0.0),
            GeoPoint::new(1.0, 1.0),
            GeoPoint::new(1.0, 0.0),
            GeoPoint::new(0.0, 1.0),
        ];
        assert!(matches!(GeoPolygon::new(bowtie), Err(GeoError::Degenerate(_))));
    }

    #[test]
    fn closing_vertex_is_dropped() {
        let mut ring = unit_square().vertices().to_vec();
        ring.push(ring[0]);
        assert_eq!(GeoPolygon::new(ring).unwrap().len(), 4);
    }

    #[test]
    fn antimeridian_ring() {
        let poly = GeoPolygon::new(vec![
            GeoPoint::new(10.0, 179.0),
            GeoPoint::new(10.0, -179.0),
            GeoPoint::new(12.0, -179.0),
            GeoPoint::new(12.0, 179.0),
        ])
        .unwrap();
        assert!(poly.contains(GeoPoint::new(11.0, 179.5)));
        assert!(poly.contains(GeoPoint::new(11.0, -179.5)));
        assert!(poly.contains(GeoPoint::new(11.0, 180.0)));
        assert!(!poly.contains(GeoPoint::new(11.0, 178.0)));
        assert!(!poly.contains(GeoPoint::new(11.0, 0.0)));
    }

    #[test]
    fn nonconvex_and_holes() {
        let l = GeoPolygon::new(vec![
            GeoPoint::new(0.0, 0.0),
            GeoPoint::new(0.0, 2.0),
            GeoPoint::new(1.0, 2.0),
            GeoPoint::new(1.0, 1.0),
            GeoPoint::new(2.0, 1.0),
            GeoPoint::new(2.0, 0.0),
        ])
        .unwrap();
        assert!(!l.is_convex());
        assert!(l.contains(GeoPoint::new(1.5, 0.5)));
        assert!(!l.contains(GeoPoint::new(1.5, 1.5)));

        let outer = GeoPolygon::new(vec![
            GeoPoint::new(0.0, 0.0),
            GeoPoint::new(0.0, 4.0),
            GeoPoint::new(4.0, 4.0),
            GeoPoint::new(4.0, 0.0),
        ])
        .unwrap();
        let hole = GeoPolygon::new(vec![
            GeoPoint::new(1.0, 1.0),
            GeoPoint::new(1.0, 2.0),
            GeoPoint::new(2.0, 2.0),
            GeoPoint::new(2.0, 1.0),
        ])
        .unwrap();
        let land = LandPolygons::new(vec![Shape { outer, holes: vec![hole] }]);
        assert!(land.contains(GeoPoint::new(3.0, 3.0)));
        assert!(!land.contains(GeoPoint::new(1.5, 1.5)));
        assert!(land.contains(GeoPoint::new(1.0, 1.5)));
    }
}
