//! SRTM3 and GLOBE elevation rasters.
//!
//! SRTM3 `.hgt` tiles are 1201x1201 big-endian `i16` grids covering one
//! degree, row 0 on the northern edge, named by their south-west corner.
//! GLOBE tiles `a10g`..`p10g` are 10800-column little-endian grids at 30
//! arc-seconds whose samples sit at cell centers.

use std::collections::HashMap;
use std::sync::Arc;

use super::{GeoError, GeoPoint, FEET_PER_METER};

pub const SRTM_VOID: i16 = -32768;
/// GLOBE marks ocean with -500; such samples read as sea level.
pub const GLOBE_OCEAN: i16 = -500;

const SRTM3_SIZE: usize = 1201;
const SRTM3_PER_DEGREE: f64 = 1200.0;
const GLOBE_PER_DEGREE: f64 = 120.0;
const GLOBE_COLS: usize = 10800;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DemSource {
    Srtm3,
    Globe,
}

impl DemSource {
    pub fn resolution_arcsec(self) -> u32 {
        match self {
            DemSource::Srtm3 => 3,
            DemSource::Globe => 30,
        }
    }
}

/// Grid registration: latitude of row 0 nodes, longitude of column 0 nodes,
/// nodes per degree, and grid shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemLayout {
    pub north: f64,
    pub west: f64,
    pub per_degree: f64,
    pub rows: usize,
    pub cols: usize,
}

impl DemLayout {
    pub fn srtm3(sw: GeoPoint) -> Self {
        DemLayout {
            north: sw.lat + 1.0,
            west: sw.lon,
            per_degree: SRTM3_PER_DEGREE,
            rows: SRTM3_SIZE,
            cols: SRTM3_SIZE,
        }
    }

    fn south(&self) -> f64 {
        self.north - (self.rows - 1) as f64 / self.per_degree
    }

    fn east(&self) -> f64 {
        self.west + (self.cols - 1) as f64 / self.per_degree
    }
}

/// Published GLOBE tile layout for the tile whose south-west corner is `sw`.
pub fn globe_tile_layout(sw: GeoPoint) -> Option<DemLayout> {
    let rows = match sw.lat as i32 {
        -90 | 50 => 4800,
        -50 | 0 => 6000,
        _ => return None,
    };
    if sw.lat.fract() != 0.0 || !matches!(sw.lon as i32, -180 | -90 | 0 | 90) || sw.lon.fract() != 0.0 {
        return None;
    }
    let half = 0.5 / GLOBE_PER_DEGREE;
    Some(DemLayout {
        north: sw.lat + rows as f64 / GLOBE_PER_DEGREE - half,
        west: sw.lon + half,
        per_degree: GLOBE_PER_DEGREE,
        rows,
        cols: GLOBE_COLS,
    })
}

/// `a10g`..`p10g` file name of the GLOBE tile holding `p`.
pub fn globe_tile_name(p: GeoPoint) -> Option<(&'static str, GeoPoint)> {
    const NAMES: [&str; 16] = [
        "a10g", "b10g", "c10g", "d10g", "e10g", "f10g", "g10g", "h10g", "i10g", "j10g", "k10g", "l10g",
        "m10g", "n10g", "o10g", "p10g",
    ];
    if !p.is_valid() {
        return None;
    }
    let (row, lat0) = match p.lat {
        l if l >= 50.0 => (0, 50.0),
        l if l >= 0.0 => (1, 0.0),
        l if l >= -50.0 => (2, -50.0),
        _ => (3, -90.0),
    };
    let col = (((p.lon + 180.0) / 90.0).floor() as usize).min(3);
    Some((NAMES[row * 4 + col], GeoPoint::new(lat0, -180.0 + 90.0 * col as f64)))
}

/// `N42W072`-style name of the SRTM tile whose south-west corner is given.
pub fn srtm_tile_name(sw_lat: i32, sw_lon: i32) -> String {
    format!(
        "{}{:02}{}{:03}",
        if sw_lat < 0 { 'S' } else { 'N' },
        sw_lat.unsigned_abs(),
        if sw_lon < 0 { 'W' } else { 'E' },
        sw_lon.unsigned_abs()
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemTile {
    source: DemSource,
    layout: DemLayout,
    samples: Vec<i16>,
}

/// Decodes a tile with its published layout: SRTM3 tiles by their south-west
/// corner, GLOBE tiles by the corner of their lettered extent.
pub fn load_dem_tile(bytes: &[u8], source: DemSource, sw: GeoPoint) -> Result<DemTile, GeoError> {
    let layout = match source {
        DemSource::Srtm3 => DemLayout::srtm3(sw),
        DemSource::Globe => globe_tile_layout(sw).ok_or_else(|| {
            GeoError::CorruptTile(format!("({}, {}) is not a GLOBE tile corner", sw.lat, sw.lon))
        })?,
    };
    DemTile::decode(bytes, source, layout)
}

impl DemTile {
    /// Decodes raw samples with an explicit layout.
    pub fn decode(bytes: &[u8], source: DemSource, layout: DemLayout) -> Result<Self, GeoError> {
        let expected = layout.rows * layout.cols * 2;
        if bytes.len() != expected {
            return Err(GeoError::CorruptTile(format!(
                "{source:?} tile has {} bytes, expected {expected}",
                bytes.len()
            )));
        }
        let samples = bytes
            .chunks_exact(2)
            .map(|c| match source {
                DemSource::Srtm3 => i16::from_be_bytes([c[0], c[1]]),
                DemSource::Globe => i16::from_le_bytes([c[0], c[1]]),
            })
            .collect();
        Ok(DemTile { source, layout, samples })
    }

    /// Builds a tile from already-decoded row-major samples.
    pub fn from_samples(source: DemSource, layout: DemLayout, samples: Vec<i16>) -> Result<Self, GeoError> {
        if samples.len() != layout.rows * layout.cols || layout.rows < 2 || layout.cols < 2 {
            return Err(GeoError::CorruptTile(format!(
                "{} samples for a {}x{} grid",
                samples.len(),
                layout.rows,
                layout.cols
            )));
        }
        Ok(DemTile { source, layout, samples })
    }

    /// Encodes samples in the source's on-disk byte order.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.samples.len() * 2);
        for s in &self.samples {
            match self.source {
                DemSource::Srtm3 => out.extend_from_slice(&s.to_be_bytes()),
                DemSource::Globe => out.extend_from_slice(&s.to_le_bytes()),
            }
        }
        out
    }

    pub fn source(&self) -> DemSource {
        self.source
    }

    pub fn layout(&self) -> DemLayout {
        self.layout
    }

    pub fn rows(&self) -> usize {
        self.layout.rows
    }

    pub fn cols(&self) -> usize {
        self.layout.cols
    }

    pub fn raw(&self, row: usize, col: usize) -> Option<i16> {
        (row < self.layout.rows && col < self.layout.cols).then(|| self.samples[row * self.layout.cols + col])
    }

    /// Elevation in meters at a node; `None` for void samples.
    pub fn sample(&self, row: usize, col: usize) -> Option<f64> {
        match (self.source, self.raw(row, col)?) {
            (DemSource::Srtm3, SRTM_VOID) => None,
            (DemSource::Globe, GLOBE_OCEAN) => Some(0.0),
            (_, v) => Some(f64::from(v)),
        }
    }

    /// Geographic position of a grid node.
    pub fn node(&self, row: usize, col: usize) -> GeoPoint {
        GeoPoint::new(
            self.layout.north - row as f64 / self.layout.per_degree,
            self.layout.west + col as f64 / self.layout.per_degree,
        )
    }

    /// True when `p` lies in the tile's extent. GLOBE extents include the
    /// half-cell margin around the outer nodes.
    pub fn covers(&self, p: GeoPoint) -> bool {
        let m = match self.source {
            DemSource::Srtm3 => 0.0,
            DemSource::Globe => 0.5 / self.layout.per_degree,
        };
        p.lat <= self.layout.north + m
            && p.lat >= self.layout.south() - m
            && p.lon >= self.layout.west - m
            && p.lon <= self.layout.east() + m
    }

    /// Bilinear interpolation in meters. Void corners are replaced by the
    /// mean of the non-void corners; an all-void cell yields `None`.
    pub fn interpolate_m(&self, p: GeoPoint) -> Option<f64> {
        let l = &self.layout;
        let snap = |x: f64| {
            let r = x.round();
            if (x - r).abs() < 1e-9 {
                r
            } else {
                x
            }
        };
        let fr = snap((l.north - p.lat) * l.per_degree).clamp(0.0, (l.rows - 1) as f64);
        let fc = snap((p.lon - l.west) * l.per_degree).clamp(0.0, (l.cols - 1) as f64);
        let r0 = (fr.floor() as usize).min(l.rows - 2);
        let c0 = (fc.floor() as usize).min(l.cols - 2);
        let tr = fr - r0 as f64;
        let tc = fc - c0 as f64;

        let corners = [
            self.sample(r0, c0),
            self.sample(r0, c0 + 1),
            self.sample(r0 + 1, c0),
            self.sample(r0 + 1, c0 + 1),
        ];
        let valid: Vec<f64> = corners.iter().flatten().copied().collect();
        if valid.is_empty() {
            return None;
        }
        let fill = if valid.len() < 4 { valid.iter().sum::<f64>() / valid.len() as f64 } else { 0.0 };
        let [v00, v01, v10, v11] = corners.map(|c| c.unwrap_or(fill));
        let weights = [(1.0 - tr) * (1.0 - tc), (1.0 - tr) * tc, tr * (1.0 - tc), tr * tc];
        // Terms with zero weight are skipped so node queries return the node exactly.
        Some(
            [v00, v01, v10, v11]
                .iter()
                .zip(weights)
                .filter(|(_, w)| *w != 0.0)
                .map(|(v, w)| v * w)
                .sum(),
        )
    }
}

/// Supplies tiles covering a point.
pub trait TileProvider {
    fn srtm(&self, sw_lat: i32, sw_lon: i32) -> Result<Option<Arc<DemTile>>, GeoError>;
    fn globe(&self, p: GeoPoint) -> Result<Option<Arc<DemTile>>, GeoError>;
}

/// In-memory tile set.
#[derive(Debug, Clone, Default)]
pub struct TileSet {
    srtm: HashMap<(i32, i32), Arc<DemTile>>,
    globe: Vec<Arc<DemTile>>,
}

impl TileSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, tile: DemTile) {
        match tile.source {
            DemSource::Srtm3 => {
                let key = (tile.layout.south().round() as i32, tile.layout.west.round() as i32);
                self.srtm.insert(key, Arc::new(tile));
            }
            DemSource::Globe => self.globe.push(Arc::new(tile)),
        }
    }
}

impl TileProvider for TileSet {
    fn srtm(&self, sw_lat: i32, sw_lon: i32) -> Result<Option<Arc<DemTile>>, GeoError> {
        Ok(self.srtm.get(&(sw_lat, sw_lon)).cloned())
    }

    fn globe(&self, p: GeoPoint) -> Result<Option<Arc<DemTile>>, GeoError> {
        Ok(self.globe.iter().find(|t| t.covers(p)).cloned())
    }
}

/// Terrain elevation in feet MSL, preferring SRTM3 where available.
pub fn elevation_at<P: TileProvider + ?Sized>(p: GeoPoint, tiles: &P) -> Result<(f64, DemSource), GeoError> {
    let missing = || GeoError::MissingTerrain { lat: p.lat, lon: p.lon };
    // A point on a tile boundary belongs to several SRTM tiles; try each.
    let lat_keys = srtm_keys(p.lat);
    let lon_keys = srtm_keys(p.lon);
    for &la in &lat_keys {
        for &lo in &lon_keys {
            if let Some(t) = tiles.srtm(la, lo)? {
                if let Some(m) = t.interpolate_m(p) {
                    return Ok((m * FEET_PER_METER, DemSource::Srtm3));
                }
            }
        }
    }
    if let Some(t) = tiles.globe(p)? {
        if let Some(m) = t.interpolate_m(p) {
            return Ok((m * FEET_PER_METER, DemSource::Globe));
        }
    }
    Err(missing())
}

fn srtm_keys(x: f64) -> Vec<i32> {
    let f = x.floor() as i32;
    if x.fract() == 0.0 {
        vec![f, f - 1]
    } else {
        vec![f]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(source: DemSource, samples: Vec<i16>, rows: usize, cols: usize) -> DemTile {
        let layout = DemLayout { north: 1.0, west: 0.0, per_degree: 1.0, rows, cols };
        DemTile::from_samples(source, layout, samples).unwrap()
    }

    #[test]
    fn constant_srtm_tile() {
        let bytes: Vec<u8> = std::iter::repeat_n(100i16.to_be_bytes(), SRTM3_SIZE * SRTM3_SIZE).flatten().collect();
        let t = load_dem_tile(&bytes, DemSource::Srtm3, GeoPoint::new(42.0, -72.0)).unwrap();
        for (r, c) in [(0, 0), (600, 600), (1200, 1200), (17, 1100)] {
            assert_eq!(t.sample(r, c), Some(100.0));
        }
        assert_eq!(t.interpolate_m(GeoPoint::new(42.5, -71.5)), Some(100.0));
    }

    #[test]
    fn gradient_tile_corner_value() {
        let mut samples = vec![0i16; SRTM3_SIZE * SRTM3_SIZE];
        for r in 0..SRTM3_SIZE {
            for c in 0..SRTM3_SIZE {
                samples[r * SRTM3_SIZE + c] = (r + 2 * c) as i16 + 7;
            }
        }
        let t = DemTile::from_samples(DemSource::Srtm3, DemLayout::srtm3(GeoPoint::new(10.0, 20.0)), samples).unwrap();
        let back = load_dem_tile(&t.encode(), DemSource::Srtm3, GeoPoint::new(10.0, 20.0)).unwrap();
        assert_eq!(back.raw(0, 0), Some(7));
        assert_eq!(back.node(0, 0), GeoPoint::new(11.0, 20.0));
        assert_eq!(back.raw(1200, 1200), Some(1200 + 2400 + 7));
    }

    #[test]
    fn truncated_tile_is_corrupt() {
        let bytes = vec![0u8; SRTM3_SIZE * SRTM3_SIZE * 2 - 1];
        assert!(matches!(
            load_dem_tile(&bytes, DemSource::Srtm3, GeoPoint::new(0.0, 0.0)),
            Err(GeoError::CorruptTile(_))
        ));
        assert!(load_dem_tile(&[], DemSource::Globe, GeoPoint::new(3.0, 0.0)).is_err());
    }

    #[test]
    fn cell_center_is_closed_form_mean() {
        // Corners 0,0 on the north row and 100,100 on the south row.
        let t = small(DemSource::Srtm3, vec![0, 0, 100, 100], 2, 2);
        let m = t.interpolate_m(GeoPoint::new(0.5, 0.5)).unwrap();
        assert_eq!(m, 50.0);
        assert!((m * FEET_PER_METER - 164.041_994_750_656_17).abs() < 1e-9);
    }

    #[test]
    fn void_corner_uses_mean_of_others() {
        let t = small(DemSource::Srtm3, vec![SRTM_VOID, 30, 60, 90], 2, 2);
        // Void replaced by 60, the mean of 30, 60, 90.
        assert_eq!(t.interpolate_m(GeoPoint::new(0.5, 0.5)), Some(60.0));
        let all_void = small(DemSource::Srtm3, vec![SRTM_VOID; 4], 2, 2);
        assert_eq!(all_void.interpolate_m(GeoPoint::new(0.5, 0.5)), None);
    }

    #[test]
    fn globe_ocean_reads_sea_level() {
        let t = small(DemSource::Globe, vec![GLOBE_OCEAN, GLOBE_OCEAN, 200, 200], 2, 2);
        assert_eq!(t.sample(0, 0), Some(0.0));
        assert_eq!(t.interpolate_m(GeoPoint::new(0.5, 0.5)), Some(100.0));
    }

    #[test]
    fn globe_layouts() {
        let a = globe_tile_layout(GeoPoint::new(50.0, -180.0)).unwrap();
        assert_eq!((a.rows, a.cols), (4800, 10800));
        let e = globe_tile_layout(GeoPoint::new(0.0, -180.0)).unwrap();
        assert_eq!(e.rows, 6000);
        assert!(globe_tile_layout(GeoPoint::new(10.0, 0.0)).is_none());
        assert_eq!(globe_tile_name(GeoPoint::new(42.0, -71.0)).unwrap().0, "f10g");
        assert_eq!(globe_tile_name(GeoPoint::new(60.0, -150.0)).unwrap().0, "a10g");
        assert_eq!(globe_tile_name(GeoPoint::new(-60.0, 170.0)).unwrap().0, "p10g");
    }

    #[test]
    fn srtm_names() {
        assert_eq!(srtm_tile_name(42, -72), "N42W072");
        assert_eq!(srtm_tile_name(-1, 5), "S01E005");
    }

    #[test]
    fn srtm_preferred_over_globe() {
        let mut set = TileSet::new();
        let s = DemTile::from_samples(
            DemSource::Srtm3,
            DemLayout::srtm3(GeoPoint::new(0.0, 0.0)),
            vec![10; SRTM3_SIZE * SRTM3_SIZE],
        )
        .unwrap();
        set.insert(s);
        let g = DemTile::from_samples(
            DemSource::Globe,
            DemLayout { north: 2.0, west: -1.0, per_degree: 1.0, rows: 4, cols: 4 },
            vec![500; 16],
        )
        .unwrap();
        set.insert(g);
        let (_, src) = elevation_at(GeoPoint::new(0.5, 0.5), &set).unwrap();
        assert_eq!(src, DemSource::Srtm3);
        let (ft, src) = elevation_at(GeoPoint::new(-0.5, -0.5), &set).unwrap();
        assert_eq!(src, DemSource::Globe);
        assert_eq!(ft, 500.0 * FEET_PER_METER);
        assert!(matches!(
            elevation_at(GeoPoint::new(30.0, 30.0), &set),
            Err(GeoError::MissingTerrain { .. })
        ));
    }
}
