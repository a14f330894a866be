use std::collections::HashMap;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use super::dem::globe_tile_name;
use super::{
    elevation_at, load_dem_tile, srtm_tile_name, DemSource, DemTile, GeoError, GeoPoint, LandPolygons,
    TileProvider,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElevationSource {
    Srtm3,
    Globe,
    Ocean,
}

impl From<DemSource> for ElevationSource {
    fn from(s: DemSource) -> Self {
        match s {
            DemSource::Srtm3 => ElevationSource::Srtm3,
            DemSource::Globe => ElevationSource::Globe,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElevationQueryResult {
    /// Feet above mean sea level.
    pub elevation: f64,
    pub source: ElevationSource,
}

pub fn is_over_ocean(p: GeoPoint, land: &LandPolygons) -> bool {
    !land.contains(p)
}

type Slot = Arc<OnceLock<Result<Option<Arc<DemTile>>, String>>>;

/// Lazily loads tiles from a terrain root:
///
/// ```text
/// <root>/srtm3/N42W072.hgt[.gz]
/// <root>/globe/f10g[.gz]
/// ```
///
/// Each tile is loaded at most once; concurrent requests for the same missing
/// tile wait for the single loader.
#[derive(Debug, Default)]
pub struct TerrainCache {
    root: PathBuf,
    slots: Mutex<HashMap<String, Slot>>,
}

impl TerrainCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        TerrainCache { root: root.into(), slots: Mutex::new(HashMap::new()) }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Number of tile files decoded so far.
    pub fn loaded(&self) -> usize {
        let slots = self.slots.lock().expect("terrain cache poisoned");
        slots.values().filter(|s| matches!(s.get(), Some(Ok(Some(_))))).count()
    }

    fn get(&self, key: String, load: impl FnOnce() -> Result<Option<DemTile>, GeoError>) -> Result<Option<Arc<DemTile>>, GeoError> {
        let slot = {
            let mut slots = self.slots.lock().expect("terrain cache poisoned");
            slots.entry(key).or_default().clone()
        };
        slot.get_or_init(|| load().map(|t| t.map(Arc::new)).map_err(|e| e.to_string()))
            .clone()
            .map_err(GeoError::CorruptTile)
    }
}

fn read_maybe_gz(base: &Path) -> Result<Option<Vec<u8>>, GeoError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| GeoError::Io { path, source }
    };
    if base.exists() {
        return std::fs::read(base).map(Some).map_err(io(base));
    }
    let gz = base.with_file_name(format!(
        "{}.gz",
        base.file_name().and_then(|n| n.to_str()).unwrap_or_default()
    ));
    if gz.exists() {
        let f = std::fs::File::open(&gz).map_err(io(&gz))?;
        let mut out = Vec::new();
        flate2::read::GzDecoder::new(f).read_to_end(&mut out).map_err(io(&gz))?;
        return Ok(Some(out));
    }
    Ok(None)
}

impl TileProvider for TerrainCache {
    fn srtm(&self, sw_lat: i32, sw_lon: i32) -> Result<Option<Arc<DemTile>>, GeoError> {
        let name = srtm_tile_name(sw_lat, sw_lon);
        let path = self.root.join("srtm3").join(format!("{name}.hgt"));
        self.get(format!("srtm3/{name}"), || {
            read_maybe_gz(&path)?
                .map(|b| load_dem_tile(&b, DemSource::Srtm3, GeoPoint::new(f64::from(sw_lat), f64::from(sw_lon))))
                .transpose()
        })
    }

    fn globe(&self, p: GeoPoint) -> Result<Option<Arc<DemTile>>, GeoError> {
        let Some((name, sw)) = globe_tile_name(p) else {
            return Ok(None);
        };
        let path = self.root.join("globe").join(name);
        self.get(format!("globe/{name}"), || {
            read_maybe_gz(&path)?.map(|b| load_dem_tile(&b, DemSource::Globe, sw)).transpose()
        })
    }
}

/// Ocean test followed by DEM interpolation. Without land polygons every
/// point is treated as land.
#[derive(Debug)]
pub struct Terrain<P> {
    pub land: Option<LandPolygons>,
    pub tiles: P,
}

impl<P: TileProvider> Terrain<P> {
    pub fn new(land: Option<LandPolygons>, tiles: P) -> Self {
        Terrain { land, tiles }
    }

    pub fn query(&self, p: GeoPoint) -> Result<ElevationQueryResult, GeoError> {
        if let Some(land) = &self.land {
            if is_over_ocean(p, land) {
                return Ok(ElevationQueryResult { elevation: 0.0, source: ElevationSource::Ocean });
            }
        }
        let (elevation, src) = elevation_at(p, &self.tiles)?;
        Ok(ElevationQueryResult { elevation, source: src.into() })
    }
}
