//! Hourly raw observation files: parsing, quality and geographic filtering,
//! conversion to U.S. aviation units, and per-aircraft organized output.

#[cfg(feature = "fetch")]
mod fetch;
mod organized;

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[cfg(feature = "fetch")]
pub use fetch::{fetch_day, FetchError, FetchOptions, FetchReport};
pub use organized::{organized_file_name, parse_organized_file_name, read_organized, write_organized_csv, ORGANIZED_HEADER};

use crate::geo::{GeoPoint, GeoPolygon};
use crate::hour::HourStamp;
use crate::registry::{partition_icao_ranges, Icao24, RegistryError, RegistryLookup, MAX_PER_DIR};

/// One knot in meters per second.
pub const KNOT_MPS: f64 = 1852.0 / 3600.0;
/// One foot in meters.
pub const FOOT_M: f64 = 0.3048;
/// Meters per second to feet per minute.
pub const MPS_TO_FPM: f64 = 60.0 / FOOT_M;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("hourly file schema: {0}")]
    Schema(String),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error("output {0} already exists")]
    Exists(PathBuf),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IngestError + '_ {
    move |source| IngestError::Io { path: path.to_path_buf(), source }
}

/// A raw state vector in the archive's metric units. Any field may be absent.
#[derive(Debug, Clone, PartialEq)]
pub struct RawObservation {
    pub time: i64,
    pub icao24: Icao24,
    pub lat: Option<f64>,
    pub lon: Option<f64>,
    /// m/s
    pub velocity: Option<f64>,
    /// degrees clockwise from north
    pub heading: Option<f64>,
    /// m/s
    pub vertical_rate: Option<f64>,
    /// m
    pub baro_altitude: Option<f64>,
    /// m
    pub geo_altitude: Option<f64>,
    pub on_ground: bool,
    pub last_position_update: Option<f64>,
}

/// A filtered observation in knots, feet and feet per minute.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub time: i64,
    pub icao24: Icao24,
    pub lat: f64,
    pub lon: f64,
    pub ground_speed: Option<f64>,
    /// degrees in `[0, 360)`
    pub track: Option<f64>,
    pub vertical_rate: Option<f64>,
    pub baro_alt: Option<f64>,
    pub geo_alt: Option<f64>,
    pub on_ground: bool,
    pub last_position_update: Option<f64>,
}

impl StateVector {
    /// Geometric altitude when present, barometric otherwise.
    pub fn altitude(&self) -> Option<f64> {
        self.geo_alt.or(self.baro_alt)
    }

    pub fn point(&self) -> GeoPoint {
        GeoPoint::new(self.lat, self.lon)
    }
}

/// Column names of the hourly input. Extra columns are ignored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HourSchema {
    pub time: String,
    pub icao24: String,
    pub lat: String,
    pub lon: String,
    pub velocity: String,
    pub heading: String,
    pub vertical_rate: String,
    pub baro_altitude: String,
    pub geo_altitude: String,
    pub on_ground: String,
    /// Optional column.
    pub last_position_update: String,
}

impl Default for HourSchema {
    fn default() -> Self {
        HourSchema {
            time: "time".into(),
            icao24: "icao24".into(),
            lat: "lat".into(),
            lon: "lon".into(),
            velocity: "velocity".into(),
            heading: "heading".into(),
            vertical_rate: "vertrate".into(),
            baro_altitude: "baroaltitude".into(),
            geo_altitude: "geoaltitude".into(),
            on_ground: "onground".into(),
            last_position_update: "lastposupdate".into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedHour {
    pub records: Vec<RawObservation>,
    pub malformed: usize,
}

/// Parses a plain or gzip-compressed hourly file.
pub fn parse_hour_file(bytes: &[u8]) -> Result<ParsedHour, IngestError> {
    parse_hour_file_with(bytes, &HourSchema::default())
}

pub fn parse_hour_file_with(bytes: &[u8], schema: &HourSchema) -> Result<ParsedHour, IngestError> {
    let inflated;
    let bytes = if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut v = Vec::new();
        flate2::read::MultiGzDecoder::new(bytes)
            .read_to_end(&mut v)
            .map_err(|e| IngestError::Schema(format!("gzip: {e}")))?;
        inflated = v;
        &inflated[..]
    } else {
        bytes
    };
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Ok(ParsedHour::default());
    }
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(bytes);
    let headers = rdr
        .byte_headers()
        .map_err(|e| IngestError::Schema(e.to_string()))?
        .clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| String::from_utf8_lossy(h).trim().eq_ignore_ascii_case(name))
    };
    let need = |name: &str| find(name).ok_or_else(|| IngestError::Schema(format!("missing column {name:?}")));
    let c_time = need(&schema.time)?;
    let c_icao = need(&schema.icao24)?;
    let c_lat = need(&schema.lat)?;
    let c_lon = need(&schema.lon)?;
    let c_vel = need(&schema.velocity)?;
    let c_head = need(&schema.heading)?;
    let c_vr = need(&schema.vertical_rate)?;
    let c_baro = need(&schema.baro_altitude)?;
    let c_geo = need(&schema.geo_altitude)?;
    let c_gnd = need(&schema.on_ground)?;
    let c_lpu = find(&schema.last_position_update);
    let ncols = headers.len();

    let mut out = ParsedHour::default();
    for rec in rdr.byte_records() {
        let Ok(rec) = rec else {
            out.malformed += 1;
            continue;
        };
        if rec.len() != ncols {
            out.malformed += 1;
            continue;
        }
        match parse_row(&rec, [c_time, c_icao, c_lat, c_lon, c_vel, c_head, c_vr, c_baro, c_geo, c_gnd], c_lpu) {
            Some(r) => out.records.push(r),
            None => out.malformed += 1,
        }
    }
    Ok(out)
}

fn text(rec: &csv::ByteRecord, i: usize) -> Option<&str> {
    std::str::from_utf8(rec.get(i)?).ok().map(str::trim)
}

/// Empty and NaN fields are absent; anything else must parse.
fn opt_f64(rec: &csv::ByteRecord, i: usize) -> Option<Option<f64>> {
    let s = text(rec, i)?;
    if s.is_empty() || s.eq_ignore_ascii_case("nan") || s.eq_ignore_ascii_case("null") {
        return Some(None);
    }
    let v: f64 = s.parse().ok()?;
    Some(v.is_finite().then_some(v))
}

fn parse_row(rec: &csv::ByteRecord, c: [usize; 10], lpu: Option<usize>) -> Option<RawObservation> {
    let time_s = text(rec, c[0])?;
    let time = time_s.parse::<i64>().ok().or_else(|| {
        let f: f64 = time_s.parse().ok()?;
        (f.is_finite() && f.fract() == 0.0).then_some(f as i64)
    })?;
    let icao24: Icao24 = text(rec, c[1])?.parse().ok()?;
    let on_ground = match text(rec, c[9])?.to_ascii_lowercase().as_str() {
        "true" | "1" | "t" => true,
        "false" | "0" | "f" | "" => false,
        _ => return None,
    };
    Some(RawObservation {
        time,
        icao24,
        lat: opt_f64(rec, c[2])?,
        lon: opt_f64(rec, c[3])?,
        velocity: opt_f64(rec, c[4])?,
        heading: opt_f64(rec, c[5])?,
        vertical_rate: opt_f64(rec, c[6])?,
        baro_altitude: opt_f64(rec, c[7])?,
        geo_altitude: opt_f64(rec, c[8])?,
        on_ground,
        last_position_update: match lpu {
            Some(i) => opt_f64(rec, i)?,
            None => None,
        },
    })
}

fn has_complete_position(r: &RawObservation) -> bool {
    let pos = matches!((r.lat, r.lon), (Some(lat), Some(lon)) if GeoPoint::new(lat, lon).is_valid());
    pos && (r.geo_altitude.is_some() || r.baro_altitude.is_some()) && r.time > 0
}

/// Drops observations without a complete position report: latitude and
/// longitude in range plus at least one altitude.
pub fn quality_filter(records: Vec<RawObservation>) -> (Vec<RawObservation>, usize) {
    let n = records.len();
    let kept: Vec<_> = records.into_iter().filter(has_complete_position).collect();
    let dropped = n - kept.len();
    (kept, dropped)
}

/// Collapses rows sharing `(icao24, time)`, keeping the one with the latest
/// position update. Output is ordered by address then time.
pub fn dedupe_records(records: Vec<RawObservation>) -> (Vec<RawObservation>, usize) {
    let n = records.len();
    let mut best: BTreeMap<(Icao24, i64), RawObservation> = BTreeMap::new();
    for r in records {
        let key = (r.icao24, r.time);
        match best.get(&key) {
            Some(cur) if cur.last_position_update.unwrap_or(f64::NEG_INFINITY)
                >= r.last_position_update.unwrap_or(f64::NEG_INFINITY) => {}
            _ => {
                best.insert(key, r);
            }
        }
    }
    let kept: Vec<_> = best.into_values().collect();
    let dropped = n - kept.len();
    (kept, dropped)
}

/// Converts a quality-filtered observation to knots, feet and feet per minute.
///
/// Panics if the position is missing; run [`quality_filter`] first.
pub fn convert_units(r: &RawObservation) -> StateVector {
    StateVector {
        time: r.time,
        icao24: r.icao24,
        lat: r.lat.expect("quality-filtered record has a latitude"),
        lon: r.lon.expect("quality-filtered record has a longitude"),
        ground_speed: r.velocity.map(|v| v / KNOT_MPS),
        track: r.heading.map(|h| h.rem_euclid(360.0)),
        vertical_rate: r.vertical_rate.map(|v| v * MPS_TO_FPM),
        baro_alt: r.baro_altitude.map(|a| a / FOOT_M),
        geo_alt: r.geo_altitude.map(|a| a / FOOT_M),
        on_ground: r.on_ground,
        last_position_update: r.last_position_update,
    }
}

pub fn geo_filter(records: Vec<StateVector>, polygon: &GeoPolygon) -> (Vec<StateVector>, usize) {
    let n = records.len();
    let kept: Vec<_> = records.into_iter().filter(|r| polygon.contains(r.point())).collect();
    let dropped = n - kept.len();
    (kept, dropped)
}

/// Per-hour accounting. `raw_count` counts parsed records; malformed rows are
/// tallied separately. Duplicates removed are part of `quality_dropped`.
#[derive(Debug, Clone, PartialEq)]
pub struct HourFileStats {
    pub hour: HourStamp,
    pub raw_count: usize,
    pub malformed: usize,
    pub quality_dropped: usize,
    pub duplicates: usize,
    pub geo_dropped: usize,
    pub organized_count: usize,
    pub files_written: usize,
    pub elapsed: f64,
}

impl HourFileStats {
    pub fn new(hour: HourStamp) -> Self {
        HourFileStats {
            hour,
            raw_count: 0,
            malformed: 0,
            quality_dropped: 0,
            duplicates: 0,
            geo_dropped: 0,
            organized_count: 0,
            files_written: 0,
            elapsed: 0.0,
        }
    }

    pub fn is_conserved(&self) -> bool {
        self.raw_count == self.quality_dropped + self.geo_dropped + self.organized_count
    }
}

/// Writes one file per aircraft under its hierarchy path:
/// `<root>/<year>/<class>/<seats|hour>/<range>/<YYYY-MM-DD>_<HH>_<ICAO24>.csv`.
///
/// Files are created exclusively. On any failure the files written by this
/// call are removed before the error is returned.
pub fn write_organized(
    records: &[StateVector],
    lookup: &RegistryLookup,
    hour: HourStamp,
    root: &Path,
) -> Result<(usize, usize), IngestError> {
    let mut by_aircraft: BTreeMap<Icao24, Vec<&StateVector>> = BTreeMap::new();
    for r in records {
        by_aircraft.entry(r.icao24).or_default().push(r);
    }
    let unknown: Vec<Icao24> = by_aircraft.keys().copied().filter(|a| lookup.get(*a).is_none()).collect();
    let unknown_ranges = partition_icao_ranges(&unknown, MAX_PER_DIR);

    let mut written: Vec<PathBuf> = Vec::new();
    let result = (|| {
        let mut count = 0;
        for (icao, mut recs) in by_aircraft {
            recs.sort_by_key(|r| r.time);
            let dir = root.join(lookup.path_for(icao, Some(hour), &unknown_ranges)?.to_path_buf());
            std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
            let path = dir.join(organized_file_name(hour, icao));
            let file = match std::fs::OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(f) => f,
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                    return Err(IngestError::Exists(path));
                }
                Err(e) => return Err(IngestError::Io { path, source: e }),
            };
            written.push(path.clone());
            let mut w = std::io::BufWriter::new(file);
            write_organized_csv(&mut w, recs.iter().copied()).map_err(io_err(&path))?;
            std::io::Write::flush(&mut w).map_err(io_err(&path))?;
            count += recs.len();
        }
        Ok(count)
    })();
    match result {
        Ok(count) => Ok((count, written.len())),
        Err(e) => {
            for p in &written {
                let _ = std::fs::remove_file(p);
            }
            Err(e)
        }
    }
}

/// Full organize step for one hourly file's bytes.
pub fn organize_hour(
    bytes: &[u8],
    hour: HourStamp,
    lookup: &RegistryLookup,
    polygon: &GeoPolygon,
    root: &Path,
) -> Result<HourFileStats, IngestError> {
    let start = Instant::now();
    let mut stats = HourFileStats::new(hour);
    let parsed = parse_hour_file(bytes)?;
    stats.raw_count = parsed.records.len();
    stats.malformed = parsed.malformed;
    let (kept, q) = quality_filter(parsed.records);
    let (kept, dup) = dedupe_records(kept);
    stats.duplicates = dup;
    stats.quality_dropped = q + dup;
    let converted: Vec<StateVector> = kept.iter().map(convert_units).collect();
    let (kept, g) = geo_filter(converted, polygon);
    stats.geo_dropped = g;
    let (organized, files) = write_organized(&kept, lookup, hour, root)?;
    stats.organized_count = organized;
    stats.files_written = files;
    stats.elapsed = start.elapsed().as_secs_f64();
    debug_assert!(stats.is_conserved());
    Ok(stats)
}

/// Hourly files under `input`, recursively, keyed by the hour stamp in their
/// file name. Files without a stamp are ignored. Sorted by hour then path.
pub fn find_hour_files(input: &Path) -> Result<Vec<(HourStamp, PathBuf)>, IngestError> {
    let mut out = Vec::new();
    for entry in walkdir::WalkDir::new(input).sort_by_file_name() {
        let entry = entry.map_err(|e| IngestError::Io {
            path: input.to_path_buf(),
            source: e.into_io_error().unwrap_or_else(|| std::io::Error::other("walk failed")),
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let name = entry.file_name().to_string_lossy();
        if !(name.ends_with(".csv") || name.ends_with(".csv.gz")) {
            continue;
        }
        if let Some(h) = HourStamp::find_in(&name) {
            out.push((h, entry.path().to_path_buf()));
        }
    }
    out.sort();
    Ok(out)
}
