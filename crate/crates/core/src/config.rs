//! Pipeline configuration: flat `key = value` text.
//!
//! `#` starts a comment line. `include = <file>` splices another file in
//! place (relative to the including file); later keys override earlier ones.
//! Relative paths are resolved against the directory of the file that sets
//! them. Every path setting can be overridden by an environment variable
//! named `AEROCORPUS_<KEY>` in upper case, e.g. `AEROCORPUS_RAW_ROOT`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::registry::AircraftClass;
use crate::runner::Strategy;
use crate::stats::DistributionMode;
use crate::tracks::OutlierParams;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Syntax { path: PathBuf, line: usize, message: String },
    #[error("include cycle through {0}")]
    IncludeCycle(PathBuf),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Path settings, in serialization order.
pub const PATH_KEYS: [&str; 8] = [
    "raw_root",
    "organized_root",
    "archive_root",
    "processed_root",
    "stats_root",
    "report_root",
    "terrain_root",
    "registry_root",
];

const FILE_KEYS: [&str; 4] = ["polygon", "land_polygons", "airspace", "bins"];

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub raw_root: PathBuf,
    pub organized_root: PathBuf,
    pub archive_root: PathBuf,
    pub processed_root: PathBuf,
    pub stats_root: PathBuf,
    pub report_root: PathBuf,
    pub terrain_root: PathBuf,
    pub registry_root: PathBuf,
    /// Region of interest (GeoJSON polygon).
    pub polygon: PathBuf,
    /// Land polygons for the ocean test; without them all points are land.
    pub land_polygons: Option<PathBuf>,
    pub airspace: Option<PathBuf>,
    pub bins: Option<PathBuf>,
    pub years: Vec<i32>,
    pub workers: usize,
    pub strategy: Strategy,
    pub distribution: DistributionMode,
    pub outliers: OutlierParams,
}

fn syntax(path: &Path, line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Syntax { path: path.to_path_buf(), line, message: message.into() }
}

/// A raw value with the directory used to resolve it if it is a path.
#[derive(Debug, Clone)]
struct Entry {
    value: String,
    base: PathBuf,
    path: PathBuf,
    line: usize,
}

fn read_entries(file: &Path, stack: &mut Vec<PathBuf>, out: &mut BTreeMap<String, Entry>) -> Result<(), ConfigError> {
    let canon = file.canonicalize().map_err(|source| ConfigError::Io { path: file.to_path_buf(), source })?;
    if stack.contains(&canon) {
        return Err(ConfigError::IncludeCycle(canon));
    }
    stack.push(canon.clone());
    let text = std::fs::read_to_string(&canon).map_err(|source| ConfigError::Io { path: file.to_path_buf(), source })?;
    let base = canon.parent().map(Path::to_path_buf).unwrap_or_default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| syntax(file, i + 1, "expected key = value"))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(syntax(file, i + 1, "empty key"));
        }
        if k == "include" {
            read_entries(&base.join(v), stack, out)?;
        } else {
            out.insert(k.to_string(), Entry { value: v.to_string(), base: base.clone(), path: file.to_path_buf(), line: i + 1 });
        }
    }
    stack.pop();
    Ok(())
}

fn env_key(key: &str) -> String {
    format!("AEROCORPUS_{}", key.to_ascii_uppercase())
}

impl PipelineConfig {
    /// Loads, applies environment overrides and validates.
    pub fn load(file: &Path) -> Result<Self, ConfigError> {
        Self::load_with_env(file, |k| std::env::var(k).ok())
    }

    pub fn load_with_env(file: &Path, env: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        read_entries(file, &mut Vec::new(), &mut entries)?;
        let cwd = std::env::current_dir().unwrap_or_default();
        for key in PATH_KEYS.iter().chain(FILE_KEYS.iter()) {
            if let Some(v) = env(&env_key(key)) {
                entries.insert(
                    key.to_string(),
                    Entry { value: v, base: cwd.clone(), path: PathBuf::from(env_key(key)), line: 0 },
                );
            }
        }
        let cfg = Self::from_entries(entries)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses text with relative paths resolved against `base`, without
    /// includes or environment overrides. Not validated.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let origin = PathBuf::from("<text>");
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| syntax(&origin, i + 1, "expected key = value"))?;
            if k.trim() == "include" {
                return Err(syntax(&origin, i + 1, "include needs a file"));
            }
            entries.insert(
                k.trim().to_string(),
                Entry { value: v.trim().to_string(), base: base.to_path_buf(), path: origin.clone(), line: i + 1 },
            );
        }
        Self::from_entries(entries)
    }

    fn from_entries(mut e: BTreeMap<String, Entry>) -> Result<Self, ConfigError> {
        let mut take = |k: &str| e.remove(k);
        let path_of = |en: Entry| en.base.join(en.value);
        let req = |k: &str, taken: Option<Entry>| {
            taken.map(path_of).ok_or_else(|| ConfigError::Invalid(format!("missing required key {k}")))
        };
        let raw_root = req("raw_root", take("raw_root"))?;
        let organized_root = req("organized_root", take("organized_root"))?;
        let archive_root = req("archive_root", take("archive_root"))?;
        let processed_root = req("processed_root", take("processed_root"))?;
        let stats_root = req("stats_root", take("stats_root"))?;
        let report_root = req("report_root", take("report_root"))?;
        let terrain_root = req("terrain_root", take("terrain_root"))?;
        let registry_root = req("registry_root", take("registry_root"))?;
        let polygon = req("polygon", take("polygon"))?;
        let land_polygons = take("land_polygons").map(path_of);
        let airspace = take("airspace").map(path_of);
        let bins = take("bins").map(path_of);

        fn num<T: std::str::FromStr>(en: &Entry, key: &str) -> Result<T, ConfigError> {
            en.value
                .parse()
                .map_err(|_| syntax(&en.path, en.line, format!("{key}: cannot parse {:?}", en.value)))
        }
        fn flag(en: &Entry, key: &str) -> Result<bool, ConfigError> {
            match en.value.as_str() {
                "true" | "yes" | "on" | "1" => Ok(true),
                "false" | "no" | "off" | "0" => Ok(false),
                _ => Err(syntax(&en.path, en.line, format!("{key}: expected true or false"))),
            }
        }

        let years = match take("years") {
            Some(en) => en
                .value
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.trim().parse().map_err(|_| syntax(&en.path, en.line, format!("bad year {s:?}"))))
                .collect::<Result<Vec<i32>, _>>()?,
            None => Vec::new(),
        };
        let workers = match take("workers") {
            Some(en) => num(&en, "workers")?,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        let strategy = match take("strategy") {
            Some(en) => en.value.parse().map_err(|m: String| syntax(&en.path, en.line, m))?,
            None => Strategy::default(),
        };
        let distribution = match take("distribution") {
            Some(en) => match en.value.as_str() {
                "presence" => DistributionMode::Presence,
                "observation-share" => DistributionMode::ObservationShare,
                other => return Err(syntax(&en.path, en.line, format!("unknown distribution mode {other:?}"))),
            },
            None => DistributionMode::default(),
        };

        let mut o = OutlierParams::default();
        if let Some(en) = take("mad_threshold") {
            o.mad_threshold = num(&en, "mad_threshold")?;
        }
        if let Some(en) = take("zero_mad_floor_ft") {
            o.zero_mad_floor = num(&en, "zero_mad_floor_ft")?;
        }
        if let Some(en) = take("smooth_window_s") {
            o.smooth_window = num(&en, "smooth_window_s")?;
        }
        if let Some(en) = take("sigma_fraction") {
            o.sigma_fraction = num(&en, "sigma_fraction")?;
        }
        if let Some(en) = take("max_gap_s") {
            o.max_gap = num(&en, "max_gap_s")?;
        }
        if let Some(en) = take("min_points") {
            o.min_points = num(&en, "min_points")?;
        }
        if let Some(en) = take("smooth_altitude") {
            o.smooth.altitude = flag(&en, "smooth_altitude")?;
        }
        if let Some(en) = take("smooth_speed") {
            o.smooth.speed = flag(&en, "smooth_speed")?;
        }
        if let Some(en) = take("smooth_vertical_rate") {
            o.smooth.vertical_rate = flag(&en, "smooth_vertical_rate")?;
        }
        for class in AircraftClass::ALL {
            let key = format!("speed_ceiling_kt.{}", class.name());
            if let Some(en) = take(&key) {
                o.speed_ceilings.insert(class, num(&en, &key)?);
            }
        }

        if let Some((k, en)) = e.into_iter().next() {
            return Err(syntax(&en.path, en.line, format!("unknown key {k:?}")));
        }
        Ok(PipelineConfig {
            raw_root,
            organized_root,
            archive_root,
            processed_root,
            stats_root,
            report_root,
            terrain_root,
            registry_root,
            polygon,
            land_polygons,
            airspace,
            bins,
            years,
            workers,
            strategy,
            distribution,
            outliers: o,
        })
    }

    pub fn paths(&self) -> [(&'static str, &Path); 8] {
        [
            ("raw_root", &self.raw_root),
            ("organized_root", &self.organized_root),
            ("archive_root", &self.archive_root),
            ("processed_root", &self.processed_root),
            ("stats_root", &self.stats_root),
            ("report_root", &self.report_root),
            ("terrain_root", &self.terrain_root),
            ("registry_root", &self.registry_root),
        ]
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let paths = self.paths();
        for (i, (ka, a)) in paths.iter().enumerate() {
            for (kb, b) in &paths[i + 1..] {
                if a == b {
                    return Err(ConfigError::Invalid(format!("{ka} and {kb} are the same path {}", a.display())));
                }
            }
        }
        if self.years.is_empty() {
            return Err(ConfigError::Invalid("years must list at least one year".into()));
        }
        if self.workers == 0 {
            return Err(ConfigError::Invalid("workers must be at least 1".into()));
        }
        self.outliers.validate().map_err(ConfigError::Invalid)
    }

    /// Canonical text: fixed key order, absolute paths, every setting
    /// explicit. Parsing the result gives back an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, p) in self.paths() {
            let _ = writeln!(s, "{k} = {}", p.display());
        }
        let _ = writeln!(s, "polygon = {}", self.polygon.display());
        for (k, p) in [("land_polygons", &self.land_polygons), ("airspace", &self.airspace), ("bins", &self.bins)] {
            if let Some(p) = p {
                let _ = writeln!(s, "{k} = {}", p.display());
            }
        }
        let years: Vec<String> = self.years.iter().map(i32::to_string).collect();
        let _ = writeln!(s, "years = {}", years.join(","));
        let _ = writeln!(s, "workers = {}", self.workers);
        let _ = writeln!(s, "strategy = {}", self.strategy);
        let mode = match self.distribution {
            DistributionMode::Presence => "presence",
            DistributionMode::ObservationShare => "observation-share",
        };
        let _ = writeln!(s, "distribution = {mode}");
        let o = &self.outliers;
        let _ = writeln!(s, "mad_threshold = {}", o.mad_threshold);
        let _ = writeln!(s, "zero_mad_floor_ft = {}", o.zero_mad_floor);
        let _ = writeln!(s, "smooth_window_s = {}", o.smooth_window);
        let _ = writeln!(s, "sigma_fraction = {}", o.sigma_fraction);
        let _ = writeln!(s, "max_gap_s = {}", o.max_gap);
        let _ = writeln!(s, "min_points = {}", o.min_points);
        let _ = writeln!(s, "smooth_altitude = {}", o.smooth.altitude);
        let _ = writeln!(s, "smooth_speed = {}", o.smooth.speed);
        let _ = writeln!(s, "smooth_vertical_rate = {}", o.smooth.vertical_rate);
        for (c, v) in &o.speed_ceilings {
            let _ = writeln!(s, "speed_ceiling_kt.{} = {v}", c.name());
        }
        s
    }
}
