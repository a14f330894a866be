//! National aircraft registries and the four-tier storage hierarchy.
//!
//! Registries are parsed per country and per year into a [`RegistryLookup`]
//! that maps an ICAO 24-bit address to an [`AircraftClass`] and seat count.
//! The lookup also owns the address-range partition that forms the bottom
//! tier of the `year/class/seats/range` hierarchy.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;

use crate::hour::HourStamp;

/// Default cap on member addresses per bottom-tier directory.
pub const MAX_PER_DIR: usize = 1000;

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("cannot read registry file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("registry configuration: {0}")]
    Config(String),
    #[error("registry input: {0}")]
    Input(String),
    #[error("unknown-aircraft path for {0} requires an hour stamp")]
    MissingHour(Icao24),
    #[error("address {0} is not covered by any range of its directory")]
    Uncovered(Icao24),
}

/// ICAO 24-bit transponder address. Valid values are `0x000001..=0xFFFFFE`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Icao24(u32);

impl Icao24 {
    pub const MIN: u32 = 0x00_0001;
    pub const MAX: u32 = 0xFF_FFFE;

    pub fn new(value: u32) -> Option<Self> {
        (Self::MIN..=Self::MAX).contains(&value).then_some(Self(value))
    }

    pub fn value(self) -> u32 {
        self.0
    }
}

impl fmt::Display for Icao24 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:06X}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid ICAO 24-bit address: {0:?}")]
pub struct ParseIcaoError(pub String);

impl FromStr for Icao24 {
    type Err = ParseIcaoError;

    /// Accepts 1-6 hex digits, case-insensitive, surrounding whitespace ignored.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.is_empty() || t.len() > 6 || !t.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(ParseIcaoError(s.to_string()));
        }
        let v = u32::from_str_radix(t, 16).map_err(|_| ParseIcaoError(s.to_string()))?;
        Icao24::new(v).ok_or_else(|| ParseIcaoError(s.to_string()))
    }
}

/// The twelve registry aircraft categories plus `Unknown` for unregistered
/// addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AircraftClass {
    FixedWingSingleEngine,
    FixedWingMultiEngine,
    Rotorcraft,
    Glider,
    Balloon,
    Airship,
    Gyroplane,
    WeightShiftControl,
    PoweredParachute,
    HybridLift,
    UnmannedOrOther,
    NonPoweredOther,
    Unknown,
}

impl AircraftClass {
    pub const KNOWN: [AircraftClass; 12] = [
        AircraftClass::FixedWingSingleEngine,
        AircraftClass::FixedWingMultiEngine,
        AircraftClass::Rotorcraft,
        AircraftClass::Glider,
        AircraftClass::Balloon,
        AircraftClass::Airship,
        AircraftClass::Gyroplane,
        AircraftClass::WeightShiftControl,
        AircraftClass::PoweredParachute,
        AircraftClass::HybridLift,
        AircraftClass::UnmannedOrOther,
        AircraftClass::NonPoweredOther,
    ];

    pub const ALL: [AircraftClass; 13] = [
        AircraftClass::FixedWingSingleEngine,
        AircraftClass::FixedWingMultiEngine,
        AircraftClass::Rotorcraft,
        AircraftClass::Glider,
        AircraftClass::Balloon,
        AircraftClass::Airship,
        AircraftClass::Gyroplane,
        AircraftClass::WeightShiftControl,
        AircraftClass::PoweredParachute,
        AircraftClass::HybridLift,
        AircraftClass::UnmannedOrOther,
        AircraftClass::NonPoweredOther,
        AircraftClass::Unknown,
    ];

    /// Directory name, also used in tables and config files.
    pub fn name(self) -> &'static str {
        match self {
            AircraftClass::FixedWingSingleEngine => "FixedWingSingleEngine",
            AircraftClass::FixedWingMultiEngine => "FixedWingMultiEngine",
            AircraftClass::Rotorcraft => "Rotorcraft",
            AircraftClass::Glider => "Glider",
            AircraftClass::Balloon => "Balloon",
            AircraftClass::Airship => "Airship",
            AircraftClass::Gyroplane => "Gyroplane",
            AircraftClass::WeightShiftControl => "WeightShiftControl",
            AircraftClass::PoweredParachute => "PoweredParachute",
            AircraftClass::HybridLift => "HybridLift",
            AircraftClass::UnmannedOrOther => "UnmannedOrOther",
            AircraftClass::NonPoweredOther => "NonPoweredOther",
            AircraftClass::Unknown => "Unknown",
        }
    }
}

impl fmt::Display for AircraftClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AircraftClass {
    type Err = RegistryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        AircraftClass::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(t))
            .ok_or_else(|| RegistryError::Config(format!("unknown aircraft class {t:?}")))
    }
}

/// Maps registry type strings (case-insensitive) to aircraft classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassMap {
    map: HashMap<String, AircraftClass>,
}

impl Default for ClassMap {
    /// FAA `TYPE AIRCRAFT` codes plus common English category names.
    fn default() -> Self {
        use AircraftClass::*;
        let pairs: &[(&str, AircraftClass)] = &[
            ("1", Glider),
            ("2", Balloon),
            ("3", Airship),
            ("4", FixedWingSingleEngine),
            ("5", FixedWingMultiEngine),
            ("6", Rotorcraft),
            ("7", WeightShiftControl),
            ("8", PoweredParachute),
            ("9", Gyroplane),
            ("H", HybridLift),
            ("O", UnmannedOrOther),
            ("Glider", Glider),
            ("Sailplane", Glider),
            ("Balloon", Balloon),
            ("Blimp/Dirigible", Airship),
            ("Airship", Airship),
            ("Fixed wing single engine", FixedWingSingleEngine),
            ("Fixed Wing Single-Engine", FixedWingSingleEngine),
            ("Aeroplane single engine", FixedWingSingleEngine),
            ("Fixed wing multi engine", FixedWingMultiEngine),
            ("Fixed Wing Multi-Engine", FixedWingMultiEngine),
            ("Aeroplane multi engine", FixedWingMultiEngine),
            ("Rotorcraft", Rotorcraft),
            ("Helicopter", Rotorcraft),
            ("Weight-shift-control", WeightShiftControl),
            ("Microlight", WeightShiftControl),
            ("Powered Parachute", PoweredParachute),
            ("Gyroplane", Gyroplane),
            ("Gyrocopter", Gyroplane),
            ("Hybrid Lift", HybridLift),
            ("Unmanned", UnmannedOrOther),
            ("Other", UnmannedOrOther),
            ("Kite", NonPoweredOther),
            ("Hang glider", NonPoweredOther),
            ("Non-powered other", NonPoweredOther),
        ];
        let mut map = HashMap::new();
        for (k, v) in pairs {
            map.insert(k.to_ascii_lowercase(), *v);
        }
        for c in AircraftClass::KNOWN {
            map.insert(c.name().to_ascii_lowercase(), c);
        }
        ClassMap { map }
    }
}

impl ClassMap {
    pub fn empty() -> Self {
        ClassMap { map: HashMap::new() }
    }

    pub fn insert(&mut self, key: &str, class: AircraftClass) {
        self.map.insert(key.trim().to_ascii_lowercase(), class);
    }

    /// Unmapped strings classify as `Unknown`.
    pub fn lookup(&self, raw: &str) -> AircraftClass {
        self.map
            .get(&raw.trim().to_ascii_lowercase())
            .copied()
            .unwrap_or(AircraftClass::Unknown)
    }

    /// Applies `key = ClassName` lines on top of the current map. `#` starts a
    /// comment.
    pub fn extend_from_config(&mut self, text: &str) -> Result<(), RegistryError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                RegistryError::Config(format!("class map line {}: expected key = Class", n + 1))
            })?;
            let class: AircraftClass = v.parse()?;
            self.insert(k, class);
        }
        Ok(())
    }
}

/// Seat-count directory of the third hierarchy tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SeatBin {
    Unknown,
    /// Inclusive range. `hi == None` is the open-ended top bin.
    Range { lo: u32, hi: Option<u32> },
}

impl SeatBin {
    pub fn label(&self) -> String {
        match self {
            SeatBin::Unknown => "Seats_Unknown".to_string(),
            SeatBin::Range { lo, hi: Some(hi) } => format!("Seats_{lo:03}_{hi:03}"),
            SeatBin::Range { lo, hi: None } => format!("Seats_{lo:03}_plus"),
        }
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, SeatBin::Unknown)
    }

    pub fn contains(&self, seats: Option<u32>) -> bool {
        match (self, seats) {
            (SeatBin::Unknown, None) => true,
            (SeatBin::Range { lo, hi }, Some(s)) => s >= *lo && hi.is_none_or(|h| s <= h),
            _ => false,
        }
    }
}

impl fmt::Display for SeatBin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Seat binning: fixed-width bins from 1 up to `max`, one open bin above it and
/// a dedicated unknown bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeatBinning {
    pub width: u32,
    pub max: u32,
}

impl Default for SeatBinning {
    fn default() -> Self {
        SeatBinning { width: 10, max: 200 }
    }
}

impl SeatBinning {
    pub fn bin(&self, seats: Option<u32>) -> SeatBin {
        match seats {
            None | Some(0) => SeatBin::Unknown,
            Some(s) if s > self.max => SeatBin::Range { lo: self.max + 1, hi: None },
            Some(s) => {
                let k = (s - 1) / self.width;
                SeatBin::Range { lo: k * self.width + 1, hi: Some((k + 1) * self.width) }
            }
        }
    }

    /// Every bin in ascending order, unknown first.
    pub fn all(&self) -> Vec<SeatBin> {
        let mut v = vec![SeatBin::Unknown];
        let mut lo = 1;
        while lo <= self.max {
            v.push(SeatBin::Range { lo, hi: Some((lo + self.width - 1).min(self.max)) });
            lo += self.width;
        }
        v.push(SeatBin::Range { lo: self.max + 1, hi: None });
        v
    }
}

/// Source registry. Declaration order is the duplicate-resolution precedence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Country {
    Us,
    Ca,
    Nl,
    Ie,
}

impl Country {
    pub const ALL: [Country; 4] = [Country::Us, Country::Ca, Country::Nl, Country::Ie];

    pub fn code(self) -> &'static str {
        match self {
            Country::Us => "US",
            Country::Ca => "CA",
            Country::Nl => "NL",
            Country::Ie => "IE",
        }
    }
}

impl FromStr for Country {
    type Err = RegistryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Country::ALL
            .into_iter()
            .find(|c| c.code().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| RegistryError::Config(format!("unsupported registry format {s:?}")))
    }
}

/// Column layout of one country's registry file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistrySchema {
    pub delimiter: u8,
    pub address: String,
    pub aircraft_type: String,
    pub seats: Option<String>,
    pub expiry: Option<String>,
    /// `chrono` format string for the expiry column.
    pub expiry_format: String,
}

impl RegistrySchema {
    pub fn builtin(country: Country) -> Self {
        let s = |d: u8, a: &str, t: &str, seats: &str, e: &str, f: &str| RegistrySchema {
            delimiter: d,
            address: a.into(),
            aircraft_type: t.into(),
            seats: Some(seats.into()),
            expiry: Some(e.into()),
            expiry_format: f.into(),
        };
        match country {
            Country::Us => s(b',', "MODE S CODE HEX", "TYPE AIRCRAFT", "NO-SEATS", "EXPIRATION DATE", "%Y%m%d"),
            Country::Ca => s(b',', "Mode S Hex", "Aircraft Category", "Number of Seats", "Expiry Date", "%Y/%m/%d"),
            Country::Nl => s(b';', "ICAO_HEX", "CATEGORY", "SEATS", "EXPIRY", "%d-%m-%Y"),
            Country::Ie => s(b',', "ICAO 24 Bit Hex", "Aircraft Type", "Seats", "Expiry", "%d/%m/%Y"),
        }
    }

    /// Reads `key = value` lines. Recognized keys: `delimiter`, `address`,
    /// `type`, `seats`, `expiry`, `expiry_format`. Missing keys keep `base`.
    pub fn from_config(text: &str, base: RegistrySchema) -> Result<Self, RegistryError> {
        let mut s = base;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| RegistryError::Config(format!("schema line {}: expected key = value", n + 1)))?;
            let v = v.trim().to_string();
            match k.trim() {
                "delimiter" => {
                    s.delimiter = match v.as_str() {
                        "tab" | "\\t" => b'\t',
                        _ if v.len() == 1 => v.as_bytes()[0],
                        _ => return Err(RegistryError::Config(format!("bad delimiter {v:?}"))),
                    }
                }
                "address" => s.address = v,
                "type" => s.aircraft_type = v,
                "seats" => s.seats = (!v.is_empty()).then_some(v),
                "expiry" => s.expiry = (!v.is_empty()).then_some(v),
                "expiry_format" => s.expiry_format = v,
                other => return Err(RegistryError::Config(format!("unknown schema key {other:?}"))),
            }
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistryEntry {
    pub icao24: Icao24,
    pub aircraft_class: AircraftClass,
    pub seats: Option<u32>,
    pub expiry: Option<NaiveDate>,
    pub registry_year: i32,
    pub source_country: Country,
    /// Registration expired before the start of `registry_year`. Kept and
    /// still used for classification.
    pub expired: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedRegistry {
    pub entries: Vec<RegistryEntry>,
    pub skipped: usize,
}

/// Parses one registry file using the built-in schema for `format`.
pub fn parse_registry(
    raw: &[u8],
    format: &str,
    year: i32,
    classes: &ClassMap,
) -> Result<ParsedRegistry, RegistryError> {
    let country: Country = format.parse()?;
    parse_registry_with_schema(raw, country, &RegistrySchema::builtin(country), year, classes)
}

pub fn parse_registry_with_schema(
    raw: &[u8],
    country: Country,
    schema: &RegistrySchema,
    year: i32,
    classes: &ClassMap,
) -> Result<ParsedRegistry, RegistryError> {
    if raw.iter().all(u8::is_ascii_whitespace) {
        return Ok(ParsedRegistry::default());
    }
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .flexible(true)
        .from_reader(raw);
    let headers = rdr
        .byte_headers()
        .map_err(|e| RegistryError::Input(format!("{} registry header: {e}", country.code())))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| String::from_utf8_lossy(h).trim().eq_ignore_ascii_case(name.trim()))
    };
    let addr_col = col(&schema.address).ok_or_else(|| {
        RegistryError::Input(format!("{} registry lacks column {:?}", country.code(), schema.address))
    })?;
    let type_col = col(&schema.aircraft_type).ok_or_else(|| {
        RegistryError::Input(format!(
            "{} registry lacks column {:?}",
            country.code(),
            schema.aircraft_type
        ))
    })?;
    let seats_col = schema.seats.as_deref().and_then(col);
    let expiry_col = schema.expiry.as_deref().and_then(col);
    let year_start = NaiveDate::from_ymd_opt(year, 1, 1);

    let mut out = ParsedRegistry::default();
    for rec in rdr.byte_records() {
        let Ok(rec) = rec else {
            out.skipped += 1;
            continue;
        };
        let field = |i: usize| rec.get(i).map(|b| String::from_utf8_lossy(b).trim().to_string());
        let Some(Ok(icao24)) = field(addr_col).map(|s| s.parse::<Icao24>()) else {
            out.skipped += 1;
            continue;
        };
        let aircraft_class = classes.lookup(&field(type_col).unwrap_or_default());
        let seats = seats_col
            .and_then(field)
            .and_then(|s| s.parse::<u32>().ok())
            .filter(|&s| s >= 1);
        let expiry = expiry_col
            .and_then(field)
            .and_then(|s| NaiveDate::parse_from_str(&s, &schema.expiry_format).ok());
        let expired = matches!((expiry, year_start), (Some(e), Some(y)) if e < y);
        out.entries.push(RegistryEntry {
            icao24,
            aircraft_class,
            seats,
            expiry,
            registry_year: year,
            source_country: country,
            expired,
        });
    }
    Ok(out)
}

/// Reads every `<root>/<year>/<CC>.csv` present, honoring optional
/// `<root>/<CC>.schema` overrides and a `<root>/classmap.cfg`.
pub fn load_registry_year(root: &Path, year: i32) -> Result<ParsedRegistry, RegistryError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| RegistryError::Io { path, source }
    };
    let mut classes = ClassMap::default();
    let cm = root.join("classmap.cfg");
    if cm.exists() {
        classes.extend_from_config(&std::fs::read_to_string(&cm).map_err(io(&cm))?)?;
    }
    let mut all = ParsedRegistry::default();
    for country in Country::ALL {
        let file = root.join(year.to_string()).join(format!("{}.csv", country.code()));
        if !file.exists() {
            continue;
        }
        let mut schema = RegistrySchema::builtin(country);
        let sf = root.join(format!("{}.schema", country.code()));
        if sf.exists() {
            schema = RegistrySchema::from_config(&std::fs::read_to_string(&sf).map_err(io(&sf))?, schema)?;
        }
        let raw = std::fs::read(&file).map_err(io(&file))?;
        let parsed = parse_registry_with_schema(&raw, country, &schema, year, &classes)?;
        all.entries.extend(parsed.entries);
        all.skipped += parsed.skipped;
    }
    Ok(all)
}

/// Half-open address range `[lo, hi)` naming a bottom-tier directory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IcaoRange {
    pub lo: Icao24,
    /// Exclusive bound; may be `0xFFFFFF`, one past the last valid address.
    pub hi: u32,
}

impl IcaoRange {
    pub fn contains(&self, a: Icao24) -> bool {
        a.value() >= self.lo.value() && a.value() < self.hi
    }

    pub fn label(&self) -> String {
        format!("{}_{:06X}", self.lo, self.hi)
    }

    /// Parses a `LOHEX_HIHEX` directory label (an optional `.zip` suffix is
    /// ignored).
    pub fn parse_label(s: &str) -> Option<Self> {
        let s = s.strip_suffix(".zip").unwrap_or(s);
        let (a, b) = s.split_once('_')?;
        if a.len() != 6 || b.len() != 6 {
            return None;
        }
        let lo: Icao24 = a.parse().ok()?;
        let hi = u32::from_str_radix(b, 16).ok()?;
        (hi > lo.value() && hi <= 0xFF_FFFF).then_some(IcaoRange { lo, hi })
    }
}

impl fmt::Display for IcaoRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Splits ascending addresses into consecutive chunks of at most
/// `max_per_dir` members. Each range runs from its first member to one past
/// its last member. Unsorted or duplicated input is normalized first.
pub fn partition_icao_ranges(addresses: &[Icao24], max_per_dir: usize) -> Vec<IcaoRange> {
    assert!(max_per_dir >= 1, "max_per_dir must be positive");
    let normalized;
    let addrs = if addresses.windows(2).all(|w| w[0] < w[1]) {
        addresses
    } else {
        let mut v = addresses.to_vec();
        v.sort_unstable();
        v.dedup();
        normalized = v;
        &normalized[..]
    };
    addrs
        .chunks(max_per_dir)
        .map(|c| IcaoRange { lo: c[0], hi: c[c.len() - 1].value() + 1 })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LookupEntry {
    pub aircraft_class: AircraftClass,
    pub seats: Option<u32>,
    pub source_country: Country,
    pub expired: bool,
}

/// Immutable per-year registry lookup.
#[derive(Debug, Clone)]
pub struct RegistryLookup {
    year: i32,
    binning: SeatBinning,
    entries: HashMap<Icao24, (LookupEntry, Option<NaiveDate>)>,
    ranges: BTreeMap<(AircraftClass, SeatBin), Vec<IcaoRange>>,
    duplicates: usize,
    foreign_year: usize,
}

impl RegistryLookup {
    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, a: Icao24) -> Option<&LookupEntry> {
        self.entries.get(&a).map(|(e, _)| e)
    }

    /// Number of duplicate registrations collapsed while building.
    pub fn duplicates_resolved(&self) -> usize {
        self.duplicates
    }

    /// Entries ignored because their registry year differed from the lookup's.
    pub fn foreign_year_ignored(&self) -> usize {
        self.foreign_year
    }

    pub fn binning(&self) -> SeatBinning {
        self.binning
    }

    /// Bottom-tier ranges of one `(class, seat bin)` directory.
    pub fn ranges(&self, class: AircraftClass, bin: SeatBin) -> &[IcaoRange] {
        self.ranges.get(&(class, bin)).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Every populated `(class, seat bin)` directory with its ranges.
    pub fn directories(&self) -> impl Iterator<Item = (AircraftClass, SeatBin, &[IcaoRange])> {
        self.ranges.iter().map(|((c, b), r)| (*c, *b, r.as_slice()))
    }

    /// Full hierarchy path for an observed address. Unregistered addresses go
    /// to the unknown branch under `hour`, using `unknown_ranges` built from
    /// that hour's unknown addresses.
    pub fn path_for(
        &self,
        a: Icao24,
        hour: Option<HourStamp>,
        unknown_ranges: &[IcaoRange],
    ) -> Result<HierarchyPath, RegistryError> {
        let c = classify(a, self);
        let ranges = match c.seat {
            SeatTier::Bin(b) => self.ranges(c.aircraft_class, b),
            SeatTier::UnknownBranch => unknown_ranges,
        };
        derive_path(&c, a, self.year, hour, ranges)
    }
}

/// Builds the lookup for `year`. Duplicate addresses keep the entry with the
/// latest expiry; ties go to the registry with the higher precedence
/// (US > CA > NL > IE).
pub fn build_lookup(entries: &[RegistryEntry], year: i32) -> RegistryLookup {
    build_lookup_with(entries, year, SeatBinning::default(), MAX_PER_DIR)
}

pub fn build_lookup_with(
    entries: &[RegistryEntry],
    year: i32,
    binning: SeatBinning,
    max_per_dir: usize,
) -> RegistryLookup {
    let mut map: HashMap<Icao24, (LookupEntry, Option<NaiveDate>)> = HashMap::new();
    let mut duplicates = 0;
    let mut foreign_year = 0;
    for e in entries {
        if e.registry_year != year {
            foreign_year += 1;
            continue;
        }
        let candidate = (
            LookupEntry {
                aircraft_class: e.aircraft_class,
                seats: e.seats,
                source_country: e.source_country,
                expired: e.expired,
            },
            e.expiry,
        );
        match map.get_mut(&e.icao24) {
            None => {
                map.insert(e.icao24, candidate);
            }
            Some(cur) => {
                duplicates += 1;
                // None expiry sorts before any date.
                let better = candidate.1 > cur.1
                    || (candidate.1 == cur.1 && candidate.0.source_country < cur.0.source_country);
                if better {
                    *cur = candidate;
                }
            }
        }
    }
    let mut members: BTreeMap<(AircraftClass, SeatBin), BTreeSet<Icao24>> = BTreeMap::new();
    for (a, (e, _)) in &map {
        members
            .entry((e.aircraft_class, binning.bin(e.seats)))
            .or_default()
            .insert(*a);
    }
    let ranges = members
        .into_iter()
        .map(|(k, set)| {
            let v: Vec<Icao24> = set.into_iter().collect();
            (k, partition_icao_ranges(&v, max_per_dir))
        })
        .collect();
    RegistryLookup { year, binning, entries: map, ranges, duplicates, foreign_year }
}

/// Third-tier directory: a seat bin for registered aircraft, or the hour
/// directory of the unknown branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SeatTier {
    Bin(SeatBin),
    UnknownBranch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Classification {
    pub aircraft_class: AircraftClass,
    pub seat: SeatTier,
}

/// Never fails: unregistered addresses land in the unknown branch.
pub fn classify(a: Icao24, lookup: &RegistryLookup) -> Classification {
    match lookup.get(a) {
        Some(e) => Classification {
            aircraft_class: e.aircraft_class,
            seat: SeatTier::Bin(lookup.binning.bin(e.seats)),
        },
        None => Classification { aircraft_class: AircraftClass::Unknown, seat: SeatTier::UnknownBranch },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SeatDir {
    Bin(SeatBin),
    Hour(HourStamp),
}

impl fmt::Display for SeatDir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeatDir::Bin(b) => write!(f, "{b}"),
            SeatDir::Hour(h) => write!(f, "{h}"),
        }
    }
}

/// `year / class / seats-or-hour / range` address of a bottom-tier directory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HierarchyPath {
    pub year: i32,
    pub aircraft_class: AircraftClass,
    pub seat_dir: SeatDir,
    pub range: IcaoRange,
}

impl HierarchyPath {
    pub fn to_path_buf(&self) -> PathBuf {
        [
            self.year.to_string(),
            self.aircraft_class.name().to_string(),
            self.seat_dir.to_string(),
            self.range.label(),
        ]
        .iter()
        .collect()
    }
}

impl fmt::Display for HierarchyPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}/{}", self.year, self.aircraft_class, self.seat_dir, self.range)
    }
}

/// Resolves the four-tier path for `a`. `ranges` are the bottom-tier ranges
/// of the address's third-tier directory.
pub fn derive_path(
    c: &Classification,
    a: Icao24,
    year: i32,
    hour: Option<HourStamp>,
    ranges: &[IcaoRange],
) -> Result<HierarchyPath, RegistryError> {
    let seat_dir = match c.seat {
        SeatTier::Bin(b) => SeatDir::Bin(b),
        SeatTier::UnknownBranch => SeatDir::Hour(hour.ok_or(RegistryError::MissingHour(a))?),
    };
    let idx = ranges.partition_point(|r| r.hi <= a.value());
    let range = ranges
        .get(idx)
        .filter(|r| r.contains(a))
        .copied()
        .ok_or(RegistryError::Uncovered(a))?;
    Ok(HierarchyPath { year, aircraft_class: c.aircraft_class, seat_dir, range })
}

/// Largest number of distinct child directories under any directory of the
/// given set of directory paths (ancestors included).
pub fn max_directory_fanout<'a>(dirs: impl IntoIterator<Item = &'a Path>) -> usize {
    let mut children: HashMap<PathBuf, BTreeSet<PathBuf>> = HashMap::new();
    for d in dirs {
        let mut cur = d.to_path_buf();
        while let Some(parent) = cur.parent().map(Path::to_path_buf) {
            children.entry(parent.clone()).or_default().insert(cur.clone());
            cur = parent;
        }
    }
    children.values().map(BTreeSet::len).max().unwrap_or(0)
}
