//! Reporting statistics: hourly type presence, AGL-banded flight hours and
//! altitude/speed histograms.
//!
//! Flight time is accumulated as whole seconds (one per 1 Hz point) and only
//! converted to hours on output, so partial results merge exactly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Component, Path, PathBuf};

use walkdir::WalkDir;

use crate::archive::{self, ArchiveError};
use crate::hour::HourStamp;
use crate::ingest::parse_organized_file_name;
use crate::registry::AircraftClass;
use crate::tracks::output::read_processed;
use crate::tracks::TrackPoint;

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error(transparent)]
    Archive(#[from] ArchiveError),
}

/// The classes given their own column in the summary tables.
pub const TABLE3_CLASSES: [AircraftClass; 4] = [
    AircraftClass::FixedWingMultiEngine,
    AircraftClass::FixedWingSingleEngine,
    AircraftClass::Rotorcraft,
    AircraftClass::Unknown,
];

pub const TABLE4_CLASSES: [AircraftClass; 3] =
    [AircraftClass::FixedWingMultiEngine, AircraftClass::FixedWingSingleEngine, AircraftClass::Rotorcraft];

/// Uniform bins over `[lo, hi]`; the last bin may be narrower. Values
/// outside the range land in the edge bins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinSpec {
    pub lo: f64,
    pub hi: f64,
    pub width: f64,
}

impl BinSpec {
    pub fn edges(&self) -> Vec<f64> {
        let mut e = vec![self.lo];
        let mut k = 1.0;
        loop {
            let x = self.lo + k * self.width;
            if x >= self.hi - 1e-9 {
                e.push(self.hi);
                return e;
            }
            e.push(x);
            k += 1.0;
        }
    }

    pub fn bins(&self) -> usize {
        (((self.hi - self.lo - 1e-9) / self.width).ceil() as usize).max(1)
    }

    pub fn index(&self, x: f64) -> usize {
        let n = self.bins();
        if x <= self.lo {
            return 0;
        }
        (((x - self.lo) / self.width).floor() as usize).min(n - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatsConfig {
    /// Inclusive AGL band in feet.
    pub band: (f64, f64),
    pub altitude_bins: BinSpec,
    pub speed_bins: BinSpec,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            band: (50.0, 5000.0),
            altitude_bins: BinSpec { lo: 50.0, hi: 5000.0, width: 250.0 },
            speed_bins: BinSpec { lo: 0.0, hi: 600.0, width: 10.0 },
        }
    }
}

impl StatsConfig {
    /// Reads `key = value` lines: `band_lo`, `band_hi`, `altitude_bin_ft`,
    /// `speed_lo_kt`, `speed_hi_kt`, `speed_bin_kt`. The altitude bins span
    /// the band.
    pub fn from_config(text: &str) -> Result<Self, String> {
        let mut c = StatsConfig::default();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| format!("expected key = value: {line:?}"))?;
            let v: f64 = v.trim().parse().map_err(|_| format!("{}: not a number", k.trim()))?;
            match k.trim() {
                "band_lo" => c.band.0 = v,
                "band_hi" => c.band.1 = v,
                "altitude_bin_ft" => c.altitude_bins.width = v,
                "speed_lo_kt" => c.speed_bins.lo = v,
                "speed_hi_kt" => c.speed_bins.hi = v,
                "speed_bin_kt" => c.speed_bins.width = v,
                other => return Err(format!("unknown bins key {other:?}")),
            }
        }
        c.altitude_bins.lo = c.band.0;
        c.altitude_bins.hi = c.band.1;
        for (name, b) in [("altitude", c.altitude_bins), ("speed", c.speed_bins)] {
            if !(b.width > 0.0 && b.hi > b.lo) {
                return Err(format!("{name} bins need width > 0 and hi > lo"));
            }
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variable {
    AltitudeAgl,
    Speed,
}

impl Variable {
    pub fn name(self) -> &'static str {
        match self {
            Variable::AltitudeAgl => "altitudeAGL_ft",
            Variable::Speed => "speed_kt",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub variable: Variable,
    pub year: i32,
    pub class: AircraftClass,
    pub edges: Vec<f64>,
    /// Seconds per bin.
    pub seconds: Vec<u64>,
}

impl Histogram {
    /// Flight hours per bin.
    pub fn mass(&self) -> Vec<f64> {
        self.seconds.iter().map(|s| *s as f64 / 3600.0).collect()
    }

    pub fn total_hours(&self) -> f64 {
        self.seconds.iter().sum::<u64>() as f64 / 3600.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlightHoursRow {
    pub year: i32,
    pub hours: BTreeMap<AircraftClass, f64>,
    pub total: f64,
}

/// Partial aggregate over processed files; merging is associative.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlightStats {
    /// In-band seconds per (year, class).
    pub seconds: BTreeMap<(i32, AircraftClass), u64>,
    pub histograms: BTreeMap<(Variable, i32, AircraftClass), Vec<u64>>,
    pub points: u64,
    pub missing_agl: u64,
    pub files: u64,
}

impl FlightStats {
    pub fn add_point(&mut self, year: i32, class: AircraftClass, p: &TrackPoint, cfg: &StatsConfig) {
        self.points += 1;
        let Some(agl) = p.alt_agl else {
            self.missing_agl += 1;
            return;
        };
        if agl < cfg.band.0 || agl > cfg.band.1 {
            return;
        }
        *self.seconds.entry((year, class)).or_default() += 1;
        for (var, spec, x) in [(Variable::AltitudeAgl, cfg.altitude_bins, agl), (Variable::Speed, cfg.speed_bins, p.speed)] {
            let h = self.histograms.entry((var, year, class)).or_insert_with(|| vec![0; spec.bins()]);
            h[spec.index(x)] += 1;
        }
    }

    pub fn merge(&mut self, other: &FlightStats) {
        for (k, v) in &other.seconds {
            *self.seconds.entry(*k).or_default() += v;
        }
        for (k, v) in &other.histograms {
            let h = self.histograms.entry(*k).or_insert_with(|| vec![0; v.len()]);
            for (a, b) in h.iter_mut().zip(v) {
                *a += b;
            }
        }
        self.points += other.points;
        self.missing_agl += other.missing_agl;
        self.files += other.files;
    }

    pub fn flight_hours(&self) -> Vec<FlightHoursRow> {
        let mut rows: BTreeMap<i32, FlightHoursRow> = BTreeMap::new();
        for (&(year, class), &s) in &self.seconds {
            let row = rows.entry(year).or_insert_with(|| FlightHoursRow { year, hours: BTreeMap::new(), total: 0.0 });
            row.hours.insert(class, s as f64 / 3600.0);
        }
        for row in rows.values_mut() {
            let secs: u64 = self.seconds.range((row.year, AircraftClass::ALL[0])..=(row.year, AircraftClass::Unknown)).map(|(_, s)| s).sum();
            row.total = secs as f64 / 3600.0;
        }
        rows.into_values().collect()
    }

    pub fn histogram_list(&self, cfg: &StatsConfig) -> Vec<Histogram> {
        self.histograms
            .iter()
            .map(|(&(variable, year, class), s)| {
                let spec = match variable {
                    Variable::AltitudeAgl => cfg.altitude_bins,
                    Variable::Speed => cfg.speed_bins,
                };
                Histogram { variable, year, class, edges: spec.edges(), seconds: s.clone() }
            })
            .collect()
    }
}

/// Year and class encoded in the first two components of `path` relative to
/// `root`.
fn year_class(root: &Path, path: &Path) -> Option<(i32, AircraftClass)> {
    let mut comps = path.strip_prefix(root).ok()?.components().filter_map(|c| match c {
        Component::Normal(s) => s.to_str(),
        _ => None,
    });
    let year = comps.next()?.parse().ok()?;
    let class = comps.next()?.parse().ok()?;
    Some((year, class))
}

fn csv_files(root: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file() && e.path().extension().is_some_and(|x| x == "csv"))
        .map(|e| e.into_path())
        .collect();
    v.sort();
    v
}

pub fn fold_processed_file(root: &Path, path: &Path, cfg: &StatsConfig, acc: &mut FlightStats) -> Result<(), StatsError> {
    let (year, class) = year_class(root, path).ok_or_else(|| StatsError::Format {
        path: path.to_path_buf(),
        message: "not under <year>/<class>/".into(),
    })?;
    let text = fs::read_to_string(path).map_err(|source| StatsError::Io { path: path.to_path_buf(), source })?;
    let rows = read_processed(&text).map_err(|message| StatsError::Format { path: path.to_path_buf(), message })?;
    for r in &rows {
        acc.add_point(year, class, &r.point, cfg);
    }
    acc.files += 1;
    Ok(())
}

/// Folds every processed file under `root`, split across `workers` threads.
pub fn flight_stats(root: &Path, cfg: &StatsConfig, workers: usize) -> Result<FlightStats, StatsError> {
    let files = csv_files(root);
    let workers = workers.max(1);
    let chunk = files.len().div_ceil(workers).max(1);
    let parts: Vec<Result<FlightStats, StatsError>> = std::thread::scope(|s| {
        let handles: Vec<_> = files
            .chunks(chunk)
            .map(|c| {
                s.spawn(move || {
                    let mut acc = FlightStats::default();
                    for f in c {
                        fold_processed_file(root, f, cfg, &mut acc)?;
                    }
                    Ok(acc)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("stats worker panicked")).collect()
    });
    let mut total = FlightStats::default();
    for p in parts {
        total.merge(&p?);
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistributionMode {
    /// Share of hours with at least one aircraft of the class.
    #[default]
    Presence,
    /// Mean over hours of the class's share of that hour's observations.
    ObservationShare,
}

/// Observations per (hour, class), collected from organized files and
/// archive members.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HourlyObservations {
    pub counts: BTreeMap<HourStamp, BTreeMap<AircraftClass, u64>>,
    seen: BTreeSet<String>,
}

impl HourlyObservations {
    pub fn add(&mut self, hour: HourStamp, class: AircraftClass, observations: u64) {
        *self.counts.entry(hour).or_default().entry(class).or_default() += observations;
    }

    fn add_member(&mut self, name: &str, class: AircraftClass, body: Option<&[u8]>) {
        let Some((hour, _)) = parse_organized_file_name(name) else { return };
        if !self.seen.insert(name.to_string()) {
            return;
        }
        let rows = body.map_or(1, |b| b.split(|c| *c == b'\n').filter(|l| !l.is_empty()).count().saturating_sub(1) as u64);
        self.add(hour, class, rows);
    }

    /// Scans loose organized files under `organized` and archives under
    /// `archives`. Row counts are only read in observation-share mode.
    pub fn scan(organized: Option<&Path>, archives: Option<&Path>, mode: DistributionMode) -> Result<Self, StatsError> {
        let mut h = HourlyObservations::default();
        let need_rows = mode == DistributionMode::ObservationShare;
        if let Some(root) = organized {
            for f in csv_files(root) {
                let Some((_, class)) = year_class(root, &f) else { continue };
                let name = f.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
                let body = if need_rows {
                    Some(fs::read(&f).map_err(|source| StatsError::Io { path: f.clone(), source })?)
                } else {
                    None
                };
                h.add_member(&name, class, body.as_deref());
            }
        }
        if let Some(root) = archives {
            for a in archive::find_archives(root) {
                let Some((_, class)) = year_class(root, &a) else { continue };
                if need_rows {
                    archive::for_each_member(&a, |name, bytes| {
                        h.add_member(name, class, Some(bytes));
                        Ok(())
                    })?;
                } else {
                    for m in archive::read_manifest(&a).or_else(|_| archive::scan(&a))? {
                        h.add_member(&m.name, class, None);
                    }
                }
            }
        }
        Ok(h)
    }

    /// One row per year, with a fraction for every class.
    pub fn distribution(&self, mode: DistributionMode) -> Vec<TypeDistributionRow> {
        let mut by_year: BTreeMap<i32, Vec<&BTreeMap<AircraftClass, u64>>> = BTreeMap::new();
        for (hour, classes) in &self.counts {
            by_year.entry(hour.year()).or_default().push(classes);
        }
        by_year
            .into_iter()
            .map(|(year, hours)| {
                let n = hours.len() as f64;
                let fractions = AircraftClass::ALL
                    .into_iter()
                    .map(|c| {
                        let f = match mode {
                            DistributionMode::Presence => {
                                hours.iter().filter(|h| h.get(&c).is_some_and(|v| *v > 0)).count() as f64 / n
                            }
                            DistributionMode::ObservationShare => {
                                hours
                                    .iter()
                                    .map(|h| {
                                        let total: u64 = h.values().sum();
                                        if total == 0 {
                                            0.0
                                        } else {
                                            *h.get(&c).unwrap_or(&0) as f64 / total as f64
                                        }
                                    })
                                    .sum::<f64>()
                                    / n
                            }
                        };
                        (c, f)
                    })
                    .collect();
                TypeDistributionRow { year, hours: hours.len(), fractions }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeDistributionRow {
    pub year: i32,
    /// Hours with any observation.
    pub hours: usize,
    pub fractions: BTreeMap<AircraftClass, f64>,
}

pub fn type_distribution_tsv(rows: &[TypeDistributionRow]) -> String {
    let mut s = String::from("year\thours");
    for c in TABLE3_CLASSES {
        let _ = write!(s, "\t{c}");
    }
    s.push('\n');
    for r in rows {
        let _ = write!(s, "{}\t{}", r.year, r.hours);
        for c in TABLE3_CLASSES {
            let _ = write!(s, "\t{:.6}", r.fractions[&c]);
        }
        s.push('\n');
    }
    s
}

/// Every class, long format.
pub fn type_distribution_full_tsv(rows: &[TypeDistributionRow]) -> String {
    let mut s = String::from("year\tclass\tfraction\n");
    for r in rows {
        for (c, f) in &r.fractions {
            let _ = writeln!(s, "{}\t{c}\t{f:.6}", r.year);
        }
    }
    s
}

/// Table IV layout: the modeled classes, the remaining classes summed into
/// `Other`, and the total, plus a closing total row.
pub fn flight_hours_tsv(rows: &[FlightHoursRow]) -> String {
    let mut s = String::from("year");
    for c in TABLE4_CLASSES {
        let _ = write!(s, "\t{c}");
    }
    s.push_str("\tOther\tTotal\n");
    let mut sums = [0.0f64; 5];
    let line = |label: String, vals: [f64; 5], s: &mut String| {
        let _ = write!(s, "{label}");
        for v in vals {
            let _ = write!(s, "\t{v:.6}");
        }
        s.push('\n');
    };
    for r in rows {
        let get = |c| r.hours.get(&c).copied().unwrap_or(0.0);
        let modeled: f64 = TABLE4_CLASSES.iter().map(|c| get(*c)).sum();
        let vals = [get(TABLE4_CLASSES[0]), get(TABLE4_CLASSES[1]), get(TABLE4_CLASSES[2]), r.total - modeled, r.total];
        for (a, b) in sums.iter_mut().zip(vals) {
            *a += b;
        }
        line(r.year.to_string(), vals, &mut s);
    }
    line("Total".into(), sums, &mut s);
    s
}

pub fn histograms_tsv(hists: &[Histogram], variable: Variable) -> String {
    let mut s = String::from("year\tclass\tbin_lo\tbin_hi\thours\n");
    for h in hists.iter().filter(|h| h.variable == variable) {
        for (i, m) in h.mass().iter().enumerate() {
            let _ = writeln!(s, "{}\t{}\t{}\t{}\t{m:.6}", h.year, h.class, h.edges[i], h.edges[i + 1]);
        }
    }
    s
}

fn gnuplot_script() -> &'static str {
    r#"# gnuplot -persist plots.gp
set terminal pngcairo size 900,600
set datafile separator "\t"
set key autotitle columnhead

set output "table3_type_distribution.png"
set title "Aircraft type presence per hour"
set style data histograms
set style fill solid 0.8
set yrange [0:1]
plot "table3_type_distribution.tsv" using 3:xtic(1), '' using 4, '' using 5, '' using 6

set output "table4_flight_hours.png"
set title "Flight hours between band limits"
set yrange [0:*]
plot "table4_flight_hours.tsv" using 2:xtic(1), '' using 3, '' using 4, '' using 5

set output "altitude_distribution.png"
set title "Altitude AGL distribution"
set style data boxes
set xlabel "ft AGL"
set ylabel "hours"
plot "hist_altitude_agl.tsv" using (($3+$4)/2):5 title "all classes and years"

set output "speed_distribution.png"
set title "Speed distribution"
set xlabel "kt"
plot "hist_speed.tsv" using (($3+$4)/2):5 title "all classes and years"
"#
}

/// File name and contents of every statistics output, in a fixed order.
pub fn render_outputs(
    flight: &FlightStats,
    hourly: &HourlyObservations,
    mode: DistributionMode,
    cfg: &StatsConfig,
) -> Vec<(&'static str, String)> {
    let dist = hourly.distribution(mode);
    let hists = flight.histogram_list(cfg);
    let summary = format!(
        "key\tvalue\nfiles\t{}\npoints\t{}\nmissingAgl\t{}\nbandLo_ft\t{}\nbandHi_ft\t{}\nhours\t{}\n",
        flight.files,
        flight.points,
        flight.missing_agl,
        cfg.band.0,
        cfg.band.1,
        hourly.counts.len()
    );
    vec![
        ("table3_type_distribution.tsv", type_distribution_tsv(&dist)),
        ("type_distribution_all.tsv", type_distribution_full_tsv(&dist)),
        ("table4_flight_hours.tsv", flight_hours_tsv(&flight.flight_hours())),
        ("hist_altitude_agl.tsv", histograms_tsv(&hists, Variable::AltitudeAgl)),
        ("hist_speed.tsv", histograms_tsv(&hists, Variable::Speed)),
        ("stats_summary.tsv", summary),
        ("plots.gp", gnuplot_script().to_string()),
    ]
}

pub fn write_outputs(out: &Path, files: &[(&'static str, String)]) -> Result<(), StatsError> {
    fs::create_dir_all(out).map_err(|source| StatsError::Io { path: out.to_path_buf(), source })?;
    for (name, text) in files {
        let p = out.join(name);
        fs::write(&p, text).map_err(|source| StatsError::Io { path: p.clone(), source })?;
    }
    Ok(())
}
