//! The per-aircraft refinement pipeline and archive processing.
//!
//! Order: dedupe, segment, altitude MAD outliers, smoothing, gradient rates,
//! rate outliers, 1 Hz interpolation, AGL, airspace.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::ops::AddAssign;
use std::path::{Path, PathBuf};

use crate::archive::{self, ArchiveError};
use crate::geo::GeoError;
use crate::ingest::{parse_organized_file_name, read_organized, StateVector};
use crate::registry::{partition_icao_ranges, AircraftClass, Icao24, MAX_PER_DIR};

use super::filters::mad_outliers_with_floor;
use super::output::write_segments;
use super::segment::{compute_rates, dedupe_positions, interpolate_1hz, rate_outlier_filter, segment, Observation};
use super::{attach_agl, classify_airspace, AirspaceClass, AirspaceVolumes, ElevationLookup, OutlierParams, TrackPoint, TrackSegment};

#[derive(Debug, thiserror::Error)]
pub enum ProcessError {
    #[error(transparent)]
    Archive(#[from] ArchiveError),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ProcessCounts {
    pub members: usize,
    /// Members that could not be read or parsed.
    pub members_skipped: usize,
    pub observations: usize,
    /// Repeated timestamps and unchanged positions.
    pub duplicates: usize,
    pub altitude_outliers: usize,
    pub speed_outliers: usize,
    /// Runs discarded for having too few points, at any stage.
    pub segments_dropped: usize,
    pub segments: usize,
    /// Interpolated 1 Hz points emitted.
    pub points: usize,
    pub missing_terrain: usize,
    pub negative_agl: usize,
    pub aircraft: usize,
    pub files_written: usize,
}

impl AddAssign for ProcessCounts {
    fn add_assign(&mut self, o: Self) {
        self.members += o.members;
        self.members_skipped += o.members_skipped;
        self.observations += o.observations;
        self.duplicates += o.duplicates;
        self.altitude_outliers += o.altitude_outliers;
        self.speed_outliers += o.speed_outliers;
        self.segments_dropped += o.segments_dropped;
        self.segments += o.segments;
        self.points += o.points;
        self.missing_terrain += o.missing_terrain;
        self.negative_agl += o.negative_agl;
        self.aircraft += o.aircraft;
        self.files_written += o.files_written;
    }
}

impl ProcessCounts {
    /// `(name, value)` pairs in a fixed order, for reports.
    pub fn fields(&self) -> [(&'static str, usize); 13] {
        [
            ("members", self.members),
            ("membersSkipped", self.members_skipped),
            ("observations", self.observations),
            ("duplicates", self.duplicates),
            ("altitudeOutliers", self.altitude_outliers),
            ("speedOutliers", self.speed_outliers),
            ("segmentsDropped", self.segments_dropped),
            ("segments", self.segments),
            ("points", self.points),
            ("missingTerrain", self.missing_terrain),
            ("negativeAgl", self.negative_agl),
            ("aircraft", self.aircraft),
            ("filesWritten", self.files_written),
        ]
    }
}

/// Where per-aircraft output files go.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OutputLayout {
    /// Directly in this directory.
    Flat(PathBuf),
    /// In `<range>` subdirectories of this directory, at most
    /// [`MAX_PER_DIR`] aircraft each.
    Grouped(PathBuf),
}

/// Shared inputs of the pipeline.
pub struct Refiner<'a, E: ?Sized> {
    pub params: &'a OutlierParams,
    pub terrain: &'a E,
    pub airspace: &'a AirspaceVolumes,
}

impl<E: ElevationLookup + ?Sized> Refiner<'_, E> {
    /// Runs the full pipeline over one aircraft's observations.
    pub fn refine(
        &self,
        icao24: Icao24,
        class: AircraftClass,
        states: &[StateVector],
    ) -> Result<(Vec<TrackSegment>, ProcessCounts), GeoError> {
        let p = self.params;
        let mut c = ProcessCounts { observations: states.len(), ..Default::default() };

        let mut obs: Vec<Observation> = states.iter().filter_map(Observation::from_state).collect();
        obs.sort_by(|a, b| a.time.total_cmp(&b.time));
        let before = obs.len();
        obs.dedup_by(|b, a| a.time == b.time);
        let obs = dedupe_positions(&obs);
        c.duplicates = states.len() - before + (before - obs.len());

        let (runs, dropped) = segment(&obs, |o| o.time, p.max_gap, p.min_points);
        c.segments_dropped += dropped;

        let mut segments = Vec::new();
        for run in runs {
            let alts: Vec<f64> = run.iter().map(|o| o.alt).collect();
            let mask = mad_outliers_with_floor(&alts, p.mad_threshold, p.zero_mad_floor);
            let clean: Vec<Observation> = run.iter().zip(&mask).filter(|(_, m)| !**m).map(|(o, _)| *o).collect();
            c.altitude_outliers += run.len() - clean.len();
            let (subruns, dropped) = segment(&clean, |o| o.time, p.max_gap, p.min_points);
            c.segments_dropped += dropped;

            for sub in subruns {
                let rated = compute_rates(&sub, p);
                let (kept, removed, dropped) = rate_outlier_filter(&rated, class, p);
                c.speed_outliers += removed;
                c.segments_dropped += dropped;
                for k in kept {
                    let Some(resampled) = interpolate_1hz(&k, p.min_points) else {
                        c.segments_dropped += 1;
                        continue;
                    };
                    let mut points: Vec<TrackPoint> = resampled
                        .iter()
                        .map(|r| TrackPoint {
                            time: r.time as i64,
                            lat: r.lat,
                            lon: r.lon,
                            alt_msl: r.alt,
                            alt_agl: None,
                            speed: r.speed,
                            course: r.course,
                            vert_rate: r.vert_rate,
                            accel: r.accel,
                            airspace: AirspaceClass::Other,
                        })
                        .collect();
                    c.missing_terrain += attach_agl(&mut points, self.terrain)?;
                    for pt in &mut points {
                        pt.airspace = classify_airspace(pt.point(), pt.alt_msl, self.airspace);
                    }
                    c.negative_agl += points.iter().filter(|pt| pt.low_confidence()).count();
                    c.points += points.len();
                    segments.push(TrackSegment { icao24, aircraft_class: class, points });
                }
            }
        }
        c.segments = segments.len();
        Ok((segments, c))
    }

    /// Processes every aircraft found in `archives` and writes one
    /// `<ICAO>.csv` per aircraft with at least one segment. Members of one
    /// aircraft may be spread over several archives.
    pub fn process_archives(
        &self,
        archives: &[PathBuf],
        class: AircraftClass,
        layout: &OutputLayout,
    ) -> Result<ProcessCounts, ProcessError> {
        let mut c = ProcessCounts::default();
        let mut by_aircraft: BTreeMap<Icao24, Vec<StateVector>> = BTreeMap::new();
        for a in archives {
            archive::for_each_member(a, |name, bytes| {
                c.members += 1;
                let parsed = parse_organized_file_name(name).and_then(|(_, icao)| read_organized(bytes, icao).ok().map(|r| (icao, r)));
                match parsed {
                    Some((icao, records)) => by_aircraft.entry(icao).or_default().extend(records),
                    None => {
                        log::warn!("{}: skipping unreadable member {name}", a.display());
                        c.members_skipped += 1;
                    }
                }
                Ok(())
            })?;
        }
        let addresses: Vec<Icao24> = by_aircraft.keys().copied().collect();
        let groups = match layout {
            OutputLayout::Flat(_) => Vec::new(),
            OutputLayout::Grouped(_) => partition_icao_ranges(&addresses, MAX_PER_DIR),
        };
        for (icao, states) in by_aircraft {
            let (segments, counts) = self.refine(icao, class, &states)?;
            c += counts;
            c.aircraft += 1;
            if !segments.is_empty() {
                let dir = match layout {
                    OutputLayout::Flat(d) => d.clone(),
                    OutputLayout::Grouped(d) => {
                        let g = groups.iter().find(|r| r.contains(icao)).expect("ranges cover every address");
                        d.join(g.label())
                    }
                };
                write_atomic(&dir.join(format!("{icao}.csv")), &segments)?;
                c.files_written += 1;
            }
        }
        Ok(c)
    }
}

fn write_atomic(path: &Path, segments: &[TrackSegment]) -> Result<(), ProcessError> {
    let io = |source| ProcessError::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let tmp = path.with_extension("csv.tmp");
    {
        let mut w = BufWriter::new(fs::File::create(&tmp).map_err(io)?);
        write_segments(&mut w, segments).map_err(io)?;
        w.flush().map_err(io)?;
    }
    fs::rename(&tmp, path).map_err(io)
}

/// Runs the pipeline over one aircraft's observations.
pub fn refine_track<E: ElevationLookup + ?Sized>(
    icao24: Icao24,
    class: AircraftClass,
    states: &[StateVector],
    params: &OutlierParams,
    terrain: &E,
    airspace: &AirspaceVolumes,
) -> Result<(Vec<TrackSegment>, ProcessCounts), GeoError> {
    Refiner { params, terrain, airspace }.refine(icao24, class, states)
}

/// Processes a single leaf archive into `out_dir`.
pub fn process_archive<E: ElevationLookup + ?Sized>(
    archive: &Path,
    class: AircraftClass,
    params: &OutlierParams,
    terrain: &E,
    airspace: &AirspaceVolumes,
    out_dir: &Path,
) -> Result<ProcessCounts, ProcessError> {
    Refiner { params, terrain, airspace }.process_archives(
        &[archive.to_path_buf()],
        class,
        &OutputLayout::Flat(out_dir.to_path_buf()),
    )
}
