//! Stage orchestration over a [`PipelineConfig`]: planning, execution on the
//! worker pool, run reports and the end-to-end run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::archive::{find_archives, find_leaves, list_files, pack_or_update};
use crate::config::PipelineConfig;
use crate::geo::geojson::{read_land, read_polygon};
use crate::geo::{GeoError, GeoPolygon, Terrain, TerrainCache};
use crate::ingest::{find_hour_files, organize_hour};
use crate::registry::{build_lookup, load_registry_year, AircraftClass, RegistryError, RegistryLookup};
use crate::runner::{execute, plan, report_table, report_tsv, summarize, Counts, Stage, TaskOutput, TaskResult, TaskSpec};
use crate::stats::{flight_stats, render_outputs, write_outputs, HourlyObservations, StatsConfig, StatsError};
use crate::tracks::{AirspaceVolumes, OutputLayout, Refiner};

#[derive(Debug, thiserror::Error)]
pub enum WorkflowError {
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Input(String),
}

fn read_text(path: &Path) -> Result<String, WorkflowError> {
    fs::read_to_string(path).map_err(|source| WorkflowError::Io { path: path.to_path_buf(), source })
}

/// Loaded registries and geographic inputs shared by all tasks.
pub struct Resources {
    pub lookups: BTreeMap<i32, RegistryLookup>,
    pub polygon: GeoPolygon,
    pub terrain: Terrain<TerrainCache>,
    pub airspace: AirspaceVolumes,
    pub stats: StatsConfig,
}

impl Resources {
    pub fn load(cfg: &PipelineConfig) -> Result<Self, WorkflowError> {
        let mut lookups = BTreeMap::new();
        for &y in &cfg.years {
            let parsed = load_registry_year(&cfg.registry_root, y)?;
            if parsed.skipped > 0 {
                log::warn!("registry {y}: {} rows skipped", parsed.skipped);
            }
            lookups.insert(y, build_lookup(&parsed.entries, y));
        }
        let polygon = read_polygon(&read_text(&cfg.polygon)?)?;
        let land = match &cfg.land_polygons {
            Some(p) => Some(read_land(&read_text(p)?)?),
            None => None,
        };
        let airspace = match &cfg.airspace {
            Some(p) => AirspaceVolumes::from_geojson(&read_text(p)?)?,
            None => AirspaceVolumes::default(),
        };
        let stats = match &cfg.bins {
            Some(p) => StatsConfig::from_config(&read_text(p)?).map_err(WorkflowError::Input)?,
            None => StatsConfig::default(),
        };
        Ok(Resources {
            lookups,
            polygon,
            terrain: Terrain::new(land, TerrainCache::new(&cfg.terrain_root)),
            airspace,
            stats,
        })
    }
}

fn rel(root: &Path, p: &Path) -> String {
    p.strip_prefix(root).unwrap_or(p).to_string_lossy().replace('\\', "/")
}

fn counts<const N: usize>(fields: [(&str, usize); N]) -> Counts {
    fields.iter().map(|(k, v)| (k.to_string(), *v as u64)).collect()
}

const UNKNOWN_UNIT: &str = "Unknown";

/// Tasks for a stage, one per unit of input, with inputs relative to the
/// stage's input root.
pub fn stage_plan(stage: Stage, cfg: &PipelineConfig) -> Result<Vec<TaskSpec>, WorkflowError> {
    let inputs: Vec<(String, Option<u64>)> = match stage {
        Stage::Organize => find_hour_files(&cfg.raw_root)
            .map_err(|e| WorkflowError::Input(e.to_string()))?
            .into_iter()
            .filter(|(h, _)| cfg.years.contains(&h.year()))
            .map(|(_, p)| {
                let size = fs::metadata(&p).map(|m| m.len()).ok();
                (rel(&cfg.raw_root, &p), size)
            })
            .collect(),
        Stage::Pack => {
            if !cfg.organized_root.exists() {
                Vec::new()
            } else {
                find_leaves(&cfg.organized_root)
                    .map_err(|e| WorkflowError::Input(e.to_string()))?
                    .into_iter()
                    .map(|leaf| {
                        let n = list_files(&leaf).map(|f| f.len() as u64).ok();
                        (rel(&cfg.organized_root, &leaf), n)
                    })
                    .collect()
            }
        }
        Stage::Process => {
            let mut units = Vec::new();
            let mut unknown_years: BTreeMap<i32, u64> = BTreeMap::new();
            for a in find_archives(&cfg.archive_root) {
                let r = rel(&cfg.archive_root, &a);
                let mut parts = r.split('/');
                let year: Option<i32> = parts.next().and_then(|y| y.parse().ok());
                let class = parts.next();
                let Some(year) = year.filter(|y| cfg.years.contains(y)) else { continue };
                let size = fs::metadata(&a).map(|m| m.len()).unwrap_or(0);
                if class == Some(UNKNOWN_UNIT) {
                    *unknown_years.entry(year).or_default() += size;
                } else {
                    units.push((r, Some(size)));
                }
            }
            units.extend(unknown_years.into_iter().map(|(y, s)| (format!("{y}/{UNKNOWN_UNIT}"), Some(s))));
            units
        }
    };
    Ok(plan(stage, inputs))
}

fn organize_task(cfg: &PipelineConfig, res: &Resources, spec: &TaskSpec) -> Result<TaskOutput, String> {
    let path = cfg.raw_root.join(&spec.input);
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    let hour = crate::hour::HourStamp::find_in(name).ok_or_else(|| format!("no hour stamp in {name}"))?;
    let lookup = res.lookups.get(&hour.year()).ok_or_else(|| format!("no registry loaded for {}", hour.year()))?;
    let bytes = fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let s = organize_hour(&bytes, hour, lookup, &res.polygon, &cfg.organized_root).map_err(|e| e.to_string())?;
    if !s.is_conserved() {
        return Err(format!("{hour}: counts not conserved"));
    }
    Ok(TaskOutput {
        counts: counts([
            ("rawCount", s.raw_count),
            ("malformed", s.malformed),
            ("qualityDropped", s.quality_dropped),
            ("duplicates", s.duplicates),
            ("geoDropped", s.geo_dropped),
            ("organizedCount", s.organized_count),
            ("filesWritten", s.files_written),
        ]),
        skipped: false,
    })
}

fn pack_task(cfg: &PipelineConfig, spec: &TaskSpec) -> Result<TaskOutput, String> {
    let leaf = cfg.organized_root.join(&spec.input);
    match pack_or_update(&leaf, &cfg.organized_root, &cfg.archive_root).map_err(|e| e.to_string())? {
        Some(a) => Ok(TaskOutput {
            counts: counts([("members", a.member_count()), ("bytes", a.total_size() as usize), ("archives", 1)]),
            skipped: false,
        }),
        None => Ok(TaskOutput { counts: Counts::new(), skipped: true }),
    }
}

fn process_task(cfg: &PipelineConfig, res: &Resources, spec: &TaskSpec) -> Result<TaskOutput, String> {
    let refiner = Refiner { params: &cfg.outliers, terrain: &res.terrain, airspace: &res.airspace };
    let (archives, class, layout) = if let Some(year) = spec.input.strip_suffix(&format!("/{UNKNOWN_UNIT}")) {
        let dir = cfg.archive_root.join(year).join(UNKNOWN_UNIT);
        let archives = find_archives(&dir);
        (archives, AircraftClass::Unknown, OutputLayout::Grouped(cfg.processed_root.join(year).join(UNKNOWN_UNIT)))
    } else {
        let a = cfg.archive_root.join(&spec.input);
        let class: AircraftClass = spec
            .input
            .split('/')
            .nth(1)
            .ok_or("archive path lacks a class directory")?
            .parse()
            .map_err(|e: RegistryError| e.to_string())?;
        let label = spec.input.strip_suffix(".zip").ok_or("not a zip archive")?;
        (vec![a], class, OutputLayout::Flat(cfg.processed_root.join(label)))
    };
    if archives.is_empty() {
        return Ok(TaskOutput { counts: Counts::new(), skipped: true });
    }
    let c = refiner.process_archives(&archives, class, &layout).map_err(|e| e.to_string())?;
    Ok(TaskOutput { counts: counts(c.fields()), skipped: false })
}

/// Executes a planned stage on the configured worker pool.
pub fn run_stage(stage: Stage, tasks: &[TaskSpec], cfg: &PipelineConfig, res: &Resources) -> Vec<TaskResult> {
    execute(tasks, cfg.workers, cfg.strategy, |spec| match stage {
        Stage::Organize => organize_task(cfg, res, spec),
        Stage::Pack => pack_task(cfg, spec),
        Stage::Process => process_task(cfg, res, spec),
    })
}

/// Computes all statistics outputs and writes them under `stats_root`.
pub fn run_stats(cfg: &PipelineConfig, res: &Resources) -> Result<Vec<(&'static str, String)>, WorkflowError> {
    let flight = if cfg.processed_root.exists() {
        flight_stats(&cfg.processed_root, &res.stats, cfg.workers)?
    } else {
        Default::default()
    };
    let organized = cfg.organized_root.exists().then_some(cfg.organized_root.as_path());
    let archives = cfg.archive_root.exists().then_some(cfg.archive_root.as_path());
    let hourly = HourlyObservations::scan(organized, archives, cfg.distribution)?;
    let files = render_outputs(&flight, &hourly, cfg.distribution, &res.stats);
    write_outputs(&cfg.stats_root, &files)?;
    Ok(files)
}

/// Per-task counts without timings, sorted by stage and input.
pub fn counts_manifest(results: &[TaskResult]) -> String {
    let mut rows: Vec<String> = results
        .iter()
        .map(|r| {
            let c: Vec<String> = r.counts.iter().map(|(k, v)| format!("{k}={v}")).collect();
            format!("{}\t{}\t{}\t{}", r.spec.stage, r.spec.input, r.outcome.label(), c.join(";"))
        })
        .collect();
    rows.sort();
    let mut s = String::from("stage\tinputRef\toutcome\tcounts\n");
    for r in rows {
        let _ = writeln!(s, "{r}");
    }
    s
}

/// Writes `<stage>_report.tsv` and `<stage>_report.txt` under the report root.
pub fn write_stage_report(cfg: &PipelineConfig, name: &str, results: &[TaskResult]) -> Result<(), WorkflowError> {
    fs::create_dir_all(&cfg.report_root).map_err(|source| WorkflowError::Io { path: cfg.report_root.clone(), source })?;
    let tsv = cfg.report_root.join(format!("{name}_report.tsv"));
    fs::write(&tsv, report_tsv(results)).map_err(|source| WorkflowError::Io { path: tsv.clone(), source })?;
    let table = summarize(results).map(|s| report_table(&s)).unwrap_or_else(|| "no tasks\n".to_string());
    let txt = cfg.report_root.join(format!("{name}_report.txt"));
    fs::write(&txt, table).map_err(|source| WorkflowError::Io { path: txt.clone(), source })?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct E2eOutcome {
    pub results: Vec<TaskResult>,
    pub manifest: String,
    pub failed: usize,
}

/// organize, pack, process and stats in sequence. Reports go to the report
/// root, including `counts_manifest.tsv`.
pub fn run_e2e(cfg: &PipelineConfig, res: &Resources) -> Result<E2eOutcome, WorkflowError> {
    let mut all = Vec::new();
    for stage in [Stage::Organize, Stage::Pack, Stage::Process] {
        let tasks = stage_plan(stage, cfg)?;
        let results = run_stage(stage, &tasks, cfg, res);
        write_stage_report(cfg, stage.as_str(), &results)?;
        all.extend(results);
    }
    run_stats(cfg, res)?;
    write_stage_report(cfg, "e2e", &all)?;
    let manifest = counts_manifest(&all);
    let path = cfg.report_root.join("counts_manifest.tsv");
    fs::write(&path, &manifest).map_err(|source| WorkflowError::Io { path: path.clone(), source })?;
    let failed = all.iter().filter(|r| r.outcome.label() == "failed").count();
    Ok(E2eOutcome { results: all, manifest, failed })
}
