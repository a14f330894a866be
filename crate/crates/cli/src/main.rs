use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use aerocorpus::config::{ConfigError, PipelineConfig};
use aerocorpus::geo::geojson::{polygon_to_geojson, read_points};
use aerocorpus::geo::{buffer_polygon, convex_hull};
use aerocorpus::ingest::{fetch_day, FetchOptions};
use aerocorpus::runner::{failed_from_report, plan, report_table, summarize, Stage, Strategy, TaskResult};
use aerocorpus::stats::{flight_stats, render_outputs, write_outputs, DistributionMode, HourlyObservations, StatsConfig};
use aerocorpus::workflow::{run_e2e, run_stage, run_stats, stage_plan, write_stage_report, Resources};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

const LONG_VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    " (",
    env!("CARGO_PKG_NAME"),
    ", rustc target ",
    env!("AEROCORPUS_TARGET"),
    ", ",
    env!("AEROCORPUS_PROFILE"),
    ")"
);

#[derive(Parser)]
#[command(name = "aerocorpus", version, long_version = LONG_VERSION, arg_required_else_help = true)]
#[command(about = "Organize, archive and refine aircraft surveillance observations")]
struct Cli {
    /// Log per-record warnings and per-task progress.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct PoolArgs {
    /// Pipeline configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Worker threads (overrides the config).
    #[arg(long)]
    workers: Option<usize>,
    /// static-uniform, dynamic-queue or size-sorted-dynamic.
    #[arg(long)]
    strategy: Option<Strategy>,
    /// Rerun only the failed tasks listed in a previous run report.
    #[arg(long, value_name = "REPORT")]
    retry_failed: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Download one day of hourly raw files.
    Fetch {
        /// Day to fetch, YYYY-MM-DD.
        #[arg(long)]
        date: chrono::NaiveDate,
        /// URL template with {date} and {hour}.
        #[arg(long)]
        endpoint: String,
        /// Destination directory; a per-day subdirectory is created.
        #[arg(long)]
        dest: PathBuf,
        /// URL template of SHA-256 sidecar files.
        #[arg(long)]
        checksum: Option<String>,
        /// Per-request timeout in seconds.
        #[arg(long, default_value_t = 300)]
        timeout: u64,
    },
    /// Parse, filter and organize hourly raw files into the hierarchy.
    Organize(PoolArgs),
    /// Pack each bottom-tier directory into a zip archive.
    Pack(PoolArgs),
    /// Refine archived observations into 1 Hz track segments.
    Process(PoolArgs),
    /// Compute type distribution, flight-hour and histogram tables.
    Stats {
        #[arg(long, conflicts_with_all = ["processed", "out"])]
        config: Option<PathBuf>,
        /// Directory of processed per-aircraft files.
        #[arg(long, required_unless_present = "config")]
        processed: Option<PathBuf>,
        /// Output directory.
        #[arg(long, required_unless_present = "config")]
        out: Option<PathBuf>,
        /// Histogram binning configuration.
        #[arg(long)]
        bins: Option<PathBuf>,
        /// Organized hierarchy for the type distribution.
        #[arg(long)]
        organized: Option<PathBuf>,
        /// Archive root for the type distribution.
        #[arg(long)]
        archives: Option<PathBuf>,
        /// Report observation shares instead of presence fractions.
        #[arg(long)]
        observation_share: bool,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Run organize, pack, process and stats in sequence.
    E2e(PoolArgs),
    /// Run a single stage on the worker pool.
    Run {
        /// organize, pack or process.
        #[arg(long)]
        stage: Stage,
        #[command(flatten)]
        pool: PoolArgs,
    },
    /// Convex hull of GeoJSON points, buffered outward, as a GeoJSON polygon.
    BuildPolygon {
        /// GeoJSON file with point geometries.
        #[arg(long)]
        points: PathBuf,
        /// Buffer distance in nautical miles.
        #[arg(long, default_value_t = 0.0)]
        buffer_nm: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Failures that map to a dedicated exit code.
#[derive(Debug)]
enum Failure {
    Config(String),
    Tasks(usize),
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => f.write_str(m),
            Failure::Tasks(n) => write!(f, "{n} task(s) failed; see the run report"),
        }
    }
}

impl std::error::Error for Failure {}

fn load_config(pool: &PoolArgs) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::load(&pool.config).map_err(|e: ConfigError| Failure::Config(e.to_string()))?;
    if let Some(w) = pool.workers {
        cfg.workers = w.max(1);
    }
    if let Some(s) = pool.strategy {
        cfg.strategy = s;
    }
    Ok(cfg)
}

fn append_log(cfg: &PipelineConfig, results: &[TaskResult]) -> Result<()> {
    std::fs::create_dir_all(&cfg.report_root)?;
    let path = cfg.report_root.join("run.log");
    let mut f = OpenOptions::new().create(true).append(true).open(&path).with_context(|| path.display().to_string())?;
    let now = chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ");
    for r in results {
        writeln!(f, "{now}\t{}\t{}\t{}\t{:.3}", r.spec.stage, r.spec.input, r.outcome.label(), r.elapsed)?;
    }
    Ok(())
}

fn print_summary(name: &str, results: &[TaskResult]) {
    match summarize(results) {
        Some(s) => print!("{name}\n{}", report_table(&s)),
        None => println!("{name}: no tasks"),
    }
}

fn finish(results: &[TaskResult]) -> Result<()> {
    let failed = results.iter().filter(|r| r.outcome.label() == "failed").count();
    if failed > 0 {
        return Err(Failure::Tasks(failed).into());
    }
    Ok(())
}

fn stage_command(stage: Stage, pool: &PoolArgs) -> Result<()> {
    let cfg = load_config(pool)?;
    let res = Resources::load(&cfg)?;
    let tasks = match &pool.retry_failed {
        Some(report) => {
            let text = std::fs::read_to_string(report).with_context(|| report.display().to_string())?;
            let failed = failed_from_report(&text).map_err(anyhow::Error::msg)?;
            plan(stage, failed.into_iter().filter(|(s, _)| *s == stage).map(|(_, i)| (i, None)))
        }
        None => stage_plan(stage, &cfg)?,
    };
    let results = run_stage(stage, &tasks, &cfg, &res);
    write_stage_report(&cfg, stage.as_str(), &results)?;
    append_log(&cfg, &results)?;
    print_summary(stage.as_str(), &results);
    finish(&results)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fetch { date, endpoint, dest, checksum, timeout } => {
            let opts = FetchOptions { checksum_template: checksum, timeout: Duration::from_secs(timeout) };
            let r = fetch_day(date, &endpoint, &dest, &opts)?;
            for w in &r.warnings {
                log::warn!("{w}");
            }
            println!(
                "fetched {} up-to-date {} missing {} checksum-failures {}",
                r.downloaded.len(),
                r.up_to_date.len(),
                r.missing_hours.len(),
                r.checksum_failures.len()
            );
            Ok(())
        }
        Command::Organize(pool) => stage_command(Stage::Organize, &pool),
        Command::Pack(pool) => stage_command(Stage::Pack, &pool),
        Command::Process(pool) => stage_command(Stage::Process, &pool),
        Command::Run { stage, pool } => stage_command(stage, &pool),
        Command::E2e(pool) => {
            let cfg = load_config(&pool)?;
            let res = Resources::load(&cfg)?;
            let out = run_e2e(&cfg, &res)?;
            append_log(&cfg, &out.results)?;
            print_summary("e2e", &out.results);
            println!("stats written to {}", cfg.stats_root.display());
            finish(&out.results)
        }
        Command::Stats { config, processed, out, bins, organized, archives, observation_share, workers } => {
            if let Some(path) = config {
                let cfg = PipelineConfig::load(&path).map_err(|e| Failure::Config(e.to_string()))?;
                let res = Resources::load(&cfg)?;
                run_stats(&cfg, &res)?;
                println!("stats written to {}", cfg.stats_root.display());
                return Ok(());
            }
            let (processed, out) = (processed.expect("required by clap"), out.expect("required by clap"));
            let cfg = match bins {
                Some(b) => {
                    let text = std::fs::read_to_string(&b).with_context(|| b.display().to_string())?;
                    StatsConfig::from_config(&text).map_err(Failure::Config)?
                }
                None => StatsConfig::default(),
            };
            let mode = if observation_share { DistributionMode::ObservationShare } else { DistributionMode::Presence };
            let flight = flight_stats(&processed, &cfg, workers)?;
            let hourly = HourlyObservations::scan(organized.as_deref(), archives.as_deref(), mode)?;
            write_outputs(&out, &render_outputs(&flight, &hourly, mode, &cfg))?;
            println!("stats written to {}", out.display());
            Ok(())
        }
        Command::BuildPolygon { points, buffer_nm, out } => build_polygon(&points, buffer_nm, &out),
    }
}

fn build_polygon(points: &Path, buffer_nm: f64, out: &Path) -> Result<()> {
    let text = std::fs::read_to_string(points).with_context(|| points.display().to_string())?;
    let pts = read_points(&text)?;
    if pts.is_empty() {
        bail!("{}: no points", points.display());
    }
    let hull = convex_hull(&pts)?;
    let poly = buffer_polygon(&hull, buffer_nm)?;
    let mut props = serde_json::Map::new();
    props.insert("buffer_nm".into(), buffer_nm.into());
    props.insert("source_points".into(), pts.len().into());
    std::fs::write(out, polygon_to_geojson(&poly, props)).with_context(|| out.display().to_string())?;
    println!("polygon with {} vertices written to {}", poly.len(), out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => match e.downcast_ref::<Failure>() {
            Some(Failure::Config(m)) => {
                eprintln!("error[config]: {m}");
                ExitCode::from(3)
            }
            Some(f @ Failure::Tasks(_)) => {
                eprintln!("error[tasks]: {f}");
                ExitCode::from(1)
            }
            None => {
                eprintln!("error[runtime]: {e:#}");
                ExitCode::from(1)
            }
        },
    }
}
