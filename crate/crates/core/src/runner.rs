//! Worker pool for independent pipeline tasks.

use std::collections::BTreeMap;
use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Organize,
    Pack,
    Process,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Organize => "organize",
            Stage::Pack => "pack",
            Stage::Process => "process",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "organize" => Ok(Stage::Organize),
            "pack" => Ok(Stage::Pack),
            "process" => Ok(Stage::Process),
            _ => Err(format!("unknown stage {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Contiguous equal-count blocks, one per worker.
    StaticUniform,
    /// Workers pull the next task from a shared queue.
    #[default]
    DynamicQueue,
    /// Shared queue ordered by descending size hint.
    SizeSortedDynamic,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::StaticUniform, Strategy::DynamicQueue, Strategy::SizeSortedDynamic];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::StaticUniform => "static-uniform",
            Strategy::DynamicQueue => "dynamic-queue",
            Strategy::SizeSortedDynamic => "size-sorted-dynamic",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| format!("unknown strategy {s:?} (static-uniform, dynamic-queue, size-sorted-dynamic)"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskSpec {
    pub stage: Stage,
    /// Path or hour stamp; unique within a plan.
    pub input: String,
    /// Bytes or file count.
    pub size_hint: Option<u64>,
}

pub type Counts = BTreeMap<String, u64>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    Skipped,
    Failed(String),
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Ok => "ok",
            Outcome::Skipped => "skipped",
            Outcome::Failed(_) => "failed",
        }
    }
}

/// What a task body returns on success.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TaskOutput {
    pub counts: Counts,
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskResult {
    pub spec: TaskSpec,
    /// Seconds.
    pub elapsed: f64,
    pub counts: Counts,
    pub outcome: Outcome,
}

/// One task per input in input order. Repeated inputs are dropped with a
/// warning; an empty plan is logged.
pub fn plan(stage: Stage, inputs: impl IntoIterator<Item = (String, Option<u64>)>) -> Vec<TaskSpec> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for (input, size_hint) in inputs {
        if !seen.insert(input.clone()) {
            log::warn!("duplicate {stage} input {input} ignored");
            continue;
        }
        out.push(TaskSpec { stage, input, size_hint });
    }
    if out.is_empty() {
        log::warn!("{stage}: nothing to do");
    }
    out
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = p.downcast_ref::<String>() {
        s.clone()
    } else {
        "panic".to_string()
    }
}

/// Order in which a single shared queue hands out tasks.
fn queue_order(plan: &[TaskSpec], strategy: Strategy) -> Vec<usize> {
    let mut order: Vec<usize> = (0..plan.len()).collect();
    if strategy == Strategy::SizeSortedDynamic {
        order.sort_by_key(|&i| std::cmp::Reverse(plan[i].size_hint.unwrap_or(0)));
    }
    order
}

/// Contiguous block of task indices for worker `w` of `workers`.
fn block(n: usize, workers: usize, w: usize) -> std::ops::Range<usize> {
    (w * n / workers)..((w + 1) * n / workers)
}

/// Runs every task exactly once on `workers` threads. A task that returns an
/// error or panics is marked failed; the others are unaffected. Results are
/// returned in plan order.
pub fn execute<F>(plan: &[TaskSpec], workers: usize, strategy: Strategy, body: F) -> Vec<TaskResult>
where
    F: Fn(&TaskSpec) -> Result<TaskOutput, String> + Sync,
{
    let workers = workers.max(1).min(plan.len().max(1));
    let slots: Vec<Mutex<Option<TaskResult>>> = plan.iter().map(|_| Mutex::new(None)).collect();
    let run_one = |i: usize| {
        let spec = &plan[i];
        let start = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(|| body(spec)));
        let elapsed = start.elapsed().as_secs_f64();
        let (counts, outcome) = match r {
            Ok(Ok(out)) => (out.counts, if out.skipped { Outcome::Skipped } else { Outcome::Ok }),
            Ok(Err(e)) => (Counts::new(), Outcome::Failed(e)),
            Err(p) => (Counts::new(), Outcome::Failed(format!("panicked: {}", panic_message(p)))),
        };
        if let Outcome::Failed(e) = &outcome {
            log::error!("{} {} failed: {e}", spec.stage, spec.input);
        }
        *slots[i].lock().unwrap_or_else(|e| e.into_inner()) = Some(TaskResult { spec: spec.clone(), elapsed, counts, outcome });
    };

    let order = queue_order(plan, strategy);
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for w in 0..workers {
            let run_one = &run_one;
            let order = &order;
            let next = &next;
            s.spawn(move || match strategy {
                Strategy::StaticUniform => block(plan.len(), workers, w).for_each(run_one),
                Strategy::DynamicQueue | Strategy::SizeSortedDynamic => loop {
                    let k = next.fetch_add(1, Ordering::Relaxed);
                    let Some(&i) = order.get(k) else { break };
                    run_one(i);
                },
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap_or_else(|e| e.into_inner()).expect("every task ran"))
        .collect()
}

/// Makespan of running tasks with the given durations under a strategy,
/// using the durations as size hints. Queue strategies hand each task to the
/// earliest-free worker.
pub fn simulate_makespan(durations: &[f64], workers: usize, strategy: Strategy) -> f64 {
    let workers = workers.max(1);
    if strategy == Strategy::StaticUniform {
        return (0..workers)
            .map(|w| block(durations.len(), workers, w).map(|i| durations[i]).sum::<f64>())
            .fold(0.0, f64::max);
    }
    let mut order: Vec<usize> = (0..durations.len()).collect();
    if strategy == Strategy::SizeSortedDynamic {
        order.sort_by(|&a, &b| durations[b].total_cmp(&durations[a]));
    }
    let mut free = vec![0.0f64; workers];
    for i in order {
        let w = (0..workers).min_by(|&a, &b| free[a].total_cmp(&free[b])).expect("workers >= 1");
        free[w] += durations[i];
    }
    free.into_iter().fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub tasks: usize,
    pub ok: usize,
    pub skipped: usize,
    pub failed: usize,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub total_elapsed: f64,
    pub totals: Counts,
}

/// `None` for an empty result list.
pub fn summarize(results: &[TaskResult]) -> Option<RunSummary> {
    if results.is_empty() {
        return None;
    }
    let mut t: Vec<f64> = results.iter().map(|r| r.elapsed).collect();
    t.sort_by(f64::total_cmp);
    let n = t.len();
    let median = if n % 2 == 1 { t[n / 2] } else { (t[n / 2 - 1] + t[n / 2]) / 2.0 };
    let total: f64 = t.iter().sum();
    let mut totals = Counts::new();
    for r in results {
        for (k, v) in &r.counts {
            *totals.entry(k.clone()).or_default() += v;
        }
    }
    let count = |label: &str| results.iter().filter(|r| r.outcome.label() == label).count();
    Some(RunSummary {
        tasks: n,
        ok: count("ok"),
        skipped: count("skipped"),
        failed: count("failed"),
        mean: total / n as f64,
        median,
        min: t[0],
        max: t[n - 1],
        total_elapsed: total,
        totals,
    })
}

pub const REPORT_HEADER: &str = "stage\tinputRef\telapsed_s\toutcome\tcounts\terror";

fn clean(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

/// Machine-readable report, one row per task.
pub fn report_tsv(results: &[TaskResult]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in results {
        let counts: Vec<String> = r.counts.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let err = match &r.outcome {
            Outcome::Failed(e) => clean(e),
            _ => String::new(),
        };
        out.push_str(&format!(
            "{}\t{}\t{:.6}\t{}\t{}\t{}\n",
            r.spec.stage,
            clean(&r.spec.input),
            r.elapsed,
            r.outcome.label(),
            counts.join(";"),
            err
        ));
    }
    out
}

/// Stage and input of every failed row of a report.
pub fn failed_from_report(text: &str) -> Result<Vec<(Stage, String)>, String> {
    let mut lines = text.lines();
    if lines.next() != Some(REPORT_HEADER) {
        return Err("not a run report".into());
    }
    let mut out = Vec::new();
    for l in lines.filter(|l| !l.is_empty()) {
        let c: Vec<&str> = l.split('\t').collect();
        if c.len() < 4 {
            return Err(format!("malformed report row {l:?}"));
        }
        if c[3] == "failed" {
            out.push((c[0].parse()?, c[1].to_string()));
        }
    }
    Ok(out)
}

/// Human-readable summary table.
pub fn report_table(summary: &RunSummary) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "tasks {}  ok {}  skipped {}  failed {}\n",
        summary.tasks, summary.ok, summary.skipped, summary.failed
    ));
    s.push_str(&format!(
        "elapsed s: mean {:.3}  median {:.3}  min {:.3}  max {:.3}  total {:.3}\n",
        summary.mean, summary.median, summary.min, summary.max, summary.total_elapsed
    ));
    let width = summary.totals.keys().map(String::len).max().unwrap_or(0);
    for (k, v) in &summary.totals {
        s.push_str(&format!("  {k:<width$}  {v}\n"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn specs(n: usize) -> Vec<TaskSpec> {
        plan(Stage::Organize, (0..n).map(|i| (format!("t{i:03}"), Some(i as u64))))
    }

    fn body(spec: &TaskSpec) -> Result<TaskOutput, String> {
        let n: u64 = spec.input[1..].parse().unwrap();
        if n == 7 {
            panic!("boom");
        }
        Ok(TaskOutput { counts: [("x".to_string(), n * 3)].into(), skipped: false })
    }

    #[test]
    fn plans() {
        assert_eq!(specs(24).len(), 24);
        assert_eq!(specs(2002).len(), 2002);
        let dup = plan(Stage::Pack, vec![("a".into(), None), ("a".into(), None)]);
        assert_eq!(dup.len(), 1);
        assert!(plan(Stage::Pack, Vec::new()).is_empty());
    }

    #[test]
    fn exactly_once_with_isolated_failure() {
        let p = specs(20);
        for strategy in Strategy::ALL {
            for workers in [1, 2, 8] {
                let r = execute(&p, workers, strategy, body);
                assert_eq!(r.len(), 20);
                for (res, spec) in r.iter().zip(&p) {
                    assert_eq!(&res.spec, spec);
                }
                assert_eq!(r.iter().filter(|x| matches!(x.outcome, Outcome::Failed(_))).count(), 1);
                let s = summarize(&r).unwrap();
                assert_eq!(s.totals["x"], (0..20u64).filter(|&i| i != 7).map(|i| i * 3).sum::<u64>());
            }
        }
    }

    #[test]
    fn makespans() {
        let d = [1.0, 1.0, 1.0, 1.0, 100.0];
        let s = simulate_makespan(&d, 2, Strategy::StaticUniform);
        let q = simulate_makespan(&d, 2, Strategy::DynamicQueue);
        let z = simulate_makespan(&d, 2, Strategy::SizeSortedDynamic);
        assert_eq!(s, 102.0);
        assert!(q <= s);
        assert_eq!(z, 100.0);
        assert_eq!(simulate_makespan(&[3.0; 10], 1, Strategy::DynamicQueue), 30.0);
    }

    #[test]
    fn summary_statistics() {
        let mk = |e: f64| TaskResult {
            spec: TaskSpec { stage: Stage::Organize, input: format!("{e}"), size_hint: None },
            elapsed: e,
            counts: Counts::new(),
            outcome: Outcome::Ok,
        };
        let s = summarize(&[mk(2153.0), mk(23.0), mk(538.0)]).unwrap();
        assert_eq!((s.min, s.median, s.max), (23.0, 538.0, 2153.0));
        assert!((s.mean - 904.6666666666666).abs() < 1e-9);
        let one = summarize(&[mk(5.0)]).unwrap();
        assert_eq!((one.min, one.median, one.max, one.mean), (5.0, 5.0, 5.0, 5.0));
        assert!(summarize(&[]).is_none());
    }

    #[test]
    fn report_roundtrip_lists_failures() {
        let p = specs(10);
        let r = execute(&p, 2, Strategy::DynamicQueue, body);
        let tsv = report_tsv(&r);
        assert_eq!(tsv.lines().count(), 11);
        assert_eq!(failed_from_report(&tsv).unwrap(), vec![(Stage::Organize, "t007".to_string())]);
        assert!(report_table(&summarize(&r).unwrap()).contains("failed 1"));
    }
}
