//! Benchmark corpora, planner matrices and metrics.
//!
//! A matrix cell is one (problem, planner, seed) run. Cells run in parallel,
//! results are written sorted by cell id, and reruns skip cells already
//! present in `results.jsonl`. Wall times go to `timings.jsonl` so the result
//! and summary files are reproducible byte for byte.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::geometry::RngHandle;
use crate::grid::OracleProvider;
use crate::guidance::GuidanceProvider;
use crate::nirrt::{plan, NirrtConfig, PlannerKind};
use crate::problems::{center_block_optimal_cost, flanking_cost, group_label, Family};
use crate::record::RunRecord;
use crate::remote::{RemoteProvider, DEFAULT_TIMEOUT};
use crate::visibility::shortest_path_cost;
use crate::world::ProblemInstance;

pub const RELATIVE_COST_CHECKPOINTS: [usize; 5] = [0, 250, 500, 1000, 1500];
pub const THRESHOLD_TOLERANCE: f64 = 0.02;
pub const RESULTS_FILE: &str = "results.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const TIMINGS_FILE: &str = "timings.jsonl";

/// First iteration with `c_best <= (1 + tol) * c_opt`.
pub fn metric_iters_to_threshold(record: &RunRecord, c_opt: f64, tol: f64) -> Option<usize> {
    assert!(c_opt > 0.0, "optimal cost must be positive");
    let bar = (1.0 + tol) * c_opt;
    record.trace.iter().find(|p| p.cost <= bar).map(|p| p.iteration)
}

/// First iteration whose best cost beats the flanking cost (strictly), which
/// certifies a route through the gap.
pub fn metric_through_gap(record: &RunRecord, flanking: f64) -> Option<usize> {
    record.trace.iter().find(|p| p.cost < flanking).map(|p| p.iteration)
}

/// Mean ratio of cost at `first solution + checkpoint` to the RRT* initial
/// cost on the same problem and seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelativeCostRow {
    pub planner: String,
    pub checkpoint: usize,
    pub mean: f64,
    pub n: usize,
    /// Runs without a solution, without a baseline, or whose checkpoint lies
    /// past the iteration budget.
    pub excluded: usize,
}

pub fn metric_relative_cost(records: &[&RunRecord], checkpoints: &[usize]) -> Vec<RelativeCostRow> {
    let baseline: HashMap<(&str, u64), f64> = records
        .iter()
        .filter(|r| r.planner == PlannerKind::RrtStar.id())
        .filter_map(|r| r.first_solution().map(|p| ((r.problem.as_str(), r.seed), p.cost)))
        .collect();
    let planners: BTreeSet<&str> = records.iter().map(|r| r.planner.as_str()).collect();
    let mut rows = Vec::new();
    for planner in planners {
        for &dc in checkpoints {
            let (mut sum, mut n, mut excluded) = (0.0, 0usize, 0usize);
            for r in records.iter().filter(|r| r.planner == planner) {
                let base = baseline.get(&(r.problem.as_str(), r.seed));
                match (r.first_solution(), base) {
                    (Some(first), Some(&b)) if first.iteration + dc <= r.iterations => {
                        sum += r.cost_at(first.iteration + dc) / b;
                        n += 1;
                    }
                    _ => excluded += 1,
                }
            }
            rows.push(RelativeCostRow {
                planner: planner.to_string(),
                checkpoint: dc,
                mean: if n > 0 { sum / n as f64 } else { f64::NAN },
                n,
                excluded,
            });
        }
    }
    rows
}

/// Reference costs known for a problem.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub optimal: Option<f64>,
    pub flanking: Option<f64>,
}

/// Optimal cost for center blocks and narrow passages, and the flanking cost
/// for narrow passages.
pub fn reference_for(family: Option<Family>, problem: &ProblemInstance) -> Reference {
    match family {
        Some(Family::CenterBlock) => Reference {
            optimal: Some(center_block_optimal_cost(problem)),
            flanking: None,
        },
        Some(Family::NarrowPassage) => Reference {
            optimal: shortest_path_cost(&problem.world, &problem.start, &problem.goal)
                .ok()
                .flatten(),
            flanking: flanking_cost(problem).ok().flatten(),
        },
        _ => Reference::default(),
    }
}

/// A corpus problem and its id (the file stem).
#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub id: String,
    pub problem: ProblemInstance,
}

/// Writes `count` problems named `<family>_<seed>.json`, problem `k` seeded
/// with `seed + k`.
pub fn gen_corpus(family: Family, count: usize, seed: u64, out: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out)?;
    let mut paths = Vec::with_capacity(count);
    for k in 0..count {
        let s = seed + k as u64;
        let mut rng = RngHandle::new(s);
        // the k-th problem of a family cycles its map width or gap height
        let problem = gen_nth(family, k, &mut rng)?;
        let path = out.join(format!("{}_{s}.json", family.id()));
        problem.save(&path)?;
        paths.push(path);
    }
    Ok(paths)
}

fn gen_nth(family: Family, k: usize, rng: &mut RngHandle) -> Result<ProblemInstance> {
    use crate::problems::*;
    use rand::Rng;
    match family {
        Family::CenterBlock => {
            let w = rng.random_range(CENTER_BLOCK_WIDTH.0..CENTER_BLOCK_WIDTH.1);
            gen_center_block(CENTER_BLOCK_MAP_WIDTHS[k % CENTER_BLOCK_MAP_WIDTHS.len()], w, rng)
        }
        Family::NarrowPassage => gen_narrow_passage(NARROW_PASSAGE_GAPS[k % NARROW_PASSAGE_GAPS.len()], rng),
        _ => Ok(gen_family(family, 1, rng)?.remove(0)),
    }
}

/// All `*.json` problems in a directory, sorted by id.
pub fn load_corpus(dir: &Path) -> Result<Vec<CorpusEntry>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| contract(format!("bad corpus file name {}", path.display())))?
            .to_string();
        out.push(CorpusEntry {
            id,
            problem: ProblemInstance::load(&path)?,
        });
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}

/// Guidance source for guided planners.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProviderSpec {
    Oracle,
    Remote(String),
}

impl ProviderSpec {
    /// `oracle` or `remote:URL`.
    pub fn parse(s: &str) -> Option<Self> {
        if s == "oracle" {
            Some(Self::Oracle)
        } else {
            s.strip_prefix("remote:").map(|u| Self::Remote(u.to_string()))
        }
    }

    pub fn build(&self, problem: &ProblemInstance, eta: f64) -> Box<dyn GuidanceProvider> {
        match self {
            Self::Oracle => Box::new(OracleProvider::new(&problem.world, eta)),
            Self::Remote(url) => Box::new(RemoteProvider::new(url.clone(), DEFAULT_TIMEOUT)),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub planners: Vec<PlannerKind>,
    pub seeds: Vec<u64>,
    /// Overrides the per-dimension default budget.
    pub iterations: Option<usize>,
    pub alpha: f64,
    pub provider: ProviderSpec,
    /// Overrides the guidance cloud size.
    pub cloud_size: Option<usize>,
}

impl BenchConfig {
    pub fn new(planners: Vec<PlannerKind>, seeds: usize) -> Self {
        Self {
            planners,
            seeds: (0..seeds as u64).collect(),
            iterations: None,
            alpha: crate::nirrt::DEFAULT_ALPHA,
            provider: ProviderSpec::Oracle,
            cloud_size: None,
        }
    }

    pub fn planner_config(&self, problem: &ProblemInstance) -> NirrtConfig {
        let mut cfg = NirrtConfig::for_problem(problem);
        if let Some(n) = self.iterations {
            cfg.planner.max_iterations = n;
        }
        if let Some(n) = self.cloud_size {
            cfg.guide.n_points = n;
        }
        cfg.alpha = self.alpha;
        cfg
    }
}

/// Per-cell metrics derived from the record and references.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub first_solution: Option<usize>,
    pub final_cost: Option<f64>,
    pub iters_to_threshold: Option<usize>,
    pub through_gap: Option<usize>,
}

impl CellMetrics {
    pub fn compute(record: &RunRecord, reference: &Reference) -> Self {
        Self {
            first_solution: record.first_solution().map(|p| p.iteration),
            final_cost: record.trace.last().map(|p| p.cost),
            iters_to_threshold: reference
                .optimal
                .and_then(|c| metric_iters_to_threshold(record, c, THRESHOLD_TOLERANCE)),
            through_gap: reference.flanking.and_then(|f| metric_through_gap(record, f)),
        }
    }
}

/// One line of `results.jsonl`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cell: String,
    pub problem: String,
    pub family: Option<Family>,
    pub group: String,
    pub planner: String,
    pub seed: u64,
    pub reference: Reference,
    pub metrics: CellMetrics,
    pub error: Option<String>,
    pub record: Option<RunRecord>,
}

pub fn cell_id(problem: &str, planner: &str, seed: u64) -> String {
    format!("{problem}|{planner}|{seed:06}")
}

/// 64-bit FNV-1a, used to derive stable per-problem seeds.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// RNG seed of a cell: shared by all planners on the same problem and seed.
pub fn cell_seed(problem: &str, seed: u64) -> u64 {
    fnv1a(problem.as_bytes()) ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

struct Job<'a> {
    entry: &'a CorpusEntry,
    family: Option<Family>,
    group: String,
    reference: &'a Reference,
    provider: Option<&'a dyn GuidanceProvider>,
    planner: PlannerKind,
    seed: u64,
}

fn run_job(job: &Job<'_>, cfg: &BenchConfig) -> CellResult {
    let id = cell_id(&job.entry.id, job.planner.id(), job.seed);
    let outcome = catch_unwind(AssertUnwindSafe(|| {
        let pcfg = cfg.planner_config(&job.entry.problem);
        let mut rng = RngHandle::new(cell_seed(&job.entry.id, job.seed));
        plan(&job.entry.problem, job.planner, job.provider, &pcfg, &mut rng)
    }));
    let (record, error) = match outcome {
        Ok(Ok(out)) => {
            let mut r = out.record;
            r.problem = job.entry.id.clone();
            r.seed = job.seed;
            (Some(r), None)
        }
        Ok(Err(e)) => (None, Some(e.to_string())),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".to_string());
            (None, Some(format!("panic: {msg}")))
        }
    };
    CellResult {
        cell: id,
        problem: job.entry.id.clone(),
        family: job.family,
        group: job.group.clone(),
        planner: job.planner.id().to_string(),
        seed: job.seed,
        reference: job.reference.clone(),
        metrics: record
            .as_ref()
            .map(|r| CellMetrics::compute(r, job.reference))
            .unwrap_or_default(),
        error,
        record,
    }
}

/// Reads `results.jsonl`, ignoring malformed lines.
pub fn read_results(dir: &Path) -> Result<Vec<CellResult>> {
    let path = dir.join(RESULTS_FILE);
    if !path.exists() {
        return Ok(Vec::new());
    }
    Ok(fs::read_to_string(path)?
        .lines()
        .filter_map(|l| serde_json::from_str(l).ok())
        .collect())
}

/// What a matrix run did.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatrixReport {
    pub total: usize,
    pub computed: usize,
    pub failed: usize,
}

/// Runs every missing (problem, planner, seed) cell and rewrites the result,
/// timing and summary files.
pub fn run_matrix(corpus: &[CorpusEntry], cfg: &BenchConfig, out: &Path) -> Result<MatrixReport> {
    run_matrix_with(corpus, cfg, out, |problem, eta| cfg.provider.build(problem, eta))
}

/// [`run_matrix`] with a custom provider per problem.
pub fn run_matrix_with(
    corpus: &[CorpusEntry],
    cfg: &BenchConfig,
    out: &Path,
    make_provider: impl Fn(&ProblemInstance, f64) -> Box<dyn GuidanceProvider>,
) -> Result<MatrixReport> {
    fs::create_dir_all(out)?;
    let mut done: BTreeMap<String, CellResult> = read_results(out)?
        .into_iter()
        .filter(|r| r.error.is_none())
        .map(|r| (r.cell.clone(), r))
        .collect();

    let families: Vec<Option<Family>> = corpus.iter().map(|e| Family::of_problem_id(&e.id)).collect();
    let references: Vec<Reference> = corpus
        .iter()
        .zip(&families)
        .map(|(e, f)| reference_for(*f, &e.problem))
        .collect();
    let needs_guidance = cfg.planners.iter().any(|p| p.needs_provider());
    let providers: Vec<Option<Box<dyn GuidanceProvider>>> = corpus
        .iter()
        .map(|e| {
            needs_guidance.then(|| {
                let eta = cfg.planner_config(&e.problem).guide.eta;
                make_provider(&e.problem, eta)
            })
        })
        .collect();

    let mut jobs = Vec::new();
    let mut total = 0;
    for (k, entry) in corpus.iter().enumerate() {
        let group = families[k].map_or_else(|| "all".to_string(), |f| group_label(f, &entry.problem));
        for &planner in &cfg.planners {
            for &seed in &cfg.seeds {
                total += 1;
                if done.contains_key(&cell_id(&entry.id, planner.id(), seed)) {
                    continue;
                }
                jobs.push(Job {
                    entry,
                    family: families[k],
                    group: group.clone(),
                    reference: &references[k],
                    provider: providers[k].as_deref(),
                    planner,
                    seed,
                });
            }
        }
    }
    log::info!("{} of {total} cells to run", jobs.len());
    let fresh: Vec<CellResult> = jobs.par_iter().map(|j| run_job(j, cfg)).collect();
    let computed = fresh.len();
    let failed = fresh.iter().filter(|r| r.error.is_some()).count();

    let mut timings = String::new();
    for r in &fresh {
        if let Some(rec) = &r.record {
            let line = serde_json::json!({ "cell": r.cell, "wall_ms": rec.wall_ms });
            writeln!(timings, "{line}").expect("writing to a string");
        }
    }
    if !timings.is_empty() {
        use std::io::Write;
        fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(out.join(TIMINGS_FILE))?
            .write_all(timings.as_bytes())?;
    }
    for r in fresh {
        done.insert(r.cell.clone(), r);
    }
    let results: Vec<CellResult> = done.into_values().collect();
    write_results(out, &results)?;
    fs::write(out.join(SUMMARY_FILE), summarize(&results))?;
    Ok(MatrixReport {
        total,
        computed,
        failed,
    })
}

fn write_results(out: &Path, results: &[CellResult]) -> Result<()> {
    let mut text = String::new();
    for r in results {
        text.push_str(&serde_json::to_string(r)?);
        text.push('\n');
    }
    fs::write(out.join(RESULTS_FILE), text)?;
    Ok(())
}

/// Censored-sample statistics: the median treats missing values as +inf;
/// mean and 95% normal-approximation interval use observed values only.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aggregate {
    pub n: usize,
    pub reached: usize,
    pub mean: f64,
    pub ci95: f64,
    pub median: f64,
}

pub fn aggregate(values: &[Option<f64>]) -> Aggregate {
    let n = values.len();
    let seen: Vec<f64> = values.iter().flatten().copied().collect();
    let reached = seen.len();
    let mean = if reached > 0 {
        seen.iter().sum::<f64>() / reached as f64
    } else {
        f64::NAN
    };
    let ci95 = if reached > 1 {
        let var = seen.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reached - 1) as f64;
        1.96 * (var / reached as f64).sqrt()
    } else {
        f64::NAN
    };
    let mut all: Vec<f64> = values.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect();
    all.sort_by(f64::total_cmp);
    let median = match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => all[n / 2],
        _ => {
            let (a, b) = (all[n / 2 - 1], all[n / 2]);
            if a.is_infinite() || b.is_infinite() {
                f64::INFINITY
            } else {
                (a + b) / 2.0
            }
        }
    };
    Aggregate {
        n,
        reached,
        mean,
        ci95,
        median,
    }
}

fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else if v.is_infinite() {
        "inf".to_string()
    } else {
        format!("{v:.6}")
    }
}

/// `summary.csv` contents for a set of results.
pub fn summarize(results: &[CellResult]) -> String {
    type Key = (String, String, String);
    let mut groups: BTreeMap<Key, Vec<&CellResult>> = BTreeMap::new();
    for r in results {
        let fam = r.family.map_or("other", Family::id).to_string();
        groups
            .entry((fam, r.group.clone(), r.planner.clone()))
            .or_default()
            .push(r);
    }
    let mut csv = String::from("family,group,planner,metric,n,reached,mean,ci95,median\n");
    let mut row = |key: &Key, metric: &str, a: Aggregate| {
        let _ = writeln!(
            csv,
            "{},{},{},{metric},{},{},{},{},{}",
            key.0,
            key.1,
            key.2,
            a.n,
            a.reached,
            fmt_num(a.mean),
            fmt_num(a.ci95),
            fmt_num(a.median)
        );
    };
    for (key, cells) in &groups {
        let col = |f: &dyn Fn(&CellMetrics) -> Option<f64>| -> Vec<Option<f64>> {
            cells.iter().map(|c| f(&c.metrics)).collect()
        };
        row(
            key,
            "failed_cells",
            aggregate(&cells.iter().map(|c| c.error.as_ref().map(|_| 1.0)).collect::<Vec<_>>()),
        );
        row(
            key,
            "first_solution_iter",
            aggregate(&col(&|m| m.first_solution.map(|v| v as f64))),
        );
        row(key, "final_cost", aggregate(&col(&|m| m.final_cost)));
        if cells.iter().any(|c| c.reference.optimal.is_some()) {
            row(
                key,
                "iters_to_2pct",
                aggregate(&col(&|m| m.iters_to_threshold.map(|v| v as f64))),
            );
        }
        if cells.iter().any(|c| c.reference.flanking.is_some()) {
            row(
                key,
                "iters_through_gap",
                aggregate(&col(&|m| m.through_gap.map(|v| v as f64))),
            );
        }
    }
    let mut by_family: BTreeMap<String, Vec<&RunRecord>> = BTreeMap::new();
    for r in results {
        if let Some(rec) = &r.record {
            by_family
                .entry(r.family.map_or("other", Family::id).to_string())
                .or_default()
                .push(rec);
        }
    }
    for (fam, recs) in &by_family {
        for rc in metric_relative_cost(recs, &RELATIVE_COST_CHECKPOINTS) {
            let _ = writeln!(
                csv,
                "{fam},all,{},relative_cost@{},{},{},{},,",
                rc.planner,
                rc.checkpoint,
                rc.n + rc.excluded,
                rc.n,
                fmt_num(rc.mean)
            );
        }
    }
    csv
}

/// Recomputes `summary.csv` content from a results directory.
pub fn report(dir: &Path) -> Result<String> {
    Ok(summarize(&read_results(dir)?))
}
