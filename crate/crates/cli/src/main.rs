use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use nirrt_core::bench::{self, BenchConfig, ProviderSpec};
use nirrt_core::grid::training_record;
use nirrt_core::problems::{gen_random_world, Family, RandomWorldConfig};
use nirrt_core::remote::PROVIDER_URL_ENV;
use nirrt_core::{plan, NirrtConfig, PlannerKind, ProblemInstance, RngHandle};

#[derive(Parser)]
#[command(name = "nirrt", version, about = "Guided RRT* planners and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a corpus of problem files named <family>_<seed>.json.
    GenWorlds {
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one planner on one problem.
    Plan {
        #[arg(long)]
        world: PathBuf,
        #[arg(long, default_value = "nirrt-png-fc")]
        planner: String,
        /// `oracle` or `remote:URL`.
        #[arg(long, default_value = "oracle")]
        provider: String,
        /// Iteration budget; defaults to 3000 in 2D and 5000 in 3D.
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = nirrt_core::nirrt::DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every (problem, planner, seed) cell of a corpus; resumable.
    Bench {
        #[arg(long)]
        corpus: PathBuf,
        /// Comma-separated planner ids.
        #[arg(long, default_value = "rrt-star,irrt-star,nirrt-png-fc")]
        planners: String,
        #[arg(long, default_value_t = 10)]
        seeds: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long, default_value_t = nirrt_core::nirrt::DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, default_value = "oracle")]
        provider: String,
        /// Guidance cloud size override.
        #[arg(long)]
        cloud_size: Option<usize>,
        /// Worker threads (defaults to all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Write labelled point clouds for training a guidance model (JSON lines).
    GenTrainingData {
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// `random2d` or `random3d`.
        #[arg(long, default_value = "random2d")]
        family: String,
        #[arg(long, default_value_t = nirrt_core::guidance::DEFAULT_CLOUD_SIZE)]
        points: usize,
        /// Label radius; defaults to the planner step for the dimension.
        #[arg(long)]
        eta: Option<f64>,
    },
    /// Recompute the summary table of a bench output directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn provider_spec(s: &str) -> Result<ProviderSpec> {
    let spec = ProviderSpec::parse(s).ok_or_else(|| anyhow!("unknown provider {s:?}; use oracle or remote:URL"))?;
    Ok(match spec {
        ProviderSpec::Remote(url) => match std::env::var(PROVIDER_URL_ENV) {
            Ok(env) if !env.is_empty() => ProviderSpec::Remote(env),
            _ if url.is_empty() => bail!("remote provider needs a URL or {PROVIDER_URL_ENV}"),
            _ => ProviderSpec::Remote(url),
        },
        other => other,
    })
}

fn planner_kind(s: &str) -> Result<PlannerKind> {
    PlannerKind::parse(s.trim()).ok_or_else(|| {
        let ids: Vec<_> = PlannerKind::ALL.iter().map(|k| k.id()).collect();
        anyhow!("unknown planner {s:?}; expected one of {}", ids.join(", "))
    })
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::GenWorlds {
            family,
            count,
            seed,
            out,
        } => {
            let fam = Family::parse(&family).ok_or_else(|| anyhow!("unknown family {family:?}"))?;
            let paths = bench::gen_corpus(fam, count, seed, &out)?;
            println!("wrote {} problems to {}", paths.len(), out.display());
        }
        Command::Plan {
            world,
            planner,
            provider,
            iters,
            seed,
            alpha,
            out,
        } => {
            let problem = ProblemInstance::load(&world).with_context(|| format!("loading {}", world.display()))?;
            let kind = planner_kind(&planner)?;
            let mut cfg = NirrtConfig::for_problem(&problem);
            if let Some(n) = iters {
                cfg.planner.max_iterations = n;
            }
            cfg.alpha = alpha;
            let guidance = if kind.needs_provider() {
                Some(provider_spec(&provider)?.build(&problem, cfg.guide.eta))
            } else {
                None
            };
            let run = plan(&problem, kind, guidance.as_deref(), &cfg, &mut RngHandle::new(seed))?;
            let mut record = run.record;
            record.problem = world
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
            let doc = serde_json::json!({
                "record": record,
                "wall_ms": record.wall_ms,
                "path": run.best_path,
            });
            match out {
                Some(path) => fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n")?,
                None => println!("{}", serde_json::to_string_pretty(&doc)?),
            }
            eprintln!(
                "{}: final cost {} after {} iterations ({} vertices)",
                kind,
                record.final_cost(),
                record.iterations,
                record.vertices
            );
        }
        Command::Bench {
            corpus,
            planners,
            seeds,
            out,
            iters,
            alpha,
            provider,
            cloud_size,
            threads,
        } => {
            let kinds = planners.split(',').map(planner_kind).collect::<Result<Vec<_>>>()?;
            let mut cfg = BenchConfig::new(kinds, seeds);
            cfg.iterations = iters;
            cfg.alpha = alpha;
            cfg.cloud_size = cloud_size;
            cfg.provider = provider_spec(&provider)?;
            let entries = bench::load_corpus(&corpus)?;
            if entries.is_empty() {
                bail!("no problems found in {}", corpus.display());
            }
            let run = || bench::run_matrix(&entries, &cfg, &out);
            let report = match threads {
                Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(run)?,
                None => run()?,
            };
            println!(
                "{} cells: {} computed, {} failed; results in {}",
                report.total,
                report.computed,
                report.failed,
                out.display()
            );
        }
        Command::GenTrainingData {
            count,
            seed,
            out,
            family,
            points,
            eta,
        } => {
            let cfg = match Family::parse(&family) {
                Some(Family::Random2d) => RandomWorldConfig::planar(),
                Some(Family::Random3d) => RandomWorldConfig::spatial(),
                _ => bail!("training data needs random2d or random3d, got {family:?}"),
            };
            let eta = eta.unwrap_or(if cfg.dim == 3 { 5.0 } else { 10.0 });
            let mut file = std::io::BufWriter::new(fs::File::create(&out)?);
            let mut written = 0;
            for k in 0..count {
                let mut rng = RngHandle::new(seed + k as u64);
                let problem = gen_random_world(&cfg, &mut rng)?;
                if let Some(rec) = training_record(&problem, points, eta, &mut rng)? {
                    serde_json::to_writer(&mut file, &rec)?;
                    file.write_all(b"\n")?;
                    written += 1;
                }
            }
            file.flush()?;
            println!("wrote {written} records to {}", out.display());
        }
        Command::Report { input, out } => {
            fs::write(&out, bench::report(&input)?)?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}
