//! The `frontfill` command line: `fill`, `quality`, `bench` and `solve`.
//!
//! Every command reads a JSON [`RunConfig`]. Exit status is 0 on success, 1
//! for usage or configuration errors and 2 for failures while running.

mod config;

pub use config::{AnyDomain, ConfigError, DomainKind, DomainSpec, OutputSpec, RunConfig, SeedSpec, SpacingKind, SpacingSpec};

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bench::{self, BenchError};
use crate::fill::{fill_parallel, fill_sequential, FillConfig, PointSet, ThreadStats};
use crate::geometry::Point;
use crate::io;
use crate::quality::{self, QualityError};
use crate::solver::{self, NodeSource, SolverError, StudyRow};

/// Marks an error as a usage or configuration problem (exit status 1).
#[derive(Debug, thiserror::Error)]
#[error(transparent)]
pub struct UsageError(#[from] pub anyhow::Error);

fn usage<E: Into<anyhow::Error>>(e: E) -> anyhow::Error {
    UsageError(e.into()).into()
}

#[derive(Debug, Parser)]
#[command(name = "frontfill", version, about = "Variable-density node generation for meshless discretizations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fill the configured domain and write the points.
    Fill(FillArgs),
    /// Regularity and quasi-uniformity of a points file.
    Quality(QualityArgs),
    /// Time sequential and parallel fills.
    Bench(BenchArgs),
    /// Solve the manufactured Poisson problem at several refinements.
    Solve(SolveArgs),
}

/// Overrides of the fill parameters in the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct FillOverrides {
    #[arg(long, env = "FRONTFILL_THREADS")]
    pub threads: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub nc: Option<usize>,
    #[arg(long)]
    pub ns: Option<usize>,
    #[arg(long = "target-np")]
    pub target_np: Option<usize>,
    /// Use the single-front fill from the configured seeds; needs one thread.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct FillArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Points file; the stats JSON is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: FillOverrides,
}

#[derive(Debug, Args)]
pub struct QualityArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub points: PathBuf,
    #[arg(long, default_value_t = quality::DEFAULT_K)]
    pub k: usize,
    #[arg(long, default_value_t = quality::DEFAULT_PROBE_DENSITY)]
    pub probes: usize,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report JSON; the histogram CSV is written next to it.
    #[arg(long, default_value = "quality.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub threads: Vec<usize>,
    #[arg(long = "target-np", value_delimiter = ',', required = true)]
    pub target_np: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    /// Bench CSV; the JSON variant is written next to it.
    #[arg(long, default_value = "bench.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = solver::DEFAULT_STENCIL)]
    pub stencil: usize,
    /// Interior node counts, one refinement each.
    #[arg(long = "target-np", value_delimiter = ',', default_value = "1000,4000,16000")]
    pub target_np: Vec<usize>,
    #[arg(long, env = "FRONTFILL_THREADS", default_value_t = 1)]
    pub threads: usize,
    #[arg(long)]
    pub sequential: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Error table CSV; the JSON summary is written next to it.
    #[arg(long, default_value = "errors.csv")]
    pub out: PathBuf,
    /// Also write the finest solution as `x,y,u`.
    #[arg(long)]
    pub solution: Option<PathBuf>,
}

/// `path` with its extension (and a trailing `.gz`) replaced by `suffix`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut p = path.to_path_buf();
    if p.extension().is_some_and(|e| e == "gz") {
        p.set_extension("");
    }
    p.set_extension("");
    let mut s = p.into_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn load_config(path: &Path) -> Result<RunConfig> {
    RunConfig::load(path).map_err(usage)
}

macro_rules! by_dim {
    ($dim:expr, $f:ident ( $($arg:expr),* )) => {
        match $dim {
            1 => $f::<1>($($arg),*),
            2 => $f::<2>($($arg),*),
            3 => $f::<3>($($arg),*),
            d => Err(usage(anyhow::anyhow!("unsupported dimension {d}"))),
        }
    };
}

/// Per-run statistics written next to the points file.
#[derive(Debug, Clone, Serialize)]
pub struct FillSummary {
    pub dim: usize,
    pub mode: &'static str,
    pub n_points: usize,
    pub n_seeds: usize,
    pub threads: usize,
    pub rng_seed: u64,
    pub per_thread: Vec<ThreadSummary>,
    pub wall_s: f64,
    pub contended_locks: u64,
    pub lock_acquisitions: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThreadSummary {
    pub placed: usize,
    pub rejected: usize,
    pub busy_s: f64,
}

impl From<&ThreadStats> for ThreadSummary {
    fn from(t: &ThreadStats) -> Self {
        ThreadSummary { placed: t.placed, rejected: t.rejected, busy_s: t.busy_s }
    }
}

/// Paths written by [`cmd_fill`].
#[derive(Debug, Clone)]
pub struct FillOutputs {
    pub points: PathBuf,
    pub stats: PathBuf,
    pub summary: FillSummary,
}

fn fill_config(cfg: &RunConfig, ov: &FillOverrides) -> FillConfig {
    FillConfig {
        n_c: ov.nc.unwrap_or(cfg.n_c),
        threads: ov.threads.unwrap_or(cfg.threads),
        n_s: ov.ns.unwrap_or(cfg.n_s),
        target_np: ov.target_np.or(cfg.target_np),
        rng_seed: ov.seed.unwrap_or(cfg.rng_seed),
        max_points: cfg.max_points,
        bootstrap: cfg.bootstrap,
        ..FillConfig::default()
    }
}

/// Fills the configured domain with the overrides applied. Returns the
/// points, the effective parameters and the mode name.
pub fn run_fill<const D: usize>(
    cfg: &RunConfig,
    ov: &FillOverrides,
) -> Result<(PointSet<D>, FillConfig, &'static str)> {
    let domain = cfg.domain::<D>().map_err(usage)?;
    let h = cfg.spacing_fn().map_err(usage)?;
    let seeds: Vec<Point<D>> = cfg.seed_points(domain.as_ref()).map_err(usage)?;
    let fc = fill_config(cfg, ov);
    fc.validate().map_err(usage)?;
    if ov.sequential {
        if fc.threads != 1 {
            return Err(usage(anyhow::anyhow!("--sequential needs threads = 1, got {}", fc.threads)));
        }
        let set = fill_sequential(domain.as_ref(), &h, &seeds, fc.n_c, fc.rng_seed, fc.max_points)?;
        Ok((set, fc, "sequential"))
    } else {
        Ok((fill_parallel(domain.as_ref(), &h, &seeds, &fc)?, fc, "parallel"))
    }
}

fn fill_dim<const D: usize>(cfg: &RunConfig, out: Option<&Path>, ov: &FillOverrides) -> Result<FillOutputs> {
    let (set, fc, mode) = run_fill::<D>(cfg, ov)?;
    let points = out.map(Path::to_path_buf).or_else(|| cfg.output.points.clone()).unwrap_or_else(|| "points.csv".into());
    let stats = match (out, &cfg.output.stats) {
        (None, Some(s)) => s.clone(),
        _ => sibling(&points, ".stats.json"),
    };
    io::write_points(&set, &points)?;
    let summary = FillSummary {
        dim: D,
        mode,
        n_points: set.len(),
        n_seeds: set.seeds.len(),
        threads: fc.threads,
        rng_seed: fc.rng_seed,
        per_thread: set.stats.threads.iter().map(ThreadSummary::from).collect(),
        wall_s: set.stats.wall_s,
        contended_locks: set.stats.contended_locks,
        lock_acquisitions: set.stats.lock_acquisitions,
    };
    io::write_json(&stats, &summary)?;
    Ok(FillOutputs { points, stats, summary })
}

/// Runs the configured fill and writes the points CSV and the stats JSON.
pub fn cmd_fill(config: &Path, out: Option<&Path>, ov: &FillOverrides) -> Result<FillOutputs> {
    let cfg = load_config(config)?;
    by_dim!(cfg.dim, fill_dim(&cfg, out, ov))
}

fn quality_usage(e: QualityError) -> anyhow::Error {
    match e {
        QualityError::TooFewPoints { .. }
        | QualityError::ZeroK
        | QualityError::TooFewBins(_)
        | QualityError::ProbeDensity(_) => usage(e),
        e => e.into(),
    }
}

fn quality_dim<const D: usize>(cfg: &RunConfig, a: &QualityArgs) -> Result<quality::QualityReport> {
    let domain = cfg.domain::<D>().map_err(usage)?;
    let h = cfg.spacing_fn().map_err(usage)?;
    let set = io::read_points::<D>(&a.points).map_err(usage)?;
    let pts = set.positions();
    let seed = a.seed.unwrap_or(cfg.rng_seed);
    let report =
        quality::quality_report(&pts, domain.as_ref(), &h, a.k, a.probes, a.bins, seed).map_err(quality_usage)?;
    io::write_json(&a.out, &report)?;
    io::write_text(&sibling(&a.out, ".hist.csv"), &io::histogram_csv(&report.histogram))?;
    Ok(report)
}

/// Quality report of a points file, written as JSON with a histogram CSV.
pub fn cmd_quality(a: &QualityArgs) -> Result<quality::QualityReport> {
    let cfg = load_config(&a.config)?;
    let dim = io::points_dim(&a.points).map_err(usage)?;
    if dim != cfg.dim {
        return Err(usage(anyhow::anyhow!("points file is {dim}-D but the config has dim = {}", cfg.dim)));
    }
    by_dim!(cfg.dim, quality_dim(&cfg, a))
}

fn bench_usage(e: BenchError) -> anyhow::Error {
    match e {
        BenchError::NoRepeats | BenchError::NoThreads | BenchError::ZeroThreads => usage(e),
        e => e.into(),
    }
}

fn bench_dim<const D: usize>(cfg: &RunConfig, a: &BenchArgs) -> Result<Vec<bench::BenchRow>> {
    let domain = cfg.domain::<D>().map_err(usage)?;
    let h = cfg.spacing_fn().map_err(usage)?;
    let seeds: Vec<Point<D>> = cfg.seed_points(domain.as_ref()).map_err(usage)?;
    let fc = fill_config(cfg, &FillOverrides::default());
    bench::time_grid(domain.as_ref(), &h, &seeds, &fc, &a.threads, &a.target_np, a.repeats).map_err(bench_usage)
}

/// Rows for the requested thread counts, without the sequential baselines.
pub fn parallel_rows(rows: &[bench::BenchRow]) -> Vec<bench::BenchRow> {
    rows.iter().filter(|r| r.threads != bench::SEQUENTIAL).cloned().collect()
}

/// Timing table for every thread count and target size. The CSV holds one
/// row per thread count and target; the JSON also holds the baselines.
pub fn cmd_bench(a: &BenchArgs) -> Result<Vec<bench::BenchRow>> {
    let cfg = load_config(&a.config)?;
    if a.threads.is_empty() {
        return Err(bench_usage(BenchError::NoThreads));
    }
    if a.target_np.is_empty() || a.target_np.contains(&0) {
        return Err(usage(anyhow::anyhow!("target-np list must hold positive counts")));
    }
    let rows = by_dim!(cfg.dim, bench_dim(&cfg, a))?;
    io::write_text(&a.out, &bench::to_csv(&parallel_rows(&rows)))?;
    io::write_text(&sibling(&a.out, ".json"), &bench::to_json(&rows))?;
    Ok(rows)
}

/// Error summary written next to the error table.
#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub stencil: usize,
    pub rows: Vec<StudyRow>,
    pub order_e_inf: Option<f64>,
}

/// Error table of the manufactured problem over the refinements.
pub fn cmd_solve(a: &SolveArgs) -> Result<SolveSummary> {
    let cfg = load_config(&a.config)?;
    if cfg.dim != 2 {
        return Err(usage(anyhow::anyhow!("solve needs a 2-D config, got dim = {}", cfg.dim)));
    }
    if a.stencil < solver::MONOMIALS {
        return Err(usage(SolverError::StencilTooSmall(a.stencil)));
    }
    if a.target_np.is_empty() {
        return Err(usage(anyhow::anyhow!("target-np list is empty")));
    }
    let h = cfg.spacing_fn().map_err(usage)?;
    let domain = cfg.any_domain().map_err(usage)?;
    let seed = a.seed.unwrap_or(cfg.rng_seed);
    let source = if a.sequential { NodeSource::Sequential } else { NodeSource::Parallel { threads: a.threads } };

    let mut rows = Vec::new();
    let mut last = None;
    for &np in &a.target_np {
        let run = match &domain {
            AnyDomain::Star2(d) => {
                let seeds = cfg.seed_points::<2>(d).map_err(usage)?;
                solver::manufactured_problem(d, &h, &seeds, np, a.stencil, source, seed)
            }
            AnyDomain::Poly(d) => {
                let seeds = cfg.seed_points::<2>(d).map_err(usage)?;
                solver::manufactured_problem(d, &h, &seeds, np, a.stencil, source, seed)
            }
            _ => return Err(usage(anyhow::anyhow!("solve needs a clover or polygon domain"))),
        }
        .with_context(|| format!("refinement with target {np}"))?;
        rows.push(run.row);
        last = Some(run);
    }

    let mut csv = String::from("n,n_interior,n_boundary,e1,e_inf,max_exactness_residual\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{:.6e},{:.6e},{:.3e}\n",
            r.n_nodes, r.n_interior, r.n_boundary, r.e1, r.e_inf, r.max_exactness_residual
        ));
    }
    io::write_text(&a.out, &csv)?;
    let summary = SolveSummary { stencil: a.stencil, order_e_inf: solver::convergence_order(&rows), rows };
    io::write_json(&sibling(&a.out, ".json"), &summary)?;
    if let (Some(path), Some(run)) = (&a.solution, last) {
        io::write_text(path, &io::solution_csv(&run.nodes, &run.u))?;
    }
    Ok(summary)
}

/// Exit status for an error: 1 when any cause is a [`UsageError`], else 2.
pub fn exit_status(e: &anyhow::Error) -> u8 {
    if e.chain().any(|c| c.is::<UsageError>()) {
        1
    } else {
        2
    }
}

/// Parses `args` and runs the chosen command.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Fill(a) => cmd_fill(&a.config, a.out.as_deref(), &a.overrides).map(|o| {
            println!("wrote {} points to {}", o.summary.n_points, o.points.display());
        }),
        Command::Quality(a) => cmd_quality(a).map(|r| {
            println!("n = {}, mean d' = {:.4}, std = {:.4}, gamma = {:.4}", r.n, r.mean_dbar, r.std_dbar, r.gamma);
        }),
        Command::Bench(a) => cmd_bench(a).map(|rows| print!("{}", bench::to_csv(&parallel_rows(&rows)))),
        Command::Solve(a) => cmd_solve(a).map(|s| {
            for r in &s.rows {
                println!("N = {}, e1 = {:.3e}, e_inf = {:.3e}", r.n_nodes, r.e1, r.e_inf);
            }
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_status(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sibling_paths() {
        assert_eq!(sibling(Path::new("out/p.csv"), ".stats.json"), PathBuf::from("out/p.stats.json"));
        assert_eq!(sibling(Path::new("p.csv.gz"), ".stats.json"), PathBuf::from("p.stats.json"));
        assert_eq!(sibling(Path::new("q"), ".hist.csv"), PathBuf::from("q.hist.csv"));
    }

    #[test]
    fn usage_errors_exit_with_one() {
        let e = usage(anyhow::anyhow!("bad flag"));
        assert_eq!(exit_status(&e), 1);
        assert_eq!(exit_status(&e.context("while loading")), 1);
        assert_eq!(exit_status(&anyhow::anyhow!("numeric trouble")), 2);
    }
}
