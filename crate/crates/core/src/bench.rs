//! Timing harness for the fills: per-point normalized times, speedups over
//! the sequential fill and per-thread busy times.

use std::fmt::Write as _;

use serde::Serialize;

use crate::fill::{fill_parallel, fill_sequential, spacing_for_target, FillConfig, FillError, PointSet};
use crate::geometry::{Domain, Point};
use crate::spacing::SpacingFn;

/// `threads` value that marks the sequential baseline in a report.
pub const SEQUENTIAL: usize = 0;

/// Header of [`to_csv`].
pub const CSV_HEADER: &str = "threads,target_np,actual_np,wall_s,per_point_ns,speedup";

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("repeats must be at least 1")]
    NoRepeats,
    #[error("thread list is empty")]
    NoThreads,
    #[error("thread counts must be positive")]
    ZeroThreads,
    #[error("no sequential baseline for target_np = {0}")]
    MissingBaseline(usize),
    #[error(transparent)]
    Fill(#[from] FillError),
}

/// Means over the repeats of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    /// Worker count, or [`SEQUENTIAL`] for the baseline.
    pub threads: usize,
    pub target_np: usize,
    pub actual_np: usize,
    pub wall_s: f64,
    /// Coefficient of variation of the wall times.
    pub wall_cv: f64,
    pub per_point_ns: f64,
    /// Busy time of each worker.
    pub thread_busy_s: Vec<f64>,
    pub busy_sum_s: f64,
    pub speedup: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn cv(v: &[f64]) -> f64 {
    let m = mean(v);
    if v.len() < 2 || m == 0.0 {
        return 0.0;
    }
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64;
    var.sqrt() / m
}

fn summarize<const D: usize>(threads: usize, target_np: usize, runs: &[PointSet<D>]) -> BenchRow {
    let walls: Vec<f64> = runs.iter().map(|r| r.stats.wall_s).collect();
    let per_point: Vec<f64> = runs.iter().map(|r| r.stats.wall_s / r.len() as f64 * 1e9).collect();
    let n_workers = runs[0].stats.threads.len();
    let thread_busy_s: Vec<f64> = (0..n_workers)
        .map(|t| mean(&runs.iter().map(|r| r.stats.threads.get(t).map_or(0.0, |s| s.busy_s)).collect::<Vec<_>>()))
        .collect();
    let actual = runs.iter().map(|r| r.len()).sum::<usize>() as f64 / runs.len() as f64;
    BenchRow {
        threads,
        target_np,
        actual_np: actual.round() as usize,
        wall_s: mean(&walls),
        wall_cv: cv(&walls),
        per_point_ns: mean(&per_point),
        busy_sum_s: thread_busy_s.iter().sum(),
        thread_busy_s,
        speedup: f64::NAN,
    }
}

/// Times the sequential fill and the parallel fill at each thread count,
/// `repeats` runs each, and fills in the speedups.
///
/// `cfg.target_np` is reported as the target; the fills use `h` as given.
/// Wall times come from the fills' own clocks, which start after the point
/// count estimate.
pub fn time_fill<const D: usize, G: Domain<D> + ?Sized>(
    domain: &G,
    h: &SpacingFn,
    seeds: &[Point<D>],
    cfg: &FillConfig,
    threads: &[usize],
    repeats: usize,
) -> Result<Vec<BenchRow>, BenchError> {
    if repeats == 0 {
        return Err(BenchError::NoRepeats);
    }
    if threads.is_empty() {
        return Err(BenchError::NoThreads);
    }
    if threads.contains(&0) {
        return Err(BenchError::ZeroThreads);
    }
    let target = cfg.target_np.unwrap_or(0);
    let seq = (0..repeats)
        .map(|_| fill_sequential(domain, h, seeds, cfg.n_c, cfg.rng_seed, cfg.max_points))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = vec![summarize(SEQUENTIAL, target, &seq)];
    for &p in threads {
        let c = FillConfig { threads: p, ..cfg.clone() };
        let runs = (0..repeats).map(|_| fill_parallel(domain, h, seeds, &c)).collect::<Result<Vec<_>, _>>()?;
        rows.push(summarize(p, target, &runs));
    }
    speedup_table(&rows)
}

/// [`time_fill`] for each target point count, rescaling `h` to hit it.
pub fn time_grid<const D: usize, G: Domain<D> + ?Sized>(
    domain: &G,
    h: &SpacingFn,
    seeds: &[Point<D>],
    cfg: &FillConfig,
    threads: &[usize],
    targets: &[usize],
    repeats: usize,
) -> Result<Vec<BenchRow>, BenchError> {
    let mut rows = Vec::new();
    for &np in targets {
        let hs = spacing_for_target(domain, h, np, cfg.mc_samples, cfg.rng_seed)?;
        let c = FillConfig { target_np: Some(np), ..cfg.clone() };
        rows.extend(time_fill(domain, &hs, seeds, &c, threads, repeats)?);
    }
    Ok(rows)
}

/// Recomputes every row's speedup against the sequential row with the same
/// `target_np`: baseline per-point time over the row's per-point time.
pub fn speedup_table(rows: &[BenchRow]) -> Result<Vec<BenchRow>, BenchError> {
    rows.iter()
        .map(|r| {
            let base = rows
                .iter()
                .find(|b| b.threads == SEQUENTIAL && b.target_np == r.target_np)
                .ok_or(BenchError::MissingBaseline(r.target_np))?;
            Ok(BenchRow { speedup: base.per_point_ns / r.per_point_ns, ..r.clone() })
        })
        .collect()
}

/// Rows as CSV under [`CSV_HEADER`], LF line endings.
pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{:.6e},{:.3},{:.4}",
            r.threads, r.target_np, r.actual_np, r.wall_s, r.per_point_ns, r.speedup
        );
    }
    s
}

pub fn to_json(rows: &[BenchRow]) -> String {
    serde_json::to_string_pretty(rows).expect("bench rows serialize")
}

/// Per-point cost of the parallel machinery with one worker: the mean
/// per-point time of `fill_parallel` with one thread and bootstrapping off,
/// minus that of `fill_sequential`, in nanoseconds. Also returns both means.
pub fn single_thread_overhead<const D: usize, G: Domain<D> + ?Sized>(
    domain: &G,
    h: &SpacingFn,
    seed: Point<D>,
    cfg: &FillConfig,
    repeats: usize,
) -> Result<(f64, f64, f64), BenchError> {
    let c = FillConfig { threads: 1, bootstrap: false, ..cfg.clone() };
    let rows = time_fill(domain, h, &[seed], &c, &[1], repeats)?;
    Ok((rows[1].per_point_ns - rows[0].per_point_ns, rows[0].per_point_ns, rows[1].per_point_ns))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoxDomain, StarPolar2D};

    fn row(threads: usize, target_np: usize, per_point_ns: f64) -> BenchRow {
        BenchRow {
            threads,
            target_np,
            actual_np: target_np,
            wall_s: per_point_ns * target_np as f64 * 1e-9,
            wall_cv: 0.0,
            per_point_ns,
            thread_busy_s: vec![],
            busy_sum_s: 0.0,
            speedup: f64::NAN,
        }
    }

    #[test]
    fn speedup_examples() {
        let t = speedup_table(&[row(SEQUENTIAL, 1000, 500.0)]).unwrap();
        assert_eq!(t[0].speedup, 1.0);
        let t = speedup_table(&[row(SEQUENTIAL, 1000, 500.0), row(2, 1000, 250.0)]).unwrap();
        assert_eq!(t[1].speedup, 2.0);
        assert!(matches!(speedup_table(&[row(2, 1000, 250.0)]), Err(BenchError::MissingBaseline(1000))));
    }

    #[test]
    fn csv_is_deterministic() {
        let t = speedup_table(&[row(SEQUENTIAL, 1000, 500.0), row(4, 1000, 125.0)]).unwrap();
        let csv = to_csv(&t);
        assert_eq!(
            csv,
            "threads,target_np,actual_np,wall_s,per_point_ns,speedup\n\
             0,1000,1000,5.000000e-4,500.000,1.0000\n\
             4,1000,1000,1.250000e-4,125.000,4.0000\n"
        );
        assert_eq!(csv, to_csv(&t));
        assert!(to_json(&t).contains("\"thread_busy_s\""));
    }

    #[test]
    fn small_grid_runs() {
        let dom = StarPolar2D::clover();
        let h = SpacingFn::preset("clover2d", 1.0).unwrap();
        let cfg = FillConfig { n_s: 4, ..FillConfig::default() };
        let rows = time_grid(&dom, &h, &[Point([0.0, 0.0])], &cfg, &[1, 2], &[1000], 2).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].speedup, 1.0);
        assert!(rows.iter().all(|r| r.actual_np > 500 && r.per_point_ns > 0.0));
        assert_eq!(rows[2].thread_busy_s.len(), 2);
        assert!(matches!(time_fill(&dom, &h, &[Point([0.0, 0.0])], &cfg, &[], 1), Err(BenchError::NoThreads)));
        assert!(matches!(time_fill(&dom, &h, &[Point([0.0, 0.0])], &cfg, &[1], 0), Err(BenchError::NoRepeats)));
    }

    #[test]
    fn overhead_is_measured() {
        let dom = BoxDomain::<2>::unit();
        let (d, s, p) =
            single_thread_overhead(&dom, &SpacingFn::constant(0.02), Point([0.5, 0.5]), &FillConfig::default(), 2)
                .unwrap();
        assert!(s > 0.0 && p > 0.0 && (p - s - d).abs() < 1e-9);
    }
}
