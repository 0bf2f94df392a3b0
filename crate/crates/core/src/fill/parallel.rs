use std::collections::VecDeque;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::sequential::check_seeds;
use super::{
    bootstrap_seeds, exclusion, estimate_point_count, FillConfig, FillError, FillStats, PlacedPoint, PointSet, ThreadStats,
};
use crate::candidates::{expand_into, Rotation, SpherePattern};
use crate::geometry::{Domain, Point};
use crate::index::{Placement, TwoLevelIndex};
use crate::spacing::SpacingFn;

struct Shared<'a, const D: usize, G: ?Sized> {
    domain: &'a G,
    h: &'a SpacingFn,
    pattern: SpherePattern<D>,
    index: TwoLevelIndex<D>,
    placed: AtomicUsize,
    max_points: usize,
    abort: AtomicBool,
}

/// Fills `domain` with one advancing front per cell, run by `cfg.threads`
/// workers.
///
/// Seeds come from [`bootstrap_seeds`] (or are the user seeds when
/// bootstrapping is off) and are dealt to the workers round-robin. Worker `t`
/// draws rotations from a generator seeded with `rng_seed ^ t`. All shared
/// state changes go through [`TwoLevelIndex::guarded_try_place`]. The output
/// holds the seeds followed by every placed point, sorted by insertion order.
///
/// With one worker the output is deterministic; with more it depends on the
/// interleaving of the workers.
pub fn fill_parallel<const D: usize, G: Domain<D> + ?Sized>(
    domain: &G,
    h: &SpacingFn,
    user_seeds: &[Point<D>],
    cfg: &FillConfig,
) -> Result<PointSet<D>, FillError> {
    cfg.validate()?;
    check_seeds(domain, user_seeds)?;
    let pattern = SpherePattern::<D>::new(cfg.n_c)?;

    let need_estimate = cfg.max_points.is_none() || (cfg.bootstrap && cfg.target_np.is_none());
    let estimate = if need_estimate {
        Some(estimate_point_count(domain, h, cfg.mc_samples, cfg.rng_seed)?)
    } else {
        None
    };
    let n_p = cfg.target_np.or(estimate).unwrap_or(1);
    let max_points = cfg
        .max_points
        .unwrap_or_else(|| 4 * n_p.max(estimate.unwrap_or(0)))
        .max(user_seeds.len());

    let start = Instant::now();
    let seeds = if cfg.bootstrap {
        bootstrap_seeds(domain, h, user_seeds, cfg.n_s, n_p, cfg.n_c, cfg.rng_seed)?
    } else {
        user_seeds.to_vec()
    };
    let n_seeds = seeds.len();
    let radii = seeds.iter().map(|s| h.at(s).map(exclusion)).collect::<Result<Vec<_>, _>>()?;
    let shared = Shared {
        domain,
        h,
        pattern,
        index: TwoLevelIndex::with_radii(seeds.clone(), radii)?,
        placed: AtomicUsize::new(n_seeds),
        max_points,
        abort: AtomicBool::new(false),
    };

    let p = cfg.threads;
    let results: Vec<Result<ThreadStats, FillError>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..p)
            .map(|t| {
                let queue: VecDeque<Point<D>> = seeds.iter().skip(t).step_by(p).copied().collect();
                let shared = &shared;
                let rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed ^ t as u64);
                s.spawn(move || worker(shared, t as u32, queue, rng))
            })
            .collect();
        handles
            .into_iter()
            .enumerate()
            .map(|(t, h)| h.join().unwrap_or(Err(FillError::WorkerPanic(t))))
            .collect()
    });

    let mut threads = Vec::with_capacity(p);
    let mut first_err = None;
    for r in results {
        match r {
            Ok(st) => threads.push(st),
            // a spacing error outranks the cap, which may have fired alongside it
            Err(e) => match first_err {
                None | Some(FillError::MaxPointsExceeded(_)) => first_err = Some(e),
                Some(_) => {}
            },
        }
    }
    if let Some(e) = first_err {
        return Err(e);
    }

    let index = shared.index;
    let stats_locks = (index.contended_acquisitions(), index.total_acquisitions());
    let (seeds, entries) = index.into_entries();
    let mut points: Vec<PlacedPoint<D>> = Vec::with_capacity(n_seeds + entries.len());
    points.extend(seeds.iter().enumerate().map(|(k, s)| PlacedPoint {
        pos: *s,
        thread: (k % p) as u32,
        cell: k as u32,
        order: k as u64,
    }));
    points.extend(entries.into_iter().map(|e| PlacedPoint { pos: e.pos, thread: e.thread, cell: e.cell, order: e.order }));
    points.sort_unstable_by_key(|q| q.order);

    let stats = FillStats {
        threads,
        wall_s: start.elapsed().as_secs_f64(),
        contended_locks: stats_locks.0,
        lock_acquisitions: stats_locks.1,
    };
    Ok(PointSet { points, seeds, stats })
}

fn worker<const D: usize, G: Domain<D> + ?Sized>(
    sh: &Shared<'_, D, G>,
    thread: u32,
    mut queue: VecDeque<Point<D>>,
    mut rng: ChaCha8Rng,
) -> Result<ThreadStats, FillError> {
    let start = Instant::now();
    let mut st = ThreadStats::default();
    let mut cands = Vec::with_capacity(sh.pattern.len());
    while let Some(p) = queue.pop_front() {
        if sh.abort.load(Ordering::Relaxed) {
            break;
        }
        let r = sh.h.at(&p).inspect_err(|_| sh.abort.store(true, Ordering::Relaxed))?;
        expand_into(&p, r, &sh.pattern, &Rotation::random(&mut rng), &mut cands);
        for c in &cands {
            if !sh.domain.contains(c) {
                st.rejected += 1;
                continue;
            }
            let hc = sh.h.at(c).inspect_err(|_| sh.abort.store(true, Ordering::Relaxed))?;
            match sh.index.guarded_try_place(*c, exclusion(hc), thread) {
                Placement::Accepted { .. } => {
                    st.placed += 1;
                    queue.push_back(*c);
                    if sh.placed.fetch_add(1, Ordering::Relaxed) >= sh.max_points {
                        sh.abort.store(true, Ordering::Relaxed);
                        return Err(FillError::MaxPointsExceeded(sh.max_points));
                    }
                }
                Placement::Rejected { .. } => st.rejected += 1,
            }
        }
    }
    st.busy_s = start.elapsed().as_secs_f64();
    Ok(st)
}
