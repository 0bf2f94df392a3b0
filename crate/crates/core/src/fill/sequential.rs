use std::collections::VecDeque;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{exclusion, FillError, FillStats, PlacedPoint, PointSet, ThreadStats};
use crate::candidates::{expand_into, Rotation, SpherePattern};
use crate::geometry::{Domain, Point};
use crate::index::DynamicIndex;
use crate::spacing::SpacingFn;

pub(super) fn check_seeds<const D: usize, G: Domain<D> + ?Sized>(
    domain: &G,
    seeds: &[Point<D>],
) -> Result<(), FillError> {
    if seeds.is_empty() {
        return Err(FillError::NoSeeds);
    }
    if let Some(s) = seeds.iter().find(|s| !domain.contains(s)) {
        return Err(FillError::SeedOutside(s.0.to_vec()));
    }
    Ok(())
}

/// Fills `domain` from `seeds` with a single front.
///
/// Points are expanded in FIFO order. Each expansion places the pattern at
/// radius `h(p)` under a fresh random rotation; a candidate `c` is kept when
/// it lies inside the domain and no existing point `q` is closer than
/// `min(h(c), h(q))`. Where `h` does not decrease towards `c` this is the
/// plain test against `h(c)`; the `h(q)` term lets the front climb a growing
/// spacing, since the parent itself sits only `h(p)` away.
/// The seeds are part of the output. `max_points` bounds the output size.
pub fn fill_sequential<const D: usize, G: Domain<D> + ?Sized>(
    domain: &G,
    h: &SpacingFn,
    seeds: &[Point<D>],
    n_c: usize,
    rng_seed: u64,
    max_points: Option<usize>,
) -> Result<PointSet<D>, FillError> {
    check_seeds(domain, seeds)?;
    let pattern = SpherePattern::<D>::new(n_c)?;
    let max_points = max_points.unwrap_or(usize::MAX);
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);

    let mut index = DynamicIndex::new();
    let mut queue = VecDeque::new();
    let mut points = Vec::with_capacity(seeds.len());
    for (k, s) in seeds.iter().enumerate() {
        index.insert_with_radius(*s, exclusion(h.at(s)?));
        queue.push_back(*s);
        points.push(PlacedPoint { pos: *s, thread: 0, cell: 0, order: k as u64 });
    }

    let mut rejected = 0;
    let mut cands = Vec::with_capacity(pattern.len());
    while let Some(p) = queue.pop_front() {
        let r = h.at(&p)?;
        expand_into(&p, r, &pattern, &Rotation::random(&mut rng), &mut cands);
        for c in &cands {
            if !domain.contains(c) {
                rejected += 1;
                continue;
            }
            let rc = exclusion(h.at(c)?);
            if index.conflict(c, rc).is_some() {
                rejected += 1;
                continue;
            }
            if points.len() >= max_points {
                return Err(FillError::MaxPointsExceeded(max_points));
            }
            index.insert_with_radius(*c, rc);
            queue.push_back(*c);
            points.push(PlacedPoint { pos: *c, thread: 0, cell: 0, order: points.len() as u64 });
        }
    }

    let elapsed = start.elapsed().as_secs_f64();
    let stats = FillStats {
        threads: vec![ThreadStats { placed: points.len() - seeds.len(), rejected, busy_s: elapsed }],
        wall_s: elapsed,
        contended_locks: 0,
        lock_acquisitions: 0,
    };
    Ok(PointSet { points, seeds: seeds.to_vec(), stats })
}
