use std::sync::atomic::{AtomicU64, Ordering};

use parking_lot::{RwLock, RwLockWriteGuard};
use smallvec::SmallVec;

use super::{DynamicIndex, IndexError, StaticIndex};
use crate::geometry::Point;

/// Outcome of a guarded placement attempt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Placement {
    Accepted { cell: usize },
    /// Distance from the candidate to the closest point that blocked it.
    Rejected { distance: f64 },
}

/// A point stored in one of the cells, with its provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellEntry<const D: usize> {
    pub pos: Point<D>,
    pub cell: u32,
    pub thread: u32,
    pub order: u64,
}

#[derive(Debug, Default)]
struct Cell<const D: usize> {
    index: DynamicIndex<D>,
    meta: Vec<(u32, u64)>,
}

/// Two-level spatial index: an immutable seed index on top and one
/// lock-guarded dynamic sub-index per seed cell below.
///
/// A cell holds the points whose nearest seed is the cell's seed. The seeds
/// themselves live only in the top level.
pub struct TwoLevelIndex<const D: usize> {
    top: StaticIndex<D>,
    seed_radii: Vec<f64>,
    cells: Vec<RwLock<Cell<D>>>,
    next_order: AtomicU64,
    contended: AtomicU64,
    acquisitions: AtomicU64,
}

type Involved = SmallVec<[(u32, f64); 8]>;

impl<const D: usize> TwoLevelIndex<D> {
    /// Builds the index over `seeds` with unbounded exclusion radii.
    /// Insertion orders of cell points start after the seeds, i.e. at
    /// `seeds.len()`.
    pub fn new(seeds: Vec<Point<D>>) -> Result<Self, IndexError> {
        let radii = vec![f64::INFINITY; seeds.len()];
        Self::with_radii(seeds, radii)
    }

    /// Like [`TwoLevelIndex::new`] with an exclusion radius per seed.
    pub fn with_radii(seeds: Vec<Point<D>>, seed_radii: Vec<f64>) -> Result<Self, IndexError> {
        assert_eq!(seeds.len(), seed_radii.len());
        let n = seeds.len();
        let top = StaticIndex::build(seeds)?;
        Ok(TwoLevelIndex {
            top,
            seed_radii,
            cells: (0..n).map(|_| RwLock::new(Cell::default())).collect(),
            next_order: AtomicU64::new(n as u64),
            contended: AtomicU64::new(0),
            acquisitions: AtomicU64::new(0),
        })
    }

    pub fn seeds(&self) -> &[Point<D>] {
        self.top.points()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    /// Cell whose seed is closest to `p` (ties to the lower id).
    pub fn cell_of(&self, p: &Point<D>) -> usize {
        self.top.nearest(p).index
    }

    /// Number of points stored in the cells, not counting seeds.
    pub fn stored(&self) -> usize {
        self.cells.iter().map(|c| c.read().index.len()).sum()
    }

    /// Lock acquisitions that found the lock already taken.
    pub fn contended_acquisitions(&self) -> u64 {
        self.contended.load(Ordering::Relaxed)
    }

    pub fn total_acquisitions(&self) -> u64 {
        self.acquisitions.load(Ordering::Relaxed)
    }

    /// Cells that may hold a point within `r` of `c`, ascending by id.
    ///
    /// With `d1` the distance from `c` to its nearest seed, every cell whose
    /// seed lies within `d1 + 2r` of `c` is returned. A point `q` with
    /// `|q - c| <= r` in cell `j` satisfies
    /// `|c - s_j| <= |q - s_j| + r <= |q - s_nn(c)| + r <= d1 + 2r`.
    pub fn involved_cells(&self, c: &Point<D>, r: f64) -> Vec<usize> {
        let (_, inv) = self.involved(c, r);
        inv.into_iter().map(|(id, _)| id as usize).collect()
    }

    fn involved(&self, c: &Point<D>, r: f64) -> (usize, Involved) {
        let nn = self.top.nearest(c);
        let mut inv = Involved::new();
        if self.cells.len() == 1 {
            inv.push((0, nn.distance));
            return (0, inv);
        }
        self.top.within_each(c, nn.distance + 2.0 * r, |id, d| inv.push((id as u32, d)));
        inv.sort_unstable_by_key(|&(id, _)| id);
        (nn.index, inv)
    }

    /// Atomically checks `c` against the stored points and inserts it into
    /// its home cell with exclusion radius `r` when none conflicts.
    ///
    /// A stored point `q` with radius `r_q` blocks `c` when
    /// `|c - q| < min(r, r_q)`; with unbounded radii this is `|c - q| < r`.
    ///
    /// All involved cells are write-locked in ascending id order for the
    /// whole check-and-insert and released in reverse order.
    pub fn guarded_try_place(&self, c: Point<D>, r: f64, thread: u32) -> Placement {
        let (home, inv) = self.involved(&c, r);

        let seed_block = inv
            .iter()
            .filter(|&&(id, d)| d < r && d < self.seed_radii[id as usize])
            .map(|&(_, d)| d)
            .fold(f64::INFINITY, f64::min);
        if seed_block.is_finite() {
            return Placement::Rejected { distance: seed_block };
        }

        let mut guards: SmallVec<[RwLockWriteGuard<'_, Cell<D>>; 8]> = SmallVec::new();
        let mut last: Option<u32> = None;
        for &(id, _) in &inv {
            debug_assert!(last.is_none_or(|l| l < id), "lock order violated");
            last = Some(id);
            let lock = &self.cells[id as usize];
            let g = match lock.try_write() {
                Some(g) => g,
                None => {
                    self.contended.fetch_add(1, Ordering::Relaxed);
                    lock.write()
                }
            };
            self.acquisitions.fetch_add(1, Ordering::Relaxed);
            guards.push(g);
        }

        let mut blocker = f64::INFINITY;
        for g in guards.iter() {
            if let Some(nb) = g.index.conflict(&c, r) {
                blocker = nb.distance;
                break;
            }
        }
        let result = if blocker.is_finite() {
            Placement::Rejected { distance: blocker }
        } else {
            let slot = inv.binary_search_by_key(&(home as u32), |&(id, _)| id).expect("home cell is involved");
            let cell = &mut guards[slot];
            let order = self.next_order.fetch_add(1, Ordering::Relaxed);
            cell.index.insert_with_radius(c, r);
            cell.meta.push((thread, order));
            Placement::Accepted { cell: home }
        };
        while let Some(g) = guards.pop() {
            drop(g);
        }
        result
    }

    /// Static index over the seeds followed by every cell's points in cell
    /// order. Exclusive access guarantees no placement is in flight.
    pub fn flatten(&mut self) -> StaticIndex<D> {
        let mut pts = self.top.points().to_vec();
        for c in &mut self.cells {
            pts.extend(c.get_mut().index.points().copied());
        }
        StaticIndex::build(pts).expect("seeds are never empty")
    }

    /// Consumes the index, returning seeds and all cell entries.
    pub fn into_entries(self) -> (Vec<Point<D>>, Vec<CellEntry<D>>) {
        let mut entries = Vec::new();
        for (id, c) in self.cells.into_iter().enumerate() {
            let c = c.into_inner();
            for (k, p) in c.index.points().enumerate() {
                let (thread, order) = c.meta[k];
                entries.push(CellEntry { pos: *p, cell: id as u32, thread, order });
            }
        }
        (self.top.into_points(), entries)
    }
}
