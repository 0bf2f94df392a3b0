//! Advancing-front node placement: the sequential fill, seed bootstrapping
//! and the cell-parallel fill on top of [`TwoLevelIndex`](crate::index::TwoLevelIndex).

mod estimate;
mod parallel;
mod sequential;

pub use estimate::{bootstrap_seeds, estimate_point_count, initial_factor, packing_constant, spacing_for_target};
pub use parallel::fill_parallel;
pub use sequential::fill_sequential;

use crate::candidates::PatternError;
use crate::geometry::Point;
use crate::index::IndexError;
use crate::spacing::SpacingError;

/// Cap on how many times the bootstrap factor is halved.
pub const MAX_HALVINGS: usize = 32;

/// Relative slack on exclusion radii that absorbs rounding in `p + h(p) u`.
pub const SPACING_SLACK: f64 = 1e-12;

/// Exclusion radius stored for a point with spacing `h`.
#[inline]
pub(crate) fn exclusion(h: f64) -> f64 {
    h * (1.0 - SPACING_SLACK)
}

/// Default number of Monte Carlo samples for point-count estimates.
pub const DEFAULT_MC_SAMPLES: usize = 100_000;

#[derive(Debug, thiserror::Error)]
pub enum FillError {
    #[error("no seed points given")]
    NoSeeds,
    #[error("seed {0:?} lies outside the domain")]
    SeedOutside(Vec<f64>),
    #[error("placed more than {0} points; the spacing is probably too small")]
    MaxPointsExceeded(usize),
    #[error("bootstrapping produced {got} of {requested} seeds")]
    BootstrapExhausted { requested: usize, got: usize },
    #[error("no Monte Carlo sample fell inside the domain")]
    NoSamplesInside,
    #[error("invalid fill configuration: {0}")]
    InvalidConfig(String),
    #[error("worker thread {0} panicked")]
    WorkerPanic(usize),
    #[error(transparent)]
    Spacing(#[from] SpacingError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error(transparent)]
    Index(#[from] IndexError),
}

/// Parameters of [`fill_parallel`].
#[derive(Debug, Clone, PartialEq)]
pub struct FillConfig {
    /// Candidates on a great circle of the expansion sphere.
    pub n_c: usize,
    pub threads: usize,
    /// Requested number of seeds, i.e. cells.
    pub n_s: usize,
    /// Expected number of output points; estimated when `None`.
    pub target_np: Option<usize>,
    pub rng_seed: u64,
    /// Abort once more points than this were placed; `4 * n_p` when `None`.
    pub max_points: Option<usize>,
    /// Run the bootstrapping pass; when off the user seeds are the cells.
    pub bootstrap: bool,
    pub mc_samples: usize,
}

impl Default for FillConfig {
    fn default() -> Self {
        FillConfig {
            n_c: 12,
            threads: 1,
            n_s: 1,
            target_np: None,
            rng_seed: 0,
            max_points: None,
            bootstrap: true,
            mc_samples: DEFAULT_MC_SAMPLES,
        }
    }
}

impl FillConfig {
    pub fn validate(&self) -> Result<(), FillError> {
        if self.threads == 0 {
            return Err(FillError::InvalidConfig("threads must be at least 1".into()));
        }
        if self.n_s == 0 {
            return Err(FillError::InvalidConfig("n_s must be at least 1".into()));
        }
        if self.n_c < 3 {
            return Err(FillError::InvalidConfig(format!("n_c must be at least 3, got {}", self.n_c)));
        }
        if self.target_np == Some(0) {
            return Err(FillError::InvalidConfig("target_np must be positive".into()));
        }
        Ok(())
    }
}

/// One output point with its provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlacedPoint<const D: usize> {
    pub pos: Point<D>,
    pub thread: u32,
    pub cell: u32,
    /// Global insertion sequence number; seeds come first.
    pub order: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ThreadStats {
    pub placed: usize,
    pub rejected: usize,
    /// Time the worker spent in its expansion loop, in seconds.
    pub busy_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FillStats {
    pub threads: Vec<ThreadStats>,
    pub wall_s: f64,
    /// Cell-lock acquisitions that had to wait, and all acquisitions.
    pub contended_locks: u64,
    pub lock_acquisitions: u64,
}

/// Result of a fill. Points are sorted by insertion order.
#[derive(Debug, Clone, Default)]
pub struct PointSet<const D: usize> {
    pub points: Vec<PlacedPoint<D>>,
    pub seeds: Vec<Point<D>>,
    pub stats: FillStats,
}

impl<const D: usize> PointSet<D> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn positions(&self) -> Vec<Point<D>> {
        self.points.iter().map(|p| p.pos).collect()
    }
}
