//! Spatial indices: a static k-d tree, an insert-only k-d tree and the
//! two-level lock-guarded index used by the parallel fill.

mod dynamic_tree;
mod static_tree;
mod two_level;

pub use dynamic_tree::DynamicIndex;
pub use static_tree::StaticIndex;
pub use two_level::{CellEntry, Placement, TwoLevelIndex};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IndexError {
    #[error("index is empty")]
    Empty,
    #[error("requested {k} neighbours from an index of {size} points")]
    TooManyNeighbors { k: usize, size: usize },
}
