pub mod bench;
pub mod candidates;
pub mod cli;
pub mod fill;
pub mod geometry;
pub mod index;
pub mod io;
pub mod quality;
pub mod solver;
pub mod spacing;
