//! Fractal tops, blowups and top tilings of (possibly overlapping) iterated
//! function systems, plus invariant sets of reverse systems.

pub mod address;
pub mod attractor;
pub mod error;
pub mod exact;
pub mod ifs;
pub mod raster;
pub mod rifs;
pub mod systems;
pub mod tiling;
pub mod tops;

pub use address::{InfiniteAddress, LexCompare, PriorityOrder, Symbol, Word};
pub use error::{Error, Result};
pub use ifs::{AffineMap, Ifs, Point};
pub use raster::{Raster, Viewport};
