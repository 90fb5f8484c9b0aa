//! Method-of-moments characteristic-mode toolkit for planar PEC chassis with
//! attached strip antennas.

pub mod analysis;
pub mod cma;
pub mod error;
pub mod geometry;
pub mod mom;
pub mod vec3;

pub use error::{Error, Result, ResultExt};
pub use faer::c64;
pub use faer::Mat;
