pub mod acoustics;
pub mod analysis;
pub mod error;
pub mod mesh;
pub mod pml;
pub mod refelem;
pub mod scenario;
pub mod solver;
pub mod timeint;

pub use error::{Error, Result};
