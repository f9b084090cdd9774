pub mod dist;
pub mod error;
pub mod experiments;
pub mod green;
pub mod lattice;
pub mod lyapunov;
pub mod quad;
pub mod rng;
pub mod sampler;
pub mod solver;
pub mod stats;

pub use dist::DistSpec;
pub use error::{Error, Result};
