pub mod automorphism;
pub mod bits;
pub mod bounds;
pub mod certify;
pub mod error;
pub mod exact;
pub mod orbitgraph;
pub mod search;
pub mod symmetry;
pub mod torus;

pub use error::{Error, Result};
