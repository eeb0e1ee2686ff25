pub mod alloc_probe;
pub mod cli;
pub mod error;
pub mod graph;
pub mod ktuple;
pub mod model;
pub mod oracle;
pub mod pe;
pub mod pipeline;
pub mod product;
pub mod rng;
pub mod sparse;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
