pub mod analysis;
pub mod cli;
pub mod cpi;
pub mod error;
pub mod evolution;
pub mod fixpoint;
pub mod graph;
pub mod lift;
pub mod protocols;
pub mod ode;
pub mod rng;
pub mod theory;

pub use error::{Error, Result};
