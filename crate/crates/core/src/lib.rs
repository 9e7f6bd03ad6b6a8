pub mod admm;
pub mod amp;
pub mod error;
pub mod fixture;
pub mod penalty;
pub mod problem;
pub mod state_evolution;

pub use error::{Error, Result};
